"""Builds and runs one simulation from a ScenarioConfig."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from . import metrics
from .comms import ChannelModel, CommNetwork, RadioConfig, derive_range
from .config import ScenarioConfig
from .control import ControlConfig, FixedCycleController, IaAgent, VaAgent
from .engine import RngStreams, Simulator, ms_from_s
from .roadnet import RoadNetwork, Route, build_grid, build_one_junction, fastest_path
from .signals import PHASE_A, TrafficLight
from .traffic import CarFollowingParams, TrafficModel, Vehicle


@dataclass
class CensusSample:
    time_ms: int
    inserted: int
    ended: int
    running: int
    queued: int
    mean_speed: float | None


@dataclass
class RunResult:
    config: ScenarioConfig
    report: metrics.MetricsReport
    switch_logs: dict[str, list]          # junction -> list[SwitchRecord]
    samples: list[CensusSample]
    vehicles: list[Vehicle]
    message_log: list | None
    event_log: list | None
    vehicle_trace: list[tuple] | None
    safety_violations: int
    processed_events: int


@dataclass
class _PlannedVehicle:
    depart_ms: int
    origin_edge: str
    dest_edge: str
    equipped: bool
    seq: int = 0


class Simulation:
    def __init__(self, cfg: ScenarioConfig):
        cfg.validate()
        self.cfg = cfg
        self.sim = Simulator(record_log=cfg.record_event_log)
        self.rng = RngStreams(cfg.seed)
        self.net = self._build_network()
        self.range_m = derive_range(RadioConfig(
            cfg.tx_power_mw, cfg.sensitivity_dbm, cfg.carrier_frequency_hz,
            cfg.radio_range_override_m))
        self.control_cfg = ControlConfig(
            election_interval_ms=cfg.election_interval_ms,
            position_send_interval_ms=cfg.position_send_interval_ms,
            broadcast_interval_ms=cfg.broadcast_interval_ms,
            cycle_duration_ms=ms_from_s(cfg.cycle_duration_s),
            max_state_duration_ms=cfg.max_state_ms(),
            min_state_duration_ms=ms_from_s(cfg.min_state_duration_s),
            map_module_timeout_ms=ms_from_s(cfg.map_module_timeout_s),
            map_module_length_ms=ms_from_s(cfg.map_module_length_s),
            d_min=cfg.d_min_m,
            alpha=cfg.alpha,
            payload_bytes=cfg.payload_bytes,
            connection_trigger_m=(cfg.connection_trigger_m
                                  if cfg.connection_trigger_m is not None else self.range_m),
            disconnect_distance_m=cfg.disconnect_distance_m,
            yellow_ms=ms_from_s(cfg.yellow_s),
        )
        self.control_cfg.validate()
        self.lights: dict[str, TrafficLight] = {}
        for jid in self.net.junctions:
            ns, ew = self.net.incoming_groups(jid)
            self.lights[jid] = TrafficLight(jid, ns, ew, self.control_cfg.yellow_ms, PHASE_A)
        self.traffic = TrafficModel(
            self.net, self.lights,
            CarFollowingParams(cfg.max_accel, cfg.max_decel, cfg.min_gap_m,
                               cfg.vehicle_length_m, cfg.sigma, cfg.tau_s,
                               cfg.turn_speed_ms),
            self.rng.stream("traffic"))
        self.comms = CommNetwork(
            self.sim,
            ChannelModel(cfg.base_delay_ms, cfg.per_node_delay_ms, cfg.jitter_ms,
                         cfg.loss_probability, cfg.retransmit_timeout_ms,
                         cfg.handshake_rtts),
            self.range_m,
            self.rng.stream("channel-loss"), self.rng.stream("channel-jitter"),
            log_messages=cfg.record_messages)
        self.equipped_junctions = self._pick_equipped_junctions()
        self.ia_agents: dict[str, IaAgent] = {}
        self.fixed_controllers: dict[str, FixedCycleController] = {}
        self.va_agents: dict[int, VaAgent] = {}
        self._min_edge_length = min(e.length for e in self.net.edges.values())
        self._incident_edges: dict[str, list[str]] = {
            jid: sorted(set(self.net.incoming[jid]) | set(self.net.outgoing[jid]))
            for jid in self.net.junctions}
        for jid in self.net.junctions:
            if jid in self.equipped_junctions:
                agent = IaAgent(jid, self.net.node_xy(jid), self.lights[jid],
                                self.sim, self.comms, self.control_cfg,
                                self._vehicles_near, self.va_agents.get)
                self.ia_agents[jid] = agent
            else:
                self.fixed_controllers[jid] = FixedCycleController(
                    self.sim, self.lights[jid], self.control_cfg)
        self.traffic.on_inserted.append(self._vehicle_inserted)
        self.traffic.on_ended.append(self._vehicle_ended)
        self.samples: list[CensusSample] = []
        self.vehicle_trace: list[tuple] | None = [] if cfg.record_vehicle_trace else None
        self._all_vehicles: list[Vehicle] = []
        self.plan = self._plan_demand()

    # -- construction -----------------------------------------------------

    def _build_network(self) -> RoadNetwork:
        cfg = self.cfg
        if cfg.scenario == "grid":
            return build_grid(cfg.grid_n, cfg.edge_length_m, cfg.speed_limit_ms)
        return build_one_junction(cfg.edge_length_m, cfg.speed_limit_ms)

    def _pick_equipped_junctions(self) -> set[str]:
        ratio = self.cfg.equipped_junction_ratio
        junctions = sorted(self.net.junctions)
        if ratio >= 1.0:
            return set(junctions)
        count = round(ratio * len(junctions))
        rng = self.rng.stream("junction-subset")
        return set(rng.sample(junctions, count))

    def _plan_demand(self) -> list[_PlannedVehicle]:
        """Expand the configured demand into a deterministic departure plan.

        The demand stream is consumed in a fixed order (origin/destination
        draw then equipment draw per vehicle), so two configs differing only
        in penetration share the same demand realization.
        """
        cfg = self.cfg
        rng = self.rng.stream("demand")
        planned: list[_PlannedVehicle] = []
        end_ms = ms_from_s(cfg.sim_duration_s)
        if cfg.scenario == "one-junction":
            for origin, dest in (("in_w", "out_e"), ("in_s", "out_n")):
                if cfg.demand_rate_per_hour <= 0:
                    continue
                interval = 3_600_000.0 / cfg.demand_rate_per_hour
                t = 0.0
                while t < end_ms:
                    equipped = rng.random() < cfg.penetration_rate
                    planned.append(_PlannedVehicle(round(t), origin, dest, equipped))
                    t += interval
        else:
            planned.extend(self._plan_grid_demand(rng))
        planned.sort(key=lambda pv: (pv.depart_ms, pv.seq))
        return planned

    def _plan_grid_demand(self, rng) -> list[_PlannedVehicle]:
        cfg = self.cfg
        zones = self.net.zones
        other = [z for z in sorted(zones) if z != 4]
        half_ms = ms_from_s(cfg.sim_duration_s) // 2
        planned: list[_PlannedVehicle] = []
        seq = 0
        halves = [
            (0, cfg.demand_first_center_to_other, cfg.demand_first_other_to_center,
             cfg.demand_first_other_to_other),
            (half_ms, cfg.demand_second_center_to_other, cfg.demand_second_other_to_center,
             cfg.demand_second_other_to_other),
        ]
        per_pair = cfg.demand_reading == "per-pair"

        def split(total: int, n_dest: int, k: int) -> int:
            # per-origin reading: the cell is a per-origin total, spread as
            # evenly as possible over that origin's destination zones
            return total // n_dest + (1 if k < total % n_dest else 0)

        for start, c2o, o2c, o2o in halves:
            pairs: list[tuple[int, int, int]] = []
            for k, z in enumerate(other):
                pairs.append((4, z, c2o if per_pair else split(c2o, len(other), k)))
                pairs.append((z, 4, o2c))
            for zo in other:
                dests = [z for z in other if z != zo]
                for k, zd in enumerate(dests):
                    pairs.append((zo, zd, o2o if per_pair else split(o2o, len(dests), k)))
            for zo, zd, count in pairs:
                if count <= 0:
                    continue
                interval = half_ms / count
                for i in range(count):
                    origin = rng.choice(zones[zo].entry_edges)
                    dest = rng.choice(zones[zd].exit_edges)
                    equipped = rng.random() < cfg.penetration_rate
                    planned.append(_PlannedVehicle(start + round(i * interval),
                                                   origin, dest, equipped, seq))
                    seq += 1
        return planned

    # -- agent wiring -------------------------------------------------------

    def _vehicles_near(self, ia: IaAgent):
        """Equipped vehicles within beacon reach of the IA, with distances.

        Only edges incident to the junction can hold in-range vehicles as
        long as the radio range does not exceed the edge length; fall back
        to a full scan otherwise.
        """
        jx, jy = ia.xy
        result = []
        if self.range_m <= self._min_edge_length:
            edge_ids = self._incident_edges[ia.id]
        else:
            edge_ids = list(self.traffic.edge_vehicles)
        for eid in edge_ids:
            for veh in self.traffic.edge_vehicles[eid]:
                if not veh.equipped:
                    continue
                vx, vy = self.traffic.vehicle_xy(veh)
                dist = math.hypot(vx - jx, vy - jy)
                if dist <= self.range_m:
                    agent = self.va_agents.get(veh.id)
                    if agent is not None:
                        result.append((agent, dist))
        return result

    def _vehicle_inserted(self, veh: Vehicle, now: int) -> None:
        if veh.equipped:
            agent = VaAgent(veh, self.sim, self.comms, self.traffic,
                            self.control_cfg, self.ia_agents)
            veh.agent = agent
            self.va_agents[veh.id] = agent
            agent.start()

    def _vehicle_ended(self, veh: Vehicle, now: int) -> None:
        agent = self.va_agents.pop(veh.id, None)
        if agent is not None:
            agent.shutdown()

    # -- periodic events ------------------------------------------------------

    def _traffic_step(self) -> None:
        dt = self.cfg.traffic_step_ms / 1000.0
        self.traffic.step(self.sim.now, dt)
        if self.vehicle_trace is not None:
            for eid, vehicles in self.traffic.edge_vehicles.items():
                for veh in vehicles:
                    self.vehicle_trace.append(
                        (self.sim.now, veh.id, eid, round(veh.pos, 3), round(veh.speed, 3)))
        self.sim.schedule_in(self.cfg.traffic_step_ms, "traffic-step", self._traffic_step)

    def _sample(self) -> None:
        census = self.traffic.census
        speeds = [v.speed
                  for vehicles in self.traffic.edge_vehicles.values()
                  for v in vehicles]
        self.samples.append(CensusSample(
            self.sim.now, census.inserted, census.ended, census.running,
            census.queued, sum(speeds) / len(speeds) if speeds else None))
        self.sim.schedule_in(ms_from_s(self.cfg.sample_interval_s),
                             "metrics-sample", self._sample)

    def _schedule_departure(self, pv: _PlannedVehicle, vid: int) -> None:
        def depart():
            route = self._route_at_departure(pv)
            veh = Vehicle(vid, route, self.cfg.vehicle_length_m, pv.equipped)
            self._all_vehicles.append(veh)
            self.traffic.request_insert(veh, self.sim.now)

        self.sim.schedule_at(pv.depart_ms, "vehicle-insertion", depart)

    def _route_at_departure(self, pv: _PlannedVehicle) -> Route:
        return fastest_path(self.net, pv.origin_edge, pv.dest_edge,
                            self.traffic.travel_time_estimate)

    # -- run ----------------------------------------------------------------

    def run(self) -> RunResult:
        cfg = self.cfg
        end_ms = ms_from_s(cfg.sim_duration_s)
        for vid, pv in enumerate(self.plan, start=1):
            self._schedule_departure(pv, vid)
        self.sim.schedule_at(cfg.traffic_step_ms, "traffic-step", self._traffic_step)
        self.sim.schedule_at(ms_from_s(cfg.sample_interval_s), "metrics-sample", self._sample)
        for agent in self.ia_agents.values():
            agent.start()
        for controller in self.fixed_controllers.values():
            controller.start()
        self.sim.run_until(end_ms)
        return self._result(end_ms)

    def _result(self, end_ms: int) -> RunResult:
        cfg = self.cfg
        stats = self.comms.stats
        indicators = metrics.traffic_indicators(self._all_vehicles, end_ms)
        duration_s = end_ms / 1000.0
        per_ia = {ia: metrics.rsu_throughput_bps(b, duration_s)
                  for ia, b in sorted(stats.bytes_delivered_at_ia.items())}
        mean_delay = (stats.sum_delay_ms / stats.stream_delivered / 1000.0
                      if stats.stream_delivered else None)
        speed_samples = [s.mean_speed for s in self.samples if s.mean_speed is not None]
        report = metrics.MetricsReport(
            scenario=cfg.scenario,
            seed=cfg.seed,
            penetration_rate=cfg.penetration_rate,
            equipped_junction_ratio=cfg.equipped_junction_ratio,
            demand=(f"rate={cfg.demand_rate_per_hour:g}" if cfg.scenario == "one-junction"
                    else f"tables:{cfg.demand_reading}"),
            sim_duration_s=duration_s,
            inserted=indicators["inserted"],
            ended=indicators["ended"],
            running=indicators["running"],
            queued=self.traffic.census.queued,
            ended_ratio=indicators["ended_ratio"],
            mean_travel_time_s=indicators["mean_travel_time_s"],
            mean_travel_time_equipped_s=indicators["mean_travel_time_equipped_s"],
            mean_delay_s=mean_delay,
            rsu_throughput_bps=metrics.rsu_throughput_bps(
                sum(stats.bytes_delivered_at_ia.values()), duration_s),
            rsu_throughput_per_ia_bps=per_ia,
            app_data_rate_bps=metrics.app_data_rate_bps(stats.bytes_sent, duration_s),
            mean_action_interval_s={jid: metrics.mean_action_interval_s(light.switch_log)
                                    for jid, light in sorted(self.lights.items())},
            mean_vehicle_speed_ms=(sum(speed_samples) / len(speed_samples)
                                   if speed_samples else None),
            messages_sent=stats.stream_sent,
            messages_delivered=stats.stream_delivered,
            safety_violations=self.traffic.safety_violations,
        )
        return RunResult(
            config=cfg,
            report=report,
            switch_logs={jid: list(light.switch_log) for jid, light in sorted(self.lights.items())},
            samples=self.samples,
            vehicles=self._all_vehicles,
            message_log=self.comms.message_log,
            event_log=self.sim.event_log,
            vehicle_trace=self.vehicle_trace,
            safety_violations=self.traffic.safety_violations,
            processed_events=self.sim.processed,
        )


def run_scenario(cfg: ScenarioConfig) -> RunResult:
    return Simulation(cfg).run()
