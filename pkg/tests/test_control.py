import random

import pytest

from v2isim.comms import ChannelModel, CommNetwork
from v2isim.control import (APPROACHING, LEAVING, ConfigError, ControlConfig,
                            FixedCycleController, IaAgent, JunctionMap, elect,
                            lead_vehicles, priority_phase)
from v2isim.engine import Simulator
from v2isim.signals import PHASE_A, PHASE_B, TrafficLight


def make_cfg(**overrides):
    cfg = ControlConfig(**overrides)
    cfg.validate()
    return cfg


def make_ia(cfg=None, phase=PHASE_A):
    sim = Simulator()
    light = TrafficLight("J", ["in_s"], ["in_w"], 3000, phase)
    channel = ChannelModel(jitter_ms=0, loss_probability=0.0)
    comms = CommNetwork(sim, channel, 114.0, random.Random(1), random.Random(2))
    ia = IaAgent("J", (0.0, 0.0), light, sim, comms, cfg or make_cfg(),
                 neighbor_provider=lambda agent: [], agent_lookup=lambda vid: None)
    return sim, light, comms, ia


class TestConfig:
    def test_rejects_bad_domains(self):
        with pytest.raises(ConfigError):
            ControlConfig(d_min=0.0).validate()
        with pytest.raises(ConfigError):
            ControlConfig(alpha=1.0).validate()
        with pytest.raises(ConfigError):
            ControlConfig(min_state_duration_ms=50_000).validate()


class TestPriority:
    def test_alternates_every_half_cycle(self):
        cycle = 90_000
        assert priority_phase(0, cycle) == PHASE_A
        assert priority_phase(44_999, cycle) == PHASE_A
        assert priority_phase(45_000, cycle) == PHASE_B
        assert priority_phase(89_999, cycle) == PHASE_B
        assert priority_phase(90_000, cycle) == PHASE_A


class TestElect:
    def test_non_prioritized_wins_when_close_and_p_far(self):
        assert elect(1, 2, 250.0, 50.0, 100.0, 2.0) == 2

    def test_prioritized_wins_when_near(self):
        assert elect(1, 2, 150.0, 50.0, 100.0, 2.0) == 1

    def test_non_prioritized_wins_when_alone_and_close(self):
        assert elect(None, 2, None, 50.0, 100.0, 2.0) == 2

    def test_nobody_elected_when_map_empty(self):
        assert elect(None, None, None, None, 100.0, 2.0) is None

    def test_prioritized_returned_by_default(self):
        assert elect(1, None, 400.0, None, 100.0, 2.0) == 1
        assert elect(None, 2, None, 150.0, 100.0, 2.0) is None


class TestJunctionMap:
    def test_update_computes_distance_and_direction(self):
        jmap = JunctionMap("J", (0.0, 0.0))
        entry = jmap.update(1, 10, 1000, -100.0, 0.0, "in_w")
        assert entry.r == 100.0
        assert entry.cos_theta == -1.0
        assert entry.state == APPROACHING
        assert entry.fst == entry.lst == 1000

    def test_radius_trend_flags_leaving(self):
        jmap = JunctionMap("J", (0.0, 0.0))
        jmap.update(1, 10, 1000, -100.0, 0.0, "in_w")
        entry = jmap.update(1, 10, 1500, -120.0, 0.0, "in_w")
        assert entry.state == LEAVING
        entry = jmap.update(1, 10, 2000, -80.0, 0.0, "in_w")
        assert entry.state == APPROACHING

    def test_purge_drops_stale_vehicles_and_old_samples(self):
        jmap = JunctionMap("J", (0.0, 0.0))
        jmap.update(1, 10, 0, -100.0, 0.0, "in_w")
        jmap.update(2, 11, 4000, -90.0, 0.0, "in_w")
        jmap.update(2, 11, 6000, -80.0, 0.0, "in_w")
        jmap.purge(now=6000, map_module_length_ms=5000)
        assert sorted(jmap.entries) == [2]
        assert all(t >= 1000 for t, _, _ in jmap.entries[2].trajectory)

    def test_synchronized_requires_fresh_reports(self):
        jmap = JunctionMap("J", (0.0, 0.0))
        assert jmap.is_synchronized(0, 2000)  # vacuously fresh
        jmap.update(1, 10, 0, -100.0, 0.0, "in_w")
        assert jmap.is_synchronized(1500, 2000)
        assert not jmap.is_synchronized(2500, 2000)


class TestLeadVehicles:
    def make(self):
        light = TrafficLight("J", ["in_s"], ["in_w"], 3000, PHASE_A)
        jmap = JunctionMap("J", (0.0, 0.0))
        return light, jmap

    def test_nearest_approaching_per_group(self):
        light, jmap = self.make()
        jmap.update(1, 10, 0, -120.0, 0.0, "in_w")
        jmap.update(2, 11, 0, -60.0, 0.0, "in_w")
        jmap.update(3, 12, 0, 0.0, -90.0, "in_s")
        (p, d_p), (v, d_v) = lead_vehicles(jmap, light, PHASE_A)
        assert (p, d_p) == (3, 90.0)
        assert (v, d_v) == (2, 60.0)

    def test_leaving_vehicles_ignored(self):
        light, jmap = self.make()
        jmap.update(1, 10, 0, -60.0, 0.0, "in_w")
        jmap.update(1, 10, 500, -80.0, 0.0, "in_w")  # moving away
        (p, d_p), (v, d_v) = lead_vehicles(jmap, light, PHASE_A)
        assert (p, v) == (None, None)

    def test_distance_tie_breaks_on_vehicle_id(self):
        light, jmap = self.make()
        jmap.update(5, 10, 0, -60.0, 0.0, "in_w")
        jmap.update(3, 11, 0, -60.0, 0.0, "in_w")
        (_, _), (v, _) = lead_vehicles(jmap, light, PHASE_A)
        assert v == 3


class TestFixedCycle:
    def test_switches_every_half_cycle(self):
        sim = Simulator()
        light = TrafficLight("J", ["in_s"], ["in_w"], 3000, PHASE_A)
        FixedCycleController(sim, light, make_cfg()).start()
        sim.run_until(300_000)
        times = [rec.time for rec in light.switch_log]
        assert times == [45_000, 90_000, 135_000, 180_000, 225_000, 270_000]
        phases = [rec.new_phase for rec in light.switch_log]
        assert phases == [PHASE_B, PHASE_A] * 3
        assert all(rec.cause == "fixed-cycle" for rec in light.switch_log)

    def test_yellow_interval_precedes_new_green(self):
        sim = Simulator()
        light = TrafficLight("J", ["in_s"], ["in_w"], 3000, PHASE_A)
        FixedCycleController(sim, light, make_cfg()).start()
        sim.run_until(46_000)
        assert light.in_yellow and light.phase == PHASE_A
        sim.run_until(48_000)
        assert not light.in_yellow and light.phase == PHASE_B


class TestActuation:
    def mapped(self, ia, vid=1, edge="in_w", r=-50.0):
        ia.map.update(vid, 10, ia.sim.now, r, 0.0, edge)

    def test_unmapped_vehicle_dropped(self):
        sim, light, comms, ia = make_ia()
        ok, reason = ia.handle_actuation(1, "in_w")
        assert (ok, reason) == (False, "unmapped")
        assert ia.dropped_unmapped == 1

    def test_unknown_edge_dropped(self):
        sim, light, comms, ia = make_ia()
        self.mapped(ia)
        ok, reason = ia.handle_actuation(1, "out_e")
        assert (ok, reason) == (False, "unknown-edge")

    def test_already_green_suppressed(self):
        sim, light, comms, ia = make_ia(phase=PHASE_B)  # in_w already green
        self.mapped(ia)
        ok, reason = ia.handle_actuation(1, "in_w")
        assert (ok, reason) == (False, "already-green")
        assert ia.suppressed["already-green"] == 1

    def test_min_duration_suppressed(self):
        sim, light, comms, ia = make_ia()
        self.mapped(ia)
        # last switch at t=0, request at t=5s < min 8s
        sim.schedule_at(5000, "req", lambda: None)
        sim.run_until(5000)
        ok, reason = ia.handle_actuation(1, "in_w")
        assert (ok, reason) == (False, "min-duration")

    def test_in_transition_suppressed(self):
        sim, light, comms, ia = make_ia()
        self.mapped(ia)
        sim.run_until(10_000)
        light.request_switch(PHASE_B, sim.now, "test")
        ok, reason = ia.handle_actuation(1, "in_w")
        assert (ok, reason) == (False, "in-transition")

    def test_commit_switches_and_logs(self):
        sim, light, comms, ia = make_ia()
        self.mapped(ia)
        sim.run_until(10_000)
        ok, reason = ia.handle_actuation(1, "in_w")
        assert (ok, reason) == (True, "committed")
        assert light.switch_log[-1].cause == "actuation"
        assert light.in_yellow
        sim.run_until(13_000)
        assert light.phase == PHASE_B and not light.in_yellow

    def test_commit_resets_auto_switch_timer(self):
        sim, light, comms, ia = make_ia()
        ia.start()
        sim.run_until(10_000)
        self.mapped(ia)
        assert ia.handle_actuation(1, "in_w")[0]
        sim.run_until(60_000)
        # auto switch rescheduled to 10s + 45s, not the original 45s
        times = [(rec.time, rec.cause) for rec in light.switch_log]
        assert times == [(10_000, "actuation"), (55_000, "auto")]

    def test_idle_equipped_junction_follows_cycle(self):
        sim, light, comms, ia = make_ia()
        ia.start()
        sim.run_until(180_000)
        times = [rec.time for rec in light.switch_log]
        assert times == [45_000, 90_000, 135_000, 180_000]
        assert all(rec.cause == "auto" for rec in light.switch_log)
