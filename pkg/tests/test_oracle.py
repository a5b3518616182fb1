"""Fixed-step reference simulator and trace comparison."""

from __future__ import annotations

import math

import numpy as np
import pytest

from pulsenet import engine, model, oracle


class TestFixedStep:
    def test_net_a_matches_engine(self, net_a):
        horizon = 3.5
        init = np.full(9, 0.5)
        init[0] = 0.9
        ref = oracle.fixed_step_simulate(net_a, init, oracle.OracleConfig(dt=1e-4, horizon=horizon))
        ev = engine.simulate(net_a, horizon, init=init)
        rep = oracle.compare_traces(ev, ref, time_tol=2e-4)
        assert rep.ok(2e-4)
        assert rep.matched == len(ev.events) == 4

    def test_net_b_matches_engine(self, net_b):
        horizon = 4.0
        ref = oracle.fixed_step_simulate(net_b, None, oracle.OracleConfig(dt=1e-4, horizon=horizon))
        ev = engine.simulate(net_b, horizon)
        rep = oracle.compare_traces(ev, ref, time_tol=2e-4)
        assert rep.ok(2e-4)
        assert rep.clusters_equal

    def test_event_time_error_halves_with_dt(self, net_a):
        init = np.full(9, 0.37)
        devs = []
        for dt in (2e-4, 1e-4, 5e-5):
            ref = oracle.fixed_step_simulate(net_a, init, oracle.OracleConfig(dt=dt, horizon=2.0))
            ev = engine.simulate(net_a, 2.0, init=init)
            rep = oracle.compare_traces(ev, ref, time_tol=2 * dt)
            assert rep.ok(2 * dt)
            devs.append(rep.max_time_deviation)
        # first-order method: deviation bounded by dt at each refinement
        assert devs[1] <= devs[0] + 1e-12
        assert devs[2] <= devs[1] + 1e-12

    def test_uncoupled_pair_oracle_only(self):
        # zero weights: closed-form spike times to check the oracle in isolation
        cells = [
            model.CellSpec(theta=1.0, dynamics=model.ConstantRate(a=1.0)),
            model.CellSpec(theta=1.0, dynamics=model.ConstantRate(a=0.4)),
        ]
        net = model.validate(model.make_network(cells, [[0.0, 0.0], [0.0, 0.0]]))
        ref = oracle.fixed_step_simulate(net, None, oracle.OracleConfig(dt=1e-4, horizon=3.0))
        spikes = ref.per_cell_spikes
        assert spikes[0] == pytest.approx([1.0, 2.0, 3.0], abs=2e-4)
        assert spikes[1] == pytest.approx([2.5], abs=2e-4)

    def test_oscillatory_cell(self):
        # single free oscillatory cell: exact spike at t = 1 (sine integrates out)
        dyn = model.OscillatoryAux(c=1.0, amplitude=0.25, omega=2 * math.pi)
        cells = [model.CellSpec(theta=1.0, dynamics=dyn) for _ in range(2)]
        net = model.validate(model.make_network(cells, [[0.0, 0.0], [0.0, 0.0]]))
        ref = oracle.fixed_step_simulate(net, None, oracle.OracleConfig(dt=1e-4, horizon=1.5))
        assert ref.per_cell_spikes[0][0] == pytest.approx(1.0, abs=2e-4)

    def test_impulse_applied(self):
        cells = [model.CellSpec(theta=1.0, dynamics=model.ConstantRate(a=1.0)) for _ in range(2)]
        itf = model.ImpulsiveInterference(target=0, magnitude=0.3, at=0.5)
        net = model.validate(
            model.make_network(cells, [[0.0, 0.0], [0.0, 0.0]], interferences=[itf])
        )
        ref = oracle.fixed_step_simulate(net, None, oracle.OracleConfig(dt=1e-4, horizon=2.0))
        assert ref.per_cell_spikes[0][0] == pytest.approx(1.3, abs=2e-4)

    def test_bad_config_rejected(self):
        with pytest.raises(ValueError):
            oracle.OracleConfig(dt=0.0, horizon=1.0)
        with pytest.raises(ValueError):
            oracle.OracleConfig(dt=1e-4, horizon=-1.0)


class TestCompareTraces:
    def test_mismatched_cluster_reported(self, net_a):
        t1 = engine.simulate(net_a, 2.5)
        t2 = engine.Trace(m=t1.m, horizon=t1.horizon, initial=t1.initial, events=list(t1.events))
        ev = t2.events[0]
        t2.events[0] = engine.ClusterEvent(n=ev.n, t=ev.t, cluster=frozenset({0}))
        rep = oracle.compare_traces(t1, t2, time_tol=1e-6)
        assert rep.cluster_mismatches == [0]
        assert not rep.ok(1e-6)
        assert rep.ok(1e-6, require_equal_clusters=False)

    def test_unmatched_counts(self, net_a):
        t1 = engine.simulate(net_a, 3.5)
        t2 = engine.simulate(net_a, 1.5)
        rep = oracle.compare_traces(t1, t2, time_tol=1e-9)
        assert rep.unmatched_a == len(t1.events) - len(t2.events)
        assert not rep.ok(1e-9)
