"""Flow, hit finding, cascades, and full event-driven runs."""

from __future__ import annotations

import math

import numpy as np
import pytest

from pulsenet import engine, model


def _net(cells, delta, **kw):
    return model.validate(model.make_network(cells, delta, **kw))


class TestFlow:
    def test_constant(self):
        s, aux, clamped = engine.flow(model.ConstantRate(a=2.0), 1.0, 0.1, 0.0, 0.2, 0.0)
        assert s == pytest.approx(0.5) and not clamped

    def test_constant_clamped(self):
        s, _, clamped = engine.flow(model.ConstantRate(a=1.0), 1.0, 0.1, 0.0, 1.0, 2.0)
        assert s == 0.0 and clamped

    def test_affine_closed_form(self):
        # dS/dt = 2 - S from 0: S(t) = 2(1 - e^-t)
        dyn = model.AffineInS(a=2.0, b=1.0)
        s, _, _ = engine.flow(dyn, 1.5, 0.0, 0.0, math.log(2.0), 0.0)
        assert s == pytest.approx(1.0, abs=1e-12)

    def test_oscillatory_quadrature_accuracy(self):
        # S(t) = c*t + (A/omega)(1 - cos(omega t)) from S(0)=0, phi(0)=0
        dyn = model.OscillatoryAux(c=1.0, amplitude=0.25, omega=2 * math.pi)
        t = 0.37
        exact = t + 0.25 / (2 * math.pi) * (1.0 - math.cos(2 * math.pi * t))
        s, aux, _ = engine.flow(dyn, 10.0, 0.0, 0.0, t, 0.0)
        assert s == pytest.approx(exact, abs=1e-9)
        assert aux == pytest.approx(2 * math.pi * t)

    def test_flow_additivity(self):
        dyn = model.OscillatoryAux(c=1.0, amplitude=0.5, omega=3.0)
        s1, a1, _ = engine.flow(dyn, 10.0, 0.2, 0.7, 0.9, 0.0)
        sa, aa, _ = engine.flow(dyn, 10.0, 0.2, 0.7, 0.4, 0.0)
        sb, ab, _ = engine.flow(dyn, 10.0, sa, aa, 0.5, 0.0)
        assert sb == pytest.approx(s1, abs=1e-10)
        assert ab == pytest.approx(a1, abs=1e-12)


class TestHitTime:
    def test_constant(self):
        assert engine.hit_time(model.ConstantRate(a=2.0), 1.0, 0.5, 0.0) == pytest.approx(0.25)

    def test_constant_no_hit_under_drift(self):
        assert engine.hit_time(model.ConstantRate(a=1.0), 1.0, 0.5, 0.0, active_delta=1.5) is None

    def test_affine(self):
        # dS/dt = 2 - S from 0 hits 1 at ln 2
        dyn = model.AffineInS(a=2.0, b=1.0)
        assert engine.hit_time(dyn, 1.0, 0.0, 0.0) == pytest.approx(math.log(2.0))

    def test_affine_equilibrium_below_theta(self):
        dyn = model.AffineInS(a=2.0, b=1.0)
        # drift 1.5 pulls the equilibrium to 0.5 < theta
        assert engine.hit_time(dyn, 1.0, 0.0, 0.0, active_delta=1.5) is None

    def test_oscillatory_exact_period_hit(self):
        # c=1, A=0.25, omega=2*pi: S(1) = 1 exactly (the sine integrates to 0)
        dyn = model.OscillatoryAux(c=1.0, amplitude=0.25, omega=2 * math.pi)
        tau = engine.hit_time(dyn, 1.0, 0.0, 0.0)
        assert tau == pytest.approx(1.0, abs=1e-8)

    def test_oscillatory_respects_t_max(self):
        dyn = model.OscillatoryAux(c=1.0, amplitude=0.25, omega=2 * math.pi)
        assert engine.hit_time(dyn, 1.0, 0.0, 0.0, t_max=0.5) is None

    def test_hit_matches_flow(self):
        dyn = model.AffineInS(a=3.0, b=0.8)
        tau = engine.hit_time(dyn, 1.2, 0.3, 0.0)
        s, _, _ = engine.flow(dyn, 1.2, 0.3, 0.0, tau, 0.0)
        assert s == pytest.approx(1.2, abs=1e-12)


class TestCascade:
    def _state(self, net, s):
        st = engine.make_state(net, 10.0)
        st.s = np.array(s, dtype=float)
        return st

    def test_single_spike_no_recruit(self, net_b):
        st = self._state(net_b, [1.0] + [0.1] * 15)
        cluster = engine.cascade(st, net_b, {0})
        assert cluster == frozenset({0})
        assert st.s[0] == 0.0
        assert st.s[1] == pytest.approx(0.1 + 0.35)

    def test_full_avalanche(self, net_a):
        st = self._state(net_a, [0.5] * 9)
        st.s[0] = 1.0
        cluster = engine.cascade(st, net_a, {0})
        assert cluster == frozenset(range(9))
        assert np.all(st.s == 0.0)

    def test_members_never_receive(self, net_b):
        # two simultaneous seeds: each resets once, mutual weights discarded
        st = self._state(net_b, [0.05] * 16)
        st.s[0] = st.s[1] = 1.0
        cluster = engine.cascade(st, net_b, {0, 1})
        assert cluster == frozenset({0, 1})
        assert st.s[0] == 0.0 and st.s[1] == 0.0
        assert st.s[2] == pytest.approx(0.05 + 2 * 0.35)

    def test_order_independence(self, net_b):
        base = [0.9, 0.8, 0.7] + [0.3] * 13
        for seeds in ({0}, {0, 1}, {1, 0}):
            st = self._state(net_b, list(base))
            st_s_before = st.s.copy()
            for i in seeds:
                st.s[i] = 1.0
            c1 = engine.cascade(st, net_b, frozenset(seeds))
            st2 = self._state(net_b, list(st_s_before))
            for i in seeds:
                st2.s[i] = 1.0
            c2 = engine.cascade(st2, net_b, set(sorted(seeds, reverse=True)))
            assert c1 == c2
            assert np.allclose(st.s, st2.s)

    def test_increment_consistency(self, net_b):
        # non-members gain exactly the summed weights of the cluster
        st = self._state(net_b, [0.99, 0.2, 0.5] + [0.1] * 13)
        st.s[0] = 1.0
        before = st.s.copy()
        cluster = engine.cascade(st, net_b, {0})
        inc = net_b.delta[sorted(cluster), :].sum(axis=0)
        for i in range(net_b.m):
            if i in cluster:
                assert st.s[i] == 0.0
            else:
                assert st.s[i] == pytest.approx(before[i] + inc[i], abs=1e-12)

    def test_oscillatory_phase_reset_on_own_spike_only(self):
        dyn = model.OscillatoryAux(c=1.0, amplitude=0.25, omega=2 * math.pi, phi_reset=0.5)
        cells = [model.CellSpec(theta=1.0, dynamics=dyn) for _ in range(2)]
        net = _net(cells, [[0.0, 0.3], [0.3, 0.0]])
        st = engine.make_state(net, 10.0)
        st.aux[:] = [2.0, 3.0]
        st.s[:] = [1.0, 0.1]
        engine.cascade(st, net, {0})
        assert st.aux[0] == 0.5  # spiker resets
        assert st.aux[1] == 3.0  # receiver keeps its phase


class TestSimulate:
    def test_net_a_from_half(self, net_a):
        init = np.full(9, 0.5)
        init[0] = 0.9
        trace = engine.simulate(net_a, 3.5, init=init)
        # cell 0 hits at 0.1, avalanche is full, then period 1 every 1.0
        assert [ev.t for ev in trace.events] == pytest.approx([0.1, 1.1, 2.1, 3.1])
        assert all(ev.cluster == frozenset(range(9)) for ev in trace.events)

    def test_net_b_from_reset(self, net_b):
        trace = engine.simulate(net_b, 3.2)
        times = [ev.t for ev in trace.events]
        clusters = [ev.cluster for ev in trace.events]
        assert times == pytest.approx([1.0, 1.5, 2.5, 3.0])
        assert clusters[0] == frozenset({0, 1})
        assert clusters[1] == frozenset(range(16))
        assert clusters[2] == frozenset({0, 1})
        assert clusters[3] == frozenset(range(16))

    def test_determinism(self, net_b):
        rng = np.random.default_rng(7)
        init = rng.uniform(0.0, net_b.thetas)
        t1 = engine.simulate(net_b, 8.0, init=init)
        t2 = engine.simulate(net_b, 8.0, init=init.copy())
        assert [(e.t, e.cluster) for e in t1.events] == [(e.t, e.cluster) for e in t2.events]

    def test_full_reset_recurrence(self, net_a):
        # after any full event the orbit is periodic with the zero state
        rng = np.random.default_rng(3)
        init = rng.uniform(0.0, net_a.thetas)
        trace = engine.simulate(net_a, 5.0, init=init)
        full = [e.t for e in trace.events if len(e.cluster) == 9]
        gaps = np.diff(full)
        assert np.allclose(gaps, gaps[0], atol=1e-12)

    def test_bad_init_rejected(self, net_a):
        with pytest.raises(ValueError):
            engine.simulate(net_a, 1.0, init=np.full(9, 1.0))
        with pytest.raises(ValueError):
            engine.simulate(net_a, 1.0, init=np.full(4, 0.5))

    def test_event_flood_guard(self, net_a):
        with pytest.raises(engine.EventFlood):
            engine.simulate(net_a, 50.0, max_events=10)

    def test_horizon_event_boundary(self, net_a):
        # an event exactly at the horizon is still recorded
        trace = engine.simulate(net_a, 1.0)
        assert len(trace.events) == 1
        assert trace.events[0].t == pytest.approx(1.0)


class TestInterference:
    def test_differential_slows_target(self):
        cells = [model.CellSpec(theta=1.0, dynamics=model.ConstantRate(a=1.0)) for _ in range(2)]
        itf = model.DifferentialInterference(target=0, delta=0.5, window=(0.0, 10.0))
        net = _net(cells, [[0.0, 0.0], [0.0, 0.0]], interferences=[itf])
        trace = engine.simulate(net, 2.5)
        spikes = trace.per_cell_spikes
        assert spikes[1][0] == pytest.approx(1.0)
        assert spikes[0][0] == pytest.approx(2.0)  # effective rate 0.5

    def test_differential_window_edges(self):
        cells = [model.CellSpec(theta=1.0, dynamics=model.ConstantRate(a=1.0)) for _ in range(2)]
        itf = model.DifferentialInterference(target=0, delta=2.0, window=(0.0, 0.5))
        net = _net(cells, [[0.0, 0.0], [0.0, 0.0]], interferences=[itf])
        trace = engine.simulate(net, 2.0)
        # clamped at 0 until 0.5, then rate 1 from 0
        assert trace.per_cell_spikes[0][0] == pytest.approx(1.5)

    def test_impulse_delays_spike_without_spiking(self):
        cells = [model.CellSpec(theta=1.0, dynamics=model.ConstantRate(a=1.0)) for _ in range(2)]
        itf = model.ImpulsiveInterference(target=0, magnitude=0.3, at=0.5)
        net = _net(cells, [[0.0, 0.0], [0.0, 0.0]], interferences=[itf])
        trace = engine.simulate(net, 2.0)
        assert trace.per_cell_spikes[0][0] == pytest.approx(1.3)

    def test_impulse_clamps_at_zero(self):
        cells = [model.CellSpec(theta=1.0, dynamics=model.ConstantRate(a=1.0)) for _ in range(2)]
        itf = model.ImpulsiveInterference(target=0, magnitude=5.0, at=0.5)
        net = _net(cells, [[0.0, 0.0], [0.0, 0.0]], interferences=[itf])
        trace = engine.simulate(net, 2.0)
        assert trace.per_cell_spikes[0][0] == pytest.approx(1.5)


class TestDeath:
    def test_permanently_suppressed_cell_flagged(self):
        cells = [model.CellSpec(theta=1.0, dynamics=model.ConstantRate(a=1.0)) for _ in range(2)]
        itf = model.DifferentialInterference(target=0, delta=2.0, window=(0.0, 20.0))
        net = _net(cells, [[0.0, 0.0], [0.0, 0.0]], interferences=[itf])
        trace = engine.simulate(net, 20.0)
        assert engine.detect_death(trace, net, quiescence_factor=3.0) == frozenset({0})

    def test_healthy_network_not_flagged(self, net_a):
        trace = engine.simulate(net_a, 10.0)
        assert engine.detect_death(trace, net_a, quiescence_factor=3.0) == frozenset()
