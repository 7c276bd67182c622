import numpy as np
import pytest

from conftest import random_disk_states, random_polar_states
from hybrid_routh import (
    ForcedLagrangianSystem,
    HybridTrajectory,
    HyperregularityError,
    IntegratorConfig,
    StateTQ,
    StateTstarQ,
    billiard_cartesian,
    billiard_polar,
    energy,
    execute,
    execute_hamiltonian,
    forced_hamiltonian_field,
    hamiltonian_eval,
    inverse_legendre,
    legendre,
    map_hybrid_flow,
    compare_trajectories,
)
from hybrid_routh.hamiltonian import hamiltonian_reset, tstarq_field
from hybrid_routh.hybrid import apply_reset, rk4_step
from hybrid_routh.mechanics import tq_field


def test_legendre_examples(cartesian, polar):
    assert np.allclose(legendre(cartesian.system, StateTQ([0, 0], [1, 2])).p, [1, 2])
    assert np.array_equal(legendre(cartesian.system, StateTQ([0.1, 0.2], [0, 0])).p, [0, 0])
    c = legendre(polar[0].system, StateTQ([0.5, 0], [2, 1]))
    assert np.allclose(c.p, [2.0, 0.25], atol=1e-15)
    assert np.array_equal(c.q, [0.5, 0.0])


def test_inverse_legendre_examples(polar, cartesian):
    s = inverse_legendre(polar[0].system, StateTstarQ([0.5, 0.0], [2.0, 0.25]))
    assert np.allclose(s.v, [2.0, 1.0], atol=1e-12)
    assert np.array_equal(inverse_legendre(cartesian.system, StateTstarQ([0.3, 0.1], [0, 0])).v, [0, 0])


@pytest.mark.parametrize("chart", ["cartesian", "polar"])
def test_legendre_round_trip(chart, rng):
    if chart == "cartesian":
        sys, states = billiard_cartesian(1.0, 2.0).system, random_disk_states(rng, 1000)
    else:
        sys, states = billiard_polar(1.0, 2.0)[0].system, random_polar_states(rng, 1000)
    for s in states:
        back = inverse_legendre(sys, legendre(sys, s))
        assert np.max(np.abs(back.v - s.v)) < 1e-10


def test_inverse_legendre_nonquadratic_lagrangian(rng):
    # relativistic-like L = -sqrt(1 - v^2) needs genuine Newton iterations
    sys = ForcedLagrangianSystem(1, lambda q, v: -np.sqrt(1 - v[0] ** 2) if abs(v[0]) < 1 else np.nan)
    for v in rng.uniform(-0.9, 0.9, 20):
        p = v / np.sqrt(1 - v ** 2)
        s = inverse_legendre(sys, StateTstarQ([0.0], [p]))
        assert s.v[0] == pytest.approx(v, abs=1e-8)


def test_inverse_legendre_failure_is_reported():
    # dL/dv = tanh(v) is bounded by 1, so p = 2 has no preimage
    def log_cosh(q, v):
        a = abs(v[0])
        return a + np.log1p(np.exp(-2 * a)) - np.log(2.0)

    sys = ForcedLagrangianSystem(1, log_cosh)
    with pytest.raises(HyperregularityError):
        inverse_legendre(sys, StateTstarQ([0.0], [2.0]))


def test_hamiltonian_examples(cartesian, polar):
    assert hamiltonian_eval(cartesian.system, StateTstarQ([0, 0], [1, 1])) == pytest.approx(1.0, abs=1e-14)
    assert hamiltonian_eval(cartesian.system, StateTstarQ([0.2, 0], [0, 0])) == 0.0
    # p_r^2 / 2m + p_theta^2 / (2 m r^2)
    assert hamiltonian_eval(polar[0].system, StateTstarQ([0.5, 0], [2, 0.25])) == pytest.approx(2.125, abs=1e-14)


def test_hamiltonian_equals_energy(polar, rng):
    sys = polar[0].system
    for s in random_polar_states(rng, 200):
        assert abs(hamiltonian_eval(sys, legendre(sys, s)) - energy(sys, s)) < 1e-10


def test_hamilton_field_free_particle():
    sys = billiard_cartesian(1.0, 0.0).system
    dq, dp = forced_hamiltonian_field(sys, StateTstarQ([0, 0], [1, 0]))
    assert np.allclose(dq, [1, 0], atol=1e-9)
    assert np.allclose(dp, [0, 0], atol=1e-9)


def test_hamilton_field_polar_unforced_and_forced():
    free = billiard_polar(1.0, 0.0)[0].system
    dq, dp = forced_hamiltonian_field(free, StateTstarQ([1, 0], [0, 1]))
    assert np.allclose(dq, [0, 1], atol=1e-8)
    # dH/dr = -p_theta^2 / (m r^3)
    assert np.allclose(dp, [1, 0], atol=1e-7)
    forced = billiard_polar(1.0, 2.0)[0].system
    _, dp = forced_hamiltonian_field(forced, StateTstarQ([1, 0], [0, 1]))
    assert np.allclose(dp, [-3, 0], atol=1e-7)


def test_hamilton_field_accepts_analytic_partials():
    m = 1.0
    sys = billiard_polar(m, 2.0)[0].system

    def partials(q, p):
        r = q[0]
        return np.array([-p[1] ** 2 / (m * r ** 3), 0.0]), np.array([p[0] / m, p[1] / (m * r * r)])

    c = StateTstarQ([0.7, 0.2], [0.4, 0.3])
    fd = forced_hamiltonian_field(sys, c)
    exact = forced_hamiltonian_field(sys, c, partials)
    for a, b in zip(fd, exact):
        assert np.allclose(a, b, atol=1e-7)


def test_flows_agree_over_one_arc(polar):
    # integrate both sides up to the first impact and compare after the inverse transform
    sys = polar[0].system
    s0 = StateTQ([0.5, 0.0], [2.0, 1.0])
    yl, yh = s0.to_array(), legendre(sys, s0).to_array()
    fl, fh = tq_field(sys), tstarq_field(sys)
    worst = 0.0
    for _ in range(2500):  # first impact is near t = 0.257
        yl, yh = rk4_step(fl, yl, 1e-4), rk4_step(fh, yh, 1e-4)
        back = inverse_legendre(sys, StateTstarQ.from_array(yh)).to_array()
        worst = max(worst, float(np.max(np.abs(back - yl))))
    assert worst < 1e-6


def test_map_hybrid_flow_empty():
    sys = billiard_cartesian().system
    mapped = map_hybrid_flow(sys, HybridTrajectory())
    assert mapped.arcs == [] and mapped.impacts == []


def test_map_hybrid_flow_free_particle_momentum_constant():
    hs = billiard_cartesian(2.0, 0.0)
    traj = execute(hs, StateTQ([0, 0], [0.3, 0.1]), IntegratorConfig(dt=1e-2, t_max=1.0))
    mapped = map_hybrid_flow(hs.system, traj)
    assert len(mapped.arcs) == 1
    assert np.allclose(mapped.arcs[0].p, [0.6, 0.2], atol=1e-12)
    assert mapped.space == "T*Q"


def test_map_hybrid_flow_impacts_on_switching_surface(polar):
    hs = polar[0]
    traj = execute(hs, StateTQ([0.5, 0], [2, 1]), IntegratorConfig(dt=1e-3, t_max=3.0))
    mapped = map_hybrid_flow(hs.system, traj)
    assert len(mapped.impacts) == len(traj.impacts) == 3
    assert [a.t.size for a in mapped.arcs] == [a.t.size for a in traj.arcs]
    for imp in mapped.impacts:
        q, p = imp.state_pre.q, imp.state_pre.p
        assert abs(hs.guard.h(q)) < 1e-8
        # outward velocity through the boundary, v = M^-1 p
        v = np.array([p[0], p[1] / q[0] ** 2])
        assert -(hs.guard.gradient(q) @ v) >= 0.0


def test_hamiltonian_reset_commutes_with_legendre(polar, rng):
    hs = polar[0]
    for _ in range(50):
        th = rng.uniform(-np.pi, np.pi)
        s = StateTQ([1.0, th], [rng.uniform(0.1, 3), rng.uniform(-3, 3)])
        lhs = hamiltonian_reset(hs, legendre(hs.system, s))
        rhs = legendre(hs.system, apply_reset(hs, s))
        assert np.allclose(lhs.p, rhs.p, atol=1e-12)


def test_hamiltonian_run_tracks_lagrangian_run(cartesian):
    s0 = StateTQ([0.5, 0.0], [2.0, 0.5])
    cfg = IntegratorConfig(dt=1e-3, t_max=0.4)
    full = execute(cartesian, s0, cfg)
    ham = execute_hamiltonian(cartesian, legendre(cartesian.system, s0), cfg)
    rep = compare_trajectories(map_hybrid_flow(cartesian.system, full), ham)
    assert not rep.structural_mismatch and rep.n_impacts == (1, 1)
    assert rep.max_deviation < 1e-8
    assert rep.max_impact_time_deviation < 1e-9


def test_hamiltonian_run_outside_domain(cartesian):
    traj = execute_hamiltonian(cartesian, StateTstarQ([2.0, 0.0], [0.0, 0.0]))
    assert traj.termination.value == "error"
