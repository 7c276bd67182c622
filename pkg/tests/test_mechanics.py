import numpy as np
import pytest

from conftest import random_disk_states, random_polar_states
from hybrid_routh import (
    DerivativeBundle,
    DimensionError,
    ForcedLagrangianSystem,
    RegularityError,
    StateTQ,
    billiard_cartesian,
    billiard_polar,
    energy,
    force_eval,
    forced_acceleration,
    lagrangian_acceleration,
    lagrangian_eval,
    mass_matrix,
    numeric_derivatives,
)
from hybrid_routh.hybrid import rk4_step
from hybrid_routh.mechanics import check_derivatives, fd_bundle, tq_field


def free_particle(n=1, m=1.0):
    return ForcedLagrangianSystem(n, lambda q, v: 0.5 * m * float(v @ v))


# --- States ---

def test_state_rejects_mismatched_lengths():
    with pytest.raises(DimensionError):
        StateTQ([0.0, 1.0], [1.0])


def test_state_rejects_empty_and_nonfinite():
    with pytest.raises(DimensionError):
        StateTQ([], [])
    with pytest.raises(ValueError):
        StateTQ([np.nan], [0.0])
    with pytest.raises(ValueError):
        StateTQ([0.0], [np.inf])


def test_state_array_round_trip():
    s = StateTQ([1.0, 2.0], [3.0, 4.0])
    assert np.array_equal(StateTQ.from_array(s.to_array()).to_array(), s.to_array())


# --- Lagrangian values ---

def test_cartesian_lagrangian_value(cartesian):
    assert lagrangian_eval(cartesian.system, StateTQ([0, 0], [1, 0])) == pytest.approx(0.5, abs=1e-15)


def test_kinetic_lagrangian_at_rest_is_zero(cartesian, polar):
    assert lagrangian_eval(cartesian.system, StateTQ([0.3, -0.2], [0, 0])) == 0.0
    assert lagrangian_eval(polar[0].system, StateTQ([0.7, 1.0], [0, 0])) == 0.0


def test_polar_lagrangian_value(polar):
    # 1/2 (rdot^2 + r^2 thetadot^2) = 1/2 (4 + 0.25)
    assert lagrangian_eval(polar[0].system, StateTQ([0.5, 0], [2, 1])) == pytest.approx(2.125, abs=1e-15)


def test_lagrangian_dimension_mismatch(cartesian):
    with pytest.raises(DimensionError):
        lagrangian_eval(cartesian.system, StateTQ([0.0], [1.0]))


def test_nonfinite_lagrangian_is_reported():
    sys = ForcedLagrangianSystem(1, lambda q, v: np.inf if q[0] < 0 else 0.0)
    with pytest.raises(ValueError):
        lagrangian_eval(sys, StateTQ([-1.0], [0.0]))


# --- Derivatives and mass matrix ---

def test_cartesian_mass_is_identity(cartesian, rng):
    for s in random_disk_states(rng, 5):
        assert np.array_equal(numeric_derivatives(cartesian.system, s).mass, np.eye(2))


def test_polar_mass_at_half_radius(polar):
    b = numeric_derivatives(polar[0].system, StateTQ([0.5, 0.3], [1.0, -2.0]))
    assert np.allclose(b.mass, np.diag([1.0, 0.25]), atol=1e-15)


def test_free_particle_has_no_configuration_gradient(rng):
    sys = free_particle(3)
    for _ in range(5):
        b = numeric_derivatives(sys, StateTQ(rng.normal(size=3), rng.normal(size=3)))
        assert np.max(np.abs(b.dL_dq)) < 1e-9


def test_fd_mass_is_symmetric_and_positive(polar, rng):
    sys = ForcedLagrangianSystem(2, polar[0].system.lagrangian)  # finite differences only
    for s in random_polar_states(rng, 20):
        m = numeric_derivatives(sys, s).mass
        assert np.array_equal(m, m.T)
        assert np.all(np.linalg.eigvalsh(m) > 0)


def test_mass_matrix_examples():
    assert np.allclose(mass_matrix(billiard_polar(1.0)[0].system, [1.0, 0.4]), np.eye(2), atol=1e-15)
    assert np.allclose(mass_matrix(billiard_cartesian(2.0).system, [0.1, 0.2]), 2 * np.eye(2))
    assert np.allclose(mass_matrix(free_particle(1), [0.0]), [[1.0]], atol=1e-7)


def test_mass_matrix_independent_of_velocity_for_mechanical(polar, rng):
    sys = polar[0].system
    for s in random_polar_states(rng, 5):
        assert np.allclose(numeric_derivatives(sys, s).mass, mass_matrix(sys, s.q))


def test_singular_mass_raises():
    sys = ForcedLagrangianSystem(2, lambda q, v: 0.5 * v[0] ** 2)
    with pytest.raises(RegularityError):
        numeric_derivatives(sys, StateTQ([0, 0], [1, 1]))


def test_fd_bundle_matches_closed_form_partials(rng):
    # L = 1/2 v^T M(q) v - V(q) with a coupled metric; partials written out by hand
    def lag(q, v):
        m11, m12, m22 = 2 + np.sin(q[1]), 0.3 * np.cos(q[0]), 1.5
        return 0.5 * (m11 * v[0] ** 2 + 2 * m12 * v[0] * v[1] + m22 * v[1] ** 2) - q[0] ** 2 * q[1]

    sys = ForcedLagrangianSystem(2, lag)
    for _ in range(10):
        q, v = rng.uniform(-1, 1, 2), rng.uniform(-2, 2, 2)
        b = fd_bundle(sys, q, v)
        m = np.array([[2 + np.sin(q[1]), 0.3 * np.cos(q[0])], [0.3 * np.cos(q[0]), 1.5]])
        dq = np.array([-0.3 * np.sin(q[0]) * v[0] * v[1] - 2 * q[0] * q[1],
                       0.5 * np.cos(q[1]) * v[0] ** 2 - q[0] ** 2])
        mixed = np.array([[-0.3 * np.sin(q[0]) * v[1], np.cos(q[1]) * v[0]],
                          [-0.3 * np.sin(q[0]) * v[0], 0.0]])
        assert np.allclose(b.dL_dv, m @ v, atol=1e-8)
        assert np.allclose(b.dL_dq, dq, atol=1e-8)
        assert np.allclose(b.mass, m, atol=1e-6)
        assert np.allclose(b.dL_dvdq, mixed, atol=1e-6)


@pytest.mark.parametrize("chart", ["cartesian", "polar"])
def test_analytic_bundles_agree_with_finite_differences(chart, rng):
    if chart == "cartesian":
        sys, states = billiard_cartesian(1.3, 2.0).system, random_disk_states(rng, 100)
    else:
        sys, states = billiard_polar(1.3, 2.0)[0].system, random_polar_states(rng, 100)
    assert check_derivatives(sys, states) < 1e-5


def test_check_derivatives_detects_a_wrong_bundle():
    sys = ForcedLagrangianSystem(
        1, lambda q, v: 0.5 * v[0] ** 2,
        derivatives=lambda q, v: DerivativeBundle(np.zeros(1), 2 * np.asarray(v), np.eye(1), np.zeros((1, 1))))
    assert check_derivatives(sys, [StateTQ([0.0], [1.0])]) > 0.1


# --- Forces ---

def test_cartesian_force_value(cartesian):
    assert np.allclose(force_eval(cartesian.system, StateTQ([0.5, 0], [0, 1])), [-1.0, 0.0], atol=1e-15)


def test_zero_dissipation_has_no_force(rng):
    sys = billiard_cartesian(1.0, 0.0).system
    for s in random_disk_states(rng, 10):
        assert np.array_equal(force_eval(sys, s), np.zeros(2))


def test_polar_force_value(polar):
    assert np.allclose(force_eval(polar[0].system, StateTQ([1.0, 0.3], [0.2, 1.0])), [-4.0, 0.0])


def test_cartesian_force_pulls_back_to_polar_force(rng):
    # F_cart evaluated on a polar state and pulled back with the chart Jacobian
    c = 1.7
    cart, pol = billiard_cartesian(1.0, c).system, billiard_polar(1.0, c)[0].system
    for s in random_polar_states(rng, 50):
        r, th = s.q
        rd, thd = s.v
        x, y = r * np.cos(th), r * np.sin(th)
        J = np.array([[np.cos(th), -r * np.sin(th)], [np.sin(th), r * np.cos(th)]])
        f_cart = force_eval(cart, StateTQ([x, y], J @ s.v))
        assert np.allclose(J.T @ f_cart, force_eval(pol, s), atol=1e-12)
        assert np.allclose(J.T @ f_cart, [-2 * c * r ** 3 * thd, 0.0], atol=1e-12)


# --- Acceleration ---

def test_cartesian_acceleration_value(cartesian):
    assert np.allclose(forced_acceleration(cartesian.system, StateTQ([0.5, 0], [0, 1])), [-1.0, 0.0], atol=1e-15)


def test_free_particle_has_zero_acceleration(rng):
    sys = free_particle(2)
    for _ in range(5):
        s = StateTQ(rng.normal(size=2), rng.normal(size=2))
        assert np.max(np.abs(forced_acceleration(sys, s))) < 1e-6


def test_free_polar_acceleration():
    sys = billiard_polar(1.0, 0.0)[0].system
    assert np.allclose(forced_acceleration(sys, StateTQ([1.0, 0.0], [0.0, 1.0])), [1.0, 0.0], atol=1e-15)


def test_polar_acceleration_matches_polar_equations(rng):
    m, c = 1.4, 0.8
    sys = billiard_polar(m, c)[0].system
    for s in random_polar_states(rng, 30):
        r, (rd, thd) = s.q[0], s.v
        expected = [r * thd ** 2 - 2 * c / m * r ** 3 * thd, -2 * rd * thd / r]
        assert np.allclose(forced_acceleration(sys, s), expected, atol=1e-12)


def test_unforced_field_is_the_forced_field_with_zero_force(rng):
    sys = billiard_polar(1.0, 0.0)[0].system
    forced = billiard_polar(1.0, 2.0)[0].system
    for s in random_polar_states(rng, 20):
        assert np.array_equal(lagrangian_acceleration(forced, s), forced_acceleration(sys, s))
        assert np.array_equal(lagrangian_acceleration(forced, s), forced_acceleration(forced.without_force(), s))


# --- Energy ---

def test_energy_examples(cartesian, polar):
    assert energy(cartesian.system, StateTQ([0, 0], [1, 1])) == pytest.approx(1.0, abs=1e-15)
    assert energy(cartesian.system, StateTQ([0.2, 0.1], [0, 0])) == 0.0
    assert energy(polar[0].system, StateTQ([0.5, 0], [2, 1])) == pytest.approx(2.125, abs=1e-15)


def test_unforced_energy_drift_is_small():
    sys = billiard_polar(1.0, 0.0)[0].system
    field = tq_field(sys)
    y = np.array([0.5, 0.0, 0.3, 1.0])
    e0 = energy(sys, StateTQ.from_array(y))
    worst = 0.0
    for _ in range(10000):
        y = rk4_step(field, y, 1e-3)
        worst = max(worst, abs(energy(sys, StateTQ.from_array(y)) - e0))
    assert worst < 1e-6
