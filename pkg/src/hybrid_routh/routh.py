"""Routh reduction by one cyclic coordinate, with piecewise momentum.

Configuration coordinates are split into the cyclic angle ``theta`` (at
``CyclicSpec.index``) and the remaining shape coordinates ``x``.  For a
fixed momentum value ``mu`` the Routhian

    R(x, xdot) = L(x, xdot, thetadot) - mu * thetadot,  thetadot = thetadot(x, xdot, mu)

is an ordinary Lagrangian on the shape space, forced by the non-cyclic
components of ``F``.  Impacts may change ``mu``; the reduced executor lifts
each pre-impact state with a co-integrated ``theta``, applies the full
reset and restarts with the new momentum.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .errors import GRegularityError, SymmetryError
from .hybrid import (
    Arc,
    ComparisonReport,
    GuardSpec,
    HybridSystemDef,
    HybridTrajectory,
    ImpactRecord,
    IntegratorConfig,
    Termination,
    apply_reset,
    compare_trajectories,
    hybrid_loop,
)
from .mechanics import (
    DerivativeBundle,
    ForcedLagrangianSystem,
    StateTQ,
    _force,
    acceleration_from_bundle,
    bundle_at,
    check_regular,
    forced_acceleration,
)

INVARIANCE_TOL = 1e-10
SYMMETRY_CERT_TOL = 1e-8
SOLVE_TOL = 1e-12


@dataclass(frozen=True)
class CyclicSpec:
    """Index of the cyclic coordinate and its period (``None`` for a line)."""

    index: int
    period: Optional[float] = None

    def split(self, full):
        full = np.asarray(full, dtype=float)
        return float(full[self.index]), np.delete(full, self.index)

    def insert(self, reduced, value) -> np.ndarray:
        return np.insert(np.asarray(reduced, dtype=float), self.index, value)

    def wrap(self, theta):
        """Angle values folded into ``[0, period)`` for display."""
        if self.period is None:
            return np.asarray(theta, dtype=float)
        return np.mod(theta, self.period)


def _sample_states(dim, count, seed):
    rng = np.random.default_rng(seed)
    return [StateTQ(rng.uniform(-1, 1, dim), rng.uniform(-2, 2, dim)) for _ in range(count)]


def verify_cyclic(sys: ForcedLagrangianSystem, cyc: CyclicSpec, states=None, seed=0):
    """Raise SymmetryError unless L and F are invariant under shifts of theta and F_theta = 0."""
    if not 0 <= cyc.index < sys.dim:
        raise SymmetryError(f"cyclic index {cyc.index} out of range for dimension {sys.dim}")
    rng = np.random.default_rng(seed)
    states = states if states is not None else _sample_states(sys.dim, 16, seed)
    for s in states:
        delta = rng.uniform(-np.pi, np.pi)
        shifted = s.q.copy()
        shifted[cyc.index] += delta
        L0, L1 = sys.lagrangian(s.q, s.v), sys.lagrangian(shifted, s.v)
        if abs(L1 - L0) > INVARIANCE_TOL * max(1.0, abs(L0)):
            raise SymmetryError(f"Lagrangian changes by {abs(L1 - L0):.3e} under a cyclic shift")
        F0, F1 = _force(sys, s.q, s.v), _force(sys, shifted, s.v)
        if np.max(np.abs(F1 - F0)) > INVARIANCE_TOL * max(1.0, np.max(np.abs(F0))):
            raise SymmetryError("force changes under a cyclic shift")
        if abs(F0[cyc.index]) > INVARIANCE_TOL:
            raise SymmetryError(f"force has a cyclic component {F0[cyc.index]:.3e}")


def momentum(sys: ForcedLagrangianSystem, cyc: CyclicSpec, s: StateTQ) -> float:
    """Conjugate momentum ``dL/dthetadot``."""
    return float(bundle_at(sys, s.q, s.v).dL_dv[cyc.index])


def _lift(sys, c, x, xdot, mu, theta=0.0):
    """Solve the momentum constraint; returns (thetadot, q, v, bundle at (q, v))."""
    n = sys.dim
    mask = np.arange(n) != c
    q = np.empty(n)
    v = np.empty(n)
    q[mask] = x
    q[c] = theta
    v[mask] = xdot
    v[c] = 0.0
    b = bundle_at(sys, q, v)
    m_cc = b.mass[c, c]
    if not abs(m_cc) > 1e-14 * max(1.0, max(map(abs, b.mass.ravel().tolist()))):
        raise GRegularityError(f"cyclic inertia vanishes ({m_cc:.3e})")
    # one Newton step from thetadot = 0; equals mu / M_cc when dL/dthetadot(0) = 0
    th = (mu - b.dL_dv[c]) / m_cc
    scale = max(1.0, abs(mu))
    res = np.inf
    for _ in range(50):
        v[c] = th
        b = bundle_at(sys, q, v)
        g = b.dL_dv[c] - mu
        if abs(g) <= SOLVE_TOL * scale:
            return th, q, v, b
        if abs(g) >= res and res <= 1e-10 * scale:
            # stalled at roundoff of a finite-difference gradient
            return th, q, v, b
        res = abs(g)
        th = th - g / b.mass[c, c]
    raise GRegularityError(f"momentum constraint unsolved after 50 Newton steps (residual {res:.3e})")


def solve_cyclic_velocity(sys: ForcedLagrangianSystem, cyc: CyclicSpec, x, xdot, mu: float) -> float:
    """Cyclic velocity for which the momentum equals ``mu``."""
    return float(_lift(sys, cyc.index, x, xdot, mu)[0])


def _routhian_bundle(b: DerivativeBundle, c: int, rest: np.ndarray, block=None) -> DerivativeBundle:
    # implicit differentiation of thetadot(x, xdot, mu) through dL/dthetadot = mu
    M, B = b.mass, b.dL_dvdq
    m_cc = M[c, c]
    m_rc = M[rest, c]
    if block is None:
        block = np.ix_(rest, rest)
    mass = M[block] - np.outer(m_rc, m_rc) / m_cc
    mixed = B[block] - np.outer(m_rc, B[c, rest]) / m_cc
    return DerivativeBundle(b.dL_dq[rest], b.dL_dv[rest], mass, mixed)


@dataclass(frozen=True)
class ReducedSystem:
    """Routhian system at a fixed momentum value.

    ``as_system`` is a plain :class:`ForcedLagrangianSystem` on the shape
    coordinates.  With ``exact=True`` its partials come from implicit
    differentiation of the momentum constraint using the base system's
    bundle; otherwise they are finite differences through the nested solve.
    """

    base: ForcedLagrangianSystem
    cyclic: CyclicSpec
    mu: float
    as_system: ForcedLagrangianSystem
    exact: bool = True

    @property
    def rest(self) -> np.ndarray:
        return np.delete(np.arange(self.base.dim), self.cyclic.index)

    def lift(self, x, xdot, theta=0.0):
        return _lift(self.base, self.cyclic.index, x, xdot, self.mu, theta)

    def lift_state(self, s: StateTQ, theta=0.0) -> StateTQ:
        _, q, v, _ = self.lift(s.q, s.v, theta)
        return StateTQ(q, v)

    def flow_field(self):
        """Flat field on ``(x, xdot, theta)``; theta is the reconstruction quadrature."""
        k = self.as_system.dim
        c, rest, sys, mu = self.cyclic.index, self.rest, self.base, self.mu
        block = np.ix_(rest, rest)

        if self.exact:
            def field(y):
                x, xd = y[:k], y[k:2 * k]
                th, q, v, b = _lift(sys, c, x, xd, mu)
                bR = _routhian_bundle(b, c, rest, block)
                check_regular(bR.mass)
                a = acceleration_from_bundle(bR, _force(sys, q, v)[rest], xd)
                return np.concatenate([xd, a, [th]])
        else:
            def field(y):
                x, xd = y[:k], y[k:2 * k]
                s = StateTQ(x, xd)
                th = _lift(sys, c, x, xd, self.mu)[0]
                return np.concatenate([xd, forced_acceleration(self.as_system, s), [th]])
        return field


def make_reduced_system(sys: ForcedLagrangianSystem, cyc: CyclicSpec, mu: float, exact: bool = True) -> ReducedSystem:
    if sys.dim < 2:
        raise ValueError("reduction needs at least one non-cyclic coordinate")
    c = cyc.index
    rest = np.delete(np.arange(sys.dim), c)
    mu = float(mu)

    def routhian(x, xdot):
        th, q, v, _ = _lift(sys, c, x, xdot, mu)
        return float(sys.lagrangian(q, v)) - mu * th

    def reduced_force(x, xdot):
        _, q, v, _ = _lift(sys, c, x, xdot, mu)
        return _force(sys, q, v)[rest]

    block = np.ix_(rest, rest)

    def derivatives(x, xdot):
        return _routhian_bundle(_lift(sys, c, x, xdot, mu)[3], c, rest, block)

    chart = None
    if sys.chart_check is not None:
        mask = np.arange(sys.dim) != c

        def chart(x):
            q = np.zeros(sys.dim)
            q[mask] = x
            sys.chart_check(q)

    as_system = ForcedLagrangianSystem(
        dim=sys.dim - 1,
        lagrangian=routhian,
        force=reduced_force,
        derivatives=derivatives if exact else None,
        fd_step=sys.fd_step,
        fd_step_second=sys.fd_step_second,
        chart_check=chart,
        name=f"{sys.name} reduced at mu={mu:g}",
    )
    return ReducedSystem(sys, cyc, mu, as_system, exact)


def reduced_acceleration(red: ReducedSystem, s: StateTQ) -> np.ndarray:
    """Acceleration of the forced Routh equations (Routhian as a Lagrangian)."""
    return forced_acceleration(red.as_system, s)


def reduce_guard(g: GuardSpec, cyc: CyclicSpec, dim: int, samples=None, seed=0) -> GuardSpec:
    """Read a theta-independent guard on the shape coordinates.

    The restitution carries over.  A reset override acts on full states, so
    it is not transferred; reduced executions apply the full reset on lifted
    states instead.
    """
    c = cyc.index
    rng = np.random.default_rng(seed)
    points = samples if samples is not None else [rng.uniform(-1, 1, dim) for _ in range(16)]
    for q in points:
        q = np.asarray(q, dtype=float)
        shifted = q.copy()
        shifted[c] += rng.uniform(-np.pi, np.pi)
        h0, h1 = float(g.h(q)), float(g.h(shifted))
        if abs(h1 - h0) > INVARIANCE_TOL * max(1.0, abs(h0)):
            raise SymmetryError(f"guard depends on the cyclic coordinate (change {abs(h1 - h0):.3e})")

    mask = np.arange(dim) != c

    def lifted(x):
        q = np.zeros(dim)
        q[mask] = x
        return q

    grad = None
    if g.grad_h is not None:
        grad = lambda x: np.asarray(g.grad_h(lifted(x)), dtype=float)[mask]
    return GuardSpec(lambda x: g.h(lifted(x)), grad, g.restitution, None)


# --- Certification reports ---

@dataclass(frozen=True)
class ForceSymmetryReport:
    max_force_cyclic: float
    max_force_shift_derivative: float

    @property
    def certified(self) -> bool:
        return max(self.max_force_cyclic, self.max_force_shift_derivative) < SYMMETRY_CERT_TOL


def force_symmetry_check(sys: ForcedLagrangianSystem, cyc: CyclicSpec, sample_count: int = 100,
                         seed: int = 0, states=None) -> ForceSymmetryReport:
    """Sampled maxima of ``|F_theta|`` and ``|dF_i/dtheta|``."""
    states = states if states is not None else _sample_states(sys.dim, sample_count, seed)
    c = cyc.index
    max_c = max_d = 0.0
    for s in states:
        f = _force(sys, s.q, s.v)
        max_c = max(max_c, abs(float(f[c])))
        h = 1e-6 * max(1.0, abs(s.q[c]))
        qp, qm = s.q.copy(), s.q.copy()
        qp[c] += h
        qm[c] -= h
        df = (_force(sys, qp, s.v) - _force(sys, qm, s.v)) / (2 * h)
        max_d = max(max_d, float(np.max(np.abs(df))))
    return ForceSymmetryReport(max_c, max_d)


@dataclass(frozen=True)
class MomentumMapReport:
    deviations: np.ndarray

    @property
    def max_deviation(self) -> float:
        return float(np.max(self.deviations)) if self.deviations.size else 0.0

    @property
    def certified(self) -> bool:
        return self.max_deviation <= 1e-12


def hybrid_momentum_check(hs: HybridSystemDef, cyc: CyclicSpec, samples) -> MomentumMapReport:
    """Change of the cyclic momentum across the reset at sample states on the guard."""
    devs = []
    for s in samples:
        if abs(float(hs.guard.h(s.q))) > 1e-9:
            raise ValueError(f"sample is not on the switching surface (h={hs.guard.h(s.q):.3e})")
        post = apply_reset(hs, s)
        devs.append(abs(momentum(hs.system, cyc, post) - momentum(hs.system, cyc, s)))
    return MomentumMapReport(np.array(devs))


# --- Reduced execution and reconstruction ---

@dataclass(frozen=True)
class Segment:
    """Reduced samples between two impacts at constant momentum ``mu``.

    ``theta`` is the co-integrated cyclic angle relative to the initial one.
    """

    mu: float
    arc: Arc
    theta: np.ndarray


@dataclass
class ReducedHybridTrajectory:
    segments: List[Segment] = field(default_factory=list)
    impacts: List[ImpactRecord] = field(default_factory=list)
    termination: Termination = Termination.HORIZON_REACHED
    message: Optional[str] = None
    hybrid: Optional[HybridSystemDef] = None
    cyclic: Optional[CyclicSpec] = None
    theta0: float = 0.0

    @property
    def mus(self) -> List[float]:
        return [seg.mu for seg in self.segments]


def execute_reduced(hs: HybridSystemDef, cyc: CyclicSpec, s0: StateTQ,
                    cfg: IntegratorConfig = IntegratorConfig(), exact: bool = True,
                    check_symmetry: bool = True) -> ReducedHybridTrajectory:
    """Integrate the reduced hybrid system with piecewise-constant momentum.

    Between impacts the Routhian flow at the current ``mu`` is integrated
    together with ``thetadot = thetadot(x, xdot, mu)``.  At each impact the
    reduced state is lifted with the co-integrated angle, the full reset is
    applied and the momentum of the post-impact state defines the next
    reduced system.
    """
    sys, c = hs.system, cyc.index
    if check_symmetry:
        rng = np.random.default_rng(1)
        near = [StateTQ(s0.q + rng.normal(0, 1e-2, sys.dim), s0.v + rng.normal(0, 1e-1, sys.dim))
                for _ in range(8)]
        verify_cyclic(sys, cyc, near + [s0])
    g_red = reduce_guard(hs.guard, cyc, sys.dim, samples=[s0.q])
    theta0, x0 = cyc.split(s0.q)
    _, xd0 = cyc.split(s0.v)
    k = sys.dim - 1
    mu0 = momentum(sys, cyc, s0)
    if float(g_red.h(x0)) < 0.0:
        return ReducedHybridTrajectory(termination=Termination.ERROR, message="initial state outside the domain",
                                       hybrid=hs, cyclic=cyc, theta0=theta0)

    red = make_reduced_system(sys, cyc, mu0, exact)
    current = {"mu": mu0}

    def jump(t, y_pre):
        x, xd, th_rel = y_pre[:k], y_pre[k:2 * k], y_pre[2 * k]
        _, q, v, _ = _lift(sys, c, x, xd, current["mu"], theta0 + th_rel)
        s_pre = StateTQ(q, v)
        s_post = apply_reset(hs, s_pre)
        mu_new = momentum(sys, cyc, s_post)
        th_post, x_post = cyc.split(s_post.q)
        _, xd_post = cyc.split(s_post.v)
        extra = (s_pre, s_post, current["mu"], mu_new)
        current["mu"] = mu_new
        field_new = make_reduced_system(sys, cyc, mu_new, exact).flow_field()
        return np.concatenate([x_post, xd_post, [th_post - theta0]]), field_new, extra

    validate = None
    if red.as_system.chart_check is not None:
        validate = lambda y: red.as_system.chart_check(y[:k])
    y0 = np.concatenate([x0, xd0, [0.0]])
    raw = hybrid_loop(y0, cfg, red.flow_field(), lambda y: g_red.h(y[:k]), jump, validate)

    mus = [mu0] + [ev[3][3] for ev in raw.events]
    segments = [Segment(mu, Arc(t, y[:, :2 * k]), y[:, 2 * k].copy()) for mu, (t, y) in zip(mus, raw.arcs)]
    impacts = [ImpactRecord(t, extra[0], extra[1], float(hs.guard.h(extra[0].q)), extra[2], extra[3])
               for t, _, _, extra in raw.events]
    return ReducedHybridTrajectory(segments, impacts, raw.termination, raw.message, hs, cyc, theta0)


def reconstruct(rt: ReducedHybridTrajectory, theta0: Optional[float] = None) -> HybridTrajectory:
    """Full-chart trajectory from a reduced run.

    The angle is ``theta0`` plus the co-integrated increment and its velocity
    comes from the momentum constraint of each segment.  Angles are not
    wrapped; use :meth:`CyclicSpec.wrap` for display.
    """
    sys, cyc = rt.hybrid.system, rt.cyclic
    c = cyc.index
    theta0 = rt.theta0 if theta0 is None else float(theta0)
    shift = theta0 - rt.theta0
    k = sys.dim - 1
    arcs = []
    for seg in rt.segments:
        rows = []
        for y, th in zip(seg.arc.y, seg.theta):
            thd, q, v, _ = _lift(sys, c, y[:k], y[k:], seg.mu, theta0 + th)
            rows.append(np.concatenate([q, v]))
        arcs.append(Arc(seg.arc.t.copy(), np.array(rows).reshape(-1, 2 * sys.dim)))
    impacts = []
    for imp in rt.impacts:
        pre_q = imp.state_pre.q.copy()
        post_q = imp.state_post.q.copy()
        pre_q[c] += shift
        post_q[c] += shift
        impacts.append(ImpactRecord(imp.t, StateTQ(pre_q, imp.state_pre.v), StateTQ(post_q, imp.state_post.v),
                                    imp.h_residual, imp.momentum_pre, imp.momentum_post))
    return HybridTrajectory(arcs, impacts, rt.termination, rt.message, "TQ")


def compare_full_reduced(full: HybridTrajectory, rec: HybridTrajectory) -> ComparisonReport:
    """Deviation report between a full-chart run and a reconstructed one."""
    return compare_trajectories(full, rec)


def momentum_drift(sys: ForcedLagrangianSystem, cyc: CyclicSpec, traj: HybridTrajectory) -> float:
    """Largest ``|mu(t) - mu(arc start)|`` over all arcs of a full-chart run."""
    n = sys.dim
    worst = 0.0
    for arc in traj.arcs:
        mus = np.array([bundle_at(sys, y[:n], y[n:]).dL_dv[cyc.index] for y in arc.y])
        if mus.size:
            worst = max(worst, float(np.max(np.abs(mus - mus[0]))))
    return worst

