"""Legendre transform and forced Hamilton's equations.

The Hamiltonian side is derived numerically from the Lagrangian one:
velocities are recovered from momenta by Newton iteration on
``dL/dv(q, v) = p`` and the partials of ``H`` are taken by central
differences unless the caller passes exact ones.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import DimensionError, HyperregularityError, RegularityError
from .mechanics import ForcedLagrangianSystem, StateTQ, _force, bundle_at, solve_small
from .hybrid import (
    Arc,
    HybridSystemDef,
    HybridTrajectory,
    ImpactRecord,
    IntegratorConfig,
    Termination,
    apply_reset,
    hybrid_loop,
)

NEWTON_MAXITER = 50
NEWTON_TOL = 1e-12


@dataclass(frozen=True)
class StateTstarQ:
    """A point (q, p) of the cotangent bundle."""

    q: np.ndarray
    p: np.ndarray

    def __post_init__(self):
        q = np.array(self.q, dtype=float).reshape(-1)
        p = np.array(self.p, dtype=float).reshape(-1)
        if q.size == 0 or q.shape != p.shape:
            raise DimensionError(f"q and p must have equal nonzero length, got {q.size} and {p.size}")
        if not (np.all(np.isfinite(q)) and np.all(np.isfinite(p))):
            raise ValueError("state has non-finite components")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "p", p)

    @property
    def dim(self) -> int:
        return self.q.size

    def to_array(self) -> np.ndarray:
        return np.concatenate([self.q, self.p])

    @classmethod
    def from_array(cls, y) -> "StateTstarQ":
        y = np.asarray(y, dtype=float)
        n = y.size // 2
        return cls(y[:n], y[n:])


def legendre(sys: ForcedLagrangianSystem, s: StateTQ) -> StateTstarQ:
    if s.dim != sys.dim:
        raise DimensionError(f"state has dimension {s.dim}, system has {sys.dim}")
    return StateTstarQ(s.q, bundle_at(sys, s.q, s.v).dL_dv)


def _momentum_residual(sys, q, v, p):
    """``(bundle, dL/dv - p, max-norm)``, or an infinite residual where L is unusable."""
    try:
        b = bundle_at(sys, q, v)
    except RegularityError:
        return None, None, np.inf
    g = b.dL_dv - p
    res = max(map(abs, g.tolist()))
    return b, g, (res if np.isfinite(res) else np.inf)


def velocity_from_momentum(sys: ForcedLagrangianSystem, q, p) -> np.ndarray:
    """Solve ``dL/dv(q, v) = p`` for ``v`` by damped Newton iteration.

    The start is ``M(q, 0)^{-1} p``, pulled back towards ``v = 0`` if ``L``
    cannot be evaluated there.
    """
    q = np.asarray(q, dtype=float)
    p = np.asarray(p, dtype=float)
    v = solve_small(bundle_at(sys, q, np.zeros(sys.dim)).mass, p)
    scale = max(1.0, max(map(abs, p.tolist())))
    b, g, res = _momentum_residual(sys, q, v, p)
    for _ in range(60):
        if b is not None:
            break
        v = 0.5 * v
        b, g, res = _momentum_residual(sys, q, v, p)
    else:
        raise HyperregularityError("no regular starting point for the inverse Legendre transform")
    for _ in range(NEWTON_MAXITER):
        if res <= NEWTON_TOL * scale:
            return v
        dv = solve_small(b.mass, g)
        lam = 1.0
        # halve the step until the residual decreases
        while True:
            v_try = v - lam * dv
            b_try, g_try, res_try = _momentum_residual(sys, q, v_try, p)
            if res_try < res or lam < 1e-6:
                break
            lam *= 0.5
        if not res_try < res:
            # no further progress: accept if already at roundoff level
            if res <= 1e-10 * scale:
                return v
            break
        v, b, g, res = v_try, b_try, g_try, res_try
    if res <= 1e-10 * scale:
        return v
    raise HyperregularityError(f"inverse Legendre transform did not converge (residual {res:.3e})")


def inverse_legendre(sys: ForcedLagrangianSystem, c: StateTstarQ) -> StateTQ:
    if c.dim != sys.dim:
        raise DimensionError(f"state has dimension {c.dim}, system has {sys.dim}")
    return StateTQ(c.q, velocity_from_momentum(sys, c.q, c.p))


def _hamiltonian(sys, q, p) -> float:
    v = velocity_from_momentum(sys, q, p)
    return float(p @ v) - float(sys.lagrangian(q, v))


def hamiltonian_eval(sys: ForcedLagrangianSystem, c: StateTstarQ) -> float:
    """``H(q, p) = <p, v(q, p)> - L(q, v(q, p))``."""
    if c.dim != sys.dim:
        raise DimensionError(f"state has dimension {c.dim}, system has {sys.dim}")
    return _hamiltonian(sys, c.q, c.p)


HamiltonianPartials = Callable[[np.ndarray, np.ndarray], "tuple[np.ndarray, np.ndarray]"]


def _fd_partials(sys, q, p):
    n = sys.dim
    eye = np.eye(n)
    hq = sys.fd_step * np.maximum(1.0, np.abs(q))
    hp = sys.fd_step * np.maximum(1.0, np.abs(p))
    dH_dq = np.array([(_hamiltonian(sys, q + hq[i] * eye[i], p) - _hamiltonian(sys, q - hq[i] * eye[i], p)) / (2 * hq[i])
                      for i in range(n)])
    dH_dp = np.array([(_hamiltonian(sys, q, p + hp[i] * eye[i]) - _hamiltonian(sys, q, p - hp[i] * eye[i])) / (2 * hp[i])
                      for i in range(n)])
    return dH_dq, dH_dp


def _field(sys, q, p, partials=None):
    if partials is None:
        dH_dq, dH_dp = _fd_partials(sys, q, p)
    else:
        dH_dq, dH_dp = (np.asarray(x, dtype=float) for x in partials(q, p))
    v = velocity_from_momentum(sys, q, p)
    return dH_dp, _force(sys, q, v) - dH_dq


def forced_hamiltonian_field(sys: ForcedLagrangianSystem, c: StateTstarQ,
                             partials: Optional[HamiltonianPartials] = None):
    """Return ``(dq/dt, dp/dt)`` of the forced Hamilton equations at ``c``.

    The force is evaluated at ``(q, v(q, p))``.  ``partials`` may supply
    ``(dH/dq, dH/dp)`` directly; otherwise they are finite differences of
    :func:`hamiltonian_eval`.
    """
    if c.dim != sys.dim:
        raise DimensionError(f"state has dimension {c.dim}, system has {sys.dim}")
    return _field(sys, c.q, c.p, partials)


def tstarq_field(sys: ForcedLagrangianSystem, partials: Optional[HamiltonianPartials] = None):
    """Flat-array field ``(q, p) -> (dq/dt, dp/dt)``."""
    n = sys.dim

    def field(y):
        dq, dp = _field(sys, y[:n], y[n:], partials)
        return np.concatenate([dq, dp])

    return field


# --- Hybrid flow on the cotangent side ---

def map_hybrid_flow(sys: ForcedLagrangianSystem, traj: HybridTrajectory) -> HybridTrajectory:
    """Push a (q, v) hybrid trajectory through the Legendre transform.

    Hybrid intervals are kept; every sample and impact state is mapped.
    """
    n = sys.dim
    arcs = []
    for arc in traj.arcs:
        p = np.array([bundle_at(sys, y[:n], y[n:]).dL_dv for y in arc.y]).reshape(-1, n)
        arcs.append(Arc(arc.t.copy(), np.hstack([arc.q, p])))
    impacts = [ImpactRecord(imp.t, legendre(sys, imp.state_pre), legendre(sys, imp.state_post),
                            imp.h_residual, imp.momentum_pre, imp.momentum_post)
               for imp in traj.impacts]
    return HybridTrajectory(arcs, impacts, traj.termination, traj.message, "T*Q")


def hamiltonian_reset(hs: HybridSystemDef, c: StateTstarQ) -> StateTstarQ:
    """Reset on the cotangent side, realized as FL o Delta o FL^-1."""
    return legendre(hs.system, apply_reset(hs, inverse_legendre(hs.system, c)))


def execute_hamiltonian(hs: HybridSystemDef, c0: StateTstarQ, cfg: IntegratorConfig = IntegratorConfig(),
                        partials: Optional[HamiltonianPartials] = None) -> HybridTrajectory:
    """Hybrid run of the forced Hamiltonian system with guard ``h(q) >= 0``."""
    sys, g = hs.system, hs.guard
    n = sys.dim
    if float(g.h(c0.q)) < 0.0:
        return HybridTrajectory(termination=Termination.ERROR, message="initial state outside the domain",
                                space="T*Q")

    def jump(t, y_pre):
        return hamiltonian_reset(hs, StateTstarQ.from_array(y_pre)).to_array(), None, None

    validate = None
    if sys.chart_check is not None:
        validate = lambda y: sys.chart_check(y[:n])
    raw = hybrid_loop(c0.to_array(), cfg, tstarq_field(sys, partials), lambda y: g.h(y[:n]), jump, validate)
    arcs = [Arc(t, y) for t, y in raw.arcs]
    impacts = [ImpactRecord(t, StateTstarQ.from_array(pre), StateTstarQ.from_array(post), float(g.h(pre[:n])))
               for t, pre, post, _ in raw.events]
    return HybridTrajectory(arcs, impacts, raw.termination, raw.message, "T*Q")
