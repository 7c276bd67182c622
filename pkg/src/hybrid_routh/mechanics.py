"""Forced Lagrangian systems and their Euler-Lagrange vector field.

A system is given by a scalar Lagrangian ``L(q, v)`` and a force covector
``F(q, v)``.  Partial derivatives come either from an analytic bundle
supplied by the user or from central finite differences of ``L``.  The
forced Euler-Lagrange equations

    d/dt (dL/dv) - dL/dq = F

are solved for the acceleration ``a = M^{-1} (F + dL/dq - B v)`` with
``M = d2L/dv2`` and ``B = d2L/dv dq``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple, Optional

import numpy as np

from .errors import DimensionError, RegularityError

SINGULAR_RTOL = 1e-12

class DerivativeBundle(NamedTuple):
    """Partials of ``L`` at one state.

    ``dL_dvdq[i, j]`` is the mixed partial with respect to ``v_i`` and ``q_j``.
    """

    dL_dq: np.ndarray
    dL_dv: np.ndarray
    mass: np.ndarray
    dL_dvdq: np.ndarray


@dataclass(frozen=True)
class StateTQ:
    """A point (q, v) of the tangent bundle in chart coordinates."""

    q: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        q = np.array(self.q, dtype=float).reshape(-1)
        v = np.array(self.v, dtype=float).reshape(-1)
        if q.size == 0 or q.shape != v.shape:
            raise DimensionError(f"q and v must have equal nonzero length, got {q.size} and {v.size}")
        if not (np.all(np.isfinite(q)) and np.all(np.isfinite(v))):
            raise ValueError("state has non-finite components")
        object.__setattr__(self, "q", q)
        object.__setattr__(self, "v", v)

    @property
    def dim(self) -> int:
        return self.q.size

    def to_array(self) -> np.ndarray:
        return np.concatenate([self.q, self.v])

    @classmethod
    def from_array(cls, y) -> "StateTQ":
        y = np.asarray(y, dtype=float)
        n = y.size // 2
        return cls(y[:n], y[n:])


@dataclass(frozen=True)
class ForcedLagrangianSystem:
    """Scalar Lagrangian plus a velocity-dependent force.

    Parameters
    ----------
    dim : int
        Number of configuration coordinates.
    lagrangian : callable
        ``L(q, v) -> float``.
    force : callable, optional
        ``F(q, v) -> array of length dim``.  ``None`` means no force.
    derivatives : callable, optional
        ``(q, v) -> DerivativeBundle`` with analytic partials.  When absent,
        central finite differences of ``lagrangian`` are used.
    fd_step : float
        Relative step for first derivatives.
    fd_step_second : float
        Relative step for second derivatives.  Kept larger than ``fd_step``
        so that roundoff in the four-point stencils stays near 1e-8.
    chart_check : callable, optional
        ``q -> None``; raises :class:`~hybrid_routh.errors.ChartError` when
        ``q`` lies outside the usable chart.
    """

    dim: int
    lagrangian: Callable[[np.ndarray, np.ndarray], float]
    force: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = None
    derivatives: Optional[Callable[[np.ndarray, np.ndarray], DerivativeBundle]] = None
    fd_step: float = 1e-6
    fd_step_second: float = 1e-4
    chart_check: Optional[Callable[[np.ndarray], None]] = None
    name: str = ""

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        if self.fd_step <= 0 or self.fd_step_second <= 0:
            raise ValueError("finite-difference steps must be positive")

    def without_force(self) -> "ForcedLagrangianSystem":
        return ForcedLagrangianSystem(
            self.dim, self.lagrangian, None, self.derivatives,
            self.fd_step, self.fd_step_second, self.chart_check, self.name,
        )


def _check_dim(sys: ForcedLagrangianSystem, s: StateTQ):
    if s.dim != sys.dim:
        raise DimensionError(f"state has dimension {s.dim}, system has {sys.dim}")


def lagrangian_eval(sys: ForcedLagrangianSystem, s: StateTQ) -> float:
    _check_dim(sys, s)
    value = float(sys.lagrangian(s.q, s.v))
    if not np.isfinite(value):
        raise ValueError(f"Lagrangian is not finite at q={s.q}, v={s.v}")
    return value


def force_eval(sys: ForcedLagrangianSystem, s: StateTQ) -> np.ndarray:
    _check_dim(sys, s)
    return _force(sys, s.q, s.v)


def _force(sys, q, v) -> np.ndarray:
    if sys.force is None:
        return np.zeros(sys.dim)
    f = np.asarray(sys.force(q, v), dtype=float).reshape(-1)
    if f.size != sys.dim:
        raise DimensionError(f"force returned {f.size} components, expected {sys.dim}")
    return f


# --- Finite differences ---

def _steps(x, rel):
    return rel * np.maximum(1.0, np.abs(x))


def fd_bundle(sys: ForcedLagrangianSystem, q, v) -> DerivativeBundle:
    """Central finite-difference partials of ``sys.lagrangian`` at (q, v)."""
    L = sys.lagrangian
    n = sys.dim
    q = np.asarray(q, dtype=float)
    v = np.asarray(v, dtype=float)
    hq = _steps(q, sys.fd_step)
    hv = _steps(v, sys.fd_step)
    eye = np.eye(n)

    dL_dq = np.array([(L(q + hq[i] * eye[i], v) - L(q - hq[i] * eye[i], v)) / (2 * hq[i]) for i in range(n)])
    dL_dv = np.array([(L(q, v + hv[i] * eye[i]) - L(q, v - hv[i] * eye[i])) / (2 * hv[i]) for i in range(n)])

    kq = _steps(q, sys.fd_step_second)
    kv = _steps(v, sys.fd_step_second)
    L0 = L(q, v)
    mass = np.empty((n, n))
    for i in range(n):
        ei = kv[i] * eye[i]
        mass[i, i] = (L(q, v + ei) - 2 * L0 + L(q, v - ei)) / kv[i] ** 2
        for j in range(i + 1, n):
            ej = kv[j] * eye[j]
            mij = (L(q, v + ei + ej) - L(q, v + ei - ej) - L(q, v - ei + ej) + L(q, v - ei - ej)) / (4 * kv[i] * kv[j])
            mass[i, j] = mass[j, i] = mij
    mixed = np.empty((n, n))
    for i in range(n):
        ei = kv[i] * eye[i]
        for j in range(n):
            ej = kq[j] * eye[j]
            mixed[i, j] = (L(q + ej, v + ei) - L(q - ej, v + ei) - L(q + ej, v - ei) + L(q - ej, v - ei)) / (4 * kv[i] * kq[j])
    return DerivativeBundle(dL_dq, dL_dv, mass, mixed)


def check_regular(mass: np.ndarray):
    """Raise RegularityError if ``mass`` is singular relative to its scale."""
    n = mass.shape[0]
    if n <= 2:
        # plain floats: this sits in the innermost loop
        m = mass.ravel().tolist()
        scale = max(map(abs, m))
        det = m[0] if n == 1 else m[0] * m[3] - m[1] * m[2]
    else:
        scale = float(np.max(np.abs(mass)))
        det = float(np.linalg.det(mass))
    if not np.isfinite(det) or scale == 0.0 or abs(det) < SINGULAR_RTOL * scale ** n:
        raise RegularityError(f"mass matrix is singular (det={det:.3e}, scale={scale:.3e})")


def solve_small(mass: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    """``mass^{-1} rhs`` with closed forms for one and two coordinates."""
    n = rhs.size
    if n == 1:
        return rhs / mass[0, 0]
    if n == 2:
        (a, b), (c, d) = mass.tolist()
        r0, r1 = rhs.tolist()
        det = a * d - b * c
        return np.array([(d * r0 - b * r1) / det, (a * r1 - c * r0) / det])
    return np.linalg.solve(mass, rhs)


def bundle_at(sys: ForcedLagrangianSystem, q, v) -> DerivativeBundle:
    """Derivative bundle on raw arrays, symmetrized and checked for regularity."""
    if sys.derivatives is None:
        dq, dv, mass, mixed = fd_bundle(sys, q, v)
    else:
        dq, dv, mass, mixed = sys.derivatives(q, v)
        dq, dv, mixed = np.asarray(dq, dtype=float), np.asarray(dv, dtype=float), np.asarray(mixed, dtype=float)
        mass = np.asarray(mass, dtype=float)
    if mass.shape[0] > 1 and not (mass.shape[0] == 2 and mass[0, 1] == mass[1, 0]):
        mass = 0.5 * (mass + mass.T)
    check_regular(mass)
    return DerivativeBundle(dq, dv, mass, mixed)


def numeric_derivatives(sys: ForcedLagrangianSystem, s: StateTQ) -> DerivativeBundle:
    _check_dim(sys, s)
    return bundle_at(sys, s.q, s.v)


def mass_matrix(sys: ForcedLagrangianSystem, q) -> np.ndarray:
    """Inertia matrix ``M(q)``, evaluated at zero velocity."""
    q = np.asarray(q, dtype=float).reshape(-1)
    if q.size != sys.dim:
        raise DimensionError(f"q has dimension {q.size}, system has {sys.dim}")
    return bundle_at(sys, q, np.zeros(sys.dim)).mass


# --- Vector field ---

def acceleration_from_bundle(b: DerivativeBundle, force: np.ndarray, v: np.ndarray) -> np.ndarray:
    return solve_small(b.mass, force + b.dL_dq - b.dL_dvdq @ v)


def _accel(sys, q, v, with_force=True) -> np.ndarray:
    b = bundle_at(sys, q, v)
    f = _force(sys, q, v) if with_force else np.zeros(sys.dim)
    return acceleration_from_bundle(b, f, v)


def forced_acceleration(sys: ForcedLagrangianSystem, s: StateTQ) -> np.ndarray:
    """Acceleration solving the forced Euler-Lagrange equations at ``s``."""
    _check_dim(sys, s)
    return _accel(sys, s.q, s.v)


def lagrangian_acceleration(sys: ForcedLagrangianSystem, s: StateTQ) -> np.ndarray:
    """Acceleration with the force switched off (unforced Euler-Lagrange)."""
    _check_dim(sys, s)
    return _accel(sys, s.q, s.v, with_force=False)


def energy(sys: ForcedLagrangianSystem, s: StateTQ) -> float:
    """Energy ``<dL/dv, v> - L``."""
    b = numeric_derivatives(sys, s)
    return float(b.dL_dv @ s.v) - lagrangian_eval(sys, s)


def tq_field(sys: ForcedLagrangianSystem) -> Callable[[np.ndarray], np.ndarray]:
    """First-order field ``y = (q, v) -> (v, a)`` on flat arrays."""
    n = sys.dim

    def field(y):
        q, v = y[:n], y[n:]
        return np.concatenate([v, _accel(sys, q, v)])

    return field


def check_derivatives(sys: ForcedLagrangianSystem, states) -> float:
    """Largest discrepancy between the analytic bundle and finite differences.

    Each component pair is compared as ``|a - d| / max(1, |a|)``; the maximum
    over all components and states is returned.
    """
    if sys.derivatives is None:
        raise ValueError("system has no analytic derivatives to check")
    worst = 0.0
    for s in states:
        a = sys.derivatives(s.q, s.v)
        d = fd_bundle(sys, s.q, s.v)
        for x, y in zip(a, d):
            x = np.asarray(x, dtype=float)
            err = np.abs(x - y) / np.maximum(1.0, np.abs(x))
            worst = max(worst, float(np.max(err)))
    return worst
