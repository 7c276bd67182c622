"""Execution of simple hybrid systems: continuous flow plus impacts.

The domain is ``h(q) >= 0``.  An impact fires when ``h`` changes sign from
non-negative to negative across an accepted RK4 step; the crossing time is
then bracketed by bisection, re-integrating from the start of the step with
two half-size substeps.  The pre-impact state is the last bracket point on
the ``h >= 0`` side.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np

from .errors import (
    ChartError,
    DimensionError,
    EventLocalizationError,
    GRegularityError,
    HyperregularityError,
    ImpactError,
    IntegrationError,
    RegularityError,
)
from .mechanics import ForcedLagrangianSystem, StateTQ, bundle_at, tq_field

NORMAL_EPS = 1e-10
DENOM_EPS = 1e-14

# errors that end a run with termination == error rather than propagating
NUMERICAL_ERRORS = (
    ChartError,
    EventLocalizationError,
    GRegularityError,
    HyperregularityError,
    ImpactError,
    IntegrationError,
    RegularityError,
    np.linalg.LinAlgError,
)


class Termination(str, enum.Enum):
    HORIZON_REACHED = "horizon_reached"
    MAX_IMPACTS = "max_impacts"
    ZENO_SUSPECTED = "zeno_suspected"
    ERROR = "error"


@dataclass(frozen=True)
class GuardSpec:
    """Constraint ``h(q)`` with its gradient, restitution and optional reset."""

    h: Callable[[np.ndarray], float]
    grad_h: Optional[Callable[[np.ndarray], np.ndarray]] = None
    restitution: float = 1.0
    reset_override: Optional[Callable[[StateTQ], StateTQ]] = None

    def __post_init__(self):
        if not 0.0 <= self.restitution <= 1.0:
            raise ValueError(f"restitution must lie in [0, 1], got {self.restitution}")

    def gradient(self, q) -> np.ndarray:
        q = np.asarray(q, dtype=float)
        if self.grad_h is not None:
            return np.asarray(self.grad_h(q), dtype=float).reshape(-1)
        eye = np.eye(q.size)
        hs = 1e-6 * np.maximum(1.0, np.abs(q))
        return np.array([(self.h(q + hs[i] * eye[i]) - self.h(q - hs[i] * eye[i])) / (2 * hs[i])
                         for i in range(q.size)])


@dataclass(frozen=True)
class HybridSystemDef:
    system: ForcedLagrangianSystem
    guard: GuardSpec


@dataclass(frozen=True)
class IntegratorConfig:
    dt: float = 1e-3
    event_tol: float = 1e-10
    max_impacts: int = 10_000
    min_impact_separation: float = 1e-8
    t_max: float = 10.0

    def __post_init__(self):
        for name in ("dt", "event_tol", "max_impacts", "min_impact_separation", "t_max"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.min_impact_separation >= self.t_max:
            raise ValueError("min_impact_separation must be smaller than t_max")


@dataclass(frozen=True)
class ImpactRecord:
    t: float
    state_pre: object
    state_post: object
    h_residual: float
    momentum_pre: Optional[float] = None
    momentum_post: Optional[float] = None


@dataclass(frozen=True)
class Arc:
    """Dense samples of one continuous piece; rows of ``y`` are flat states."""

    t: np.ndarray
    y: np.ndarray

    @property
    def n(self) -> int:
        return self.y.shape[1] // 2

    @property
    def q(self) -> np.ndarray:
        return self.y[:, :self.n]

    @property
    def v(self) -> np.ndarray:
        return self.y[:, self.n:2 * self.n]

    p = v

    @property
    def start(self) -> float:
        return float(self.t[0])

    @property
    def end(self) -> float:
        return float(self.t[-1])


@dataclass
class HybridTrajectory:
    """Hybrid flow: arcs separated by impacts.

    ``arcs[i]`` ends at ``impacts[i].t`` and ``arcs[i + 1]`` starts from
    ``impacts[i].state_post``.  ``space`` is ``"TQ"`` for (q, v) samples and
    ``"T*Q"`` for (q, p).
    """

    arcs: List[Arc] = field(default_factory=list)
    impacts: List[ImpactRecord] = field(default_factory=list)
    termination: Termination = Termination.HORIZON_REACHED
    message: Optional[str] = None
    space: str = "TQ"

    @property
    def impact_times(self) -> np.ndarray:
        return np.array([imp.t for imp in self.impacts])

    @property
    def final_time(self) -> float:
        return self.arcs[-1].end if self.arcs else 0.0

    def stacked(self):
        """All samples as ``(t, arc_index, y)`` arrays."""
        if not self.arcs:
            return np.empty(0), np.empty(0, dtype=int), np.empty((0, 0))
        t = np.concatenate([a.t for a in self.arcs])
        idx = np.concatenate([np.full(a.t.size, i) for i, a in enumerate(self.arcs)])
        y = np.vstack([a.y for a in self.arcs])
        return t, idx, y


# --- Guard and impact ---

def guard_value(g: GuardSpec, sys: ForcedLagrangianSystem, s: StateTQ):
    """Return ``(h(q), <dh_q, v>)``."""
    del sys  # guard depends on configuration only
    return float(g.h(s.q)), float(g.gradient(s.q) @ s.v)


def _impact_velocity(sys, g, q, v) -> np.ndarray:
    dh = g.gradient(q)
    if np.max(np.abs(dh)) <= NORMAL_EPS:
        raise ImpactError(f"guard gradient vanishes at q={q}")
    mass = bundle_at(sys, q, v).mass
    minv_dh = np.linalg.solve(mass, dh)
    denom = float(dh @ minv_dh)
    if abs(denom) < DENOM_EPS:
        raise ImpactError("degenerate impact normal")
    return v - (1.0 + g.restitution) * float(dh @ v) / denom * minv_dh


def newtonian_impact(sys: ForcedLagrangianSystem, g: GuardSpec, s: StateTQ) -> StateTQ:
    """Newtonian impact with restitution; the configuration is unchanged."""
    if s.dim != sys.dim:
        raise DimensionError(f"state has dimension {s.dim}, system has {sys.dim}")
    return StateTQ(s.q, _impact_velocity(sys, g, s.q, s.v))


def apply_reset(hs: HybridSystemDef, s: StateTQ) -> StateTQ:
    if hs.guard.reset_override is not None:
        return hs.guard.reset_override(s)
    return newtonian_impact(hs.system, hs.guard, s)


# --- Time stepping ---

def rk4_step(field: Callable[[np.ndarray], np.ndarray], y, dt: float):
    """One classical Runge-Kutta step of ``dy/dt = field(y)``.

    ``y`` is a flat array, or a :class:`StateTQ` that is flattened to
    ``(q, v)`` and returned as a state again.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    if isinstance(y, StateTQ):
        return StateTQ.from_array(rk4_step(field, y.to_array(), dt))
    y = np.asarray(y, dtype=float)
    # overflow surfaces as the IntegrationError below rather than as warnings
    with np.errstate(over="ignore", invalid="ignore"):
        k1 = field(y)
        k2 = field(y + 0.5 * dt * k1)
        k3 = field(y + 0.5 * dt * k2)
        k4 = field(y + dt * k3)
        out = y + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
    if not np.all(np.isfinite(out)):
        raise IntegrationError("non-finite state after RK4 step")
    return out


def _substepped(field, y, sigma):
    half = 0.5 * sigma
    return rk4_step(field, rk4_step(field, y, half), half)


def _bisect(field, hfun, y_a, step, tol):
    lo, hi = 0.0, step
    y_lo = y_a
    for _ in range(200):
        if hi - lo <= tol:
            return lo, y_lo
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        y_mid = _substepped(field, y_a, mid)
        if hfun(y_mid) >= 0.0:
            lo, y_lo = mid, y_mid
        else:
            hi = mid
    raise EventLocalizationError(f"bracket did not shrink below {tol:g} (width {hi - lo:.3e})")


def locate_event(field, g: GuardSpec, sys: ForcedLagrangianSystem,
                 s_a: StateTQ, t_a: float, s_b: StateTQ, t_b: float,
                 event_tol: float = 1e-10):
    """Locate the guard crossing between two states of one accepted step.

    ``field`` is a flat-array vector field; ``None`` selects the forced
    Euler-Lagrange field of ``sys``.  Returns ``(t*, state)`` with the state
    on the ``h >= 0`` side of the final bracket.
    """
    if field is None:
        field = tq_field(sys)
    if not (g.h(s_a.q) >= 0.0 and g.h(s_b.q) < 0.0):
        raise EventLocalizationError("no sign change of h across the step")
    n = s_a.dim
    sigma, y = _bisect(field, lambda y: g.h(y[:n]), s_a.to_array(), t_b - t_a, event_tol)
    return t_a + sigma, StateTQ.from_array(y)


@dataclass
class _RawRun:
    arcs: list
    events: list  # (t, y_pre, y_post, extra)
    termination: Termination
    message: Optional[str] = None


def hybrid_loop(y0, cfg: IntegratorConfig, field, hfun, jump, validate=None) -> _RawRun:
    """Shared driver for hybrid runs on flat state arrays.

    ``jump(t, y_pre)`` returns ``(y_post, new_field_or_None, extra)``.
    ``validate(y)`` may raise one of ``NUMERICAL_ERRORS`` to stop the run.
    """
    t = 0.0
    y = np.asarray(y0, dtype=float)
    ts, ys = [t], [y]
    arcs, events = [], []
    status, message = Termination.HORIZON_REACHED, None
    t_end = cfg.t_max * (1 - 1e-14)
    last_impact = None

    while t < t_end:
        step = min(cfg.dt, cfg.t_max - t)
        try:
            y_new = rk4_step(field, y, step)
            if validate is not None:
                validate(y_new)
            crossed = hfun(y_new) < 0.0
            if crossed:
                sigma, y_pre = _bisect(field, hfun, y, step, cfg.event_tol)
                t_imp = t + sigma
                y_post, new_field, extra = jump(t_imp, y_pre)
        except NUMERICAL_ERRORS as exc:
            status, message = Termination.ERROR, f"{type(exc).__name__}: {exc}"
            break
        if not crossed:
            t += step
            y = y_new
            ts.append(t)
            ys.append(y)
            continue

        if sigma > 0.0:
            ts.append(t_imp)
            ys.append(y_pre)
        arcs.append((np.array(ts), np.array(ys)))
        events.append((t_imp, y_pre, y_post, extra))
        if new_field is not None:
            field = new_field
        t, y = t_imp, y_post
        ts, ys = [t], [y]
        if last_impact is not None and t_imp - last_impact < cfg.min_impact_separation:
            status = Termination.ZENO_SUSPECTED
            message = f"impact separation {t_imp - last_impact:.3e} below {cfg.min_impact_separation:g} at t={t_imp:.12g}"
            break
        last_impact = t_imp
        if len(events) >= cfg.max_impacts:
            status = Termination.MAX_IMPACTS
            message = f"stopped after {len(events)} impacts at t={t_imp:.12g}"
            break
    arcs.append((np.array(ts), np.array(ys)))
    return _RawRun(arcs, events, status, message)


def _chart_validator(sys, n):
    if sys.chart_check is None:
        return None
    return lambda y: sys.chart_check(y[:n])


def execute(hs: HybridSystemDef, s0: StateTQ, cfg: IntegratorConfig = IntegratorConfig()) -> HybridTrajectory:
    """Run the hybrid system from ``s0`` until ``cfg.t_max`` or a stop condition.

    Failures during the run (blow-up, singular mass matrix, chart exit,
    localization failure) end it with ``termination == Termination.ERROR``
    and a message; the samples computed so far are kept.
    """
    sys, g = hs.system, hs.guard
    n = sys.dim
    if s0.dim != n:
        raise DimensionError(f"state has dimension {s0.dim}, system has {n}")
    h0 = float(g.h(s0.q))
    if h0 < 0.0:
        return HybridTrajectory(termination=Termination.ERROR,
                                message=f"initial state outside the domain (h={h0:.6g})")

    def jump(t, y_pre):
        s_post = apply_reset(hs, StateTQ.from_array(y_pre))
        return s_post.to_array(), None, None

    raw = hybrid_loop(s0.to_array(), cfg, tq_field(sys), lambda y: g.h(y[:n]), jump,
                      validate=_chart_validator(sys, n))
    arcs = [Arc(t, y) for t, y in raw.arcs]
    impacts = [ImpactRecord(t, StateTQ.from_array(pre), StateTQ.from_array(post), float(g.h(pre[:n])))
               for t, pre, post, _ in raw.events]
    return HybridTrajectory(arcs, impacts, raw.termination, raw.message, "TQ")


# --- Comparison ---

@dataclass
class ComparisonReport:
    """Deviation between two hybrid trajectories on matching arcs."""

    sup_q: np.ndarray
    sup_second: np.ndarray
    impact_time_deviation: np.ndarray
    structural_mismatch: bool
    n_impacts: tuple

    @property
    def max_impact_time_deviation(self) -> float:
        return float(np.max(self.impact_time_deviation)) if self.impact_time_deviation.size else 0.0

    @property
    def max_deviation(self) -> float:
        return float(max(np.max(self.sup_q, initial=0.0), np.max(self.sup_second, initial=0.0)))

    def as_dict(self) -> dict:
        return {
            "sup_q": self.sup_q.tolist(),
            "sup_second": self.sup_second.tolist(),
            "impact_time_deviation": self.impact_time_deviation.tolist(),
            "max_impact_time_deviation": self.max_impact_time_deviation,
            "max_deviation": self.max_deviation,
            "structural_mismatch": self.structural_mismatch,
            "n_impacts": list(self.n_impacts),
        }


def compare_trajectories(a: HybridTrajectory, b: HybridTrajectory) -> ComparisonReport:
    """Compare two runs arc by arc.

    ``b`` is linearly interpolated onto the sample times of ``a`` inside the
    overlap of corresponding arcs, so no interpolation crosses an impact.
    """
    na, nb = len(a.impacts), len(b.impacts)
    width = a.arcs[0].y.shape[1] if a.arcs else 0
    n = width // 2
    sup = np.zeros(width)
    for arc_a, arc_b in zip(a.arcs, b.arcs):
        lo = max(arc_a.start, arc_b.start)
        hi = min(arc_a.end, arc_b.end)
        mask = (arc_a.t >= lo) & (arc_a.t <= hi)
        if not np.any(mask) or arc_b.t.size < 2:
            continue
        ta = arc_a.t[mask]
        for k in range(width):
            yb = np.interp(ta, arc_b.t, arc_b.y[:, k])
            sup[k] = max(sup[k], float(np.max(np.abs(arc_a.y[mask, k] - yb))))
    m = min(na, nb)
    dev = np.abs(a.impact_times[:m] - b.impact_times[:m]) if m else np.empty(0)
    return ComparisonReport(sup[:n], sup[n:], dev, na != nb, (na, nb))
