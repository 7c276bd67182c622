"""Preset systems and scenario files.

Three systems are available:

``billiard_cartesian``
    A particle in the unit disk with the velocity-dependent friction
    ``F_x = 2c(xdot x y - ydot x^2)``, ``F_y = -2c(ydot x y - xdot y^2)``.
``billiard_polar``
    The same particle in polar coordinates ``q = (r, theta)``, where the
    force is ``-2 c r^3 thetadot dr`` and ``theta`` is cyclic.
``bouncer_1d``
    A particle above a wall at ``q = 0`` under a constant drive, the
    standard example of Zeno accumulation when ``e < 1``.

Scenario files are JSON objects with the keys ``kind``, ``params``,
``initial``, ``integrator`` and ``outputs``.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from importlib import resources
from pathlib import Path
from typing import Dict, Optional, Tuple

import numpy as np

from .errors import ChartError, ScenarioError
from .hybrid import GuardSpec, HybridSystemDef, IntegratorConfig
from .mechanics import DerivativeBundle, ForcedLagrangianSystem, StateTQ
from .routh import CyclicSpec

POLAR_R_MIN = 0.05

KINDS = ("billiard_cartesian", "billiard_polar", "bouncer_1d")


def _unit_circle_xy(e):
    return GuardSpec(h=lambda q: 1.0 - q[0] * q[0] - q[1] * q[1],
                     grad_h=lambda q: np.array([-2.0 * q[0], -2.0 * q[1]]),
                     restitution=e)


def _unit_circle_polar(e):
    return GuardSpec(h=lambda q: 1.0 - q[0] * q[0],
                     grad_h=lambda q: np.array([-2.0 * q[0], 0.0]),
                     restitution=e)


def billiard_cartesian(m: float = 1.0, c: float = 0.0, e: float = 1.0) -> HybridSystemDef:
    if not m > 0 or c < 0:
        raise ValueError("need m > 0 and c >= 0")

    def lagrangian(q, v):
        return 0.5 * m * (v[0] * v[0] + v[1] * v[1])

    def force(q, v):
        x, y = q
        xd, yd = v
        return np.array([2 * c * (xd * x * y - yd * x * x), -2 * c * (yd * x * y - xd * y * y)])

    mass = m * np.eye(2)
    zero = np.zeros((2, 2))

    def derivatives(q, v):
        return DerivativeBundle(np.zeros(2), m * np.asarray(v, dtype=float), mass, zero)

    sys = ForcedLagrangianSystem(2, lagrangian, force, derivatives, name="billiard_cartesian")
    return HybridSystemDef(sys, _unit_circle_xy(e))


def _polar_chart(q):
    if q[0] <= POLAR_R_MIN:
        raise ChartError(f"r = {q[0]:.6g} entered the excluded disk r <= {POLAR_R_MIN}")


def billiard_polar(m: float = 1.0, c: float = 0.0, e: float = 1.0) -> Tuple[HybridSystemDef, CyclicSpec]:
    """Polar billiard with coordinates ``q = (r, theta)``, ``v = (rdot, thetadot)``."""
    if not m > 0 or c < 0:
        raise ValueError("need m > 0 and c >= 0")

    def lagrangian(q, v):
        r = q[0]
        return 0.5 * m * (v[0] * v[0] + r * r * v[1] * v[1])

    def force(q, v):
        r = q[0]
        return np.array([-2.0 * c * r ** 3 * v[1], 0.0])

    def derivatives(q, v):
        r = q[0]
        rd, thd = v[0], v[1]
        return DerivativeBundle(
            np.array([m * r * thd * thd, 0.0]),
            np.array([m * rd, m * r * r * thd]),
            np.array([[m, 0.0], [0.0, m * r * r]]),
            np.array([[0.0, 0.0], [2.0 * m * r * thd, 0.0]]),
        )

    sys = ForcedLagrangianSystem(2, lagrangian, force, derivatives, chart_check=_polar_chart, name="billiard_polar")
    return HybridSystemDef(sys, _unit_circle_polar(e)), CyclicSpec(1, 2 * np.pi)


def bouncer_1d(m: float = 1.0, e: float = 1.0, drive: float = 9.81) -> HybridSystemDef:
    """Particle with potential ``drive * q`` above a wall at ``q = 0``."""
    if not m > 0:
        raise ValueError("need m > 0")

    def lagrangian(q, v):
        return 0.5 * m * v[0] * v[0] - drive * q[0]

    def derivatives(q, v):
        return DerivativeBundle(np.array([-drive]), np.array([m * v[0]]), np.array([[m]]), np.zeros((1, 1)))

    sys = ForcedLagrangianSystem(1, lagrangian, None, derivatives, name="bouncer_1d")
    guard = GuardSpec(h=lambda q: q[0], grad_h=lambda q: np.array([1.0]), restitution=e)
    return HybridSystemDef(sys, guard)


# --- Scenario files ---

_PARAM_KEYS = {"m", "c", "e", "drive"}
_INTEGRATOR_KEYS = {"dt", "event_tol", "max_impacts", "min_impact_separation", "t_max"}
_TOP_KEYS = {"kind", "params", "initial", "integrator", "outputs"}
_OUTPUT_KEYS = {"dir", "trajectory", "impacts", "reduced", "reconstructed", "manifest", "report"}


@dataclass(frozen=True)
class ScenarioConfig:
    kind: str
    params: Dict[str, float]
    initial: StateTQ
    integrator: IntegratorConfig
    outputs: Dict[str, str] = field(default_factory=dict)
    source: Optional[str] = None

    def build(self):
        """Return ``(HybridSystemDef, CyclicSpec or None)``."""
        return build_system(self.kind, self.params)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "params": dict(self.params),
            "initial": {"q": self.initial.q.tolist(), "v": self.initial.v.tolist()},
            "integrator": asdict(self.integrator),
            "outputs": dict(self.outputs),
        }


def build_system(kind: str, params: Dict[str, float]):
    m = params.get("m", 1.0)
    e = params.get("e", 1.0)
    if kind == "billiard_cartesian":
        return billiard_cartesian(m, params.get("c", 0.0), e), None
    if kind == "billiard_polar":
        return billiard_polar(m, params.get("c", 0.0), e)
    if kind == "bouncer_1d":
        return bouncer_1d(m, e, params.get("drive", 9.81)), None
    raise ScenarioError(f"unknown kind {kind!r}; expected one of {', '.join(KINDS)}")


def _reject_unknown(section, allowed, where):
    unknown = sorted(set(section) - allowed)
    if unknown:
        raise ScenarioError(f"{where}: unknown field(s) {', '.join(unknown)}")


def _number(value, where):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ScenarioError(f"{where}: expected a number, got {value!r}")
    if not np.isfinite(value):
        raise ScenarioError(f"{where}: must be finite")
    return float(value)


def parse_scenario(data: dict, source: Optional[str] = None) -> ScenarioConfig:
    """Validate a decoded scenario object."""
    if not isinstance(data, dict):
        raise ScenarioError("scenario must be a JSON object")
    _reject_unknown(data, _TOP_KEYS, "top level")
    for key in ("kind", "initial"):
        if key not in data:
            raise ScenarioError(f"missing required field {key!r}")
    kind = data["kind"]
    if kind not in KINDS:
        raise ScenarioError(f"kind: unknown kind {kind!r}; expected one of {', '.join(KINDS)}")

    raw_params = data.get("params", {})
    if not isinstance(raw_params, dict):
        raise ScenarioError("params: expected an object")
    _reject_unknown(raw_params, _PARAM_KEYS, "params")
    params = {k: _number(v, f"params.{k}") for k, v in raw_params.items()}
    if params.get("m", 1.0) <= 0:
        raise ScenarioError("params.m: mass must be positive")
    if params.get("c", 0.0) < 0:
        raise ScenarioError("params.c: dissipation coefficient must be non-negative")
    if not 0.0 <= params.get("e", 1.0) <= 1.0:
        raise ScenarioError(f"params.e: restitution must lie in [0, 1], got {params['e']}")

    init = data["initial"]
    if not isinstance(init, dict):
        raise ScenarioError("initial: expected an object with q and v")
    _reject_unknown(init, {"q", "v"}, "initial")
    try:
        q = [_number(x, "initial.q") for x in init["q"]]
        v = [_number(x, "initial.v") for x in init["v"]]
    except (KeyError, TypeError) as exc:
        raise ScenarioError(f"initial: q and v must be lists of numbers ({exc})") from None
    dim = 1 if kind == "bouncer_1d" else 2
    if len(q) != dim or len(v) != dim:
        raise ScenarioError(f"initial: {kind} needs q and v of length {dim}")
    initial = StateTQ(q, v)

    raw_int = data.get("integrator", {})
    if not isinstance(raw_int, dict):
        raise ScenarioError("integrator: expected an object")
    _reject_unknown(raw_int, _INTEGRATOR_KEYS, "integrator")
    int_kwargs = {k: _number(v, f"integrator.{k}") for k, v in raw_int.items()}
    if "max_impacts" in int_kwargs:
        int_kwargs["max_impacts"] = int(int_kwargs["max_impacts"])
    try:
        integrator = IntegratorConfig(**int_kwargs)
    except ValueError as exc:
        raise ScenarioError(f"integrator: {exc}") from None

    outputs = data.get("outputs", {})
    if not isinstance(outputs, dict):
        raise ScenarioError("outputs: expected an object")
    _reject_unknown(outputs, _OUTPUT_KEYS, "outputs")
    outputs = {k: str(v) for k, v in outputs.items()}

    hs, _ = build_system(kind, params)
    h0 = float(hs.guard.h(initial.q))
    if h0 < 0:
        raise ScenarioError(f"initial: state lies outside the domain (h = {h0:.6g} < 0)")
    if hs.system.chart_check is not None:
        try:
            hs.system.chart_check(initial.q)
        except ChartError as exc:
            raise ScenarioError(f"initial: {exc}") from None
    return ScenarioConfig(kind, params, initial, integrator, outputs, source)


def load_scenario(path) -> ScenarioConfig:
    """Read and validate a scenario file.

    ``path`` may also name a bundled preset (``fig1``, ``fig2``, ...).
    """
    path = resolve_scenario_path(path)
    text = path.read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}: parse error at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    try:
        return parse_scenario(data, str(path))
    except ScenarioError as exc:
        raise ScenarioError(f"{path}: {exc}") from None


def preset_dir() -> Path:
    return Path(str(resources.files("hybrid_routh") / "presets"))


def list_presets() -> Dict[str, Path]:
    return {p.stem: p for p in sorted(preset_dir().glob("*.json"))}


def resolve_scenario_path(path) -> Path:
    p = Path(path)
    if p.is_file():
        return p
    presets = list_presets()
    stem = p.name[:-5] if p.name.endswith(".json") else p.name
    if stem in presets and str(p.parent) == ".":
        return presets[stem]
    raise ScenarioError(f"{path}: no such scenario file or preset")
