"""Problem configuration files (YAML or JSON surface, one schema).

Example::

    system_flag: linear
    A: [[0.5, 0.0], [0.0, 0.5]]
    b: [0.0, 0.0]
    sigma: [0.1, 0.1]
    state_space: {low: [-1.0, -1.0], high: [0.5, 0.5]}
    initial_region: {c: [0.0, 0.0], r: [0.05]}
    unsafe_regions: []
    epsilon: [0.09375, 0.09375]
    barrier_settings:
      barrier_type: PWC
      optimization_type: DUAL_ALG
      time_horizon: 10

See docs/formats.md for every key.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from .barrier import CegisSettings, Engine, GdSettings
from .errors import BarrierError, ParseError, SchemaViolation
from .geometry import Hyperrectangle

SYSTEM_FLAGS = {"linear": "linear", "pwa_inclusion": "pwa_inclusion", "nonlinear": "pwa_inclusion"}

TOP_KEYS = {
    "name", "system_flag", "dim", "A", "b", "sigma", "dynamics", "probabilities",
    "state_space", "initial_region", "unsafe_regions", "epsilon", "barrier_settings", "validation",
}
KEY_ALIASES = {"σ": "sigma", "ε": "epsilon"}
BARRIER_KEYS = {"barrier_type", "optimization_type", "engine", "time_horizon", "linear_solver"}
GD_KEYS = {"num_iterations", "initial_lr", "decay", "momentum", "seed"}
CEGIS_KEYS = {"num_iterations", "adaptive", "tolerance", "distribution_guided"}
VALIDATION_KEYS = {"samples", "seed"}


@dataclass(frozen=True)
class ProblemSpec:
    system_flag: str
    sigma: tuple[float, ...]
    state_space: Hyperrectangle
    initial_region: Hyperrectangle
    epsilon: tuple[float, ...]
    unsafe_regions: tuple[Hyperrectangle, ...] = ()
    A: tuple[tuple[float, ...], ...] | None = None
    b: tuple[float, ...] | None = None
    dynamics_path: str | None = None
    probabilities_path: str | None = None
    engine: Engine = Engine.DUAL
    time_horizon: int = 1
    gd: GdSettings = field(default_factory=GdSettings)
    cegis: CegisSettings = field(default_factory=CegisSettings)
    validation_samples: int = 0
    validation_seed: int = 0
    name: str = "system"
    base_dir: str = "."

    @property
    def dim(self) -> int:
        return self.state_space.dim

    @property
    def engine_settings(self):
        return {Engine.GD: self.gd, Engine.CEGIS: self.cegis}.get(self.engine)

    def resolve(self, path: str) -> Path:
        p = Path(path)
        return p if p.is_absolute() else Path(self.base_dir) / p

    def with_overrides(self, engine=None, horizon=None, seed=None) -> "ProblemSpec":
        spec = self
        if engine is not None:
            spec = replace(spec, engine=Engine.parse(engine))
        if horizon is not None:
            if horizon < 1:
                raise SchemaViolation("must be >= 1", "time_horizon")
            spec = replace(spec, time_horizon=int(horizon))
        if seed is not None:
            spec = replace(spec, gd=replace(spec.gd, seed=int(seed)), validation_seed=int(seed))
        return spec

    def to_dict(self) -> dict:
        """Config-file form; ``parse_config`` of this dict gives back an equal ProblemSpec."""
        box = lambda h: {"low": list(h.low), "high": list(h.high)}  # noqa: E731
        settings: dict[str, Any] = {
            "barrier_type": "PWC",
            "optimization_type": self.engine.value,
            "time_horizon": self.time_horizon,
        }
        if self.engine is Engine.GD:
            settings.update(
                num_iterations=self.gd.num_iterations, initial_lr=self.gd.initial_lr,
                decay=self.gd.decay, momentum=self.gd.momentum, seed=self.gd.seed,
            )
        elif self.engine is Engine.CEGIS:
            settings.update(
                num_iterations=self.cegis.num_iterations, adaptive=self.cegis.adaptive,
                tolerance=self.cegis.tolerance, distribution_guided=self.cegis.distribution_guided,
            )
        out: dict[str, Any] = {"name": self.name, "system_flag": self.system_flag, "dim": self.dim}
        if self.A is not None:
            out["A"] = [list(r) for r in self.A]
            out["b"] = list(self.b)
        if self.dynamics_path is not None:
            out["dynamics"] = self.dynamics_path
        if self.probabilities_path is not None:
            out["probabilities"] = self.probabilities_path
        out.update(
            sigma=list(self.sigma),
            state_space=box(self.state_space),
            initial_region=box(self.initial_region),
            unsafe_regions=[box(u) for u in self.unsafe_regions],
            epsilon=list(self.epsilon),
            barrier_settings=settings,
        )
        if self.validation_samples:
            out["validation"] = {"samples": self.validation_samples, "seed": self.validation_seed}
        return out


def _parse_text(text: str, suffix: str) -> Any:
    if suffix == ".json":
        try:
            return json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParseError(exc.msg, exc.lineno) from exc
    try:
        return yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        problem = getattr(exc, "problem", None) or str(exc)
        raise ParseError(problem, None if mark is None else mark.line + 1) from exc


def _vector(value, field_name: str, length: int | None = None) -> tuple[float, ...]:
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        value = [value]
    if not isinstance(value, list) or not value:
        raise SchemaViolation("expected a nonempty list of numbers", field_name)
    try:
        vec = tuple(float(v) for v in value if not isinstance(v, bool))
    except (TypeError, ValueError) as exc:
        raise SchemaViolation("expected numbers", field_name) from exc
    if len(vec) != len(value) or not all(np.isfinite(vec)):
        raise SchemaViolation("expected finite numbers", field_name)
    if length is not None and len(vec) != length:
        if len(vec) == 1:
            return vec * length
        raise SchemaViolation(f"expected {length} entries, got {len(vec)}", field_name)
    return vec


def _box(value, field_name: str, dim: int | None) -> Hyperrectangle:
    if not isinstance(value, dict):
        raise SchemaViolation("expected a mapping with low/high or c/r", field_name)
    keys = set(value)
    if keys == {"low", "high"}:
        low = _vector(value["low"], f"{field_name}.low", dim)
        high = _vector(value["high"], f"{field_name}.high", dim or len(low))
        try:
            return Hyperrectangle(low, high)
        except BarrierError as exc:
            raise SchemaViolation(str(exc), field_name) from exc
    if keys == {"c", "r"}:
        c = _vector(value["c"], f"{field_name}.c", dim)
        r = _vector(value["r"], f"{field_name}.r", len(c))
        if any(x < 0 for x in r):
            raise SchemaViolation("radius must be nonnegative", f"{field_name}.r")
        return Hyperrectangle.from_center(c, r)
    raise SchemaViolation(f"expected keys low/high or c/r, got {sorted(keys)}", field_name)


def _int(value, field_name: str, minimum: int = 0) -> int:
    if isinstance(value, bool) or not isinstance(value, int) or value < minimum:
        raise SchemaViolation(f"expected an integer >= {minimum}", field_name)
    return value


def _float(value, field_name: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SchemaViolation("expected a number", field_name)
    return float(value)


def _bool(value, field_name: str) -> bool:
    if not isinstance(value, bool):
        raise SchemaViolation("expected true or false", field_name)
    return value


def parse_config(data: Any, base_dir: str = ".") -> ProblemSpec:
    """Validate an already-parsed config mapping."""
    if not isinstance(data, dict):
        raise SchemaViolation("top level must be a mapping")
    data = {KEY_ALIASES.get(k, k): v for k, v in data.items()}
    for key in data:
        if key not in TOP_KEYS:
            raise SchemaViolation("unknown key", str(key))
    for key in ("system_flag", "sigma", "state_space", "initial_region", "epsilon"):
        if key not in data:
            raise SchemaViolation("required key missing", key)

    flag = data["system_flag"]
    if flag not in SYSTEM_FLAGS:
        raise SchemaViolation(f"expected one of {sorted(SYSTEM_FLAGS)}", "system_flag")
    flag = SYSTEM_FLAGS[flag]
    dim = data.get("dim")
    if dim is not None:
        dim = _int(dim, "dim", 1)
    space = _box(data["state_space"], "state_space", dim)
    dim = space.dim
    sigma = _vector(data["sigma"], "sigma", dim)
    if any(s <= 0 for s in sigma):
        raise SchemaViolation("must be positive", "sigma")
    epsilon = _vector(data["epsilon"], "epsilon", dim)
    if any(e <= 0 for e in epsilon):
        raise SchemaViolation("must be positive", "epsilon")
    initial = _box(data["initial_region"], "initial_region", dim)
    unsafe_raw = data.get("unsafe_regions", []) or []
    if not isinstance(unsafe_raw, list):
        raise SchemaViolation("expected a list", "unsafe_regions")
    unsafe = tuple(_box(u, f"unsafe_regions[{k}]", dim) for k, u in enumerate(unsafe_raw))

    A = b = dyn_path = None
    if flag == "linear":
        for key in ("A", "b"):
            if key not in data:
                raise SchemaViolation("required for linear systems", key)
        if "dynamics" in data:
            raise SchemaViolation("not allowed for linear systems", "dynamics")
        if not isinstance(data["A"], list) or len(data["A"]) != dim:
            raise SchemaViolation(f"expected {dim} rows", "A")
        A = tuple(_vector(row, f"A[{k}]", dim) for k, row in enumerate(data["A"]))
        b = _vector(data["b"], "b", dim)
    else:
        if "dynamics" not in data:
            raise SchemaViolation("required for pwa_inclusion systems", "dynamics")
        for key in ("A", "b"):
            if key in data:
                raise SchemaViolation("not allowed for pwa_inclusion systems", key)
        if not isinstance(data["dynamics"], str):
            raise SchemaViolation("expected a file path", "dynamics")
        dyn_path = data["dynamics"]
    prob_path = data.get("probabilities")
    if prob_path is not None and not isinstance(prob_path, str):
        raise SchemaViolation("expected a file path", "probabilities")

    settings = data.get("barrier_settings", {}) or {}
    if not isinstance(settings, dict):
        raise SchemaViolation("expected a mapping", "barrier_settings")
    if "optimization_type" in settings and "engine" in settings:
        raise SchemaViolation("give optimization_type or engine, not both", "barrier_settings")
    engine_name = settings.get("optimization_type", settings.get("engine", "dual"))
    try:
        engine = Engine.parse(engine_name)
    except ValueError as exc:
        raise SchemaViolation("expected DUAL_ALG, CEGIS_ALG or GD_ALG", "barrier_settings.optimization_type") from exc
    allowed = BARRIER_KEYS | {Engine.GD: GD_KEYS, Engine.CEGIS: CEGIS_KEYS}.get(engine, set())
    for key in settings:
        if key not in allowed:
            raise SchemaViolation(f"unknown key for engine {engine.value}", f"barrier_settings.{key}")
    btype = settings.get("barrier_type", "PWC")
    if btype != "PWC":
        raise SchemaViolation("only PWC barriers are supported", "barrier_settings.barrier_type")
    solver = settings.get("linear_solver", "HiGHS")
    if str(solver).lower() != "highs":
        raise SchemaViolation("only HiGHS is available", "barrier_settings.linear_solver")
    horizon = _int(settings.get("time_horizon", 1), "barrier_settings.time_horizon", 1)

    gd, cegis = GdSettings(), CegisSettings()
    try:
        if engine is Engine.GD:
            gd = GdSettings(
                num_iterations=_int(settings.get("num_iterations", gd.num_iterations), "barrier_settings.num_iterations"),
                initial_lr=_float(settings.get("initial_lr", gd.initial_lr), "barrier_settings.initial_lr"),
                decay=_float(settings.get("decay", gd.decay), "barrier_settings.decay"),
                momentum=_float(settings.get("momentum", gd.momentum), "barrier_settings.momentum"),
                seed=_int(settings.get("seed", gd.seed), "barrier_settings.seed"),
            )
        elif engine is Engine.CEGIS:
            cegis = CegisSettings(
                num_iterations=_int(settings.get("num_iterations", cegis.num_iterations), "barrier_settings.num_iterations", 1),
                adaptive=_bool(settings.get("adaptive", cegis.adaptive), "barrier_settings.adaptive"),
                tolerance=_float(settings.get("tolerance", cegis.tolerance), "barrier_settings.tolerance"),
                distribution_guided=_bool(
                    settings.get("distribution_guided", True), "barrier_settings.distribution_guided"
                ),
            )
    except ValueError as exc:
        if isinstance(exc, SchemaViolation):
            raise
        raise SchemaViolation(str(exc), "barrier_settings") from exc

    validation = data.get("validation", {}) or {}
    if not isinstance(validation, dict):
        raise SchemaViolation("expected a mapping", "validation")
    for key in validation:
        if key not in VALIDATION_KEYS:
            raise SchemaViolation("unknown key", f"validation.{key}")
    samples = _int(validation.get("samples", 0), "validation.samples")
    if samples and samples < 1000:
        raise SchemaViolation("must be 0 (off) or >= 1000", "validation.samples")

    name = data.get("name", "system")
    if not isinstance(name, str):
        raise SchemaViolation("expected a string", "name")

    return ProblemSpec(
        system_flag=flag,
        sigma=sigma,
        state_space=space,
        initial_region=initial,
        epsilon=epsilon,
        unsafe_regions=unsafe,
        A=A,
        b=b,
        dynamics_path=dyn_path,
        probabilities_path=prob_path,
        engine=engine,
        time_horizon=horizon,
        gd=gd,
        cegis=cegis,
        validation_samples=samples,
        validation_seed=_int(validation.get("seed", 0), "validation.seed"),
        name=name,
        base_dir=base_dir,
    )


def load_config(path) -> ProblemSpec:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"config file not found: {path}")
    data = _parse_text(path.read_text(encoding="utf-8"), path.suffix.lower())
    return parse_config(data, base_dir=str(path.parent))
