"""Bounds and PWA-dynamics files.

Bounds files are a one-line header carrying the format version and the
SHA-256 of everything after it, followed by a JSON body. Matrix entries are
hexadecimal floats (``float.hex``) so a round trip is bit-exact. The layout
is documented in docs/formats.md.
"""

from __future__ import annotations

import hashlib
import json
import re
from pathlib import Path

import numpy as np
import yaml

from .dynamics import GaussianNoise, PwaInclusionDynamics
from .errors import ChecksumMismatch, DimensionMismatch, SchemaViolation, VersionMismatch
from .geometry import Hyperrectangle, Partition, generate_partition
from .transition_bounds import TransitionBounds

BOUNDS_FORMAT = "pwcbarrier-bounds"
BOUNDS_VERSION = 1
PWA_FORMAT = "pwcbarrier-pwa"
PWA_VERSION = 1
_HEADER = re.compile(r"^#(?P<fmt>[\w-]+) v(?P<ver>\d+) sha256=(?P<sum>[0-9a-f]{64})$")


def _hex(x: float) -> str:
    return float(x).hex()


def _num(v, field: str) -> float:
    if isinstance(v, str):
        try:
            return float.fromhex(v)
        except ValueError as exc:
            raise SchemaViolation(f"bad float literal {v!r}", field) from exc
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise SchemaViolation("expected a number", field)
    return float(v)


def _array(v, field: str, ndim: int) -> np.ndarray:
    def walk(x, depth):
        if depth == 0:
            return _num(x, field)
        if not isinstance(x, list):
            raise SchemaViolation(f"expected a nested list of depth {ndim}", field)
        return [walk(e, depth - 1) for e in x]

    try:
        arr = np.array(walk(v, ndim), dtype=float)
    except ValueError as exc:
        raise SchemaViolation("ragged array", field) from exc
    if arr.ndim != ndim:
        raise SchemaViolation(f"expected {ndim} dimensions, got {arr.ndim}", field)
    return arr


def partition_from_descriptor(desc: dict) -> Partition:
    space = Hyperrectangle(tuple(desc["low"]), tuple(desc["high"]))
    eps = desc.get("requested_epsilon") or list(space.extent / (2 * np.array(desc["cells_per_dim"])))
    part = generate_partition(space, eps)
    if list(part.cells_per_dim) != list(desc["cells_per_dim"]):
        raise SchemaViolation("cells_per_dim inconsistent with requested_epsilon", "partition")
    return Partition(
        part.space, part.cells_per_dim, part.edges, part.requested_epsilon,
        tuple(bool(f) for f in desc["unsafe_cell_flags"]),
        frozenset(int(i) for i in desc["initial_cell_indices"]),
    )


def save_bounds(bounds: TransitionBounds, path, partition: Partition | None = None) -> None:
    body = {
        "format": BOUNDS_FORMAT,
        "version": BOUNDS_VERSION,
        "n_regions": bounds.n_regions,
        "sigma": [_hex(s) for s in bounds.sigma],
        "dynamics": bounds.dynamics,
        "partition_hash": bounds.partition_hash,
        "partition": None if partition is None else partition.descriptor(),
        "metadata": bounds.metadata,
        "lower": [[_hex(x) for x in row] for row in bounds.lower],
        "upper": [[_hex(x) for x in row] for row in bounds.upper],
    }
    text = json.dumps(body, separators=(",", ":"))
    digest = hashlib.sha256(text.encode()).hexdigest()
    Path(path).write_text(f"#{BOUNDS_FORMAT} v{BOUNDS_VERSION} sha256={digest}\n{text}", encoding="utf-8")


def _read_bounds_body(path) -> dict:
    raw = Path(path).read_text(encoding="utf-8")
    header, sep, text = raw.partition("\n")
    m = _HEADER.match(header.strip())
    if not m or m["fmt"] != BOUNDS_FORMAT:
        raise SchemaViolation("missing or malformed bounds header line", "header")
    if int(m["ver"]) != BOUNDS_VERSION:
        raise VersionMismatch(f"bounds file version {m['ver']}, reader supports {BOUNDS_VERSION}")
    if hashlib.sha256(text.encode()).hexdigest() != m["sum"]:
        raise ChecksumMismatch(f"{path}: content does not match its checksum (truncated or edited?)")
    try:
        body = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaViolation(f"body is not valid JSON: {exc}") from exc
    expected = {"format", "version", "n_regions", "sigma", "dynamics", "partition_hash", "partition",
                "metadata", "lower", "upper"}
    if not isinstance(body, dict) or set(body) != expected:
        raise SchemaViolation(f"body keys must be exactly {sorted(expected)}")
    if body["version"] != BOUNDS_VERSION:
        raise VersionMismatch(f"body version {body['version']}")
    return body


def load_bounds(path) -> TransitionBounds:
    body = _read_bounds_body(path)
    lower = _array(body["lower"], "lower", 2)
    upper = _array(body["upper"], "upper", 2)
    n = body["n_regions"]
    if lower.shape != (n, n + 1) or upper.shape != (n, n + 1):
        raise SchemaViolation(f"matrices must be {n} x {n + 1}", "lower/upper")
    bounds = TransitionBounds(
        lower, upper,
        sigma=tuple(_num(s, "sigma") for s in body["sigma"]),
        dynamics=body["dynamics"],
        partition_hash=body["partition_hash"],
        metadata=body["metadata"],
    )
    bounds.check_feasible()
    return bounds


def load_bounds_partition(path) -> Partition | None:
    desc = _read_bounds_body(path)["partition"]
    return None if desc is None else partition_from_descriptor(desc)


def _load_structured(path: Path):
    text = path.read_text(encoding="utf-8")
    try:
        return json.loads(text) if path.suffix.lower() == ".json" else yaml.safe_load(text)
    except (json.JSONDecodeError, yaml.YAMLError) as exc:
        raise SchemaViolation(f"{path}: cannot parse: {exc}") from exc


def load_pwa_dynamics(path, sigma=None, check: bool = True) -> PwaInclusionDynamics:
    """Read per-region affine bounds; ``sigma`` overrides any value in the file."""
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"PWA dynamics file not found: {path}")
    data = _load_structured(path)
    if not isinstance(data, dict):
        raise SchemaViolation("top level must be a mapping")
    allowed = {"format", "version", "num_regions", "dim", "sigma", "regions",
               "nominal_dynamics_A", "nominal_dynamics_b"}
    for key in data:
        if key not in allowed:
            raise SchemaViolation("unknown key", key)
    for key in ("num_regions", "regions", "nominal_dynamics_A", "nominal_dynamics_b"):
        if key not in data:
            raise SchemaViolation("required key missing", key)
    if data.get("format", PWA_FORMAT) != PWA_FORMAT:
        raise SchemaViolation(f"expected {PWA_FORMAT!r}", "format")
    if data.get("version", PWA_VERSION) != PWA_VERSION:
        raise VersionMismatch(f"PWA file version {data['version']}, reader supports {PWA_VERSION}")
    R = data["num_regions"]
    if isinstance(R, bool) or not isinstance(R, int) or R < 1:
        raise SchemaViolation("expected a positive integer", "num_regions")

    def by_dir(key, ndim):
        items = data[key]
        if not isinstance(items, list) or len(items) != R:
            raise SchemaViolation(f"expected {R} entries (one per region)", key)
        lows, highs = [], []
        for r, item in enumerate(items):
            if not isinstance(item, dict) or set(item) != {"lower", "upper"}:
                raise SchemaViolation("each entry needs exactly the keys lower and upper", f"{key}[{r}]")
            lows.append(_array(item["lower"], f"{key}[{r}].lower", ndim))
            highs.append(_array(item["upper"], f"{key}[{r}].upper", ndim))
        try:
            return np.stack(lows), np.stack(highs)
        except ValueError as exc:
            raise SchemaViolation("entries differ in shape", key) from exc

    reg_lo, reg_hi = by_dir("regions", 1)
    A_lo, A_hi = by_dir("nominal_dynamics_A", 2)
    b_lo, b_hi = by_dir("nominal_dynamics_b", 1)
    n = reg_lo.shape[1]
    if "dim" in data and data["dim"] != n:
        raise SchemaViolation(f"dim {data['dim']} does not match region dimension {n}", "dim")
    if sigma is None:
        if "sigma" not in data:
            raise SchemaViolation("sigma missing from file and not supplied", "sigma")
        sigma = [_num(s, "sigma") for s in data["sigma"]]
    try:
        return PwaInclusionDynamics(A_lo, A_hi, b_lo, b_hi, reg_lo, reg_hi, GaussianNoise(tuple(sigma)),
                                    check_vertices=check)
    except DimensionMismatch as exc:
        raise SchemaViolation(str(exc)) from exc


def save_pwa_dynamics(dyn: PwaInclusionDynamics, path) -> None:
    def pair(lo, hi, fn):
        return {"lower": fn(lo), "upper": fn(hi)}

    vec = lambda v: [_hex(x) for x in v]  # noqa: E731
    mat = lambda m: [vec(r) for r in m]  # noqa: E731
    data = {
        "format": PWA_FORMAT,
        "version": PWA_VERSION,
        "num_regions": dyn.n_regions,
        "dim": dyn.dim,
        "sigma": vec(dyn.noise.sigma),
        "regions": [pair(dyn.region_lows[r], dyn.region_highs[r], vec) for r in range(dyn.n_regions)],
        "nominal_dynamics_A": [pair(dyn.A_lower[r], dyn.A_upper[r], mat) for r in range(dyn.n_regions)],
        "nominal_dynamics_b": [pair(dyn.b_lower[r], dyn.b_upper[r], vec) for r in range(dyn.n_regions)],
    }
    Path(path).write_text(json.dumps(data, indent=1), encoding="utf-8")
