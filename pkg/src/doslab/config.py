"""Run configuration documents: validation, defaults, canonical form and cache keys.

A config is one JSON object::

    {"schema_version": 1, "command": "dos-sweep",
     "params": {"d": 1, "L": 5000, "bc": "D", "E": 1.0,
                "potential": {"kind": "anderson_uniform", "coupling": 1, "lo": 0, "hi": 1, "seed": 0}},
     "output_path": "sweep.csv", "cache_dir": ".doslab-cache", "threads": 1}
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

from .dos import DEFAULT_EPS_GRID, EPS_MAX
from .lattice import BOUNDARY_CONDITIONS, PotentialSpec, make_box

SCHEMA_VERSION = 1
COMMANDS = ("build", "count", "dos-sweep", "translate-sup", "construct", "ucp-probe", "carleman", "fit")

_LATTICE = {"d": 1, "L": None, "bc": "D", "center": None, "potential": None}
_REQUIRED = object()

# command -> {param: default}; _REQUIRED marks mandatory keys
PARAMS = {
    "build": {**_LATTICE, "L": _REQUIRED, "potential": _REQUIRED},
    "count": {**_LATTICE, "L": _REQUIRED, "potential": _REQUIRED, "E": _REQUIRED, "eps": _REQUIRED},
    "dos-sweep": {
        **_LATTICE,
        "L": _REQUIRED,
        "potential": _REQUIRED,
        "E": _REQUIRED,
        "eps_grid": list(DEFAULT_EPS_GRID),
        "probes": None,
    },
    "translate-sup": {
        **_LATTICE,
        "L": _REQUIRED,
        "potential": _REQUIRED,
        "E": _REQUIRED,
        "eps": _REQUIRED,
        "probes": None,
    },
    "construct": {
        **_LATTICE,
        "L": _REQUIRED,
        "potential": _REQUIRED,
        "E": _REQUIRED,
        "eps": _REQUIRED,
        "R": None,
    },
    "ucp-probe": {
        **_LATTICE,
        "L": _REQUIRED,
        "potential": {"kind": "constant", "c": 0.0},
        "eigen_index": 0,
        "E": None,
        "theta": _REQUIRED,
        "x0": _REQUIRED,
        "delta": _REQUIRED,
    },
    "carleman": {"s_max": 10.0, "num": 101},
    "fit": {"points": _REQUIRED, "d": 1},
}


class ConfigError(ValueError):
    def __init__(self, errors: list[str]):
        super().__init__("; ".join(errors))
        self.errors = errors


@dataclass
class RunConfig:
    command: str
    params: dict = field(default_factory=dict)
    output_path: str | None = None
    cache_dir: str | None = None
    threads: int = 1
    schema_version: int = SCHEMA_VERSION

    def to_dict(self) -> dict:
        return {
            "schema_version": self.schema_version,
            "command": self.command,
            "params": self.params,
            "output_path": self.output_path,
            "cache_dir": self.cache_dir,
            "threads": self.threads,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def cache_key(self) -> str:
        """sha256 over the inputs that define the result (not paths or thread count)."""
        doc = {"schema_version": self.schema_version, "command": self.command, "params": self.params}
        return hashlib.sha256(canonical_json(doc).encode()).hexdigest()


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


def _number(errors, name, value, integer=False):
    ok = isinstance(value, (int, float)) and not isinstance(value, bool)
    if integer:
        ok = ok and float(value).is_integer()
    if not ok:
        errors.append(f"{name} must be {'an integer' if integer else 'a number'}, got {value!r}")
        return None
    return int(value) if integer else float(value)


def _check_eps(errors, name, value):
    v = _number(errors, name, value)
    if v is not None and not 0 < v <= EPS_MAX:
        errors.append(f"{name}={v} violates the constraint 0 < eps <= 1/2")
    return v


def _validate(command: str, params: dict, errors: list[str]) -> dict:
    schema = PARAMS[command]
    out = {}
    for key in params:
        if key not in schema:
            errors.append(f"unknown parameter {key!r} for command {command!r}")
    for key, default in schema.items():
        if key in params and params[key] is not None:
            out[key] = params[key]
        elif default is _REQUIRED:
            errors.append(f"missing required parameter {key!r} for command {command!r}")
        else:
            out[key] = default

    if "d" in out:
        out["d"] = _number(errors, "d", out["d"], integer=True)
        if out["d"] is not None and out["d"] not in (1, 2, 3) and command != "fit":
            errors.append(f"d must be 1, 2 or 3, got {out['d']}")
    if "L" in out:
        out["L"] = _number(errors, "L", out["L"])
        if out["L"] is not None and out["L"].is_integer():
            out["L"] = int(out["L"])
        if out["L"] is not None and out["L"] < 1:
            errors.append(f"L must be >= 1, got {out['L']}")
    if "bc" in out:
        bc = str(out["bc"]).upper()[:1]
        if bc not in BOUNDARY_CONDITIONS:
            errors.append(f"bc must be 'D' or 'P', got {out['bc']!r}")
        out["bc"] = bc
    if isinstance(out.get("potential"), dict):
        try:
            out["potential"] = PotentialSpec.from_dict(out["potential"]).to_dict()
        except ValueError as exc:
            errors.append(f"potential: {exc}")
    elif "potential" in out:
        errors.append("potential must be an object with a 'kind' field")
    if "E" in out and out["E"] is not None:
        out["E"] = _number(errors, "E", out["E"])
    if "eps" in out:
        out["eps"] = _check_eps(errors, "eps", out["eps"])
    if "eps_grid" in out:
        grid = out["eps_grid"]
        if not isinstance(grid, list) or not grid:
            errors.append("eps_grid must be a nonempty list")
        else:
            out["eps_grid"] = [_check_eps(errors, f"eps_grid[{i}]", v) for i, v in enumerate(grid)]
            vals = [v for v in out["eps_grid"] if v is not None]
            if any(b >= a for a, b in zip(vals, vals[1:])):
                errors.append("eps_grid must be strictly decreasing")
    if out.get("R") is not None:
        out["R"] = _number(errors, "R", out["R"], integer=True)
        if out["R"] is not None and out["R"] % 2:
            errors.append(f"R must be even, got {out['R']}")
    if out.get("probes") is not None and (not isinstance(out["probes"], list) or not out["probes"]):
        errors.append("probes must be a nonempty list of seeds or centres")
    if out.get("center") is not None and out.get("d") is not None:
        if not isinstance(out["center"], list) or len(out["center"]) != out["d"]:
            errors.append(f"center must be a list of {out['d']} integers")
    if command == "ucp-probe":
        _number(errors, "delta", out.get("delta"))
        th = out.get("theta")
        if not (isinstance(th, dict) and "lo" in th and "hi" in th):
            errors.append("theta must be an object {'lo': [...], 'hi': [...]} of inclusive site coordinates")
    if command == "carleman":
        out["s_max"] = _number(errors, "s_max", out["s_max"])
        out["num"] = _number(errors, "num", out["num"], integer=True)
        if out["s_max"] is not None and out["s_max"] < 0:
            errors.append("s_max must be nonnegative")
    if command == "fit":
        pts = out.get("points")
        if not isinstance(pts, list) or not all(isinstance(p, list) and len(p) == 2 for p in pts):
            errors.append("points must be a list of [eps, eta] pairs")
        else:
            for i, (e, _) in enumerate(pts):
                _check_eps(errors, f"points[{i}].eps", e)
    if not errors and "L" in out and "bc" in out and out.get("d") is not None:
        try:
            make_box(out["d"], out["L"], out.get("center"), out["bc"])
        except ValueError as exc:
            errors.append(str(exc))
    return out


def parse_config(document: str | dict, command: str | None = None) -> RunConfig:
    """Validate a config document; every problem found is reported in one ConfigError."""
    errors: list[str] = []
    if isinstance(document, str):
        try:
            doc = json.loads(document)
        except json.JSONDecodeError as exc:
            raise ConfigError([f"config is not valid JSON: {exc}"]) from None
    else:
        doc = document
    if not isinstance(doc, dict):
        raise ConfigError(["config must be a JSON object"])

    cmd = doc.get("command", command)
    if command is not None and cmd != command:
        errors.append(f"config command {cmd!r} does not match requested command {command!r}")
    if cmd not in COMMANDS:
        raise ConfigError(errors + [f"unknown command {cmd!r}; expected one of {', '.join(COMMANDS)}"])
    version = doc.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        errors.append(f"unsupported schema_version {version!r}; this build reads {SCHEMA_VERSION}")
    for key in doc:
        if key not in ("schema_version", "command", "params", "output_path", "cache_dir", "threads"):
            errors.append(f"unknown top-level field {key!r}")
    params = doc.get("params", {})
    if not isinstance(params, dict):
        errors.append("params must be an object")
        params = {}
    threads = doc.get("threads", 1)
    if not isinstance(threads, int) or isinstance(threads, bool) or threads < 1:
        errors.append(f"threads must be a positive integer, got {threads!r}")
    clean = _validate(cmd, params, errors)
    if errors:
        raise ConfigError(errors)
    return RunConfig(cmd, clean, doc.get("output_path"), doc.get("cache_dir"), threads, version)
