"""Command-line front end.

    doslab <command> --config <path> [--out <path>] [--threads N] [--no-cache]

Results are written atomically (temp file + rename). Identical configs hit the
cache in ``cache_dir`` (or ``$DOSLAB_CACHE``) and reproduce the stored bytes.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import constructions, dos, spectral, ucp
from .config import COMMANDS, SCHEMA_VERSION, ConfigError, RunConfig, parse_config
from .lattice import PotentialSpec, hamiltonian, make_box

log = logging.getLogger("doslab")


def _plain(obj):
    """numpy scalars/arrays and tuples -> JSON-native values."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else repr(x)
    return obj


def dump_json(obj) -> bytes:
    return (json.dumps(_plain(obj), indent=2, sort_keys=True) + "\n").encode()


def dump_csv(header, rows) -> bytes:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue().encode()


def _probe_id(p) -> str:
    if isinstance(p, (tuple, list)):
        return ":".join(str(int(v)) for v in p)
    return str(p)


def _probes(params, spec):
    probes = params.get("probes")
    if probes is None:
        return dos.default_probes(spec, params["d"])
    return [tuple(p) if isinstance(p, list) else int(p) for p in probes]


def _single_probe(params, spec):
    if spec.stochastic:
        return None
    return tuple(params["center"]) if params.get("center") else None


# ---------------------------------------------------------------------------
# commands; each returns {artifact suffix: bytes}, "" is the main artifact


def cmd_build(p, threads):
    spec = PotentialSpec.from_dict(p["potential"])
    box = make_box(p["d"], p["L"], p.get("center"), p["bc"])
    H = hamiltonian(spec, box)
    doc = {
        "box": box.to_dict(),
        "n_sites": H.n,
        "half_bandwidth": H.b,
        "realized_sup": H.potential.realized_sup,
        "sup_bound": spec.sup_bound(),
        "potential": H.potential.values,
        "row_order": None if H.perm is None else H.perm,
    }
    return {"": dump_json(doc)}


def cmd_count(p, threads):
    spec = PotentialSpec.from_dict(p["potential"])
    box = make_box(p["d"], p["L"], p.get("center"), p["bc"])
    H = hamiltonian(spec, box)
    pt = dos.eta_interval(H, spectral.SpectralWindow(p["E"], p["eps"]))
    return {"": dump_json({"count": pt.count, "eta": pt.eta, "n_sites": H.n, "E": p["E"], "eps": p["eps"]})}


def cmd_dos_sweep(p, threads):
    spec = PotentialSpec.from_dict(p["potential"])
    probes = _probes(p, spec)
    curve = dos.dos_sweep(spec, p["L"], p["bc"], p["E"], p["eps_grid"], probes, p["d"], threads)
    n = make_box(p["d"], p["L"], None, p["bc"]).n_sites
    rows = []
    for probe, counts in curve.per_probe.items():
        for e, c in zip(curve.eps, counts):
            rows.append([p["d"], p["L"], p["bc"], p["E"], e, _probe_id(probe), c, c / n])
    header = ["d", "L", "bc", "E", "eps", "probe", "count", "eta"]
    fit = curve.fit
    summary = {
        "schema_version": SCHEMA_VERSION,
        "C_hat": fit[0] if fit else None,
        "kappa_hat": fit[1] if fit else None,
        "residual": fit[2] if fit else None,
        "kappa_reference": dos.kappa_reference(p["d"]),
        "dropped_zero_points": curve.dropped,
        "sup_curve": [[pt.eps, pt.eta, _probe_id(pt.probe)] for pt in curve.points],
    }
    return {"": dump_csv(header, rows), ".fit.json": dump_json(summary)}


def cmd_translate_sup(p, threads):
    spec = PotentialSpec.from_dict(p["potential"])
    probes = _probes(p, spec)
    est = dos.translate_sup(spec, p["L"], p["bc"], spectral.SpectralWindow(p["E"], p["eps"]), probes, p["d"], threads)
    doc = {
        "value": est.value,
        "argmax": _probe_id(est.argmax),
        "probes": est.probes,
        "per_probe": {_probe_id(q): [c, e] for q, c, e in zip(probes, est.counts, est.etas)},
    }
    return {"": dump_json(doc)}


def cmd_construct(p, threads):
    spec = PotentialSpec.from_dict(p["potential"])
    rep = constructions.construct_report(
        spec, p["d"], p["L"], p["bc"], p["E"], p["eps"], p.get("R"), _single_probe(p, spec)
    )
    return {"": dump_json(rep)}


def cmd_ucp_probe(p, threads):
    spec = PotentialSpec.from_dict(p["potential"])
    box = make_box(p["d"], p["L"], p.get("center"), p["bc"])
    H = hamiltonian(spec, box)
    w, V = np.linalg.eigh(H.to_dense())
    k = int(p["eigen_index"])
    psi = V[:, k]
    E = w[k] if p.get("E") is None else p["E"]
    sites = box.sites()
    lo, hi = np.asarray(p["theta"]["lo"]), np.asarray(p["theta"]["hi"])
    theta = np.flatnonzero(np.all((sites >= lo) & (sites <= hi), axis=1))
    x0 = box.index_of(tuple(p["x0"]))
    rep = ucp.ucp_probe(psi, H, float(E), theta, x0, p["delta"])
    return {"": dump_json(rep.to_dict())}


def cmd_carleman(p, threads):
    s = np.linspace(0.0, p["s_max"], p["num"])
    phi = ucp.carleman_phi(s)
    return {"": dump_csv(["s", "phi"], zip(s, phi))}


def cmd_fit(p, threads):
    fit = dos.fit_log_holder([tuple(x) for x in p["points"]])
    doc = {
        "schema_version": SCHEMA_VERSION,
        "C_hat": fit[0] if fit else None,
        "kappa_hat": fit[1] if fit else None,
        "residual": fit[2] if fit else None,
        "kappa_reference": dos.kappa_reference(p["d"]),
    }
    return {"": dump_json(doc)}


HANDLERS = {
    "build": cmd_build,
    "count": cmd_count,
    "dos-sweep": cmd_dos_sweep,
    "translate-sup": cmd_translate_sup,
    "construct": cmd_construct,
    "ucp-probe": cmd_ucp_probe,
    "carleman": cmd_carleman,
    "fit": cmd_fit,
}


# ---------------------------------------------------------------------------
# I/O


def atomic_write(path: Path, data: bytes):
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _cache_dir(config: RunConfig, use_cache: bool) -> Path | None:
    path = os.environ.get("DOSLAB_CACHE") or config.cache_dir
    if not use_cache or not path:
        return None
    path = Path(path)
    if path.exists() and not path.is_dir():
        raise OSError(f"cache_dir {str(path)!r} exists and is not a directory")
    path.mkdir(parents=True, exist_ok=True)
    if not os.access(path, os.W_OK):
        raise OSError(f"cache_dir {str(path)!r} is not writable")
    return path


def _cache_read(entry: Path) -> dict[str, bytes] | None:
    manifest = entry / "manifest.json"
    if not manifest.is_file():
        return None
    names = json.loads(manifest.read_text())
    return {suffix: (entry / f"artifact{i}").read_bytes() for i, suffix in enumerate(names)}


def _cache_write(entry: Path, artifacts: dict[str, bytes]):
    entry.mkdir(parents=True, exist_ok=True)
    names = sorted(artifacts)
    for i, suffix in enumerate(names):
        atomic_write(entry / f"artifact{i}", artifacts[suffix])
    atomic_write(entry / "manifest.json", json.dumps(names).encode())


def execute(config: RunConfig, use_cache: bool = True) -> dict[str, bytes]:
    """Compute (or fetch from cache) the artifacts of a config without writing outputs."""
    cache = _cache_dir(config, use_cache)
    entry = cache / config.cache_key() if cache else None
    if entry is not None:
        hit = _cache_read(entry)
        if hit is not None:
            log.info("cache hit %s", entry.name)
            return hit
    artifacts = HANDLERS[config.command](config.params, config.threads)
    if entry is not None:
        _cache_write(entry, artifacts)
        log.info("cache store %s", entry.name)
    return artifacts


def run(config: RunConfig, use_cache: bool = True, stdout=None) -> int:
    stdout = stdout or sys.stdout.buffer
    try:
        artifacts = execute(config, use_cache)
        if config.output_path:
            out = Path(config.output_path)
            for suffix in sorted(artifacts):
                atomic_write(out.with_name(out.name + suffix) if suffix else out, artifacts[suffix])
        else:
            for suffix in sorted(artifacts):
                stdout.write(artifacts[suffix])
            stdout.flush()
        return 0
    except Exception as exc:  # reported as machine-readable JSON
        log.debug("run failed", exc_info=True)
        error = {"status": "error", "command": config.command, "type": type(exc).__name__, "message": str(exc)}
        sys.stderr.write(json.dumps(error, sort_keys=True) + "\n")
        return 1


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="doslab", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", required=True, help="JSON config document")
    ap.add_argument("--out", help="output path (overrides config output_path)")
    ap.add_argument("--threads", type=int, help="worker threads (overrides config)")
    ap.add_argument("--no-cache", action="store_true")
    ap.add_argument("-v", "--verbose", action="store_true")
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")

    try:
        text = Path(args.config).read_text()
        config = parse_config(text, command=args.command)
    except ConfigError as exc:
        sys.stderr.write(json.dumps({"status": "error", "type": "ConfigError", "errors": exc.errors}) + "\n")
        return 2
    except OSError as exc:
        sys.stderr.write(json.dumps({"status": "error", "type": type(exc).__name__, "message": str(exc)}) + "\n")
        return 2
    if args.out:
        config.output_path = args.out
    if args.threads is not None:
        if args.threads < 1:
            sys.stderr.write(json.dumps({"status": "error", "type": "ConfigError", "errors": ["--threads must be >= 1"]}) + "\n")
            return 2
        config.threads = args.threads
    return run(config, use_cache=not args.no_cache)


if __name__ == "__main__":
    sys.exit(main())
