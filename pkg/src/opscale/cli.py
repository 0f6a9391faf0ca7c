"""Command-line entry point: ``opscale <command> ...``.

Exit status: 0 when every gate passes, 1 on a failed gate, 2 for config or
input errors, 3 for numerical failures.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import os
import struct
import sys
from typing import Optional

import numpy as np

from . import quasimetric as qm
from .config import ExperimentConfig, load_config, require
from .covariance import FULL_BAND, FrequencyBand, variogram_batch
from .errors import (CapacityError, CertificationError, ConfigError, DomainError, NumericError)
from .exponent import h_vector
from .harness import checks
from .harness.dimensions import dimensions
from .harness.example62 import alpha_argmin, alpha_theta
from .harness.modulus import dyadic_grid, estimate_lil, estimate_umc
from .harness.report import ExperimentReport
from .harness.slnd import slnd_experiment
from .sampler import Method, replicate

EXIT_OK, EXIT_GATE, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3
VERBS = ("slnd", "umc", "lil", "scaling", "truncation", "example62", "dims")


# ------------------------------------------------------------------ csv helpers
def _fmt(v) -> str:
    return repr(float(v))


def read_points_csv(path: str, N: int) -> np.ndarray:
    """Header row plus ``N`` numeric columns per row."""
    if not os.path.exists(path):
        raise ConfigError(f"points file {path!r} does not exist")
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ConfigError(f"{path} is empty; a header row is required")
    body = [r for r in rows[1:] if r]
    try:
        pts = np.array([[float(x) for x in r] for r in body], dtype=float)
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    if len(body) == 0:
        return np.zeros((0, N))
    if pts.ndim != 2 or pts.shape[1] != N:
        raise ConfigError(f"{path}: expected {N} columns per row")
    return pts


def write_csv(out, header, rows):
    w = csv.writer(out, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) for v in r])


def _open_out(path: Optional[str]):
    if path is None or path == "-":
        return sys.stdout, False
    d = os.path.dirname(path)
    if d:
        os.makedirs(d, exist_ok=True)
    return open(path, "w", newline="", encoding="utf-8"), True


def write_f64le(path: str, columns: np.ndarray):
    """Row count and column count as little-endian uint64, then each column contiguously."""
    columns = np.asarray(columns, dtype="<f8")
    with open(path, "wb") as fh:
        fh.write(struct.pack("<QQ", columns.shape[0], columns.shape[1]))
        fh.write(np.ascontiguousarray(columns.T).tobytes())


def read_f64le(path: str) -> np.ndarray:
    with open(path, "rb") as fh:
        n, m = struct.unpack("<QQ", fh.read(16))
        data = np.frombuffer(fh.read(), dtype="<f8")
    return data.reshape(m, n).T.copy()


# ------------------------------------------------------------------ config merge
def _config(args) -> ExperimentConfig:
    raw = load_config(getattr(args, "config", None))
    cfg = ExperimentConfig.from_dict(raw)
    if getattr(args, "spec", None):
        cfg.model["exponent"] = args.spec
    if getattr(args, "profile", None):
        cfg.model["profile"] = args.profile
    if getattr(args, "seed", None) is not None:
        cfg.seed = args.seed
    return cfg


def _exp(cfg: ExperimentConfig, args, name: str, default=None):
    """Flag value if given, else the experiment field, else ``default``."""
    v = getattr(args, name, None)
    if v is not None:
        return v
    return cfg.experiment.get(name, default)


# ------------------------------------------------------------------ commands
def cmd_tau(args) -> int:
    cfg = _config(args)
    spec = cfg.build_model().exponent
    path = args.points or cfg.experiment.get("points")
    if path is None:
        raise ConfigError("missing required field 'points'")
    pts = read_points_csv(path, spec.N)
    pc = qm.polar_decompose(spec, pts)
    t = np.atleast_1d(pc.tau)
    dirs = np.atleast_2d(pc.direction) if len(pts) else np.zeros((0, spec.N))
    header = [f"x{i + 1}" for i in range(spec.N)] + ["tau"] + [f"dir{i + 1}" for i in range(spec.N)]
    out, close = _open_out(args.out)
    try:
        write_csv(out, header, np.column_stack([pts, t, dirs]) if len(pts) else [])
    finally:
        if close:
            out.close()
    return EXIT_OK


def cmd_variogram(args) -> int:
    cfg = _config(args)
    model = cfg.build_model()
    path = args.lags or cfg.experiment.get("lags")
    if path is None:
        raise ConfigError("missing required field 'lags'")
    h = read_points_csv(path, model.N)
    band = FULL_BAND
    if args.band_lo is not None or args.band_hi is not None:
        band = FrequencyBand(args.band_lo or 0.0, math.inf if args.band_hi is None else args.band_hi)
    g = variogram_batch(model, h, band) if len(h) else np.zeros(0)
    t = qm.tau(model.exponent, h) if len(h) else np.zeros(0)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(t > 0, g / np.where(t > 0, t, 1.0) ** 2, np.nan)
    header = [f"h{i + 1}" for i in range(model.N)] + ["gamma", "tau", "ratio"]
    out, close = _open_out(args.out)
    try:
        write_csv(out, header, np.column_stack([h, g, t, ratio]) if len(h) else [])
    finally:
        if close:
            out.close()
    return EXIT_OK


def cmd_simulate(args) -> int:
    cfg = _config(args)
    seed = cfg.require_seed()
    model = cfg.build_model()
    level = _exp(cfg, args, "level")
    points = args.points or cfg.experiment.get("points")
    if (level is None) == (points is None):
        raise ConfigError("give exactly one of 'level' (dyadic grid) or 'points' (CSV file)")
    pts = dyadic_grid(model.N, int(level)) if level is not None else read_points_csv(points, model.N)
    kind = _exp(cfg, args, "method", "cholesky")
    fmt = args.format or cfg.output.get("format", "csv")
    if fmt not in ("csv", "f64le"):
        raise ConfigError(f"unknown output format {fmt!r}")
    band = FULL_BAND
    if args.band_lo is not None or args.band_hi is not None:
        band = FrequencyBand(args.band_lo or 0.0, math.inf if args.band_hi is None else args.band_hi)
    method = Method(kind, band, int(_exp(cfg, args, "freq_count", 2 ** 12)))
    replicas = int(_exp(cfg, args, "replicas", 1))
    values = np.stack([r.values for r in replicate(model, pts, method, replicas, seed, args.threads)], axis=1)
    header = [f"x{i + 1}" for i in range(model.N)] + (
        ["value"] if replicas == 1 else [f"value{k}" for k in range(replicas)])
    table = np.column_stack([pts, values])
    out_path = args.out or cfg.output.get("path")
    if fmt == "f64le":
        if out_path is None:
            raise ConfigError("missing required field 'output.path' for f64le output")
        write_f64le(out_path, table)
    else:
        out, close = _open_out(out_path)
        try:
            write_csv(out, header, table)
        finally:
            if close:
                out.close()
    return EXIT_OK


def _verify_report(verb: str, cfg: ExperimentConfig, args) -> ExperimentReport:
    threads = args.threads
    if verb == "example62":
        return checks.example62_experiment(float(_exp(cfg, args, "a", 2.0)))
    if verb == "dims":
        H = _exp(cfg, args, "H")
        if H is None:
            H = h_vector(cfg.build_model().exponent).H
        d = require({"d": _exp(cfg, args, "d")}, "d")
        return checks.dims_experiment(_parse_floats(H), float(d))
    model = cfg.build_model()
    if verb == "scaling":
        return checks.scaling_experiment(model, lag_count=int(_exp(cfg, args, "count", 20)))
    seed = cfg.require_seed()
    if verb == "slnd":
        return slnd_experiment(model, int(_exp(cfg, args, "count", 200)), int(cfg.experiment.get("n_max", 6)),
                               seed)[1]
    if verb == "truncation":
        return checks.truncation_experiment(model, int(_exp(cfg, args, "count", 100)), seed)
    replicas = int(_exp(cfg, args, "replicas", 20))
    level = _exp(cfg, args, "grid_level", 6 if model.N == 2 else None)
    if verb == "umc":
        if level is None:
            raise ConfigError("missing required field 'grid_level'")
        rep, er = estimate_umc(model, int(level), replica_count=replicas, master_seed=seed, threads=threads)
    else:
        t0 = _parse_floats(_exp(cfg, args, "t0", [0.5] * model.N))
        split = None
        if args.band_split or cfg.experiment.get("band_split"):
            split = {"master_seed": seed, "replica_count": int(cfg.experiment.get("band_replicas", 200))}
        rep, er = estimate_lil(model, t0, replica_count=replicas, master_seed=seed, band_split=split,
                               grid_level=None if level is None else int(level), threads=threads)
    er.traces[verb] = (["radius", "count", "mean", "sd", "cv"],
                       np.column_stack([rep.radii, rep.counts, rep.mean, rep.sd, rep.cv]))
    return er


def _parse_floats(v):
    if isinstance(v, str):
        try:
            return [float(x) for x in v.split(",") if x.strip()]
        except ValueError:
            raise ConfigError(f"cannot parse number list {v!r}") from None
    return [float(x) for x in v]


def emit_report(er: ExperimentReport, out_path: Optional[str], traces_dir: Optional[str]):
    text = er.to_json() + "\n"
    if out_path:
        d = os.path.dirname(out_path)
        if d:
            os.makedirs(d, exist_ok=True)
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text)
        lines_to = sys.stdout
    else:
        sys.stdout.write(text)
        lines_to = sys.stderr
    for line in er.summary_lines():
        print(line, file=lines_to)
    if traces_dir:
        os.makedirs(traces_dir, exist_ok=True)
        for name, (header, rows) in sorted(er.traces.items()):
            with open(os.path.join(traces_dir, f"{er.experiment}_{name}.csv"), "w", newline="",
                      encoding="utf-8") as fh:
                write_csv(fh, header, np.atleast_2d(rows))


def cmd_verify(args) -> int:
    cfg = _config(args)
    er = _verify_report(args.verb, cfg, args)
    emit_report(er, args.out or cfg.output.get("path"), args.traces or cfg.output.get("traces"))
    return EXIT_OK if er.passed else EXIT_GATE


def cmd_dims(args) -> int:
    rep = dimensions(_parse_floats(args.H), args.d)
    print(json.dumps(rep.to_dict(), indent=2, sort_keys=True))
    return EXIT_OK


def cmd_alpha(args) -> int:
    out = {"a": args.a}
    if args.theta is not None:
        th = _parse_floats(args.theta)
        out["theta"] = th
        out["alpha"] = [alpha_theta(args.a, t) for t in th]
    if args.argmin or args.theta is None:
        t0, a0 = alpha_argmin(args.a)
        out["theta0"], out["alpha0"] = t0, a0
    print(json.dumps(out, indent=2, sort_keys=True))
    return EXIT_OK


# ------------------------------------------------------------------ parser
def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="opscale", description=__doc__.splitlines()[0])
    p.add_argument("--threads", type=int, default=1, help="cap on worker threads; results do not depend on it")
    sub = p.add_subparsers(dest="command", required=True)

    def model_args(sp):
        sp.add_argument("--threads", type=int, default=argparse.SUPPRESS, help=argparse.SUPPRESS)
        sp.add_argument("--config", help="JSON or YAML config file")
        sp.add_argument("--spec", help="named exponent (S1..S6); overrides model.exponent")
        sp.add_argument("--profile", help="quadrature profile: fast, standard or accurate")

    sp = sub.add_parser("tau", help="polar coordinates of points")
    model_args(sp)
    sp.add_argument("--points", help="CSV with header and N columns")
    sp.add_argument("--out", help="output CSV (default stdout)")
    sp.set_defaults(func=cmd_tau)

    sp = sub.add_parser("variogram", help="variogram of lag vectors")
    model_args(sp)
    sp.add_argument("--lags", help="CSV with header and N columns")
    sp.add_argument("--band-lo", type=float)
    sp.add_argument("--band-hi", type=float)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_variogram)

    sp = sub.add_parser("simulate", help="sample the field on a grid or point set")
    model_args(sp)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--level", type=int, help="dyadic grid level")
    sp.add_argument("--points", help="CSV of points")
    sp.add_argument("--method", choices=("cholesky", "spectral"))
    sp.add_argument("--freq-count", dest="freq_count", type=int)
    sp.add_argument("--band-lo", type=float)
    sp.add_argument("--band-hi", type=float)
    sp.add_argument("--replicas", type=int)
    sp.add_argument("--format", choices=("csv", "f64le"))
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("verify", help="run an experiment and judge its gates")
    sp.add_argument("verb", choices=VERBS)
    model_args(sp)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--count", type=int, help="configurations, lags or (t, u) pairs")
    sp.add_argument("--replicas", type=int)
    sp.add_argument("--grid-level", dest="grid_level", type=int)
    sp.add_argument("--t0", help="comma-separated base point for lil")
    sp.add_argument("--band-split", dest="band_split", action="store_true")
    sp.add_argument("--a", type=float, help="Jordan-cell exponent for example62")
    sp.add_argument("--H", help="comma-separated H-vector for dims")
    sp.add_argument("--d", type=float, help="target dimension for dims")
    sp.add_argument("--out", help="JSON report path (default stdout)")
    sp.add_argument("--traces", help="directory for CSV traces")
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("dims", help="range, graph and level-set dimensions")
    sp.add_argument("--H", required=True, help="comma-separated, nondecreasing, in (0, 1)")
    sp.add_argument("--d", required=True, type=float)
    sp.set_defaults(func=cmd_dims)

    sp = sub.add_parser("alpha", help="alpha(theta) for the Jordan cell [[a, 0], [1, a]]")
    sp.add_argument("--a", type=float, default=2.0)
    sp.add_argument("--theta", help="comma-separated theta values")
    sp.add_argument("--argmin", action="store_true")
    sp.set_defaults(func=cmd_alpha)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.threads < 1:
        print("error: --threads must be at least 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return args.func(args)
    except (ConfigError, DomainError, CapacityError, CertificationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
