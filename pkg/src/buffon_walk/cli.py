"""Command-line front end: ``buffon-walk {walk,needle,noodle,compare,sweep}``.

Exit codes: 0 on success, 2 for an invalid configuration (including
argument parsing errors), 3 when the output cannot be written.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

import numpy as np

from . import __version__
from .buffon import (
    SHAPE_KINDS,
    DropConfig,
    analytic_crossing_p,
    analytic_expected_crossings,
    make_shape,
    needle_tally,
    noodle_tally,
)
from .errors import ConfigError, InvalidInputError
from .geometry import TWO_PI, Link, Room
from .stats import DEFAULT_Z, EstimateRecord, Tally, tv_distance_to_uniform
from .walker import WalkConfig, merge_walk_summaries, replica_seed, run_walk_replicas

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3

EXPERIMENTS = ("walk", "needle", "noodle", "compare", "sweep")
CSV_COLUMNS = (
    "experiment", "method", "parameter", "value", "replica", "seed",
    "n", "estimate", "ci_low", "ci_high", "analytic", "rel_error",
)
# echo order of experiment parameters in the JSON "config" object
PARAM_ORDER = (
    "method", "vary", "values", "ds", "L", "room_b", "p_theta", "steps", "burn_in",
    "link_x", "angle_min", "angle_max", "x0", "y0", "theta0", "drops", "shape",
    "bend_deg", "arc_angle", "seed", "replicas", "z",
)
# keys allowed in a --config file, and the spellings accepted for them
_KEY_ALIASES = {"spacing": "L", "room_l": "L", "l": "L", "format": "output_format"}


@dataclass
class ExperimentConfig:
    experiment: str
    params: dict[str, Any]
    seed: int = 0
    replicas: int = 1
    output_format: str = "json"
    output_path: Optional[str] = None
    workers: int = 1

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError("experiment", f"unknown experiment {self.experiment!r}")
        if self.replicas < 1:
            raise ConfigError("replicas", f"must be >= 1, got {self.replicas}")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed", f"must be an unsigned 64-bit integer, got {self.seed}")
        if self.output_format not in ("json", "csv"):
            raise ConfigError("format", f"must be json or csv, got {self.output_format!r}")

    def echo(self) -> dict[str, Any]:
        p = dict(self.params, seed=self.seed, replicas=self.replicas)
        return {k: p[k] for k in PARAM_ORDER if k in p}


@dataclass
class ResultEnvelope:
    experiment: str
    config: dict[str, Any]
    seeds: list[int]
    results: list[dict[str, Any]] = field(default_factory=list)
    duration_s: float = 0.0
    version: str = __version__

    def to_dict(self) -> dict[str, Any]:
        return {
            "artifact": "buffon_walk",
            "version": self.version,
            "experiment": self.experiment,
            "config": self.config,
            "seeds": self.seeds,
            "results": self.results,
            "duration_s": self.duration_s,
        }


# ---------------------------------------------------------------- serialisation


def format_float(v: float) -> str:
    if not math.isfinite(v):
        return "null"
    s = f"{v:.17g}"
    if all(c.isdigit() or c == "-" for c in s):
        s += ".0"
    return s


def dumps(obj: Any, indent: int = 2, _level: int = 0) -> str:
    """JSON text with floats at 17 significant digits and keys kept in order."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if obj is None:
        return "null"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return format_float(float(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {dumps(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        if len(obj) == 0:
            return "[]"
        if all(isinstance(v, (int, float, np.integer, np.floating)) and not isinstance(v, bool) for v in obj):
            return "[" + ", ".join(dumps(v) for v in obj) + "]"
        items = [pad + dumps(v, indent, _level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def _csv_cell(v: Any) -> str:
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return format_float(float(v))
    return str(v)


def to_csv(envelope: ResultEnvelope) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(CSV_COLUMNS)
    for entry in envelope.results:
        for rep in entry["replicas"]:
            row = {
                "experiment": envelope.experiment,
                "method": entry["method"],
                "parameter": entry["parameter"],
                "value": entry["value"],
                "analytic": entry["analytic"],
                **rep,
            }
            w.writerow([_csv_cell(row.get(c)) for c in CSV_COLUMNS])
    return buf.getvalue()


def emit(envelope: ResultEnvelope, fmt: str = "json", path: Optional[str] = None) -> str:
    """Render ``envelope`` and write it to ``path`` (stdout when None)."""
    text = to_csv(envelope) if fmt == "csv" else dumps(envelope.to_dict()) + "\n"
    if path is None:
        sys.stdout.write(text)
    else:
        try:
            with open(path, "w", newline="", encoding="utf-8") as fh:
                fh.write(text)
        except OSError as exc:
            raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc
    return text


# ---------------------------------------------------------------- experiments


def _record(est: EstimateRecord) -> dict[str, Any]:
    return {
        "estimate": est.point,
        "ci_low": est.ci_low,
        "ci_high": est.ci_high,
        "n": est.n,
        "rel_error": est.rel_error,
    }


def _walk_config(p: dict[str, Any], seed: int) -> WalkConfig:
    try:
        room = Room(float(p["L"]), float(p["room_b"] if p.get("room_b") is not None else p["L"]))
    except InvalidInputError as exc:
        raise ConfigError("room", str(exc)) from None
    start = None
    given = [p.get(k) is not None for k in ("x0", "y0", "theta0")]
    if any(given):
        if not all(given):
            raise ConfigError("x0", "x0, y0 and theta0 must be given together")
        start = (p["x0"], p["y0"], p["theta0"])
    return WalkConfig(
        d_s=float(p["ds"]),
        room=room,
        n_steps=int(p["steps"]),
        seed=seed,
        p_theta=float(p["p_theta"]),
        link=Link(float(p["link_x"])) if p.get("link_x") is not None else None,
        angle_range=(float(p["angle_min"]), float(p["angle_max"])),
        initial_state=start,
        burn_in=None if p.get("burn_in") is None else int(p["burn_in"]),
    )


def _run_walk(p, seed, replicas, z, workers):
    config = _walk_config(p, seed)
    summaries = run_walk_replicas(config, replicas, workers=workers, z=z)
    merged = merge_walk_summaries(summaries)
    reps = []
    for i, s in enumerate(summaries):
        reps.append({"replica": i, "seed": s.seeds[0], **_record(s.estimate), "n_crossings": s.n_crossings})
    est = merged.estimate
    merged_out = {
        **_record(est),
        "n_crossings": merged.n_crossings,
        "tv_x": tv_distance_to_uniform(merged.x_histogram),
        "tv_y": tv_distance_to_uniform(merged.y_histogram),
        "tv_angle": tv_distance_to_uniform(merged.angle_histogram),
        "x_histogram": merged.x_histogram.counts.tolist(),
        "y_histogram": merged.y_histogram.counts.tolist(),
        "angle_histogram": merged.angle_histogram.counts.tolist(),
    }
    return reps, merged_out, config.p_analytic


def _drop_config(p, seed):
    return DropConfig(float(p["L"]), int(p["drops"]), seed)


def _run_drops(method, p, seed, replicas, z):
    d_s, L = float(p["ds"]), float(p["L"])
    _drop_config(p, seed)
    if method == "needle":
        if not d_s > 0:
            raise ConfigError("ds", f"must be > 0, got {d_s}")
        analytic = analytic_crossing_p(d_s, L) if d_s <= L else None
        run = lambda cfg: needle_tally(d_s, cfg)
        estimate = lambda t: t.proportion_estimate(z, analytic)
    else:
        try:
            shape = make_shape(
                p["shape"], d_s, bend_deg=float(p["bend_deg"]), angle=float(p["arc_angle"])
            )
        except InvalidInputError as exc:
            raise ConfigError("shape", str(exc)) from None
        analytic = analytic_expected_crossings(shape.total_length, L)
        if int(p["drops"]) < 2:
            raise ConfigError("drops", "noodle estimates need at least 2 drops")
        run = lambda cfg: noodle_tally(shape, cfg)
        estimate = lambda t: t.mean_estimate(z, analytic)

    tallies = [run(_drop_config(p, replica_seed(seed, i))) for i in range(replicas)]
    reps = [
        {"replica": i, "seed": replica_seed(seed, i), **_record(estimate(t))}
        for i, t in enumerate(tallies)
    ]
    merged = sum(tallies, Tally())
    return reps, _record(estimate(merged)), analytic


def _run_method(method, p, seed, replicas, z, workers):
    if method == "walk":
        return _run_walk(p, seed, replicas, z, workers)
    return _run_drops(method, p, seed, replicas, z)


def _entry(method, reps, merged, analytic, parameter=None, value=None):
    return {
        "method": method,
        "parameter": parameter,
        "value": value,
        "analytic": analytic,
        "merged": merged,
        "replicas": reps,
    }


def run_experiment(config: ExperimentConfig) -> ResultEnvelope:
    t0 = time.perf_counter()
    p = config.params
    z = float(p.get("z", DEFAULT_Z))
    seeds = [replica_seed(config.seed, i) for i in range(config.replicas)]
    env = ResultEnvelope(config.experiment, config.echo(), seeds)
    args = (config.seed, config.replicas, z, config.workers)

    if config.experiment in ("walk", "needle", "noodle"):
        env.results.append(_entry(config.experiment, *_run_method(config.experiment, p, *args)))
    elif config.experiment == "compare":
        for method in ("walk", "needle", "noodle"):
            env.results.append(_entry(method, *_run_method(method, p, *args)))
    else:
        method, vary = p["method"], p["vary"]
        for value in p["values"]:
            point = dict(p, **{vary: value})
            env.results.append(_entry(method, *_run_method(method, point, *args), vary, value))

    env.duration_s = time.perf_counter() - t0
    return env


# ---------------------------------------------------------------- argument parsing


def _float_list(text: str) -> list[float]:
    return [float(t) for t in text.replace(";", ",").split(",") if t.strip()]


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=0, help="base seed; replica i uses seed + i")
    p.add_argument("--replicas", type=int, default=1)
    p.add_argument("--format", dest="output_format", choices=("json", "csv"), default="json")
    p.add_argument("--out", dest="output_path", default=None, help="output file (default stdout)")
    p.add_argument("--config", default=None, help="flat key = value file; flags override it")
    p.add_argument("--workers", type=int, default=1, help="threads for walk replicas")
    p.add_argument("--z", type=float, default=DEFAULT_Z, help="interval half-width in standard errors")


def _lengths(p: argparse.ArgumentParser, default_L: float) -> None:
    p.add_argument("--ds", type=float, default=1.0, help="step / needle / noodle length")
    p.add_argument("--spacing", "--room-l", dest="L", type=float, default=default_L,
                   help="line spacing, or room length for walks")


def _walk_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--room-b", type=float, default=None, help="room width (default: room length)")
    p.add_argument("--p-theta", type=float, default=0.0)
    p.add_argument("--steps", type=int, default=1_000_000)
    p.add_argument("--burn-in", type=int, default=None, help="default: 1%% of --steps")
    p.add_argument("--link-x", type=float, default=None, help="link abscissa (default: L/2)")
    p.add_argument("--angle-min", type=float, default=0.0)
    p.add_argument("--angle-max", type=float, default=TWO_PI)
    p.add_argument("--x0", type=float, default=None)
    p.add_argument("--y0", type=float, default=None)
    p.add_argument("--theta0", type=float, default=None)


def _drop_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--drops", type=int, default=1_000_000)


def _shape_args(p: argparse.ArgumentParser, default: str) -> None:
    p.add_argument("--shape", choices=SHAPE_KINDS, default=default)
    p.add_argument("--bend-deg", type=float, default=90.0, help="turn angle of the polyline V")
    p.add_argument("--arc-angle", type=float, default=math.pi / 2, help="angle spanned by an arc")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="buffon-walk",
        description="Link-crossing Monte Carlo: reflecting walks, Buffon's needle and noodle.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="experiment", required=True)

    walk = sub.add_parser("walk", help="random walk in a room, crossings of the link")
    _lengths(walk, 50.0)
    _walk_args(walk)

    needle = sub.add_parser("needle", help="Buffon's needle")
    _lengths(needle, 2.0)
    _drop_args(needle)

    noodle = sub.add_parser("noodle", help="Buffon's noodle (polyline thrown on the lattice)")
    _lengths(noodle, 2.0)
    _drop_args(noodle)
    _shape_args(noodle, "semicircle")

    compare = sub.add_parser("compare", help="walk, needle and noodle at matched d_s and L")
    _lengths(compare, 50.0)
    _walk_args(compare)
    _drop_args(compare)
    _shape_args(compare, "segment")

    sweep = sub.add_parser("sweep", help="vary d_s or L over a grid")
    sweep.add_argument("--method", choices=("needle", "noodle", "walk"), default="needle")
    sweep.add_argument("--vary", choices=("ds", "L", "spacing"), default="ds")
    sweep.add_argument("--values", type=_float_list, default=[], help="comma-separated grid")
    _lengths(sweep, 10.0)
    _walk_args(sweep)
    _drop_args(sweep)
    _shape_args(sweep, "segment")

    for p in (walk, needle, noodle, compare, sweep):
        _common(p)
    parser.subcommands = {"walk": walk, "needle": needle, "noodle": noodle, "compare": compare, "sweep": sweep}
    return parser


def read_config_file(path: str) -> dict[str, str]:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    values = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError("config", f"{path}:{lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.lstrip("-").replace("-", "_")
        values[_KEY_ALIASES.get(key, key)] = value
    return values


def parse_args(argv: Optional[list[str]] = None) -> ExperimentConfig:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        try:
            file_values = read_config_file(args.config)
        except OSError as exc:
            raise ConfigError("config", f"cannot read {args.config}: {exc.strerror}") from None
        sub = parser.subcommands[args.experiment]
        known = {a.dest for a in sub._actions}
        unknown = sorted(set(file_values) - known)
        if unknown:
            raise ConfigError(unknown[0], f"unknown key in {args.config}")
        # string defaults are run through each option's type by argparse
        sub.set_defaults(**file_values)
        args = parser.parse_args(argv)

    ns = vars(args)
    if ns.get("vary") == "spacing":
        ns["vary"] = "L"
    meta = ("experiment", "seed", "replicas", "output_format", "output_path", "config", "workers")
    params = {k: v for k, v in ns.items() if k not in meta}
    return ExperimentConfig(
        experiment=args.experiment,
        params=params,
        seed=args.seed,
        replicas=args.replicas,
        output_format=args.output_format,
        output_path=args.output_path,
        workers=args.workers,
    )


def main(argv: Optional[list[str]] = None) -> int:
    try:
        config = parse_args(argv)
        envelope = run_experiment(config)
    except ConfigError as exc:
        print(f"buffon-walk: invalid configuration: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_CONFIG
    try:
        emit(envelope, config.output_format, config.output_path)
    except OSError as exc:
        print(f"buffon-walk: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
