"""Command-line interface.

Commands: ``fit``, ``ci``, ``sweep``, ``coverage``, ``limitdist`` and
``replay`` (re-run the configuration echoed in a JSON artifact).

Exit codes: 0 success, 2 input error, 3 estimator failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .bootstrap import Method, Statistic, Target, bootstrap_ci_for, parse_method
from .core import Sample, check_k, fit_sorted
from .errors import EmptyFile, EstimationError, InputError, ParseError, TailbootError
from .limits import DEFAULT_GRID, limit_law_sample
from .models import ModelSpec
from .rng import default_seed
from .study import StudyConfig, coverage_study, k_sweep
from .tailfuncs import estimate_high_quantile, estimate_tail_probability

EXIT_OK, EXIT_INPUT, EXIT_ESTIMATION = 0, 2, 3
COMMANDS = ("fit", "ci", "sweep", "coverage", "limitdist")


# -- input -------------------------------------------------------------------


def _as_float(token: str) -> float | None:
    try:
        return float(token)
    except ValueError:
        return None


def load_csv(path: str | Path) -> Sample:
    """Read one numeric column (the first field of each row).

    A single header line is skipped when its first token is not numeric.
    Blank lines are ignored. Raises :class:`ParseError` with the 1-based line
    number of the first unparsable or non-finite entry, :class:`EmptyFile`
    when there is no data.
    """
    text = Path(path).read_text(encoding="utf-8-sig")
    values: list[float] = []
    seen_first = False
    for lineno, row in enumerate(csv.reader(io.StringIO(text)), start=1):
        if not row or not row[0].strip():
            continue
        token = row[0].strip()
        x = _as_float(token)
        if not seen_first:
            seen_first = True
            if x is None:
                continue  # header
        if x is None:
            raise ParseError(lineno, f"not a number: {token!r}")
        if not math.isfinite(x):
            raise ParseError(lineno, f"non-finite value: {token!r}")
        values.append(x)
    if not values:
        raise EmptyFile(f"{path}: no data rows")
    # short files load; each command's k-range check decides whether n suffices
    return Sample(values, min_size=1)


# -- configuration -------------------------------------------------------------


@dataclass
class RunConfig:
    command: str
    input_path: str | None = None
    seed: int = field(default_factory=default_seed)
    output_format: str = "json"
    k: list = field(default_factory=list)
    target: str | None = None
    x_target: float | None = None
    p_target: float | None = None
    B: int = 1000
    method: str = "percentile"
    methods: list = field(default_factory=lambda: ["efron", "asymptotic"])
    level: float = 0.95
    scaling: str = "hat"
    replicate_scaling: bool = False
    studentized: bool = True
    normalizer: str = "replicate"
    model: str | None = None
    n: int | None = None
    npn: float | None = None
    reps: int = 1000
    gamma: float | None = None
    paths: int = 20000
    grid: int = DEFAULT_GRID

    def echo(self) -> dict:
        return asdict(self)

    @classmethod
    def from_echo(cls, data: dict) -> "RunConfig":
        names = {f.name for f in fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise InputError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)


def parse_k(text: str) -> list[int]:
    """``"100"``, ``"50,100,150"`` or an inclusive range ``"20:300:5"``."""
    out: list[int] = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        try:
            if ":" in part:
                bits = [int(b) for b in part.split(":")]
                lo, hi = bits[0], bits[1]
                step = bits[2] if len(bits) > 2 else 1
                if step <= 0:
                    raise ValueError
                out.extend(range(lo, hi + 1, step))
            else:
                out.append(int(part))
        except ValueError:
            raise InputError(f"bad k specification {text!r}") from None
    if not out:
        raise InputError("no k given")
    return out


def _require(cfg: RunConfig, *names: str) -> None:
    missing = [n for n in names if getattr(cfg, n) in (None, [], "")]
    if missing:
        flags = ", ".join("--" + n.replace("_", "-").replace("input-path", "input") for n in missing)
        raise InputError(f"{cfg.command} requires {flags}")


# -- commands ------------------------------------------------------------------


def _statistic(cfg: RunConfig) -> Statistic:
    target = cfg.target
    if target is None:
        target = "tail_prob" if cfg.x_target is not None else ("quantile" if cfg.p_target is not None else "gamma")
    target = Target(target)
    if target is Target.TAIL_PROB:
        _require(cfg, "x_target")
        return Statistic.tail_prob(cfg.x_target)
    if target is Target.HIGH_QUANTILE:
        _require(cfg, "p_target")
        return Statistic.high_quantile(cfg.p_target)
    return Statistic(target)


def _error_text(exc: Exception) -> str:
    return f"{type(exc).__name__}: {exc}"


def _cmd_fit(cfg: RunConfig) -> list[dict]:
    _require(cfg, "input_path", "k")
    sample = load_csv(cfg.input_path)
    rows = []
    for k in cfg.k:
        check_k(k, sample.n)
        row = {"k": k}
        try:
            fit = fit_sorted(sample.sorted_values, k)
        except EstimationError as exc:
            row["error"] = _error_text(exc)
            rows.append(row)
            continue
        row.update(fit.as_dict())
        if cfg.x_target is not None:
            row.update(estimate_tail_probability(fit, cfg.x_target).as_dict())
        if cfg.p_target is not None:
            row.update(estimate_high_quantile(fit, cfg.p_target).as_dict())
        row["error"] = None
        rows.append(row)
    return rows


def _cmd_ci(cfg: RunConfig) -> list[dict]:
    _require(cfg, "input_path", "k")
    sample = load_csv(cfg.input_path)
    stat = _statistic(cfg)
    method = parse_method(cfg.method)
    if stat.target is not Target.TAIL_PROB and method not in (Method.EFRON, Method.PERCENTILE):
        raise InputError(f"--method {method.value} is only available for --target tail_prob")
    rows = []
    for k in cfg.k:
        check_k(k, sample.n)
        row = {"k": k, "target": stat.target.value, "argument": stat.argument}
        try:
            if method is Method.ASYMPTOTIC:
                ci = bootstrap_ci_for(stat, method, sample, k, cfg.B, cfg.seed, cfg.level)
            else:
                ci = bootstrap_ci_for(
                    stat,
                    method,
                    sample,
                    k,
                    cfg.B,
                    cfg.seed,
                    cfg.level,
                    studentized=cfg.studentized,
                    scaling=cfg.scaling,
                    replicate_scaling=cfg.replicate_scaling,
                    normalizer=cfg.normalizer,
                )
        except EstimationError as exc:
            row["error"] = _error_text(exc)
            rows.append(row)
            continue
        row.update(ci.as_dict())
        row["error"] = None
        rows.append(row)
    return rows


def _cmd_sweep(cfg: RunConfig, workers: int) -> list[dict]:
    _require(cfg, "input_path", "x_target", "k")
    sample = load_csv(cfg.input_path)
    return k_sweep(
        sample,
        cfg.x_target,
        cfg.k,
        cfg.B,
        cfg.level,
        cfg.seed,
        method=cfg.method,
        workers=workers,
        studentized=cfg.studentized,
        replicate_scaling=cfg.replicate_scaling,
    )


def _cmd_coverage(cfg: RunConfig, workers: int) -> list[dict]:
    _require(cfg, "model", "n", "npn", "k")
    try:
        model = ModelSpec.parse(cfg.model)
        study = StudyConfig(
            model=model,
            n=cfg.n,
            np_n=cfg.npn,
            k_grid=tuple(cfg.k),
            B=cfg.B,
            mc_reps=cfg.reps,
            level=cfg.level,
            methods=tuple(cfg.methods),
            master_seed=cfg.seed,
            scaling=cfg.scaling,
            replicate_scaling=cfg.replicate_scaling,
            studentized=cfg.studentized,
        )
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    report = coverage_study(study, workers=workers)
    return [
        {"model": model.label, "n": cfg.n, "npn": cfg.npn, "p_n": study.p_n, "x_n": report.x_n, **row}
        for row in report.rows()
    ]


def _cmd_limitdist(cfg: RunConfig, workers: int) -> list[dict]:
    _require(cfg, "gamma")
    if cfg.grid < 2 or cfg.paths < 0:
        raise InputError("need --grid >= 2 and --paths >= 0")
    draws = limit_law_sample(cfg.gamma, cfg.paths, cfg.grid, cfg.seed, workers=workers)
    return [{"gamma": cfg.gamma, **row} for row in draws.summary()]


def execute(cfg: RunConfig, workers: int = 1) -> list[dict]:
    if cfg.command not in COMMANDS:
        raise InputError(f"unknown command {cfg.command!r}")
    try:
        parse_method(cfg.method)
        for m in cfg.methods:
            parse_method(m)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    if cfg.command == "fit":
        return _cmd_fit(cfg)
    if cfg.command == "ci":
        return _cmd_ci(cfg)
    if cfg.command == "sweep":
        return _cmd_sweep(cfg, workers)
    if cfg.command == "coverage":
        return _cmd_coverage(cfg, workers)
    return _cmd_limitdist(cfg, workers)


# -- output --------------------------------------------------------------------


def _clean(value):
    """JSON-safe copy: non-finite floats become the strings 'inf', '-inf', 'nan'."""
    if isinstance(value, dict):
        return {str(k): _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        x = float(value)
        if math.isfinite(x):
            return x
        return "nan" if math.isnan(x) else ("inf" if x > 0 else "-inf")
    return value


def _csv_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, str):
        return value
    # repr of a float is the shortest string that round-trips exactly
    return json.dumps(value)


def render(cfg: RunConfig, results: list[dict]) -> str:
    results = _clean(results)
    failed = sum(1 for r in results if r.get("error"))
    if cfg.output_format == "csv":
        columns: list[str] = []
        for r in results:
            for key in r:
                if key not in columns:
                    columns.append(key)
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(columns)
        for r in results:
            writer.writerow([_csv_cell(r.get(c)) for c in columns])
        return buf.getvalue()
    artifact = {
        "command": cfg.command,
        "version": __version__,
        "config": _clean(cfg.echo()),
        "results": results,
        "diagnostics": {"rows": len(results), "failed_rows": failed},
    }
    return json.dumps(artifact, indent=2) + "\n"


def run(cfg: RunConfig, workers: int = 1, out=None) -> int:
    """Execute ``cfg``, write the artifact to ``out`` (default stdout), return the exit code."""
    out = sys.stdout if out is None else out
    try:
        results = execute(cfg, workers)
    except InputError as exc:
        print(json.dumps({"error": _error_text(exc), "exit": EXIT_INPUT}), file=sys.stderr)
        return EXIT_INPUT
    except EstimationError as exc:
        print(json.dumps({"error": _error_text(exc), "exit": EXIT_ESTIMATION}), file=sys.stderr)
        return EXIT_ESTIMATION
    except (OSError, UnicodeDecodeError, ValueError) as exc:
        # invalid parameter combinations rejected by the library
        print(json.dumps({"error": _error_text(exc), "exit": EXIT_INPUT}), file=sys.stderr)
        return EXIT_INPUT
    out.write(render(cfg, results))
    if results and all(r.get("error") for r in results):
        return EXIT_ESTIMATION
    return EXIT_OK


# -- argument parsing ------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tailboot",
        description="Moment tail estimators with full-sample bootstrap confidence intervals.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="master seed (default: $TAILBOOT_SEED or a fixed constant)")
    common.add_argument("--format", dest="output_format", choices=("json", "csv"), default="json")
    common.add_argument("--output", "-o", default=None, help="write the artifact here instead of stdout")
    common.add_argument("--workers", type=int, default=1, help="worker threads; never changes the output")

    boot = argparse.ArgumentParser(add_help=False)
    boot.add_argument("--B", type=int, default=1000, help="bootstrap replicates (default 1000)")
    boot.add_argument("--level", type=float, default=0.95)
    boot.add_argument("--scaling", choices=("hat", "true"), default="hat")
    boot.add_argument("--replicate-scaling", action="store_true", help="per-replicate w(gamma*, d*) in the pivot")
    boot.add_argument("--literal-t", dest="studentized", action="store_false", help="t interval with constant sigma")

    data = argparse.ArgumentParser(add_help=False)
    data.add_argument("--input", dest="input_path", required=True, help="single-column CSV")
    data.add_argument("--k", type=parse_k, required=True, help="k, a list 50,100 or a range 20:300:5")

    p = sub.add_parser("fit", parents=[common, data], help="moment estimates for each k")
    p.add_argument("--x-target", type=float)
    p.add_argument("--p-target", type=float)

    p = sub.add_parser("ci", parents=[common, data, boot], help="confidence interval for a tail parameter")
    p.add_argument("--target", choices=[t.value for t in Target])
    p.add_argument("--x-target", type=float)
    p.add_argument("--p-target", type=float)
    p.add_argument("--method", default="percentile", help="efron | percentile | basic | t | asymptotic")
    p.add_argument("--normalizer", choices=("replicate", "base"), default="replicate")

    p = sub.add_parser("sweep", parents=[common, data, boot], help="tail probability and intervals across k")
    p.add_argument("--x-target", type=float, required=True)
    p.add_argument("--method", default="percentile")

    p = sub.add_parser("coverage", parents=[common, boot], help="Monte-Carlo coverage study")
    p.add_argument("--model", required=True, help="e.g. frechet:2, t:4, exp:5, normal, beta:2,10")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--npn", type=float, required=True, help="n * p_n")
    p.add_argument("--k", type=parse_k, required=True)
    p.add_argument("--reps", type=int, default=1000)
    p.add_argument("--methods", default="efron,asymptotic")

    p = sub.add_parser("limitdist", parents=[common], help="Monte-Carlo law of the limiting Wiener functionals")
    p.add_argument("--gamma", type=float, required=True)
    p.add_argument("--paths", type=int, default=20000)
    p.add_argument("--grid", type=int, default=DEFAULT_GRID)

    p = sub.add_parser("replay", help="re-run the config echoed in a JSON artifact")
    p.add_argument("artifact")
    p.add_argument("--output", "-o", default=None)
    p.add_argument("--workers", type=int, default=1)
    return parser


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    if ns.command == "replay":
        try:
            data = json.loads(Path(ns.artifact).read_text(encoding="utf-8"))
            return RunConfig.from_echo(data["config"])
        except (OSError, ValueError, KeyError, TypeError) as exc:
            raise InputError(f"cannot replay {ns.artifact}: {exc}") from exc
    cfg_fields = {f.name for f in fields(RunConfig)}
    kwargs = {k: v for k, v in vars(ns).items() if k in cfg_fields and v is not None}
    if "methods" in kwargs and isinstance(kwargs["methods"], str):
        kwargs["methods"] = [m.strip() for m in kwargs["methods"].split(",") if m.strip()]
    return RunConfig(**kwargs)


def main(argv: Sequence[str] | None = None) -> int:
    ns = build_parser().parse_args(argv)
    try:
        cfg = config_from_args(ns)
    except TailbootError as exc:
        print(json.dumps({"error": _error_text(exc), "exit": EXIT_INPUT}), file=sys.stderr)
        return EXIT_INPUT
    workers = getattr(ns, "workers", 1) or 1
    if ns.output:
        with open(ns.output, "w", encoding="utf-8", newline="") as fh:
            return run(cfg, workers, fh)
    return run(cfg, workers)


if __name__ == "__main__":
    sys.exit(main())
