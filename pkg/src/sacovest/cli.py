"""Experiment harness: JSON config + flag overrides, run orchestration, reports.

Commands
  run            one SA run; emits trace.csv, sigma_hat.csv, summary.json
  diagnose       like run, plus shadow-decay fit and ground-truth metadata
  rate           error-vs-n study over n_grid; emits rate.csv + summary.json
  coverage       per-replication confidence intervals; coverage.csv + summary.json
  list-problems  print the problem zoo with default parameters

All floats in CSV files carry 17 significant digits and JSON uses shortest
round-trip floats, so repeated invocations with the same config are
byte-identical; replication aggregation is ordered by index, so results do
not depend on the worker count.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import IoError, ParseError, SacovestError, ValidationError
from .inference import confidence_interval, rate_fit
from .numerics import operator_norm
from .problems import PROBLEM_IDS, make_problem
from .sa_engine import RunConfig, replicate, run
from .schedules import BatchSchedule, StepSchedule, validate_pair

_COMMANDS = ("run", "rate", "coverage", "diagnose", "list-problems")
_SEED_MIX = 0x9E3779B97F4A7C15
_MASK64 = (1 << 64) - 1


@dataclass
class ExperimentConfig:
    command: str
    problem: str = "l1quad"
    problem_overrides: dict = field(default_factory=dict)
    n: int = 1000
    n_grid: list | None = None
    reps: int = 1
    seed: int = 0
    alpha: float = 0.51
    beta: float | None = None          # defaults to 2/(1-alpha)
    batch_c: float = 1.0
    eta: float = 0.5
    k_s: int = 0
    delta: float = 0.5
    level: float = 0.95
    burn_in: int = 0
    diagnostics_stride: int | None = None   # defaults to max(1, n // 512)
    direction: list | str = "tangent"
    out_dir: str = "sacovest_out"
    threads: int = 1


def load_config(path: str | None = None, overrides: dict | None = None) -> ExperimentConfig:
    """Read a flat JSON config, apply flag overrides, validate everything."""
    raw: dict = {}
    if path is not None:
        try:
            with open(path, "r", encoding="utf-8") as fh:
                raw = json.load(fh)
        except OSError as exc:
            raise ParseError(f"cannot read config {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ParseError(f"{path}: line {exc.lineno} col {exc.colno}: {exc.msg}") from exc
        if not isinstance(raw, dict):
            raise ParseError(f"{path}: top level must be a JSON object")
    merged = dict(raw)
    for key, value in (overrides or {}).items():
        if value is not None:
            merged[key] = value

    known = set(ExperimentConfig.__dataclass_fields__)
    unknown = set(merged) - known
    if unknown:
        raise ValidationError(f"unknown config keys: {', '.join(sorted(unknown))}")
    if "command" not in merged:
        raise ValidationError("config must specify a command")
    cfg = ExperimentConfig(**merged)

    if cfg.command not in _COMMANDS:
        raise ValidationError(f"unknown command {cfg.command!r}; valid: {', '.join(_COMMANDS)}")
    if cfg.problem not in PROBLEM_IDS:
        raise ValidationError(
            f"unknown problem {cfg.problem!r}; valid ids: {', '.join(sorted(PROBLEM_IDS))}")
    if cfg.beta is None:
        cfg.beta = 2.0 / (1.0 - cfg.alpha)
    if not 0.5 < cfg.alpha < 1.0:
        raise ValidationError(f"alpha must lie in (1/2, 1), got {cfg.alpha}")
    if not cfg.beta > 1.0 / (1.0 - cfg.alpha):
        raise ValidationError(
            f"beta must exceed 1/(1-alpha) = {1.0 / (1.0 - cfg.alpha):.6g}, got {cfg.beta}")
    if cfg.batch_c <= 0:
        raise ValidationError(f"batch_c must be positive, got {cfg.batch_c}")
    if cfg.eta <= 0:
        raise ValidationError(f"eta must be positive, got {cfg.eta}")
    if cfg.n < 0:
        raise ValidationError(f"n must be nonnegative, got {cfg.n}")
    if cfg.reps < 1:
        raise ValidationError(f"reps must be >= 1, got {cfg.reps}")
    if cfg.threads < 1:
        raise ValidationError(f"threads must be >= 1, got {cfg.threads}")
    if not 0.0 < cfg.level < 1.0:
        raise ValidationError(f"level must lie in (0, 1), got {cfg.level}")
    if cfg.k_s < 0 or cfg.k_s > cfg.n:
        raise ValidationError(f"k_s must lie in [0, n], got {cfg.k_s}")
    if cfg.delta <= 0:
        raise ValidationError(f"delta must be positive, got {cfg.delta}")
    if cfg.n_grid is not None:
        grid = list(cfg.n_grid)
        if len(grid) < 1 or any(int(g) <= 0 for g in grid):
            raise ValidationError("n_grid entries must be positive integers")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ValidationError("n_grid must be strictly increasing")
        cfg.n_grid = [int(g) for g in grid]
    if cfg.command == "rate" and cfg.n_grid is None:
        raise ValidationError("rate command requires n_grid")
    if not isinstance(cfg.problem_overrides, dict):
        raise ValidationError("problem_overrides must be an object")
    return cfg


def _build(cfg: ExperimentConfig, n: int | None = None, seed: int | None = None):
    problem = make_problem(cfg.problem, **cfg.problem_overrides)
    step = StepSchedule(eta=cfg.eta, alpha=cfg.alpha)
    batch = BatchSchedule(c=cfg.batch_c, beta=cfg.beta)
    validate_pair(step, batch)
    n_eff = cfg.n if n is None else n
    stride = cfg.diagnostics_stride or max(1, n_eff // 512)
    rc = RunConfig(
        n=n_eff, seed=cfg.seed if seed is None else seed, step=step, batch=batch,
        k_s=min(cfg.k_s, n_eff), delta=cfg.delta, diagnostics_stride=stride,
        burn_in=cfg.burn_in)
    return problem, rc


def _study_direction(problem, cfg: ExperimentConfig) -> np.ndarray:
    if isinstance(cfg.direction, str):
        if cfg.direction != "tangent":
            raise ValidationError(f"direction must be 'tangent' or a vector, got {cfg.direction!r}")
        u = problem.ground_truth().tangent_basis
        if u.shape[1] == 0:
            raise ValidationError("problem has an empty tangent space; give an explicit direction")
        return u[:, 0].copy()
    v = np.asarray(cfg.direction, dtype=float)
    if v.shape != (problem.dim,) or not np.any(v):
        raise ValidationError("direction must be a nonzero vector of the problem dimension")
    return v


def _fmt(x) -> str:
    return format(float(x), ".17g")


def _write_text(path, text: str) -> None:
    try:
        path.write_text(text, encoding="utf-8")
    except OSError as exc:
        raise IoError(f"{path}: {exc}") from exc


def _write_csv(path, header: list[str], rows) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(c) if isinstance(c, float) else str(c) for c in row))
    _write_text(path, "\n".join(lines) + "\n")


def _write_summary(path, doc: dict) -> None:
    _write_text(path, json.dumps(_jsonable(doc), sort_keys=True, indent=2) + "\n")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return obj


def _mix_seed(seed: int, index: int) -> int:
    return (seed + (index + 1) * _SEED_MIX) & _MASK64


def _sigma_error(problem, sigma_hat) -> float:
    gt = problem.ground_truth()
    return operator_norm(sigma_hat - gt.sigma_limit)


def _cmd_list_problems() -> int:
    doc = {pid: cls().params() for pid, cls in sorted(PROBLEM_IDS.items())}
    print(json.dumps(_jsonable(doc), sort_keys=True, indent=2))
    return 0


def _cmd_run(cfg: ExperimentConfig, out_dir) -> int:
    problem, rc = _build(cfg)
    result = run(problem, rc)
    gt = problem.ground_truth()
    _write_csv(out_dir / "trace.csv", ["k", "dist_to_star_sq", "shadow_sq_dist"],
               [(int(k), float(d), float(s)) for (k, d), (_, s)
                in zip(result.dist_to_star, result.shadow_sq_dist)])
    _write_csv(out_dir / "sigma_hat.csv", [f"c{j}" for j in range(problem.dim)],
               [tuple(float(v) for v in row) for row in result.sigma_hat])
    summary = {
        "command": cfg.command,
        "config": asdict(cfg),
        "tau": result.tau,
        "containment": result.containment,
        "x_bar": result.x_bar,
        "x_final": result.x_final,
        "sigma_truth_mode": gt.sigma_mode,
        "opnorm_error": _sigma_error(problem, result.sigma_hat),
    }
    if cfg.command == "diagnose":
        pos = [(int(k), float(v)) for k, v in result.shadow_sq_dist if v > 0 and k >= 1]
        if len(pos) >= 2:
            fit = rate_fit(pos)
            summary["shadow_slope"] = fit.slope
            summary["shadow_r_squared"] = fit.r_squared
        else:
            summary["shadow_slope"] = None
            summary["shadow_r_squared"] = None
        summary["active_index_set"] = sorted(gt.active_index_set)
    _write_summary(out_dir / "summary.json", summary)
    return 0


def _cmd_rate(cfg: ExperimentConfig, out_dir) -> int:
    rows = []
    mean_points = []
    for j, n in enumerate(cfg.n_grid):
        problem, rc = _build(cfg, n=n, seed=_mix_seed(cfg.seed, j))
        results = replicate(problem, rc, cfg.reps, threads=cfg.threads)
        errs = [_sigma_error(problem, res.sigma_hat) for res in results]
        rows.extend((n, rep, float(err)) for rep, err in enumerate(errs))
        mean_points.append((n, float(np.mean(errs))))
    _write_csv(out_dir / "rate.csv", ["n", "rep", "opnorm_error"], rows)
    fit = rate_fit(mean_points)
    problem, _ = _build(cfg)
    _write_summary(out_dir / "summary.json", {
        "command": cfg.command,
        "config": asdict(cfg),
        "mean_errors": {str(n): e for n, e in mean_points},
        "rate_slope": fit.slope,
        "rate_intercept": fit.intercept,
        "rate_r_squared": fit.r_squared,
        "sigma_truth_mode": problem.ground_truth().sigma_mode,
    })
    return 0


def _cmd_coverage(cfg: ExperimentConfig, out_dir) -> int:
    problem, rc = _build(cfg)
    v = _study_direction(problem, cfg)
    gt = problem.ground_truth()
    truth = float(v @ gt.x_star)
    results = replicate(problem, rc, cfg.reps, threads=cfg.threads)
    rows = []
    hits = 0
    for rep, res in enumerate(results):
        ci = confidence_interval(res.x_bar, res.sigma_hat, rc.n, v, cfg.level)
        covered = ci.contains(truth)
        hits += covered
        rows.append((rc.n, rep, _sigma_error(problem, res.sigma_hat),
                     float(ci.lo), float(ci.hi), int(covered)))
    _write_csv(out_dir / "coverage.csv",
               ["n", "rep", "error", "ci_lo", "ci_hi", "covered"], rows)
    _write_summary(out_dir / "summary.json", {
        "command": cfg.command,
        "config": asdict(cfg),
        "direction": v,
        "true_value": truth,
        "coverage": hits / cfg.reps,
        "sigma_truth_mode": gt.sigma_mode,
    })
    return 0


def _parse_args(argv):
    parser = argparse.ArgumentParser(prog="sacovest", add_help=True)
    parser.add_argument("command", choices=_COMMANDS)
    parser.add_argument("--config", default=None)
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--out-dir", dest="out_dir", default=None)
    parser.add_argument("--threads", type=int, default=None)
    parser.add_argument("--n", type=int, default=None)
    parser.add_argument("--reps", type=int, default=None)
    parser.add_argument("--problem", default=None)
    return parser.parse_args(argv)


def main(argv=None) -> int:
    try:
        args = _parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 1
    try:
        overrides = {"command": args.command, "seed": args.seed, "out_dir": args.out_dir,
                     "threads": args.threads, "n": args.n, "reps": args.reps,
                     "problem": args.problem}
        cfg = load_config(args.config, overrides)
        if cfg.command == "list-problems":
            return _cmd_list_problems()
        from pathlib import Path

        out_dir = Path(cfg.out_dir)
        try:
            out_dir.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise IoError(f"{out_dir}: {exc}") from exc
        if cfg.command in ("run", "diagnose"):
            return _cmd_run(cfg, out_dir)
        if cfg.command == "rate":
            return _cmd_rate(cfg, out_dir)
        return _cmd_coverage(cfg, out_dir)
    except (ParseError, ValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except SacovestError as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
