"""Command-line harness: run one solver or compare several on instance suites.

Examples
--------
::

    python3 -m scbadmm run --instance qsdp:n=30,m_E=20,rank_B=5 --seed 3 --out out/
    python3 -m scbadmm compare --instance qsdp:n=30,m_E=20,rank_B=5 \\
        --seeds 0-19 --solvers scb,direct_admm --jobs 4 --out cmp/
"""

from __future__ import annotations

import argparse
import csv
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence

import yaml

from ._loop import SolveResult, SolverConfig
from .baseline import direct_admm_solve
from .instances import (
    InstanceFormatError,
    build_biq,
    build_ncm,
    build_random_qsdp,
    load_sparse_instance,
    random_block_qp,
    scalar_qsdp,
)
from .model import BlockProblem, ConfigurationError
from .scb import scb_spadmm_solve
from .solver2 import spadmm2_solve

logger = logging.getLogger("scbadmm")

SOLVERS = {"scb": scb_spadmm_solve, "direct_admm": direct_admm_solve, "spadmm2": spadmm2_solve}
LOG_HEADER = ["iter", "eta", "eta_P", "eta_D", "eta_gap", "obj_P", "obj_D", "elapsed_s"]
SUMMARY_HEADER = [
    "instance", "seed", "solver", "status", "iterations",
    "eta", "eta_P", "eta_D", "eta_gap", "obj_P", "obj_D",
]
PROFILE_HEADER = ["ratio", "fraction", "solver"]
EXIT_OK, EXIT_ERROR, EXIT_UNSOLVED = 0, 1, 2
CONFIG_KEYS = ("sigma", "tau", "tol", "max_iter", "log_every", "check_every")


@dataclass
class RunSpec:
    """One solver run: instance source, solver, configuration and output directory."""

    instance: str
    solver: str = "scb"
    seed: int = 0
    config: SolverConfig = field(default_factory=SolverConfig)
    out: Optional[str] = None
    label: Optional[str] = None

    @property
    def name(self) -> str:
        return self.label or self.solver


# --- instances --------------------------------------------------------------


def _parse_params(text: str) -> Dict[str, str]:
    out = {}
    for item in filter(None, text.split(",")):
        if "=" not in item:
            raise ValueError(f"instance parameter {item!r} is not key=value")
        k, v = item.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def _ints(text: str) -> List[int]:
    return [int(t) for t in text.split("x")] if text else []


def build_problem(source: str, seed: int = 0) -> BlockProblem:
    """Build a problem from an instance string.

    ``qsdp:n=..,m_E=..,rank_B=..``, ``ncm:n=..,alpha=..,norm=frobenius|spectral``,
    ``biq:path=..[,rank_B=..]``, ``scalar``, ``qp2:m=..,f_dim=..,g_dim=..``,
    ``qp:m=..,f_dim=..,theta=2x2,g_dim=..,phi=2`` or the path of a sparse
    instance file (read as a binary quadratic relaxation).
    """
    kind, _, rest = source.partition(":")
    if kind not in ("qsdp", "ncm", "biq", "scalar", "qp2", "qp") and os.path.exists(source):
        kind, rest = "biq", f"path={source}"
    p = _parse_params(rest)
    try:
        if kind == "scalar":
            return scalar_qsdp().problem()
        if kind == "qsdp":
            return build_random_qsdp(int(p.get("n", 30)), int(p.get("m_E", 20)),
                                     int(p.get("rank_B", 5)), seed).problem()
        if kind == "ncm":
            return build_ncm(int(p.get("n", 20)), float(p.get("alpha", 0.1)),
                             p.get("norm", "frobenius"), seed).problem()
        if kind == "biq":
            Q, c = load_sparse_instance(p["path"])
            return build_biq(Q, c, int(p.get("rank_B", 0)), seed).problem()
        if kind == "qp2":
            return random_block_qp(int(p.get("m", 4)), int(p.get("f_dim", 3)),
                                   g_dim=int(p.get("g_dim", 3)), seed=seed)
        if kind == "qp":
            g = p.get("g_dim")
            return random_block_qp(int(p.get("m", 4)), int(p.get("f_dim", 3)),
                                   _ints(p.get("theta", "")), None if g is None else int(g),
                                   _ints(p.get("phi", "")), seed=seed)
    except KeyError as exc:
        raise ValueError(f"instance {source!r} is missing parameter {exc}") from None
    raise ValueError(f"unknown instance {source!r}")


# --- single runs ------------------------------------------------------------


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def log_rows(result: SolveResult) -> List[list]:
    rows = []
    for rep in result.trace:
        rows.append([rep.iter, rep.eta, rep.eta_P, rep.eta_dual, rep.eta_gap,
                     rep.obj_P, rep.obj_D, rep.elapsed_s])
    return rows


def summary_row(spec: RunSpec, result: SolveResult) -> list:
    rep = result.final_report
    return [spec.instance, spec.seed, spec.name, result.status, result.iterations,
            rep.eta, rep.eta_P, rep.eta_dual, rep.eta_gap, rep.obj_P, rep.obj_D]


def _write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(v) for v in r])


def execute(spec: RunSpec) -> SolveResult:
    """Build the instance of ``spec`` and run its solver (instance build not timed)."""
    if spec.solver not in SOLVERS:
        raise ValueError(f"unknown solver {spec.solver!r}")
    problem = build_problem(spec.instance, spec.seed)
    return SOLVERS[spec.solver](problem, spec.config)


def run(spec: RunSpec) -> int:
    """Run one spec and write ``log.csv`` and ``summary.csv``; return the exit code."""
    result = execute(spec)
    if spec.out:
        os.makedirs(spec.out, exist_ok=True)
        _write_csv(os.path.join(spec.out, "log.csv"), LOG_HEADER, log_rows(result))
        _write_csv(os.path.join(spec.out, "summary.csv"), SUMMARY_HEADER, [summary_row(spec, result)])
    rep = result.final_report
    print(f"{spec.name}: {result.status} after {result.iterations} iterations, "
          f"eta={rep.eta:.3e}, wall={result.wall_time:.2f}s")
    return EXIT_OK if result.converged else EXIT_UNSOLVED


# --- comparisons ------------------------------------------------------------


def _execute_row(spec: RunSpec):
    try:
        res = execute(spec)
    except Exception as exc:  # propagated after partial results are written
        return spec, None, f"{type(exc).__name__}: {exc}"
    return spec, (summary_row(spec, res), res.iterations, res.wall_time, res.converged), None


def performance_profile(costs: Dict[str, Sequence[float]]) -> List[tuple]:
    """Performance-profile points ``(ratio, fraction, solver)``.

    ``costs[solver][k]`` is the cost on problem ``k`` (``inf`` if unsolved).
    A point ``(x, y)`` means the solver handles a fraction ``y`` of the
    problems within ``x`` times the best cost on each.
    """
    names = list(costs)
    n_prob = len(costs[names[0]]) if names else 0
    ratios = {s: [] for s in names}
    for k in range(n_prob):
        best = min(costs[s][k] for s in names)
        for s in names:
            c = costs[s][k]
            if math.isfinite(c) and math.isfinite(best):
                ratios[s].append(c / best if best > 0 else 1.0)
            else:
                ratios[s].append(math.inf)
    points = []
    for s in names:
        finite = sorted(r for r in ratios[s] if math.isfinite(r))
        for i, r in enumerate(finite):
            if i + 1 < len(finite) and finite[i + 1] == r:
                continue
            points.append((r, (i + 1) / n_prob, s))
    return points


def compare(specs: Sequence[RunSpec], out: Optional[str] = None, jobs: int = 1,
            metric: str = "iterations") -> int:
    """Paired runs with a per-problem table and performance-profile data.

    Problems are identified by ``(instance, seed)``.  Writes ``summary.csv``
    (one row per run), ``table.csv`` (one row per problem with each solver's
    iterations and time) and ``profile.csv``.
    """
    labels = []
    for s in specs:
        if s.name not in labels:
            labels.append(s.name)
    if len(labels) < 2:
        raise ValueError("compare needs at least two distinct solver labels")
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            outcomes = list(ex.map(_execute_row, specs))
    else:
        outcomes = [_execute_row(s) for s in specs]
    problems = []
    for s in specs:
        key = (s.instance, s.seed)
        if key not in problems:
            problems.append(key)
    cell = {}
    errors = []
    for spec, data, err in outcomes:
        if err is not None:
            errors.append(f"{spec.name} on {spec.instance} seed {spec.seed}: {err}")
            continue
        cell[(spec.instance, spec.seed, spec.name)] = data
    summary = [d[0] for d in (cell.get((i, sd, l)) for i, sd in problems for l in labels) if d]
    table = []
    costs = {l: [] for l in labels}
    for inst, sd in problems:
        row = [inst, sd]
        for l in labels:
            d = cell.get((inst, sd, l))
            if d is None:
                row += ["", "", "error"]
                costs[l].append(math.inf)
                continue
            _, it, wall, ok = d
            row += [it, wall, d[0][3]]
            cost = it if metric == "iterations" else wall
            costs[l].append(float(cost) if ok else math.inf)
        table.append(row)
    profile = performance_profile(costs)
    if out:
        os.makedirs(out, exist_ok=True)
        _write_csv(os.path.join(out, "summary.csv"), SUMMARY_HEADER, summary)
        head = ["instance", "seed"]
        for l in labels:
            head += [f"{l}_iter", f"{l}_time", f"{l}_status"]
        _write_csv(os.path.join(out, "table.csv"), head, table)
        _write_csv(os.path.join(out, "profile.csv"), PROFILE_HEADER, profile)
    for row in table:
        print(" | ".join(_fmt(v) for v in row))
    if errors:
        for e in errors:
            print(f"error: {e}", file=sys.stderr)
        return EXIT_ERROR
    solved_all = all(math.isfinite(c) for l in labels for c in costs[l])
    return EXIT_OK if solved_all else EXIT_UNSOLVED


# --- argument handling ------------------------------------------------------


def _seeds(text: str) -> List[int]:
    out = []
    for part in text.split(","):
        if "-" in part:
            a, b = part.split("-")
            out.extend(range(int(a), int(b) + 1))
        elif part:
            out.append(int(part))
    return out


def _load_spec_file(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        data = yaml.safe_load(fh) or {}
    if not isinstance(data, dict):
        raise ValueError(f"spec file {path} must hold a mapping")
    return data


def _merged(args, keys) -> dict:
    """Spec-file values overridden by explicitly given flags."""
    merged = _load_spec_file(args.spec) if args.spec else {}
    merged = {k.replace("-", "_"): v for k, v in merged.items()}
    for k in keys:
        v = getattr(args, k, None)
        if v is not None:
            merged[k] = v
    return merged


def _config(d: dict) -> SolverConfig:
    kw = {k: d[k] for k in CONFIG_KEYS if d.get(k) is not None}
    for k in ("max_iter", "log_every", "check_every"):
        if k in kw:
            kw[k] = int(kw[k])
    return SolverConfig(seed=int(d.get("seed", 0)), **kw)


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="scbadmm", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--instance", help="instance string or sparse instance file")
        p.add_argument("--sigma", type=float)
        p.add_argument("--tau", type=float)
        p.add_argument("--tol", type=float)
        p.add_argument("--max-iter", dest="max_iter", type=int)
        p.add_argument("--log-every", dest="log_every", type=int)
        p.add_argument("--check-every", dest="check_every", type=int)
        p.add_argument("--out", help="output directory")
        p.add_argument("--spec", help="YAML or JSON file with the same keys; flags override it")
        p.add_argument("-v", "--verbose", action="store_true")

    r = sub.add_parser("run", help="run one solver on one instance")
    common(r)
    r.add_argument("--solver", choices=sorted(SOLVERS))
    r.add_argument("--seed", type=int)

    c = sub.add_parser("compare", help="paired runs of several solvers")
    common(c)
    c.add_argument("--solvers", help="comma-separated solver names (default scb,direct_admm)")
    c.add_argument("--seeds", help="seed list such as 0-19 or 1,4,7 (default 0)")
    c.add_argument("--seed", type=int, help="single seed; same as --seeds N")
    c.add_argument("--jobs", type=int)
    c.add_argument("--metric", choices=["iterations", "time"])
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "run":
            d = _merged(args, ("instance", "solver", "seed", "out") + CONFIG_KEYS)
            if not d.get("instance"):
                raise ValueError("an instance is required (--instance or spec file)")
            spec = RunSpec(str(d["instance"]), d.get("solver", "scb"), int(d.get("seed", 0)),
                           _config(d), d.get("out"))
            return run(spec)
        d = _merged(args, ("instance", "solvers", "seeds", "seed", "out", "jobs", "metric")
                    + CONFIG_KEYS)
        if not d.get("instance"):
            raise ValueError("an instance is required (--instance or spec file)")
        solvers = d.get("solvers", "scb,direct_admm")
        solvers = solvers.split(",") if isinstance(solvers, str) else list(solvers)
        seeds = d.get("seeds")
        if seeds is None:
            seeds = [int(d.get("seed", 0))]
        elif isinstance(seeds, str):
            seeds = _seeds(seeds)
        instances = d["instance"] if isinstance(d["instance"], list) else [d["instance"]]
        specs = []
        for inst in instances:
            for sd in seeds:
                seen = {}
                for s in solvers:
                    seen[s] = seen.get(s, 0) + 1
                    label = s if seen[s] == 1 else f"{s}#{seen[s]}"
                    specs.append(RunSpec(str(inst), s, int(sd),
                                         replace(_config(d), seed=int(sd)), label=label))
        return compare(specs, d.get("out"), int(d.get("jobs", 1)), d.get("metric", "iterations"))
    except (ValueError, OSError, InstanceFormatError, ConfigurationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
