"""
axial-entropy command line.

Usage:
    axial-entropy [--format csv|json|human] [--log-base e|2] [--output FILE] SUBCOMMAND ...
    axial-entropy --config run.json

Subcommands and their report columns:
    grid    axes, box, method, count, log_count          (with --box)
            quantity, size, estimate, closed_form        (otherwise)
    tree    quantity, size, estimate, closed_form, ...
    cayley  quantity, depth, closed_form, estimate, ...
    mis     x, count, log_count, per_site, entropy       (or residual / surface tables)
    oracle  lattice, shape, brute, structured, match
    sweep   family, lattice, m, n, entropy, verified, transitive
"""

import argparse
import json
import logging
import re
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import pandas as pd

import config
from src.cayley import (
    MarkovCayleyTree,
    cayley_entropy_estimate,
    count_ball_cayley,
    g1_entropy,
    gm_entropy_E_times_X,
    gm_entropy_X_times_E,
    levels,
    strict_inequality_probe,
    verify_gm_partitions,
)
from src.errors import AxialEntropyError, ConfigError
from src.grid_axial import (
    Box,
    GridAxialSpec,
    count_box,
    entropy_closed_dense,
    entropy_estimate_grid,
    full_extension_entropy_grid,
    verify_dense_count,
)
from src.mis_surface import (
    MultiplicativeSystem,
    boundary_residual,
    count_mis,
    mis_entropy,
    parse_x_sequence,
    tree_surface_correction,
)
from src.oracle import EnumerationBudget, brute_grid, brute_mis, brute_tree
from src.presets import parse_adjacency_ref, parse_matrix_ref
from src.reports import frame_to_text, scale_entropy_columns
from src.sft1d import TransitionMatrix
from src.tree_axial import (
    TreeAxialSpec,
    count_ball,
    dense_transitivity,
    dense_tree_entropy,
    dense_tree_recurrence_count,
    dense_tree_spec,
    entropy_estimate_tree,
    full_extension_entropy_tree,
    isotropic_gap_classify,
    permutation_characterization_check,
    verify_partition_identity,
)

logger = logging.getLogger(__name__)

ENTROPY_COLUMNS = [
    "estimate", "closed_form", "entropy", "per_site", "h_X", "h_E_times_X",
    "h_X_times_E", "margin_E_times_X", "margin_X_times_E", "series_value",
]


@dataclass
class RunConfig:
    """One fully parsed invocation."""

    subcommand: str
    options: argparse.Namespace
    fmt: str = config.DEFAULT_OUTPUT_FORMAT
    log_base: str = config.DEFAULT_LOG_BASE
    output: Optional[Path] = None
    budget: Optional[int] = None
    timestamps: bool = False
    verbose: bool = False

    @property
    def oracle_budget(self) -> EnumerationBudget:
        if self.budget is None:
            return EnumerationBudget()
        return EnumerationBudget(max_assignments=self.budget)

    @property
    def max_states(self) -> int:
        return self.budget if self.budget is not None else config.GRID_MAX_PROFILE_STATES


# Handler result: the report and whether every verification flag held.
Outcome = Tuple[pd.DataFrame, bool]


# -----------------------------
# Argument helpers
# -----------------------------
def parse_range(text: str) -> List[int]:
    """``"1..3"`` or ``"2"`` to a list of integers."""
    match = re.fullmatch(r"\s*(\d+)\s*(?:\.\.\s*(\d+))?\s*", str(text))
    if not match:
        raise ValueError(f"cannot read range {text!r}; expected a..b or an integer")
    low = int(match.group(1))
    high = int(match.group(2)) if match.group(2) else low
    if high < low:
        raise ValueError(f"empty range {text!r}")
    return list(range(low, high + 1))


def _resolve_axes(refs: Sequence[str], arity: Optional[int]) -> Tuple[TransitionMatrix, ...]:
    axes = tuple(parse_matrix_ref(ref) for ref in refs)
    if arity is not None and len(axes) == 1 and arity != 1:
        axes = axes * arity
    if arity is not None and len(axes) != arity:
        raise ConfigError(f"expected {arity} axes, got {len(axes)}")
    return axes


def _non_full_axis(axes: Sequence[TransitionMatrix]) -> TransitionMatrix:
    for A in reversed(axes):
        if A != TransitionMatrix.full(A.size):
            return A
    return axes[-1]


# -----------------------------
# Subcommand handlers
# -----------------------------
def handle_grid(opts: argparse.Namespace, run_config: RunConfig) -> Outcome:
    axes = _resolve_axes(opts.axes, opts.d)
    spec = GridAxialSpec(axes)
    if opts.box:
        box = Box.parse(opts.box)
        method = "transfer" if opts.transfer else "exact" if opts.exact else "auto"
        count = count_box(spec, box, method=method, max_states=run_config.max_states)
        row = {"axes": " ".join(opts.axes), "box": str(box), "method": method,
               "count": count.exact, "log_count": count.log}
        return pd.DataFrame([row]), True
    if opts.full_extension:
        report = full_extension_entropy_grid(spec, opts.full_extension, max_box=opts.max_box)
    else:
        report = entropy_estimate_grid(spec, opts.max_box)
    frame = report.to_frame() if report.estimates else pd.DataFrame([report.summary()])
    return frame, True


def handle_tree(opts: argparse.Namespace, run_config: RunConfig) -> Outcome:
    r = opts.r if opts.series or opts.verify_partition else 0
    if not 0 <= r <= opts.d:
        raise ValueError(f"need 0 <= r <= d, got r={r}, d={opts.d}")
    arity = opts.d - r
    axes = _resolve_axes(opts.axes, arity if arity else None)
    spec = TreeAxialSpec(axes if arity else (), axes[0].size if not arity else None)
    frames, ok = [], True

    if arity:
        frames.append(entropy_estimate_tree(spec, opts.depth).to_frame())
    if opts.series:
        if r == 0:
            logger.info("--series with r = 0 has no full-shift axes; reporting the DP estimate only")
        else:
            report = full_extension_entropy_tree(spec, opts.d, r, opts.tail_tol)
            frames.append(pd.DataFrame([{"quantity": report.quantity, "size": report.terms,
                                         "estimate": report.estimate, "closed_form": report.value,
                                         "tail_bound": report.tail_bound}]))
    if opts.verify_partition:
        if r == 0:
            raise ConfigError("--verify-partition needs --r >= 1")
        rows = []
        for n in range(opts.partition_depth + 1):
            holds = verify_partition_identity(spec, opts.d, r, n)
            ok &= holds
            rows.append({"quantity": "partition_identity", "size": n, "holds": holds})
        frames.append(pd.DataFrame(rows))
    if opts.classify_gap:
        if len(opts.axes) != 1:
            raise ConfigError("--classify-gap takes a single axis matrix")
        gap = isotropic_gap_classify(parse_matrix_ref(opts.axes[0]))
        frames.append(pd.DataFrame([{"quantity": "gap_class", "result": gap.value}]))
    if opts.check_permutation:
        check = permutation_characterization_check(axes)
        ok &= check.holds
        frames.append(pd.DataFrame([{"quantity": "permutation_check", "holds": check.holds,
                                     "all_permutation": check.all_permutation,
                                     "constant_counts": check.constant_counts,
                                     "result": check.failure or ""}]))
    return pd.concat(frames, ignore_index=True, sort=False), ok


def handle_cayley(opts: argparse.Namespace, run_config: RunConfig) -> Outcome:
    tree = MarkovCayleyTree(parse_adjacency_ref(opts.adjacency))
    axes = _resolve_axes(opts.axes, tree.d)
    X = _non_full_axis(axes)
    E = TransitionMatrix.full(X.size)
    rows, ok = [], True

    if opts.closed_form == "gm":
        if tree.adjacency != MarkovCayleyTree.golden_mean().adjacency:
            raise ConfigError("--closed-form gm needs the golden_mean adjacency")
        rows.append({"quantity": "E_times_X", "depth": opts.depth, "closed_form": gm_entropy_E_times_X(X),
                     "estimate": cayley_entropy_estimate(tree, (E, X), opts.depth)})
        rows.append({"quantity": "X_times_E", "depth": opts.depth, "closed_form": gm_entropy_X_times_E(X),
                     "estimate": cayley_entropy_estimate(tree, (X, E), opts.depth)})
    elif opts.closed_form == "g1":
        report = g1_entropy(X, opts.depth)
        rows.extend({"quantity": "g1_E_times_X", "depth": n, "closed_form": report.closed_form, "estimate": value}
                    for n, value in zip(report.sizes, report.estimates))
    else:
        tree_levels = levels(tree, opts.depth)
        counts = count_ball_cayley(tree, axes, opts.depth)
        rows.append({"quantity": "cayley", "depth": opts.depth, "ball_size": tree_levels.ball_sizes[opts.depth],
                     "count": counts.total_exact, "estimate": cayley_entropy_estimate(tree, axes, opts.depth),
                     "growth_rate": tree_levels.growth_rate})

    if opts.verify_partitions:
        check = verify_gm_partitions(X, opts.partition_depth)
        ok &= bool(check)
        rows.append({"quantity": "gm_partitions", "depth": opts.partition_depth, "holds": bool(check),
                     "result": check.message or ""})
    if opts.probe_strict:
        probe = strict_inequality_probe(tree, X, opts.depth)
        rows.append({"quantity": "strict_probe", **probe.as_dict()})
    return pd.DataFrame(rows), ok


def handle_mis(opts: argparse.Namespace, run_config: RunConfig) -> Outcome:
    omega = parse_matrix_ref(opts.omega)
    if opts.tree_surface:
        return tree_surface_correction(omega, opts.d, opts.depth, opts.tail_tol), True
    system = MultiplicativeSystem(omega, opts.p)
    pairs = parse_x_sequence(opts.x)
    if opts.residuals:
        return boundary_residual(system, pairs, opts.tail_tol), True
    h = mis_entropy(system, opts.tail_tol)
    rows = []
    for x, _ in pairs:
        count = count_mis(system, x)
        rows.append({"x": x, "count": count.exact, "log_count": count.log,
                     "per_site": max(count.log, 0.0) / x, "entropy": h})
    return pd.DataFrame(rows), True


def handle_oracle(opts: argparse.Namespace, run_config: RunConfig) -> Outcome:
    budget = run_config.oracle_budget
    if opts.lattice == "grid":
        spec = GridAxialSpec(_resolve_axes(opts.axes, opts.d))
        box = Box.parse(opts.box)
        shape = str(box)
        brute = brute_grid(spec, box, budget)
        structured = count_box(spec, box, method="exact", max_states=run_config.max_states).exact
    elif opts.lattice in ("tree", "cayley"):
        if opts.lattice == "tree":
            tree = MarkovCayleyTree.full(opts.d or len(opts.axes))
        else:
            tree = MarkovCayleyTree(parse_adjacency_ref(opts.adjacency))
        axes = _resolve_axes(opts.axes, tree.d)
        shape = f"depth {opts.depth}"
        brute = brute_tree(tree, axes, opts.depth, budget)
        if opts.lattice == "tree":
            structured = count_ball(TreeAxialSpec(axes), opts.depth, exact=True).total_exact
        else:
            structured = count_ball_cayley(tree, axes, opts.depth, exact=True).total_exact
    else:
        system = MultiplicativeSystem(parse_matrix_ref(opts.omega), opts.p)
        x = int(opts.x)
        shape = f"x={x}"
        brute = brute_mis(system, x, budget)
        structured = count_mis(system, x, exact=True).exact
    match = brute == structured
    if not match:
        logger.error("oracle mismatch on %s %s: brute %d, structured %d", opts.lattice, shape, brute, structured)
    return pd.DataFrame([{"lattice": opts.lattice, "shape": shape, "brute": brute,
                          "structured": structured, "match": match}]), match


SWEEP_FAMILIES = ("dense", "thm21")


def _sweep_cell(lattice: str, m: int, n: int) -> Dict[str, Any]:
    if lattice == "grid":
        verified = all(verify_dense_count(m, n, k) for k in config.SWEEP_SETTINGS["grid_verify_k"])
        value = entropy_closed_dense(m, n)
    else:
        spec = dense_tree_spec(m, n)
        verified = all(
            count_ball(spec, k, exact=True).total_exact == dense_tree_recurrence_count(m, n, k)
            for k in config.SWEEP_SETTINGS["tree_verify_depths"]
        )
        value = dense_tree_entropy(m, n)
    return {"family": "dense", "lattice": lattice, "m": m, "n": n, "entropy": value,
            "verified": verified, "transitive": dense_transitivity(m, n)}


def handle_sweep(opts: argparse.Namespace, run_config: RunConfig) -> Outcome:
    if opts.family not in SWEEP_FAMILIES:
        raise ConfigError(f"unknown sweep family {opts.family!r}")
    grid = [(m, n) for m in parse_range(opts.m) for n in parse_range(opts.n)]
    jobs = max(1, min(opts.jobs, config.SWEEP_SETTINGS["max_jobs"]))
    logger.debug("sweep: %d cells on %d workers", len(grid), jobs)
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        rows = list(pool.map(lambda cell: _sweep_cell(opts.lattice, *cell), grid))
    frame = pd.DataFrame(rows)
    ok = bool(frame["verified"].all() and frame["transitive"].all())
    if not ok:
        logger.error("sweep verification failed for %s", frame.loc[~frame["verified"], ["m", "n"]].values.tolist())
    return frame, ok


HANDLERS: Dict[str, Callable[[argparse.Namespace, RunConfig], Outcome]] = {
    "grid": handle_grid,
    "tree": handle_tree,
    "cayley": handle_cayley,
    "mis": handle_mis,
    "oracle": handle_oracle,
    "sweep": handle_sweep,
}


# -----------------------------
# Parser
# -----------------------------
def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog=config.APP_NAME, description=config.APP_DESCRIPTION,
                                     epilog=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--output", type=Path, help="write the report here instead of stdout")
    parser.add_argument("--format", dest="fmt", choices=config.OUTPUT_FORMATS, default=config.DEFAULT_OUTPUT_FORMAT)
    parser.add_argument("--log-base", choices=sorted(config.LOG_BASES), default=config.DEFAULT_LOG_BASE)
    parser.add_argument("--budget", type=int, help="oracle assignment and grid profile-state budget")
    parser.add_argument("--timestamps", action="store_true", help="add a generated_at column")
    parser.add_argument("--config", type=Path, help="JSON run configuration")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="subcommand")

    grid = sub.add_parser("grid", help="box counts and entropy on N^d")
    grid.add_argument("--axes", nargs="+", required=True)
    grid.add_argument("--d", type=int, help="isotropic power when one axis is given")
    grid.add_argument("--box", help="box extents, e.g. 4x2")
    method = grid.add_mutually_exclusive_group()
    method.add_argument("--exact", action="store_true")
    method.add_argument("--transfer", action="store_true")
    grid.add_argument("--max-box", type=int, default=config.GRID_DEFAULT_MAX_BOX)
    grid.add_argument("--full-extension", type=int, default=0, metavar="R")
    grid.add_argument("--report", choices=["csv", "json"], help="same as the global --format")

    tree = sub.add_parser("tree", help="ball counts and entropy on the d-tree")
    tree.add_argument("--d", type=int, required=True)
    tree.add_argument("--axes", nargs="+", required=True)
    tree.add_argument("--depth", type=int, default=10)
    tree.add_argument("--series", action="store_true")
    tree.add_argument("--r", type=int, default=0)
    tree.add_argument("--tail-tol", type=float, default=config.SERIES_TAIL_TOLERANCE)
    tree.add_argument("--verify-partition", action="store_true")
    tree.add_argument("--partition-depth", type=int, default=4)
    tree.add_argument("--classify-gap", action="store_true")
    tree.add_argument("--check-permutation", action="store_true")

    cayley = sub.add_parser("cayley", help="Markov–Cayley trees")
    cayley.add_argument("--adjacency", default="golden_mean")
    cayley.add_argument("--axes", nargs="+", required=True)
    cayley.add_argument("--depth", type=int, default=30)
    cayley.add_argument("--closed-form", choices=["gm", "g1"])
    cayley.add_argument("--verify-partitions", action="store_true")
    cayley.add_argument("--partition-depth", type=int, default=8)
    cayley.add_argument("--probe-strict", action="store_true")

    mis = sub.add_parser("mis", help="multiplicative integer systems")
    mis.add_argument("--omega", required=True)
    mis.add_argument("--p", type=int, default=2)
    mis.add_argument("--x", default="16", help='size, list or sequence like "2^n+1,n=12..22"')
    mis.add_argument("--residuals", action="store_true")
    mis.add_argument("--tree-surface", action="store_true")
    mis.add_argument("--d", type=int, default=2)
    mis.add_argument("--depth", type=int, default=10)
    mis.add_argument("--tail-tol", type=float, default=config.RESIDUAL_TAIL_TOLERANCE)

    oracle = sub.add_parser("oracle", help="brute-force spot checks")
    oracle.add_argument("--lattice", choices=["grid", "tree", "cayley", "mis"], required=True)
    oracle.add_argument("--axes", nargs="+", default=[])
    oracle.add_argument("--d", type=int)
    oracle.add_argument("--box", default="2x2")
    oracle.add_argument("--depth", type=int, default=1)
    oracle.add_argument("--adjacency", default="golden_mean")
    oracle.add_argument("--omega", default="golden_mean")
    oracle.add_argument("--p", type=int, default=2)
    oracle.add_argument("--x", default="8")

    sweep = sub.add_parser("sweep", help="achieved-entropy lattice of the dense family")
    sweep.add_argument("--family", choices=SWEEP_FAMILIES, default="dense")
    sweep.add_argument("--lattice", choices=["grid", "tree"], default="grid")
    sweep.add_argument("--m", default="1..2")
    sweep.add_argument("--n", default="1..3")
    sweep.add_argument("--jobs", type=int, default=1)
    return parser


def _options_to_argv(options: Dict[str, Any]) -> List[str]:
    argv = []
    for key, value in options.items():
        flag = "--" + key.replace("_", "-")
        if value is True:
            argv.append(flag)
        elif value is False or value is None:
            continue
        elif isinstance(value, list):
            argv.extend([flag, *map(str, value)])
        else:
            argv.extend([flag, str(value)])
    return argv


def _load_config_file(path: Path, parser: argparse.ArgumentParser) -> argparse.Namespace:
    """A JSON document {"subcommand": ..., "format": ..., "options": {...}} parsed like flags."""
    try:
        document = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read run configuration {path}: {exc}") from exc
    if "subcommand" not in document:
        raise ConfigError(f"run configuration {path} names no subcommand")
    argv = []
    for key in ("format", "log_base", "output", "budget"):
        if key in document:
            argv.extend([f"--{key.replace('_', '-')}", str(document[key])])
    argv.append(document["subcommand"])
    argv.extend(_options_to_argv(document.get("options", {})))
    return parser.parse_args(argv)


def parse_config(argv: Optional[Sequence[str]] = None) -> RunConfig:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config is not None:
        verbose, timestamps = args.verbose, args.timestamps
        args = _load_config_file(args.config, parser)
        args.verbose, args.timestamps = verbose or args.verbose, timestamps or args.timestamps
    if not args.subcommand:
        raise ConfigError("exactly one subcommand is required")
    fmt = getattr(args, "report", None) or args.fmt
    return RunConfig(
        subcommand=args.subcommand,
        options=args,
        fmt=fmt,
        log_base=args.log_base,
        output=args.output,
        budget=args.budget,
        timestamps=args.timestamps,
        verbose=args.verbose,
    )


# -----------------------------
# Entry points
# -----------------------------
def run(run_config: RunConfig) -> int:
    """Dispatch one subcommand, write its report and return the exit status."""
    handler = HANDLERS[run_config.subcommand]
    try:
        frame, ok = handler(run_config.options, run_config)
    except AxialEntropyError as exc:
        logger.error("%s: %s", type(exc).__name__, exc)
        return exc.exit_status
    except ValueError as exc:
        logger.error("invalid argument: %s", exc)
        return config.EXIT_CODES["config_error"]

    frame = scale_entropy_columns(frame, ENTROPY_COLUMNS, run_config.log_base)
    text = frame_to_text(frame, run_config.fmt, run_config.timestamps)
    if run_config.output is not None:
        run_config.output.write_text(text)
    else:
        sys.stdout.write(text)
    if not ok:
        logger.error("a verification flag in the report is false")
        return config.EXIT_CODES["computation_error"]
    return config.EXIT_CODES["ok"]


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        run_config = parse_config(argv)
    except SystemExit as exc:
        return config.EXIT_CODES["ok"] if exc.code in (0, None) else config.EXIT_CODES["config_error"]
    except AxialEntropyError as exc:
        logging.basicConfig(stream=sys.stderr, level=logging.WARNING)
        logger.error("%s", exc)
        return exc.exit_status

    logging.basicConfig(
        stream=sys.stderr,
        level=logging.DEBUG if run_config.verbose else logging.WARNING,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    return run(run_config)


if __name__ == "__main__":
    sys.exit(main())
