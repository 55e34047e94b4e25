"""Command-line front end: one process runs one experiment and writes one report."""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import os
import sys
from dataclasses import dataclass
from pathlib import Path

from .coloring import parse_color_measure
from .harness import (
    MODE_ANNEALED,
    MODE_QUENCHED,
    MODES,
    ExperimentConfig,
    RunResult,
    run_annealed_clt,
    run_annealed_lln,
    run_cluster_clt,
    run_quenched_clt,
    run_quenched_lln,
    run_weighted_lln_check,
)
from .lattice import build_box
from .percolation import (
    PROXY_BOUNDARY_LARGEST,
    PROXY_RULES,
    default_window_margin,
    estimate_functionals,
    label_clusters,
    sample_config,
    square_sums,
)
from .rng import derive_rng
from .stats import exact_check_report, summarize
from .theory import REGIME_SUPERCRITICAL, gamma_law, gamma_sampler

SEED_ENV_VAR = "DCL_SEED"

EXIT_PASS = 0
EXIT_ERROR = 1
EXIT_TEST_FAILURE = 2


class UsageError(ValueError):
    """Bad flags or flag values.  Maps to exit status 1, never 2."""


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on usage errors; 2 is reserved here for
    # failed statistical checks, so surface parse problems as exceptions.
    def error(self, message: str) -> None:
        raise UsageError(message)


@dataclass(frozen=True)
class CliInvocation:
    """A validated command line, ready to execute."""

    subcommand: str
    config: ExperimentConfig | None
    options: dict
    out_path: Path | None
    out_format: str


def _probability(text: str) -> float:
    value = float(text)
    if not 0.0 <= value <= 1.0:
        raise argparse.ArgumentTypeError(f"{value} is outside [0, 1]")
    return value


def _positive(text: str) -> int:
    value = int(text)
    if value <= 0:
        raise argparse.ArgumentTypeError(f"{value} is not a positive integer")
    return value


def _add_lattice_flags(sub: argparse.ArgumentParser, *, with_colors: bool) -> None:
    sub.add_argument("--dim", type=_positive, default=2, help="lattice dimension d")
    sub.add_argument(
        "--radius",
        type=_positive,
        action="append",
        required=True,
        help="box radius n; repeat the flag for a window/size list",
    )
    sub.add_argument("--p", type=_probability, required=True, help="edge density in [0, 1]")
    if with_colors:
        sub.add_argument(
            "--nu",
            default="two-point:-1,1,0.5",
            help="color measure: two-point:a,b,alpha | gaussian:mean,variance | "
            "discrete:v1:w1,v2:w2,...",
        )
    sub.add_argument("--seed", type=int, default=None, help=f"master seed (default ${SEED_ENV_VAR} or 0)")
    sub.add_argument("--margin", type=int, default=None, help="inner-window margin (default 4 ln side)")
    sub.add_argument(
        "--proxy",
        choices=sorted(PROXY_RULES),
        default=PROXY_BOUNDARY_LARGEST,
        help="stand-in rule for the infinite cluster",
    )
    sub.add_argument("--workers", type=_positive, default=1, help="thread count; never changes results")
    sub.add_argument("--out", default=None, help="report path (default stdout)")
    sub.add_argument(
        "--format",
        choices=("json", "csv"),
        default="json",
        help="json writes the report only; csv additionally dumps per-sample files",
    )


def _build_parser() -> _Parser:
    parser = _Parser(prog="dcl", description=__doc__)
    subs = parser.add_subparsers(dest="subcommand", required=True)

    est = subs.add_parser("estimate", help="Monte Carlo cluster functionals of one (d, n, p)")
    _add_lattice_flags(est, with_colors=False)
    est.add_argument("--replicates", type=_positive, default=100, help="independent configurations")

    lln = subs.add_parser("lln", help="law of large numbers for the color average")
    _add_lattice_flags(lln, with_colors=True)
    lln.add_argument("--mode", choices=sorted(MODES), required=True)
    lln.add_argument("--graph-replicates", type=_positive, default=100)
    lln.add_argument("--color-replicates", type=_positive, default=1)

    clt = subs.add_parser("clt", help="fluctuations of the centered color sum")
    _add_lattice_flags(clt, with_colors=True)
    clt.add_argument("--mode", choices=sorted(MODES), required=True)
    clt.add_argument("--graph-replicates", type=_positive, default=100)
    clt.add_argument("--color-replicates", type=_positive, default=1000)
    clt.add_argument(
        "--regime",
        choices=("subcritical", "supercritical"),
        default=None,
        help="required for --mode annealed",
    )

    cc = subs.add_parser("cluster-clt", help="fluctuations of the stand-in cluster volume")
    _add_lattice_flags(cc, with_colors=False)
    cc.add_argument("--graph-replicates", type=_positive, default=100)

    wl = subs.add_parser("weighted-lln", help="cluster-size-weighted color averages")
    _add_lattice_flags(wl, with_colors=True)
    wl.add_argument("--graph-replicates", type=_positive, default=100)

    gs = subs.add_parser("gamma-sample", help="draw from the annealed fluctuation limit law")
    gs.add_argument("--nu", required=True, help="color measure (same grammar as lln/clt)")
    gs.add_argument("--chi-f", type=float, default=1.0, help="finite-cluster mean size")
    gs.add_argument("--sigma-p2", type=float, default=0.5, help="cluster-volume variance density")
    gs.add_argument("--samples", type=_positive, default=100_000)
    gs.add_argument("--seed", type=int, default=None)
    gs.add_argument("--out", default=None)
    gs.add_argument("--format", choices=("json", "csv"), default="json")

    ci = subs.add_parser("check-identity", help="exact per-site vs per-cluster square-sum equality")
    ci.add_argument("--dim", type=_positive, default=2)
    ci.add_argument("--radius", type=_positive, action="append", default=None)
    ci.add_argument(
        "--p",
        type=_probability,
        action="append",
        default=None,
        help="edge density; repeatable (default 0.2 0.5 0.8)",
    )
    ci.add_argument("--configs", type=_positive, default=1000, help="configurations per density")
    ci.add_argument("--seed", type=int, default=None)
    ci.add_argument(
        "--proxy", choices=sorted(PROXY_RULES), default=PROXY_BOUNDARY_LARGEST
    )
    ci.add_argument("--margin", type=int, default=None)
    ci.add_argument("--out", default=None)
    ci.add_argument("--format", choices=("json", "csv"), default="json")

    return parser


def _resolve_seed(seed: int | None) -> int:
    if seed is not None:
        return seed
    raw = os.environ.get(SEED_ENV_VAR)
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"${SEED_ENV_VAR} must be an integer, got {raw!r}") from None


def _parse_nu(text: str):
    try:
        return parse_color_measure(text)
    except ValueError as exc:
        raise UsageError(f"--nu: {exc}") from None


def parse_invocation(argv: list[str]) -> CliInvocation:
    """Validate argv into a CliInvocation; raises UsageError on bad input."""
    args = _build_parser().parse_args(argv)
    sub = args.subcommand
    out_path = Path(args.out) if args.out is not None else None
    if args.format == "csv" and out_path is None:
        raise UsageError("--format csv needs --out to name the dump files")

    if sub == "gamma-sample":
        options = {
            "nu": _parse_nu(args.nu),
            "chi_f": args.chi_f,
            "sigma_p2": args.sigma_p2,
            "samples": args.samples,
            "master_seed": _resolve_seed(args.seed),
        }
        if options["chi_f"] < 0.0 or options["sigma_p2"] < 0.0:
            raise UsageError("--chi-f and --sigma-p2 must be nonnegative")
        return CliInvocation(sub, None, options, out_path, args.format)

    if sub == "check-identity":
        options = {
            "d": args.dim,
            "radii": args.radius or [16],
            "p_values": args.p or [0.2, 0.5, 0.8],
            "configs": args.configs,
            "master_seed": _resolve_seed(args.seed),
            "proxy_rule": args.proxy,
            "margin": args.margin,
        }
        return CliInvocation(sub, None, options, out_path, args.format)

    mode = getattr(args, "mode", MODE_ANNEALED)
    regime = getattr(args, "regime", None)
    if sub == "clt" and mode == MODE_ANNEALED and regime is None:
        raise UsageError("clt --mode annealed requires --regime")

    try:
        config = ExperimentConfig(
            d=args.dim,
            radii=args.radius,
            p=args.p,
            nu=_parse_nu(args.nu) if hasattr(args, "nu") else "two-point:-1,1,0.5",
            mode=mode,
            graph_replicates=getattr(args, "graph_replicates", None) or getattr(args, "replicates", 100),
            color_replicates=getattr(args, "color_replicates", 1),
            master_seed=_resolve_seed(args.seed),
            margin=args.margin,
            proxy_rule=args.proxy,
            regime=regime,
            workers=args.workers,
        )
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from None
    return CliInvocation(sub, config, {}, out_path, args.format)


def _json_ready(value):
    """Recursively coerce a report object into JSON-safe primitives."""
    if isinstance(value, dict):
        return {str(k): _json_ready(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_ready(v) for v in value]
    if isinstance(value, float):
        return value if math.isfinite(value) else None
    if isinstance(value, (str, int, bool)) or value is None:
        return value
    if hasattr(value, "item"):  # numpy scalar
        return _json_ready(value.item())
    return str(value)


def _report_from_result(result: RunResult) -> dict:
    return {
        "config": {"experiment": result.experiment, **result.config.to_dict()},
        "estimates": result.estimates,
        "predictions": {name: law.to_dict() for name, law in result.predictions.items()},
        "tests": [t.to_dict() for t in result.tests],
        "seeds": result.seeds,
        "timing": result.timing,
    }


def _emit(report: dict, samples: dict[str, list[float]], invocation: CliInvocation) -> None:
    text = json.dumps(_json_ready(report), indent=2, sort_keys=True) + "\n"
    if invocation.out_path is None:
        sys.stdout.write(text)
    else:
        invocation.out_path.parent.mkdir(parents=True, exist_ok=True)
        invocation.out_path.write_text(text)
    if invocation.out_format != "csv":
        return
    stem = invocation.out_path.with_suffix("")
    for name, values in sorted(samples.items()):
        dump = Path(f"{stem}_{name}.csv")
        # repr round-trips doubles exactly, so re-reading the dump reproduces
        # every summary statistic bit for bit.
        lines = [f"index,{name} (dimensionless)"]
        lines.extend(f"{i},{value!r}" for i, value in enumerate(values))
        dump.write_text("\n".join(lines) + "\n")


_HARNESS_RUNS = {
    ("lln", MODE_QUENCHED): run_quenched_lln,
    ("lln", MODE_ANNEALED): run_annealed_lln,
    ("clt", MODE_QUENCHED): run_quenched_clt,
    ("clt", MODE_ANNEALED): run_annealed_clt,
    ("cluster-clt", MODE_ANNEALED): run_cluster_clt,
    ("weighted-lln", MODE_ANNEALED): run_weighted_lln_check,
}


def _execute_estimate(invocation: CliInvocation) -> int:
    config = invocation.config
    lattice = build_box(config.d, config.n_max)
    estimates = estimate_functionals(
        lattice,
        config.p,
        config.graph_replicates,
        config.master_seed,
        margin=config.margin,
        proxy_rule=config.proxy_rule,
    )
    report = {
        "config": {"experiment": "estimate", **config.to_dict()},
        "estimates": dataclasses.asdict(estimates),
        "predictions": {},
        "tests": [],
        "seeds": {"master_seed": config.master_seed, "streams": {"graph": config.graph_replicates}},
        "timing": {},
    }
    _emit(report, {}, invocation)
    return EXIT_PASS


def _execute_gamma_sample(invocation: CliInvocation) -> int:
    opts = invocation.options
    nu = opts["nu"]
    sampler = gamma_sampler(opts["chi_f"], opts["sigma_p2"], nu)
    law = gamma_law(REGIME_SUPERCRITICAL, opts["chi_f"], nu.variance, opts["sigma_p2"], nu)
    rng = derive_rng(opts["master_seed"], "gamma-sample")
    draws = sampler.sample(rng, opts["samples"])
    report = {
        "config": {
            "experiment": "gamma-sample",
            "nu": nu.to_dict(),
            "chi_f": opts["chi_f"],
            "sigma_p2": opts["sigma_p2"],
            "samples": opts["samples"],
            "master_seed": opts["master_seed"],
        },
        "estimates": {"draw_summary": summarize(draws).to_dict()},
        "predictions": {"gamma": law.to_dict()},
        "tests": [],
        "seeds": {"master_seed": opts["master_seed"], "streams": {"gamma-sample": 1}},
        "timing": {},
    }
    _emit(report, {"gamma_draw": [float(v) for v in draws]}, invocation)
    return EXIT_PASS


def _execute_check_identity(invocation: CliInvocation) -> int:
    opts = invocation.options
    seed = opts["master_seed"]
    tests = []
    counts: dict[str, dict[str, int]] = {}
    for radius in opts["radii"]:
        lattice = build_box(opts["d"], radius)
        margin = opts["margin"] if opts["margin"] is not None else default_window_margin(lattice)
        for p in opts["p_values"]:
            violations = 0
            for i in range(opts["configs"]):
                graph = sample_config(lattice, p, seed, f"identity:{radius}:{p!r}:{i}")
                labeling = label_clusters(graph, opts["proxy_rule"])
                per_site, per_cluster = square_sums(labeling, margin)
                if per_site != per_cluster:
                    violations += 1
            counts[f"n={radius},p={p!r}"] = {"configs": opts["configs"], "violations": violations}
            tests.append(
                exact_check_report(
                    violations == 0,
                    float(violations),
                    f"identity: per-site vs per-cluster square sums on {opts['configs']} "
                    f"configs at n={radius}, p={p!r}",
                )
            )
    report = {
        "config": {"experiment": "check-identity", **{k: v for k, v in opts.items() if k != "nu"}},
        "estimates": counts,
        "predictions": {},
        "tests": [t.to_dict() for t in tests],
        "seeds": {"master_seed": seed, "streams": {"identity": len(counts) * opts["configs"]}},
        "timing": {},
    }
    _emit(report, {}, invocation)
    return EXIT_PASS if all(t.passed for t in tests) else EXIT_TEST_FAILURE


def execute(invocation: CliInvocation) -> int:
    """Run the experiment behind a parsed invocation; returns the exit status."""
    if invocation.subcommand == "estimate":
        return _execute_estimate(invocation)
    if invocation.subcommand == "gamma-sample":
        return _execute_gamma_sample(invocation)
    if invocation.subcommand == "check-identity":
        return _execute_check_identity(invocation)

    run = _HARNESS_RUNS[(invocation.subcommand, invocation.config.mode)]
    result = run(invocation.config)
    _emit(_report_from_result(result), result.samples, invocation)
    return EXIT_PASS if result.passed() else EXIT_TEST_FAILURE


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        invocation = parse_invocation(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    try:
        return execute(invocation)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except Exception as exc:  # noqa: BLE001 - boundary: report and set status
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    raise SystemExit(main())
