"""Command-line surface: scan, simulate, fit, bench.

Every command takes --seed, logs to standard error, writes plot-ready
TSV tables, and drops a JSON manifest (command line, input digests,
seed, version, wall time, workers) next to each output file.  Exit
codes: 0 success, 2 input validation failure, 3 I/O failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import math
import sys
import time
from dataclasses import asdict, dataclass

import numpy as np

from . import __version__
from .model import (
    GenePair,
    ModelInputError,
    SingularInformationError,
    effect_size_se,
    f_test_association,
    f_test_gof,
    fit_acme,
    fit_log_ancova,
    fit_log_linear,
    fit_ols,
    predict_expression,
)
from .scan import ScanInputError, load_matrices, scan_to_tsv
from .simulate import (
    POWER_MODELS,
    SimConfig,
    benchmark_fitters,
    estimate_tail_type1,
    run_null_study,
    run_power_experiment,
)

logger = logging.getLogger(__name__)


@dataclass
class RunManifest:
    command: list[str]
    inputs: dict[str, str]
    seed: int
    version: str
    wall_time_s: float
    workers: int


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(out_path, argv, input_paths, seed, wall_time_s, workers=1):
    manifest = RunManifest(
        command=list(argv),
        inputs={str(p): _sha256(p) for p in input_paths},
        seed=seed,
        version=__version__,
        wall_time_s=wall_time_s,
        workers=workers,
    )
    path = str(out_path) + ".manifest.json"
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(asdict(manifest), fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def _fmt_cell(value) -> str:
    if value is None:
        return "NA"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, str):
        return value
    v = float(value)
    return "NA" if math.isnan(v) else "%.10g" % v


def _write_table(path, columns, rows):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\t".join(columns) + "\n")
        for row in rows:
            fh.write("\t".join(_fmt_cell(v) for v in row) + "\n")


def _sim_config_from(args) -> SimConfig:
    return SimConfig(
        n=args.n,
        p=args.p,
        beta0=args.beta0,
        eta_grid=tuple(args.grid) if getattr(args, "grid", None) else (1.0,),
        maf=args.maf,
        sigma_eps=args.sigma_eps,
        sigma_gamma=args.sigma_gamma,
        delta=args.delta,
        replicates=getattr(args, "replicates", 1) or 1,
        seed=args.seed,
    )


def _add_sim_flags(sub, *, n=105, p=19, maf=0.25):
    sub.add_argument("--n", type=int, default=n, help="samples per dataset")
    sub.add_argument("--p", type=int, default=p, help="covariate count")
    sub.add_argument("--beta0", type=float, default=100.0)
    sub.add_argument("--maf", type=float, default=maf, help="minor allele frequency")
    sub.add_argument("--sigma-eps", type=float, default=1.0, dest="sigma_eps")
    sub.add_argument("--sigma-gamma", type=float, default=1.0, dest="sigma_gamma")
    sub.add_argument("--delta", type=float, default=0.0, help="error skewness parameter")


def cmd_scan(args, argv) -> int:
    t0 = time.perf_counter()
    bundle = load_matrices(
        args.genotype, args.expression, args.covariates, args.snp_loc, args.gene_loc
    )
    models = tuple(m.strip() for m in args.models.split(",") if m.strip())
    summary = scan_to_tsv(
        bundle,
        args.out,
        models=models,
        min_maf=args.min_maf,
        window=args.window,
        workers=args.workers,
    )
    logger.info(
        "scan wrote %d records (%d failures) to %s",
        summary.n_records,
        summary.n_failures,
        args.out,
    )
    for rec in summary.failures[:20]:
        logger.warning("failed pair (%s, %s): %s", rec.gene_id, rec.snp_id, rec.reason)
    write_manifest(
        args.out,
        argv,
        [args.genotype, args.expression, args.covariates, args.snp_loc, args.gene_loc],
        args.seed,
        time.perf_counter() - t0,
        workers=args.workers,
    )
    return 0


def cmd_simulate_null(args, argv) -> int:
    t0 = time.perf_counter()
    config = _sim_config_from(args)
    result = run_null_study(config, args.pairs)
    _write_table(
        args.out,
        ("pair", "p_acme", "p_ll"),
        ((i, result.p_acme[i], result.p_ll[i]) for i in range(args.pairs)),
    )
    summary_path = str(args.out) + ".summary.tsv"
    _write_table(
        summary_path,
        ("model", "inflation_lambda"),
        [("acme", result.lambda_acme), ("ll", result.lambda_ll)],
    )
    logger.info(
        "null study: lambda_acme=%.4f lambda_ll=%.4f over %d pairs",
        result.lambda_acme,
        result.lambda_ll,
        args.pairs,
    )
    write_manifest(args.out, argv, [], args.seed, time.perf_counter() - t0)
    return 0


def cmd_simulate_power(args, argv) -> int:
    t0 = time.perf_counter()
    config = _sim_config_from(args)
    models = tuple(m.strip() for m in args.models.split(",") if m.strip())
    table = run_power_experiment(config, models=models)
    _write_table(args.out, table.columns, table.rows())
    write_manifest(args.out, argv, [], args.seed, time.perf_counter() - t0)
    return 0


def cmd_simulate_tail(args, argv) -> int:
    t0 = time.perf_counter()
    config = _sim_config_from(args)
    proposal = args.proposal
    if proposal not in ("auto", "null"):
        proposal = float(proposal)
    estimates = estimate_tail_type1(config, args.alpha, proposal=proposal, n_draws=args.draws)
    _write_table(
        args.out,
        ("alpha", "estimate", "mc_se", "n_effective", "flagged"),
        ((e.alpha, e.estimate, e.mc_se, e.n_effective, e.flagged) for e in estimates),
    )
    for e in estimates:
        logger.info(
            "alpha=%g estimate=%.3g mc_se=%.2g n_eff=%.0f%s",
            e.alpha,
            e.estimate,
            e.mc_se,
            e.n_effective,
            " (flagged)" if e.flagged else "",
        )
    write_manifest(args.out, argv, [], args.seed, time.perf_counter() - t0)
    return 0


def _fit_report_rows(pair: GenePair, gene_id: str, snp_id: str):
    sfloat = pair.s.astype(float)
    freq = float(sfloat.sum()) / (2.0 * pair.n)
    rows = [
        ("pair", "gene_id", gene_id),
        ("pair", "snp_id", snp_id),
        ("pair", "n", pair.n),
        ("pair", "p", pair.p),
        ("pair", "maf", min(freq, 1.0 - freq)),
    ]
    reduced = fit_ols(pair.y, None, pair.Z)
    fit = fit_acme(pair)
    assoc = f_test_association(fit.sse, reduced.sse, pair.n, pair.p)
    anc = fit_log_ancova(pair)
    rows += [
        ("acme", "beta0", fit.beta0),
        ("acme", "eta", fit.eta),
        ("acme", "se_eta", effect_size_se(fit, pair)),
        ("acme", "sigma2", fit.sigma2),
        ("acme", "sse", fit.sse),
        ("acme", "iterations", fit.iterations),
        ("acme", "converged", fit.converged),
        ("acme", "f_stat", assoc.f_stat),
        ("acme", "p_value", assoc.p_value),
        ("acme", "pred_s0", predict_expression(fit, 0)),
        ("acme", "pred_s1", predict_expression(fit, 1)),
        ("acme", "pred_s2", predict_expression(fit, 2)),
    ]
    if len(anc.classes_observed) == 3:
        rows.append(("acme", "gof_p", f_test_gof(fit.sse, anc.sse, pair.n, pair.p).p_value))
    else:
        rows.append(("acme", "gof_p", None))
    ll = fit_log_linear(pair)
    ll_assoc = f_test_association(ll.sse, reduced.sse, pair.n, pair.p)
    rows += [
        ("log_linear", "theta0", ll.coefficients[0]),
        ("log_linear", "theta1", ll.coefficients[1]),
        ("log_linear", "sse", ll.sse),
        ("log_linear", "p_value", ll_assoc.p_value),
    ]
    if len(anc.classes_observed) == 3:
        rows.append(
            ("log_linear", "gof_p", f_test_gof(ll.sse, anc.sse, pair.n, pair.p).p_value)
        )
    else:
        rows.append(("log_linear", "gof_p", None))
    a = anc.coefficients
    rows += [
        ("log_ancova", "alpha0", a[0] if np.isfinite(a[0]) else None),
        ("log_ancova", "alpha1", a[1] if np.isfinite(a[1]) else None),
        ("log_ancova", "alpha2", a[2] if np.isfinite(a[2]) else None),
        ("log_ancova", "sse", anc.sse),
        ("log_ancova", "classes_observed", ",".join(str(c) for c in anc.classes_observed)),
    ]
    return rows


def cmd_fit(args, argv) -> int:
    t0 = time.perf_counter()
    bundle = load_matrices(
        args.genotype, args.expression, args.covariates, args.snp_loc, args.gene_loc
    )
    try:
        gi = bundle.expression.gene_ids.index(args.gene)
    except ValueError:
        raise ScanInputError(f"unknown gene id {args.gene!r}") from None
    try:
        si = bundle.genotype.snp_ids.index(args.snp)
    except ValueError:
        raise ScanInputError(f"unknown SNP id {args.snp!r}") from None
    pair = GenePair(
        y=bundle.expression.data[gi],
        s=bundle.genotype.data[si],
        Z=bundle.covariates,
    )
    rows = _fit_report_rows(pair, args.gene, args.snp)
    lines = ["model\tfield\tvalue"]
    lines += ["\t".join((m, f, _fmt_cell(v))) for m, f, v in rows]
    text = "\n".join(lines) + "\n"
    sys.stdout.write(text)
    if args.out:
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        write_manifest(
            args.out,
            argv,
            [args.genotype, args.expression, args.covariates, args.snp_loc, args.gene_loc],
            args.seed,
            time.perf_counter() - t0,
        )
    return 0


def cmd_bench(args, argv) -> int:
    t0 = time.perf_counter()
    config = SimConfig(
        n=args.n,
        p=args.p,
        maf=args.maf,
        sigma_eps=args.sigma_eps,
        sigma_gamma=args.sigma_gamma,
        seed=args.seed,
    )
    results = benchmark_fitters(args.pairs, config, eta=args.eta)
    columns = ("method", "mean_ms", "sd_ms", "n_pairs")
    rows = [(r.method, r.mean_ms, r.sd_ms, r.n_pairs) for r in results]
    if args.out:
        _write_table(args.out, columns, rows)
        write_manifest(args.out, argv, [], args.seed, time.perf_counter() - t0)
    else:
        sys.stdout.write("\t".join(columns) + "\n")
        for row in rows:
            sys.stdout.write("\t".join(_fmt_cell(v) for v in row) + "\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="acmescan",
        description="Cis-eQTL effect sizes under the log-of-linear model",
    )
    parser.add_argument("--version", action="version", version=f"acmescan {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    scan = sub.add_parser("scan", help="whole-genome cis scan over a data bundle")
    scan.add_argument("--genotype", required=True)
    scan.add_argument("--expression", required=True)
    scan.add_argument("--covariates", required=True)
    scan.add_argument("--snp-loc", required=True, dest="snp_loc")
    scan.add_argument("--gene-loc", required=True, dest="gene_loc")
    scan.add_argument("--window", type=int, default=1_000_000)
    scan.add_argument("--min-maf", type=float, default=0.05, dest="min_maf")
    scan.add_argument("--models", default="acme,ll,qn")
    scan.add_argument("--workers", type=int, default=1)
    scan.add_argument("--seed", type=int, default=0)
    scan.add_argument("--out", required=True)
    scan.set_defaults(func=cmd_scan)

    sim = sub.add_parser("simulate", help="calibration and power studies")
    simsub = sim.add_subparsers(dest="subcommand", required=True)

    null = simsub.add_parser("null", help="resampled-residual null calibration")
    null.add_argument("--pairs", type=int, default=10_000)
    _add_sim_flags(null)
    null.add_argument("--seed", type=int, default=0)
    null.add_argument("--out", required=True)
    null.set_defaults(func=cmd_simulate_null)

    power = simsub.add_parser("power", help="power and prediction comparison")
    power.add_argument(
        "--grid",
        type=lambda s: [float(x) for x in s.split(",")],
        default=[0.05, 0.1, 0.2, 0.5, 1.0, 2.0],
        help="comma-separated eta values",
    )
    power.add_argument("--replicates", type=int, default=100)
    power.add_argument("--models", default=",".join(POWER_MODELS))
    _add_sim_flags(power)
    power.add_argument("--seed", type=int, default=0)
    power.add_argument("--out", required=True)
    power.set_defaults(func=cmd_simulate_power)

    tail = simsub.add_parser("tail", help="importance-sampled tail Type-I error")
    tail.add_argument(
        "--alpha",
        type=lambda s: [float(x) for x in s.split(",")],
        default=[1e-2, 1e-4, 1e-6],
        help="comma-separated target levels",
    )
    tail.add_argument("--draws", type=int, default=4000)
    tail.add_argument("--proposal", default="auto", help="auto, null, or a shift value")
    _add_sim_flags(tail, n=250, p=5, maf=0.1)
    tail.add_argument("--seed", type=int, default=0)
    tail.add_argument("--out", required=True)
    tail.set_defaults(func=cmd_simulate_tail)

    fit = sub.add_parser("fit", help="single-pair diagnostic report")
    fit.add_argument("--genotype", required=True)
    fit.add_argument("--expression", required=True)
    fit.add_argument("--covariates", required=True)
    fit.add_argument("--snp-loc", required=True, dest="snp_loc")
    fit.add_argument("--gene-loc", required=True, dest="gene_loc")
    fit.add_argument("--gene", required=True)
    fit.add_argument("--snp", required=True)
    fit.add_argument("--seed", type=int, default=0)
    fit.add_argument("--out", default=None)
    fit.set_defaults(func=cmd_fit)

    bench = sub.add_parser("bench", help="per-pair fit timing")
    bench.add_argument("--pairs", type=int, default=1000)
    bench.add_argument("--eta", type=float, default=1.0)
    _add_sim_flags(bench)
    bench.add_argument("--seed", type=int, default=0)
    bench.add_argument("--out", default=None)
    bench.set_defaults(func=cmd_bench)

    return parser


def main(argv=None) -> int:
    if argv is None:
        argv = sys.argv[1:]
    logging.basicConfig(
        stream=sys.stderr, level=logging.INFO, format="%(levelname)s %(name)s: %(message)s"
    )
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args, ["acmescan", *argv])
    except (ScanInputError, ModelInputError, SingularInformationError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
