"""Data ingestion, cis-pair enumeration, and the parallel scan.

Input files are tab-separated.  Matrix files carry one header line of
sample ids and one row per feature (genotype entries must be 0/1/2);
location files carry a header naming their columns
(snp_id/chrom/pos and gene_id/chrom/start/end).  Samples are
intersected across the three matrices and reordered to sorted order,
so files whose columns are permutations of each other load
identically.

The scan itself is partitioned by gene.  Each gene's covariate
projection is factored once and every cis SNP reuses it, which makes a
pair cost O(n*p) instead of a fresh regression per SNP.  Output order
is (gene in file order, SNP by position), independent of the worker
count.
"""

from __future__ import annotations

import logging
import math
import multiprocessing
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .model import (
    _eta_standard_error,
    _minimize_profiled,
    _nested_f,
    _ProfiledScalars,
    _Residualizer,
)
from .transforms import quantile_normalize

logger = logging.getLogger(__name__)

SCAN_COLUMNS = (
    "gene_id",
    "snp_id",
    "n_used",
    "maf",
    "beta0",
    "eta",
    "se_eta",
    "f_stat",
    "p_value",
    "gof_p",
    "qn_p",
    "ll_eta",
)

KNOWN_MODELS = ("acme", "ll", "qn")


class ScanInputError(ValueError):
    """Malformed or inconsistent scan input."""


@dataclass
class GenotypeMatrix:
    snp_ids: list[str]
    positions: list[tuple[str, int]]
    data: np.ndarray  # S x n, int8 entries in {0, 1, 2}


@dataclass
class ExpressionMatrix:
    gene_ids: list[str]
    spans: list[tuple[str, int, int]]
    data: np.ndarray  # T x n floats


@dataclass
class LoadReport:
    dropped_samples: dict[str, list[str]] = field(default_factory=dict)
    unlocated_snps: list[str] = field(default_factory=list)
    unlocated_genes: list[str] = field(default_factory=list)


@dataclass
class DataBundle:
    genotype: GenotypeMatrix
    expression: ExpressionMatrix
    covariate_ids: list[str]
    covariates: np.ndarray  # p x n
    samples: list[str]
    report: LoadReport = field(default_factory=LoadReport)


@dataclass
class ScanRecord:
    """One gene-SNP result row; optional fields are None when the
    corresponding model was not requested or the test is undefined."""

    gene_id: str
    snp_id: str
    n_used: int
    maf: float
    beta0: float
    eta: float
    se_eta: float
    f_stat: float
    p_value: float
    gof_p: float | None = None
    qn_p: float | None = None
    ll_eta: float | None = None


@dataclass
class FailureRecord:
    gene_id: str
    snp_id: str
    reason: str


def _fmt(value) -> str:
    if value is None:
        return "NA"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    v = float(value)
    if math.isnan(v):
        return "NA"
    return "%.6g" % v


def record_to_line(rec: ScanRecord) -> str:
    parts = [rec.gene_id, rec.snp_id]
    parts.extend(
        _fmt(getattr(rec, name))
        for name in SCAN_COLUMNS[2:]
    )
    return "\t".join(parts)


def _parse_table(path, what: str) -> list[list[str]]:
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    rows = [line.split("\t") for line in lines if line != ""]
    if len(rows) < 1:
        raise ScanInputError(f"{path}: empty {what} file")
    return rows


def _read_matrix(path, *, what: str) -> tuple[list[str], list[str], list[list[str]]]:
    rows = _parse_table(path, what)
    header = rows[0]
    if len(header) < 2:
        raise ScanInputError(f"{path}: header must list at least one sample id")
    samples = header[1:]
    if len(set(samples)) != len(samples):
        raise ScanInputError(f"{path}: duplicate sample ids in header")
    ids = []
    seen = set()
    body = []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise ScanInputError(
                f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}"
            )
        if row[0] in seen:
            raise ScanInputError(f"{path}:{lineno}: duplicate id {row[0]!r}")
        seen.add(row[0])
        ids.append(row[0])
        body.append(row[1:])
    return ids, samples, body


def _float_matrix(path, ids, samples, body) -> np.ndarray:
    try:
        return np.array(body, dtype=float)
    except ValueError:
        for i, row in enumerate(body):
            for j, cell in enumerate(row):
                try:
                    float(cell)
                except ValueError:
                    raise ScanInputError(
                        f"{path}: non-numeric entry {cell!r} at row {ids[i]!r}, "
                        f"sample {samples[j]!r}"
                    ) from None
        raise


def _genotype_matrix(path, ids, samples, body) -> np.ndarray:
    values = _float_matrix(path, ids, samples, body)
    bad = ~np.isin(values, (0.0, 1.0, 2.0))
    if bad.any():
        i, j = np.argwhere(bad)[0]
        raise ScanInputError(
            f"{path}: genotype entry {body[i][j]!r} at row {ids[i]!r}, "
            f"sample {samples[j]!r} is not 0/1/2"
        )
    return values.astype(np.int8)


def _read_locations(path, *, n_fields: int, what: str) -> dict[str, tuple]:
    rows = _parse_table(path, what)
    out: dict[str, tuple] = {}
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != n_fields:
            raise ScanInputError(
                f"{path}:{lineno}: expected {n_fields} fields, got {len(row)}"
            )
        if row[0] in out:
            raise ScanInputError(f"{path}:{lineno}: duplicate id {row[0]!r}")
        try:
            coords = tuple(int(x) for x in row[2:])
        except ValueError:
            raise ScanInputError(
                f"{path}:{lineno}: coordinates must be integers, got {row[2:]!r}"
            ) from None
        out[row[0]] = (row[1], *coords)
    return out


def load_matrices(
    genotype_path,
    expression_path,
    covariate_path,
    snp_loc_path,
    gene_loc_path,
) -> DataBundle:
    """Load and align the five scan inputs into a validated bundle.

    Samples are intersected across the three matrices and put in sorted
    order; dropped samples, and matrix rows with no location entry, are
    recorded in the bundle report rather than discarded silently.
    """
    snp_ids, g_samples, g_body = _read_matrix(genotype_path, what="genotype")
    gene_ids, e_samples, e_body = _read_matrix(expression_path, what="expression")
    cov_ids, c_samples, c_body = _read_matrix(covariate_path, what="covariate")

    common = sorted(set(g_samples) & set(e_samples) & set(c_samples))
    if not common:
        raise ScanInputError("no samples shared by genotype, expression and covariates")
    report = LoadReport()
    for name, samp in (
        ("genotype", g_samples),
        ("expression", e_samples),
        ("covariates", c_samples),
    ):
        dropped = sorted(set(samp) - set(common))
        if dropped:
            report.dropped_samples[name] = dropped
            logger.info("%s: dropped %d samples not shared by all inputs", name, len(dropped))

    g_data = _genotype_matrix(genotype_path, snp_ids, g_samples, g_body)
    e_data = _float_matrix(expression_path, gene_ids, e_samples, e_body)
    c_data = _float_matrix(covariate_path, cov_ids, c_samples, c_body)

    def _reorder(data, samp):
        index = {s: k for k, s in enumerate(samp)}
        return data[:, [index[s] for s in common]]

    g_data = _reorder(g_data, g_samples)
    e_data = _reorder(e_data, e_samples)
    c_data = _reorder(c_data, c_samples)

    snp_loc = _read_locations(snp_loc_path, n_fields=3, what="SNP location")
    gene_loc = _read_locations(gene_loc_path, n_fields=4, what="gene location")
    for gid, (chrom, start, end) in gene_loc.items():
        if start > end:
            raise ScanInputError(f"gene {gid!r}: start {start} exceeds end {end}")

    keep_snps = [i for i, sid in enumerate(snp_ids) if sid in snp_loc]
    report.unlocated_snps = [sid for sid in snp_ids if sid not in snp_loc]
    keep_genes = [i for i, gid in enumerate(gene_ids) if gid in gene_loc]
    report.unlocated_genes = [gid for gid in gene_ids if gid not in gene_loc]
    if report.unlocated_snps:
        logger.info("dropped %d SNPs without locations", len(report.unlocated_snps))
    if report.unlocated_genes:
        logger.info("dropped %d genes without locations", len(report.unlocated_genes))

    snp_ids = [snp_ids[i] for i in keep_snps]
    gene_ids = [gene_ids[i] for i in keep_genes]
    return DataBundle(
        genotype=GenotypeMatrix(
            snp_ids=snp_ids,
            positions=[snp_loc[sid] for sid in snp_ids],
            data=g_data[keep_snps],
        ),
        expression=ExpressionMatrix(
            gene_ids=gene_ids,
            spans=[gene_loc[gid] for gid in gene_ids],
            data=e_data[keep_genes],
        ),
        covariate_ids=cov_ids,
        covariates=c_data,
        samples=list(common),
        report=report,
    )


def write_matrix_tsv(path, ids, samples, data, *, integer=False):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("id\t" + "\t".join(samples) + "\n")
        for rid, row in zip(ids, data):
            if integer:
                cells = (str(int(v)) for v in row)
            else:
                cells = ("%.10g" % float(v) for v in row)
            fh.write(rid + "\t" + "\t".join(cells) + "\n")


def write_snp_locations(path, snp_ids, positions):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("snp_id\tchrom\tpos\n")
        for sid, (chrom, pos) in zip(snp_ids, positions):
            fh.write(f"{sid}\t{chrom}\t{pos}\n")


def write_gene_locations(path, gene_ids, spans):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("gene_id\tchrom\tstart\tend\n")
        for gid, (chrom, start, end) in zip(gene_ids, spans):
            fh.write(f"{gid}\t{chrom}\t{start}\t{end}\n")


def write_bundle(bundle: DataBundle, directory) -> dict[str, str]:
    """Write a bundle back to the five TSV files; returns the paths."""
    import os

    paths = {
        "genotype": os.path.join(directory, "genotype.tsv"),
        "expression": os.path.join(directory, "expression.tsv"),
        "covariates": os.path.join(directory, "covariates.tsv"),
        "snp_loc": os.path.join(directory, "snp_loc.tsv"),
        "gene_loc": os.path.join(directory, "gene_loc.tsv"),
    }
    write_matrix_tsv(
        paths["genotype"], bundle.genotype.snp_ids, bundle.samples,
        bundle.genotype.data, integer=True,
    )
    write_matrix_tsv(
        paths["expression"], bundle.expression.gene_ids, bundle.samples,
        bundle.expression.data,
    )
    write_matrix_tsv(paths["covariates"], bundle.covariate_ids, bundle.samples, bundle.covariates)
    write_snp_locations(paths["snp_loc"], bundle.genotype.snp_ids, bundle.genotype.positions)
    write_gene_locations(paths["gene_loc"], bundle.expression.gene_ids, bundle.expression.spans)
    return paths


def _cis_snps_by_gene(expression: ExpressionMatrix, genotype: GenotypeMatrix, window: int):
    """Per gene (in file order), the indices of cis SNPs sorted by
    (position, index).  Window bounds are inclusive on both sides."""
    if window < 0:
        raise ScanInputError("window must be nonnegative")
    by_chrom: dict[str, tuple[np.ndarray, np.ndarray]] = {}
    chroms = np.array([c for c, _ in genotype.positions], dtype=object)
    pos = np.array([p for _, p in genotype.positions], dtype=np.int64)
    for chrom in set(chroms.tolist()):
        mask = np.flatnonzero(chroms == chrom)
        order = mask[np.lexsort((mask, pos[mask]))]
        by_chrom[chrom] = (pos[order], order)
    out = []
    for gi, (chrom, start, end) in enumerate(expression.spans):
        if chrom not in by_chrom:
            out.append((gi, np.empty(0, dtype=np.int64)))
            continue
        cpos, cidx = by_chrom[chrom]
        lo = np.searchsorted(cpos, start - window, side="left")
        hi = np.searchsorted(cpos, end + window, side="right")
        out.append((gi, cidx[lo:hi]))
    return out


def enumerate_cis_pairs(expression: ExpressionMatrix, genotype: GenotypeMatrix, window: int):
    """Yield (gene_index, snp_index) for every same-chromosome pair with
    the SNP inside [start - window, end + window], gene-major order."""
    for gi, sidx in _cis_snps_by_gene(expression, genotype, window):
        for si in sidx:
            yield gi, int(si)


@dataclass(frozen=True)
class _ScanOptions:
    models: tuple[str, ...]
    min_maf: float


class _GeneWorkspace:
    """Per-gene scratch: one covariate QR shared across all cis SNPs."""

    def __init__(self, y: np.ndarray, Z: np.ndarray, models: tuple[str, ...]):
        self.y = y
        self.n = y.size
        self.p = Z.shape[0]
        self.res = _Residualizer(Z, n=self.n)
        self.ytil = self.res.residualize(y)
        self.cy = float(self.ytil @ self.ytil)
        self.qtil = None
        self.cq = 0.0
        if "qn" in models:
            q = quantile_normalize(y)
            self.qtil = self.res.residualize(q)
            self.cq = float(self.qtil @ self.qtil)
        self.models = models

    def fit_snp(self, s: np.ndarray) -> dict:
        n, p = self.n, self.p
        scalars, d1t, d2t = _ProfiledScalars.from_pair(self.res, self.ytil, s)
        stil = d1t + 2.0 * d2t
        ss = float(stil @ stil)
        theta1 = float(stil @ self.ytil) / ss if ss > 0 else 0.0
        eta_init = math.expm1(min(max(theta1, -30.0), 30.0))
        smax = int(s.max())
        eta, _, _, _ = _minimize_profiled(scalars, smax, eta_init, n)

        a1 = math.log1p(eta) if scalars.has1 else 0.0
        a2 = math.log1p(2.0 * eta) if scalars.has2 else 0.0
        resid = self.ytil - a1 * d1t - a2 * d2t
        sse = float(resid @ resid)
        u = np.where(s == 1, a1, 0.0) + np.where(s == 2, a2, 0.0)
        coef = self.res.solve_coef(self.y - u)
        sigma2 = sse / (n - p - 2)
        se_eta = _eta_standard_error(self.res, s, eta, resid, sigma2)
        assoc = _nested_f(self.cy, sse, 1, n - p - 2)

        gof_p = None
        if scalars.has1 and scalars.has2 and bool((s == 0).any()):
            det = scalars.g11 * scalars.g22 - scalars.g12 * scalars.g12
            if det > 1e-12 * max(scalars.g11 * scalars.g22, 1.0):
                c1 = (scalars.g22 * scalars.b1 - scalars.g12 * scalars.b2) / det
                c2 = (scalars.g11 * scalars.b2 - scalars.g12 * scalars.b1) / det
                sse_anc = self.cy - (c1 * scalars.b1 + c2 * scalars.b2)
                gof_p = _nested_f(sse, max(sse_anc, 0.0), 1, n - p - 3).p_value

        qn_p = None
        if self.qtil is not None and ss > 0:
            tq = float(stil @ self.qtil) / ss
            sse_q = self.cq - tq * tq * ss
            qn_p = _nested_f(self.cq, max(sse_q, 0.0), 1, n - p - 2).p_value

        ll_eta = None
        if "ll" in self.models:
            ll_eta = math.expm1(theta1)

        return {
            "beta0": math.exp(coef[0]),
            "eta": eta,
            "se_eta": se_eta,
            "f_stat": assoc.f_stat,
            "p_value": assoc.p_value,
            "gof_p": gof_p,
            "qn_p": qn_p,
            "ll_eta": ll_eta,
        }


def _scan_one_gene(bundle: DataBundle, gi: int, snp_indices, opts: _ScanOptions):
    gene_id = bundle.expression.gene_ids[gi]
    y = bundle.expression.data[gi]
    records: list[ScanRecord] = []
    failures: list[FailureRecord] = []
    try:
        ws = _GeneWorkspace(y, bundle.covariates, opts.models)
    except Exception as exc:  # e.g. rank-deficient covariates for this gene
        for si in snp_indices:
            failures.append(
                FailureRecord(gene_id, bundle.genotype.snp_ids[si], type(exc).__name__)
            )
        return records, failures
    n = ws.n
    for si in snp_indices:
        s = bundle.genotype.data[si]
        if s.min() == s.max():
            continue
        freq = float(s.sum()) / (2.0 * n)
        maf = min(freq, 1.0 - freq)
        if maf < opts.min_maf:
            continue
        snp_id = bundle.genotype.snp_ids[si]
        try:
            fields = ws.fit_snp(s)
        except Exception as exc:
            failures.append(FailureRecord(gene_id, snp_id, type(exc).__name__))
            continue
        records.append(ScanRecord(gene_id=gene_id, snp_id=snp_id, n_used=n, maf=maf, **fields))
    return records, failures


_WORKER_BUNDLE: DataBundle | None = None
_WORKER_OPTS: _ScanOptions | None = None


def _init_worker(bundle, opts):
    global _WORKER_BUNDLE, _WORKER_OPTS
    _WORKER_BUNDLE = bundle
    _WORKER_OPTS = opts


def _worker_task(task):
    gi, snp_indices = task
    return _scan_one_gene(_WORKER_BUNDLE, gi, snp_indices, _WORKER_OPTS)


def run_cis_scan(
    bundle: DataBundle,
    *,
    models=("acme", "ll", "qn"),
    min_maf: float = 0.05,
    window: int = 1_000_000,
    workers: int = 1,
    failures: list[FailureRecord] | None = None,
):
    """Yield one ScanRecord per eligible cis pair.

    Eligible means polymorphic in the loaded samples with MAF at or
    above min_maf.  Fit failures on eligible pairs are appended to the
    optional failures list (with exception names as reason codes) and
    never abort the scan.  The output sequence is a pure function of
    (bundle, options): gene file order, SNPs by position, identical for
    every worker count.
    """
    models = tuple(m for m in KNOWN_MODELS if m in set(models))
    if "acme" not in models:
        raise ScanInputError("the scan always fits the core model; include 'acme'")
    n = len(bundle.samples)
    p = bundle.covariates.shape[0]
    if n <= p + 3:
        raise ScanInputError(f"need n > p + 3 samples after alignment, got n={n}, p={p}")
    if not 0.0 <= min_maf <= 0.5:
        raise ScanInputError("min_maf must lie in [0, 0.5]")
    opts = _ScanOptions(models=models, min_maf=min_maf)
    tasks = _cis_snps_by_gene(bundle.expression, bundle.genotype, window)

    if workers <= 1:
        for gi, sidx in tasks:
            records, fails = _scan_one_gene(bundle, gi, sidx, opts)
            if failures is not None:
                failures.extend(fails)
            yield from records
        return

    ctx = multiprocessing.get_context("fork")
    chunk = max(1, len(tasks) // (4 * workers))
    with ctx.Pool(workers, initializer=_init_worker, initargs=(bundle, opts)) as pool:
        for records, fails in pool.imap(_worker_task, tasks, chunksize=chunk):
            if failures is not None:
                failures.extend(fails)
            yield from records


@dataclass
class ScanSummary:
    n_records: int
    n_failures: int
    failures: list[FailureRecord]


def scan_to_tsv(bundle: DataBundle, out_path, **options) -> ScanSummary:
    """Run the scan and stream records to a TSV file as they arrive."""
    failures: list[FailureRecord] = []
    n = 0
    with open(out_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\t".join(SCAN_COLUMNS) + "\n")
        for rec in run_cis_scan(bundle, failures=failures, **options):
            fh.write(record_to_line(rec) + "\n")
            n += 1
    return ScanSummary(n_records=n, n_failures=len(failures), failures=failures)


def read_scan_tsv(path) -> list[ScanRecord]:
    """Load a scan output file back into records (NA becomes None)."""
    rows = _parse_table(path, "scan output")
    if tuple(rows[0]) != SCAN_COLUMNS:
        raise ScanInputError(f"{path}: unexpected scan header {rows[0]!r}")
    out = []
    for row in rows[1:]:
        if len(row) != len(SCAN_COLUMNS):
            raise ScanInputError(f"{path}: ragged row {row!r}")
        def fnum(x):
            return None if x == "NA" else float(x)
        out.append(
            ScanRecord(
                gene_id=row[0],
                snp_id=row[1],
                n_used=int(row[2]),
                maf=float(row[3]),
                beta0=float(row[4]),
                eta=float(row[5]),
                se_eta=float(row[6]),
                f_stat=float(row[7]),
                p_value=float(row[8]),
                gof_p=fnum(row[9]),
                qn_p=fnum(row[10]),
                ll_eta=fnum(row[11]),
            )
        )
    return out


@dataclass(frozen=True)
class EffectRow:
    """Uniform per-model comparison row: one effect and one p-value."""

    gene_id: str
    snp_id: str
    effect: float
    p_value: float


def acme_effects(records) -> list[EffectRow]:
    """Effects on the symmetrized w scale, p-values from the ACME F-test."""
    return [
        EffectRow(r.gene_id, r.snp_id, float(np.log1p(2.0 * r.eta)), r.p_value)
        for r in records
    ]


def ll_effects(records) -> list[EffectRow]:
    """Log-linear effects (requires a scan run with the ll model)."""
    out = []
    for r in records:
        if r.ll_eta is None:
            raise ScanInputError(
                f"record ({r.gene_id}, {r.snp_id}) has no ll_eta; rerun with models=ll"
            )
        out.append(EffectRow(r.gene_id, r.snp_id, r.ll_eta, math.nan))
    return out


def qn_effects(records) -> list[EffectRow]:
    """QN p-values (no raw-scale effect exists for QN)."""
    out = []
    for r in records:
        if r.qn_p is None:
            raise ScanInputError(
                f"record ({r.gene_id}, {r.snp_id}) has no qn_p; rerun with models=qn"
            )
        out.append(EffectRow(r.gene_id, r.snp_id, math.nan, r.qn_p))
    return out


@dataclass
class ModelComparison:
    rows: list[tuple]
    n_pairs: int
    spearman_effect: float | None
    sign_agreement: float | None
    spearman_p: float | None
    mismatched_keys: list[tuple[str, str]]

    columns = ("gene_id", "snp_id", "effect_a", "p_a", "effect_b", "p_b")


def compare_models(rows_a, rows_b, rows_qn=None) -> ModelComparison:
    """Join two models' effect tables on (gene, snp) and summarize ranks.

    spearman_effect and sign_agreement compare the two effect columns;
    spearman_p compares rows_a's p-values against the optional third
    table's (intended for QN).  Keys missing from any provided table are
    reported, not silently dropped.
    """
    index_b = {(r.gene_id, r.snp_id): r for r in rows_b}
    index_q = {(r.gene_id, r.snp_id): r for r in rows_qn} if rows_qn is not None else None
    rows = []
    mismatched = []
    seen = set()
    for ra in rows_a:
        key = (ra.gene_id, ra.snp_id)
        seen.add(key)
        rb = index_b.get(key)
        rq = index_q.get(key) if index_q is not None else None
        if rb is None or (index_q is not None and rq is None):
            mismatched.append(key)
            continue
        rows.append(
            (
                ra.gene_id,
                ra.snp_id,
                ra.effect,
                ra.p_value,
                rb.effect,
                rq.p_value if rq is not None else math.nan,
            )
        )
    mismatched.extend(k for k in index_b if k not in seen)
    if index_q is not None:
        mismatched.extend(k for k in index_q if k not in seen and k not in mismatched)

    eff_a = np.array([r[2] for r in rows])
    eff_b = np.array([r[4] for r in rows])
    p_a = np.array([r[3] for r in rows])
    p_q = np.array([r[5] for r in rows])

    spearman_effect = None
    sign_agreement = None
    if len(rows) > 1 and np.all(np.isfinite(eff_a)) and np.all(np.isfinite(eff_b)):
        spearman_effect = float(stats.spearmanr(eff_a, eff_b).statistic)
        nonzero = (eff_a != 0) & (eff_b != 0)
        if nonzero.any():
            sign_agreement = float(np.mean(np.sign(eff_a[nonzero]) == np.sign(eff_b[nonzero])))
    spearman_p = None
    if len(rows) > 1 and np.all(np.isfinite(p_q)) and np.all(np.isfinite(p_a)):
        spearman_p = float(stats.spearmanr(p_a, p_q).statistic)

    return ModelComparison(
        rows=rows,
        n_pairs=len(rows),
        spearman_effect=spearman_effect,
        sign_agreement=sign_agreement,
        spearman_p=spearman_p,
        mismatched_keys=mismatched,
    )
