"""A complete cis scan on synthetic files: write, load, scan, compare.

Builds a small dataset (3 genes, 30 SNPs, 2 chromosomes) with one
planted effect, writes the five TSV inputs, loads them back through
the validating loader, runs the scan twice with different worker
counts to show the output is deterministic, and ranks the models
against each other.  Run as: python demos/cis_scan_roundtrip.py
"""

import math
import tempfile
from pathlib import Path

import numpy as np

from acmescan import (
    DataBundle,
    ExpressionMatrix,
    GenotypeMatrix,
    acme_effects,
    compare_models,
    enumerate_cis_pairs,
    hwe_genotypes,
    ll_effects,
    load_matrices,
    qn_effects,
    read_scan_tsv,
    scan_to_tsv,
    write_bundle,
)

rng = np.random.default_rng(42)
n_samples, n_snps, p = 150, 30, 4

# genotypes scattered over two chromosomes within 3 Mb
samples = [f"S{i:03d}" for i in range(n_samples)]
snp_ids = [f"rs{i:04d}" for i in range(n_snps)]
positions = [("1" if i % 2 == 0 else "2", int(rng.integers(1, 3_000_000)))
             for i in range(n_snps)]
G = np.vstack([hwe_genotypes(n_samples, 0.3, rng) for _ in range(n_snps)])

# three genes: G000 carries a real effect from its nearest cis SNP,
# the other two are null
gene_ids = ["G000", "G001", "G002"]
spans = [("1", 800_000, 850_000), ("1", 2_000_000, 2_060_000),
         ("2", 1_200_000, 1_230_000)]
Z = rng.standard_normal((p, n_samples))
causal = min((i for i, (c, _) in enumerate(positions) if c == "1"),
             key=lambda i: abs(positions[i][1] - spans[0][1]))
expr = np.empty((3, n_samples))
for gi in range(3):
    y = math.log(100.0) + Z.T @ rng.standard_normal(p) \
        + rng.normal(0.0, 0.4, size=n_samples)
    if gi == 0:
        y = y + np.log1p(1.2 * G[causal].astype(float))
    expr[gi] = y

bundle = DataBundle(
    genotype=GenotypeMatrix(snp_ids=snp_ids, positions=positions, data=G),
    expression=ExpressionMatrix(gene_ids=gene_ids, spans=spans, data=expr),
    covariate_ids=[f"C{j}" for j in range(p)],
    covariates=Z,
    samples=samples,
)
print(f"planted effect: gene G000 <- {snp_ids[causal]} at "
      f"{positions[causal][0]}:{positions[causal][1]}")

with tempfile.TemporaryDirectory() as tmp:
    # five TSV files on disk, then back through the validating loader
    paths = write_bundle(bundle, tmp)
    loaded = load_matrices(paths["genotype"], paths["expression"],
                           paths["covariates"], paths["snp_loc"],
                           paths["gene_loc"])
    print(f"loaded {len(loaded.samples)} samples; loader report: "
          f"dropped={loaded.report.dropped_samples}")

    n_cis = sum(1 for _ in enumerate_cis_pairs(
        loaded.expression, loaded.genotype, 1_000_000))
    print(f"{n_cis} cis pairs within 1 Mb")

    # identical bytes regardless of the worker count
    out1, out4 = Path(tmp, "scan1.tsv"), Path(tmp, "scan4.tsv")
    summary = scan_to_tsv(loaded, out1, models=("acme", "ll", "qn"),
                          workers=1)
    scan_to_tsv(loaded, out4, models=("acme", "ll", "qn"), workers=4)
    assert out1.read_bytes() == out4.read_bytes()
    print(f"scan wrote {summary.n_records} records "
          f"({summary.n_failures} failures); workers=1 and workers=4 "
          f"outputs are byte-identical")

    records = read_scan_tsv(out1)

# the planted pair should dominate the association ranking
top = min(records, key=lambda r: r.p_value)
print(f"\ntop hit: {top.gene_id} x {top.snp_id}  eta={top.eta:.3f}  "
      f"p={top.p_value:.2e}  gof p={top.gof_p:.2f}")
assert (top.gene_id, top.snp_id) == ("G000", snp_ids[causal])

# rank agreement between the model's effects and the baselines
comp_ll = compare_models(acme_effects(records), ll_effects(records))
comp_qn = compare_models(acme_effects(records), ll_effects(records),
                         qn_effects(records))
print(f"effect rank correlation, curve vs log-linear: "
      f"{comp_ll.spearman_effect:.3f} "
      f"(sign agreement {comp_ll.sign_agreement:.2f})")
print(f"p-value rank correlation vs quantile-normalized: "
      f"{comp_qn.spearman_p:.3f}")
