"""Shared builders and independent oracles for the test suite.

The oracles here deliberately avoid the package's profiled solver: SSE
profiles are computed through a pseudoinverse projector and the 1-D
minimum through a dense grid search with parabolic refinement, so
agreement between the two is evidence, not tautology.
"""

from __future__ import annotations

import math

import numpy as np

from acmescan import (
    DataBundle,
    ExpressionMatrix,
    GenePair,
    GenotypeMatrix,
)


def random_genotypes(rng, n: int, maf: float = 0.3) -> np.ndarray:
    """Hardy-Weinberg draw guaranteed to contain all three classes."""
    while True:
        s = rng.binomial(2, maf, size=n).astype(np.int8)
        if 0 in s and 1 in s and 2 in s:
            return s


def build_pair(
    rng,
    n: int = 80,
    p: int = 4,
    beta0: float = 50.0,
    eta: float = 0.6,
    sigma: float = 0.4,
    maf: float = 0.3,
):
    """Noisy pair from the generative model; returns (pair, gamma)."""
    s = random_genotypes(rng, n, maf)
    Z = rng.standard_normal((p, n)) if p > 0 else None
    gamma = rng.standard_normal(p)
    y = math.log(beta0) + np.log1p(eta * s.astype(float))
    if p > 0:
        y = y + Z.T @ gamma
    y = y + rng.normal(0.0, sigma, size=n)
    return GenePair(y=y, s=s, Z=Z), gamma


def noiseless_pair(rng, n: int = 60, p: int = 3, beta0: float = 80.0, eta: float = 0.7, maf: float = 0.3):
    """Exact model data with zero noise; returns (pair, beta0, eta, gamma)."""
    s = random_genotypes(rng, n, maf)
    Z = rng.standard_normal((p, n)) if p > 0 else None
    gamma = rng.standard_normal(p)
    y = math.log(beta0) + np.log1p(eta * s.astype(float))
    if p > 0:
        y = y + Z.T @ gamma
    return GenePair(y=y, s=s, Z=Z), beta0, eta, gamma


def projector(pair: GenePair) -> np.ndarray:
    """Annihilator of the column space of [1, Z'] via pseudoinverse."""
    X = np.column_stack([np.ones(pair.n)] + [row for row in pair.Z])
    return np.eye(pair.n) - X @ np.linalg.pinv(X)


def grid_profile_sse(pair: GenePair, etas) -> np.ndarray:
    """Profiled SSE at each eta: project y - log(1 + eta*s) off [1, Z']."""
    M = projector(pair)
    etas = np.asarray(etas, dtype=float)
    offsets = np.log1p(np.outer(etas, pair.s.astype(float)))
    R = (pair.y[None, :] - offsets) @ M
    return np.einsum("ij,ij->i", R, R)


def oracle_min_eta(pair: GenePair) -> tuple[float, float]:
    """Dense grid minimizer of the profiled SSE; returns (eta, sse).

    Searches u = log(1 + smax*eta) on [-13.8, 15], refines twice around
    the best cell, then takes one parabolic step.  Everything is
    evaluated through grid_profile_sse, independent of the package's
    Newton solver.
    """
    smax = float(pair.s.max())
    M = projector(pair)
    sfloat = pair.s.astype(float)

    def sse_of_etas(etas):
        offsets = np.log1p(np.outer(np.asarray(etas, dtype=float), sfloat))
        R = (pair.y[None, :] - offsets) @ M
        return np.einsum("ij,ij->i", R, R)

    lo, hi = -13.8, 15.0
    grid_n = 4001
    for _ in range(3):
        u = np.linspace(lo, hi, grid_n)
        sse = sse_of_etas(np.expm1(u) / smax)
        k = int(np.argmin(sse))
        step = (hi - lo) / (grid_n - 1)
        lo, hi = u[k] - 2 * step, u[k] + 2 * step
        grid_n = 401
        best_u, best_sse = float(u[k]), float(sse[k])
        if 0 < k < len(u) - 1:
            f1, f2, f3 = sse[k - 1], sse[k], sse[k + 1]
            denom = f1 - 2 * f2 + f3
            if denom > 0:
                cand = float(u[k] + 0.5 * step * (f1 - f3) / denom)
                cand_sse = float(sse_of_etas([math.expm1(cand) / smax])[0])
                if cand_sse < best_sse:
                    best_u, best_sse = cand, cand_sse
    return math.expm1(best_u) / smax, best_sse


def build_bundle(
    rng,
    n_genes: int = 4,
    n_snps: int = 30,
    n_samples: int = 120,
    p: int = 3,
    chroms: tuple[str, ...] = ("1", "2"),
    span_bp: int = 3_000_000,
    effect_snp_per_gene: bool = False,
    eta: float = 0.8,
) -> DataBundle:
    """In-memory bundle with genes and SNPs scattered over chromosomes.

    With effect_snp_per_gene, the cis SNP nearest each gene start gets a
    planted log-of-linear effect of size eta; all other expression is
    null.  Genes are anchored near a SNP on their chromosome when one
    exists, so most genes have at least one cis SNP within 1 Mb.
    """
    samples = [f"S{i:03d}" for i in range(n_samples)]
    snp_ids = [f"rs{i:04d}" for i in range(n_snps)]
    gene_ids = [f"G{i:03d}" for i in range(n_genes)]

    positions = []
    for i in range(n_snps):
        chrom = chroms[i % len(chroms)]
        positions.append((chrom, int(rng.integers(1, span_bp))))
    G = np.vstack([random_genotypes(rng, n_samples, 0.3) for _ in range(n_snps)])

    spans = []
    for i in range(n_genes):
        chrom = chroms[i % len(chroms)]
        cis = [pos for c, pos in positions if c == chrom]
        # a chromosome may hold no SNPs in a tiny bundle; such a gene
        # simply has no cis pairs and sits anywhere
        anchor = cis[i % len(cis)] if cis else int(rng.integers(1, span_bp))
        start = max(1, anchor - int(rng.integers(0, 500_000)))
        spans.append((chrom, start, start + int(rng.integers(1_000, 100_000))))

    Z = rng.standard_normal((p, n_samples))
    covariate_ids = [f"C{j}" for j in range(p)]
    expr = np.empty((n_genes, n_samples))
    for gi, (chrom, start, end) in enumerate(spans):
        gamma = rng.standard_normal(p)
        y = math.log(100.0) + Z.T @ gamma + rng.normal(0.0, 0.5, size=n_samples)
        if effect_snp_per_gene:
            best, best_d = None, None
            for si, (c, pos) in enumerate(positions):
                if c != chrom:
                    continue
                d = abs(pos - start)
                if d <= 1_000_000 and (best_d is None or d < best_d):
                    best, best_d = si, d
            if best is not None:
                y = y + np.log1p(eta * G[best].astype(float))
        expr[gi] = y

    return DataBundle(
        genotype=GenotypeMatrix(snp_ids=snp_ids, positions=positions, data=G),
        expression=ExpressionMatrix(gene_ids=gene_ids, spans=spans, data=expr),
        covariate_ids=covariate_ids,
        covariates=Z,
        samples=samples,
    )
