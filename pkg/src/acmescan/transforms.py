"""Expression-scale transformations and residual summaries.

Everything here is stateless and elementwise or rank-based: log1p of
counts, library-size normalization that preserves per-gene means,
rank-to-normal-quantile mapping, the Box-Cox family, and sample
skewness.
"""

from __future__ import annotations

import numpy as np
from scipy import stats
from scipy.special import ndtri


def log1p_counts(counts: np.ndarray) -> np.ndarray:
    """Elementwise log(1 + c) for nonnegative counts.

    The +1 shift keeps zero counts in the domain of the log.
    """
    c = np.asarray(counts, dtype=float)
    if not np.all(np.isfinite(c)):
        raise ValueError("counts must be finite")
    if np.any(c < 0):
        raise ValueError("counts must be nonnegative")
    return np.log1p(c)


def library_normalize(
    raw: np.ndarray, library_sizes: np.ndarray | None = None
) -> np.ndarray:
    """Divide each sample column by its library size, then rescale each
    gene row so its mean across samples equals the raw row mean.

    library_sizes defaults to the column sums of raw.  Rows that are
    identically zero are returned unchanged.
    """
    M = np.asarray(raw, dtype=float)
    if M.ndim != 2:
        raise ValueError("raw must be a genes x samples matrix")
    if library_sizes is None:
        library_sizes = M.sum(axis=0)
    lib = np.asarray(library_sizes, dtype=float).ravel()
    if lib.size != M.shape[1]:
        raise ValueError(f"got {lib.size} library sizes for {M.shape[1]} samples")
    if np.any(lib <= 0) or not np.all(np.isfinite(lib)):
        raise ValueError("library sizes must be positive and finite")
    scaled = M / lib[None, :]
    target = M.mean(axis=1)
    current = scaled.mean(axis=1)
    factor = np.ones_like(target)
    nonzero = current != 0
    factor[nonzero] = target[nonzero] / current[nonzero]
    return scaled * factor[:, None]


def quantile_normalize(y: np.ndarray) -> np.ndarray:
    """Map values onto standard normal quantiles at levels rank/(n+1).

    Ranks are averaged over ties, so the map stays well defined and
    symmetric for tied inputs; for tie-free input it is invariant under
    any strictly increasing transformation of y.
    """
    v = np.asarray(y, dtype=float).ravel()
    if v.size == 0:
        raise ValueError("empty input")
    if not np.all(np.isfinite(v)):
        raise ValueError("input must be finite")
    ranks = stats.rankdata(v, method="average")
    return ndtri(ranks / (v.size + 1))


def box_cox(y: np.ndarray, lam: float) -> np.ndarray:
    """Box-Cox transform (y^lam - 1)/lam, with the lam = 0 branch log(y).

    Computed as expm1(lam*log y)/lam, which is continuous in lam at 0 to
    floating-point accuracy.
    """
    v = np.asarray(y, dtype=float)
    if np.any(v <= 0) or not np.all(np.isfinite(v)):
        raise ValueError("Box-Cox requires strictly positive finite input")
    logv = np.log(v)
    if lam == 0.0:
        return logv
    return np.expm1(lam * logv) / lam


def sample_skewness(residuals: np.ndarray) -> float:
    """Standardized third central moment m3 / m2^(3/2)."""
    r = np.asarray(residuals, dtype=float).ravel()
    if r.size < 3:
        raise ValueError("need at least 3 values")
    d = r - r.mean()
    m2 = float(np.mean(d * d))
    if m2 == 0.0:
        raise ValueError("zero variance")
    m3 = float(np.mean(d * d * d))
    return m3 / m2**1.5
