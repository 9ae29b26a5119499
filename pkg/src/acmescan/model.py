"""Model fits and tests for single-gene, single-SNP expression data.

The central model is a log-of-linear ("ACME") regression

    y_i = log(beta0 + beta1 * s_i) + Z_i' gamma + eps_i,

where y_i is log(1 + count), s_i in {0, 1, 2} is an allele count and Z
holds p covariate rows.  Dividing through by beta0 gives the form used
for fitting,

    y_i = log(beta0) + log(1 + eta * s_i) + Z_i' gamma + eps_i,

with effect size eta = beta1/beta0, the fractional change in mean raw
expression per allele.  For fixed eta the model is linear in
(log beta0, gamma), so the linear block is profiled out by least squares
and eta is found by a safeguarded Newton iteration on the profiled
one-dimensional objective.

The same residualized workspace also yields the log-linear and
log-ANCOVA baselines and the nested F-tests comparing them.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

logger = logging.getLogger(__name__)

ETA_UPPER = 1e6          # upper bracket for the effect size
BRACKET_MARGIN = 1e-6    # keeps 1 + eta*s bounded away from 0
COARSE_POINTS = 64       # pre-scan grid resolution for the 1-D solve


class ModelInputError(ValueError):
    """Invalid input data for a model fit."""


class MonomorphicGenotypeError(ModelInputError):
    """All allele counts equal: the genotype effect is unidentifiable."""


class InsufficientSamplesError(ModelInputError):
    """Too few samples for the requested model (need n > p + 3)."""


class NonFiniteInputError(ModelInputError):
    """NaN or infinity in the input arrays."""


class RankDeficiencyError(ModelInputError):
    """Design matrix is rank deficient (collinear covariates)."""


class SingularInformationError(RuntimeError):
    """Observed information is singular; standard error undefined."""

    def __init__(self, message: str, *, denominator: float, scale: float):
        super().__init__(message)
        self.denominator = denominator
        self.scale = scale


@dataclass(frozen=True)
class GenePair:
    """One gene-SNP data unit: log-expression, allele counts, covariates.

    y has length n, s has length n with entries in {0, 1, 2}, Z is p x n.
    Z must not contain a constant row (the model has its own baseline
    term) and n must exceed p + 3 so every nested test has positive
    denominator degrees of freedom.
    """

    y: np.ndarray
    s: np.ndarray
    Z: np.ndarray | None = None

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float).ravel()
        s = np.asarray(self.s, dtype=float).ravel()
        Z = self.Z
        if Z is None:
            Z = np.empty((0, y.size))
        Z = np.atleast_2d(np.asarray(Z, dtype=float))
        if y.size != s.size or Z.shape[1] != y.size:
            raise ModelInputError(
                f"inconsistent lengths: y has {y.size}, s has {s.size}, "
                f"Z has {Z.shape[1]} columns"
            )
        if not (np.all(np.isfinite(y)) and np.all(np.isfinite(Z))):
            raise NonFiniteInputError("y and Z must be finite")
        if not np.all(np.isin(s, (0.0, 1.0, 2.0))):
            bad = s[~np.isin(s, (0.0, 1.0, 2.0))][:3]
            raise ModelInputError(f"allele counts must be 0, 1 or 2; saw {bad}")
        if Z.shape[0] > 0 and np.any(np.ptp(Z, axis=1) == 0):
            row = int(np.flatnonzero(np.ptp(Z, axis=1) == 0)[0])
            raise ModelInputError(
                f"covariate row {row} is constant; the intercept is implicit"
            )
        if y.size <= Z.shape[0] + 3:
            raise InsufficientSamplesError(
                f"need n > p + 3, got n={y.size}, p={Z.shape[0]}"
            )
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "s", s.astype(np.int8))
        object.__setattr__(self, "Z", Z)

    @property
    def n(self) -> int:
        return self.y.size

    @property
    def p(self) -> int:
        return self.Z.shape[0]


@dataclass
class AcmeFit:
    """Result of the log-of-linear fit.

    beta0 is the baseline raw-scale mean, eta = beta1/beta0 the effect
    size, gamma the covariate coefficients, sigma2 = sse/(n - p - 2).
    """

    beta0: float
    eta: float
    gamma: np.ndarray
    sigma2: float
    sse: float
    se_eta: float
    iterations: int
    converged: bool


@dataclass
class LinearFit:
    """OLS fit result with model-dependent coefficient layout.

    Layouts: log-linear and generic OLS store (intercept, genotype
    coefficients..., gamma...); log-ANCOVA stores (alpha0, alpha1,
    alpha2, gamma...) with NaN for unobserved genotype classes.
    """

    coefficients: np.ndarray
    sse: float
    df_model: int
    model: str = "ols"
    classes_observed: tuple[int, ...] = ()


@dataclass
class TestResult:
    """Nested F-test outcome: statistic, degrees of freedom, p-value."""

    f_stat: float
    df1: int
    df2: int
    p_value: float


@dataclass
class MultiSnpFit:
    """Joint fit of y_i = log(beta0 + sum_j beta_j s_ij) + Z_i'gamma + eps.

    Exploratory: stepwise coordinate refits have no inferential guarantees
    beyond the SSE oracle checks in the test suite.
    """

    beta0: float
    betas: np.ndarray
    etas: np.ndarray
    gamma: np.ndarray
    sse: float
    sweeps: int
    converged: bool
    exploratory: bool = True


class _Residualizer:
    """Projection machinery for the design X = [1, Z'] shared by all fits."""

    def __init__(self, Z: np.ndarray, *, n: int | None = None):
        if n is None:
            n = Z.shape[1]
        X = np.empty((n, Z.shape[0] + 1))
        X[:, 0] = 1.0
        X[:, 1:] = Z.T
        Q, R = np.linalg.qr(X)
        rdiag = np.abs(np.diag(R))
        if rdiag.min() <= X.shape[1] * np.finfo(float).eps * max(rdiag.max(), 1.0):
            raise RankDeficiencyError(
                "covariate design is rank deficient (collinear rows?)"
            )
        self.X = X
        self.Q = Q
        self.R = R
        self.n = n
        self.p = Z.shape[0]

    def residualize(self, v: np.ndarray) -> np.ndarray:
        return v - self.Q @ (self.Q.T @ v)

    def solve_coef(self, v: np.ndarray) -> np.ndarray:
        """Least-squares coefficients of v on X."""
        return np.linalg.solve(self.R, self.Q.T @ v)


@dataclass
class _ProfiledScalars:
    """Sufficient statistics of the profiled 1-D objective.

    With M the residualizer and d1, d2 the indicator vectors of s == 1
    and s == 2, the profiled sum of squares at effect size eta is

        S(eta) = cy - 2*(a1*b1 + a2*b2)
                 + a1^2*g11 + 2*a1*a2*g12 + a2^2*g22,

    where a1 = log(1 + eta), a2 = log(1 + 2*eta), and the scalars are
    inner products of M-residualized y, d1, d2.
    """

    cy: float
    b1: float
    b2: float
    g11: float
    g12: float
    g22: float
    has1: bool
    has2: bool

    @classmethod
    def from_pair(cls, res: _Residualizer, ytil, s):
        d1 = (s == 1).astype(float)
        d2 = (s == 2).astype(float)
        has1 = bool(d1.any())
        has2 = bool(d2.any())
        d1t = res.residualize(d1) if has1 else np.zeros_like(ytil)
        d2t = res.residualize(d2) if has2 else np.zeros_like(ytil)
        return (
            cls(
                cy=float(ytil @ ytil),
                b1=float(d1t @ ytil),
                b2=float(d2t @ ytil),
                g11=float(d1t @ d1t),
                g12=float(d1t @ d2t),
                g22=float(d2t @ d2t),
                has1=has1,
                has2=has2,
            ),
            d1t,
            d2t,
        )

    def _terms(self, eta):
        # a2 is only touched when s == 2 occurs, so eta <= -0.5 cannot
        # poison the objective for genotypes supported on {0, 1}.
        a1 = np.log1p(eta) if self.has1 else np.zeros_like(np.asarray(eta, float))
        a2 = np.log1p(2.0 * eta) if self.has2 else np.zeros_like(np.asarray(eta, float))
        return a1, a2

    def sse(self, eta):
        a1, a2 = self._terms(eta)
        return (
            self.cy
            - 2.0 * (a1 * self.b1 + a2 * self.b2)
            + a1 * a1 * self.g11
            + 2.0 * a1 * a2 * self.g12
            + a2 * a2 * self.g22
        )

    def derivatives(self, eta: float) -> tuple[float, float, float]:
        """(S, S', S'') at a scalar eta."""
        a1, a2 = self._terms(eta)
        if self.has1:
            da1, dda1 = 1.0 / (1.0 + eta), -1.0 / (1.0 + eta) ** 2
        else:
            da1 = dda1 = 0.0
        if self.has2:
            da2, dda2 = 2.0 / (1.0 + 2.0 * eta), -4.0 / (1.0 + 2.0 * eta) ** 2
        else:
            da2 = dda2 = 0.0
        s0 = (
            self.cy
            - 2.0 * (a1 * self.b1 + a2 * self.b2)
            + a1 * a1 * self.g11
            + 2.0 * a1 * a2 * self.g12
            + a2 * a2 * self.g22
        )
        s1 = (
            -2.0 * (da1 * self.b1 + da2 * self.b2)
            + 2.0 * a1 * da1 * self.g11
            + 2.0 * (da1 * a2 + a1 * da2) * self.g12
            + 2.0 * a2 * da2 * self.g22
        )
        s2 = (
            -2.0 * (dda1 * self.b1 + dda2 * self.b2)
            + 2.0 * (da1 * da1 + a1 * dda1) * self.g11
            + 2.0 * (dda1 * a2 + 2.0 * da1 * da2 + a1 * dda2) * self.g12
            + 2.0 * (da2 * da2 + a2 * dda2) * self.g22
        )
        return float(s0), float(s1), float(s2)


def _minimize_profiled(
    scalars: _ProfiledScalars,
    smax: int,
    eta_init: float,
    n: int,
    *,
    grad_tol_scale: float = 1e-10,
    rel_sse_tol: float = 1e-12,
    max_iter: int = 100,
    eta_upper: float = ETA_UPPER,
    coarse_points: int = COARSE_POINTS,
) -> tuple[float, float, int, bool]:
    """Safeguarded Newton minimization of the profiled objective.

    Returns (eta, sse, iterations, converged).  The bracket is
    (-1/smax + margin, eta_upper); a coarse scan uniform in
    log(1 + smax*eta) picks the starting basin, then Newton steps are
    taken whenever they stay inside the current sign-change bracket and
    have positive curvature, with bisection otherwise.
    """
    lo0 = -1.0 / smax + BRACKET_MARGIN
    hi0 = eta_upper
    grad_tol = grad_tol_scale * n

    # coarse scan, uniform in g = log(1 + smax*eta)
    g = np.linspace(np.log1p(smax * lo0), np.log1p(smax * hi0), coarse_points)
    grid = np.expm1(g) / smax
    eta_init = min(max(eta_init, lo0), hi0)
    grid = np.unique(np.append(grid, eta_init))
    # domain safety: every candidate keeps the log arguments positive
    assert 1.0 + smax * grid[0] > 0.0
    values = scalars.sse(grid)
    k = int(np.argmin(values))
    eta = float(grid[k])
    lo = float(grid[k - 1]) if k > 0 else lo0
    hi = float(grid[k + 1]) if k + 1 < grid.size else hi0

    best_eta, best_sse = eta, float(values[k])
    prev_sse = math.inf
    converged = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        sse, grad, curv = scalars.derivatives(eta)
        if sse < best_sse:
            best_eta, best_sse = eta, sse
        if abs(grad) < grad_tol:
            converged = True
            break
        if grad > 0.0:
            hi = eta
        else:
            lo = eta
        if curv > 0.0:
            cand = eta - grad / curv
            if not lo < cand < hi:
                cand = 0.5 * (lo + hi)
        else:
            cand = 0.5 * (lo + hi)
        # near-zero SSE quantizes at machine precision while the analytic
        # gradient still resolves the minimum, so a flat objective only
        # stops the loop once the proposed step is itself sub-resolution
        plateau = abs(prev_sse - sse) <= rel_sse_tol * max(1.0, abs(sse))
        step_resolved = abs(cand - eta) <= 1e-14 * max(1.0, abs(eta))
        if (plateau and step_resolved) or hi - lo <= 1e-14 * max(1.0, abs(eta)):
            break
        prev_sse = sse
        eta = cand
        assert 1.0 + smax * eta > 0.0, "iterate left the positivity domain"

    # settle on the point returned; a gradient-converged exit wins SSE
    # ties within quantization noise of the expanded quadratic form,
    # which earlier iterates reach spuriously on near-noiseless data
    sse_exit, grad_exit, _ = scalars.derivatives(eta)
    noise = rel_sse_tol * max(1.0, abs(scalars.cy)) if converged else 0.0
    if sse_exit <= best_sse + noise:
        best_eta, best_sse, grad_best = eta, sse_exit, grad_exit
    else:
        _, grad_best, _ = scalars.derivatives(best_eta)
    converged = abs(grad_best) < grad_tol
    if not converged:
        logger.debug(
            "profiled Newton stopped after %d iterations, |grad|=%.3e",
            iterations,
            abs(grad_best),
        )
    return best_eta, best_sse, iterations, converged


def _eta_standard_error(res, s, eta, resid, sigma2):
    """Delta-method SE of eta from the observed information.

    The information of (log beta0, eta, gamma) is (J'J + A)/sigma2 with
    J the Jacobian of the mean and A zero except for the (eta, eta)
    entry sum_i resid_i * s_i^2/(1 + eta*s_i)^2.  By block inversion the
    (eta, eta) entry of the inverse is 1/(||M j||^2 + A), with j the eta
    column of J and M the residualizer.
    """
    sf = s.astype(float)
    j = sf / (1.0 + eta * sf)
    jtil = res.residualize(j)
    a_term = float(resid @ (sf * sf / (1.0 + eta * sf) ** 2))
    denom = float(jtil @ jtil) + a_term
    scale = float(j @ j)
    if denom <= 1e-10 * max(scale, 1.0):
        raise SingularInformationError(
            "observed information for eta is numerically singular "
            f"(denominator {denom:.3e} against scale {scale:.3e}); "
            "the SNP is nearly monomorphic after covariate adjustment",
            denominator=denom,
            scale=scale,
        )
    return math.sqrt(sigma2 / denom)


def fit_acme(
    pair: GenePair,
    *,
    grad_tol_scale: float = 1e-10,
    rel_sse_tol: float = 1e-12,
    max_iter: int = 100,
    eta_upper: float = ETA_UPPER,
    coarse_points: int = COARSE_POINTS,
) -> AcmeFit:
    """Fit the log-of-linear model by profiled 1-D Newton iteration.

    For fixed eta the model is linear in (log beta0, gamma); those are
    profiled out through a QR factorization of [1, Z'] that is constant
    in eta, making each objective evaluation O(1) after the setup.  The
    search is initialized at eta = exp(theta1) - 1 from the log-linear
    slope and safeguarded by a coarse scan plus bracket bisection.

    Raises MonomorphicGenotypeError when s is constant and
    RankDeficiencyError when the covariate design is collinear.  A fit
    that exhausts max_iter returns the best iterate with
    converged=False rather than raising.
    """
    s = pair.s
    if np.all(s == s[0]):
        raise MonomorphicGenotypeError("all allele counts equal; eta unidentifiable")
    res = _Residualizer(pair.Z, n=pair.n)
    ytil = res.residualize(pair.y)
    scalars, d1t, d2t = _ProfiledScalars.from_pair(res, ytil, s)

    # log-linear slope mapped through eta = exp(theta1) - 1, the exact
    # correspondence of the two models at small effects
    stil = d1t + 2.0 * d2t
    ss = float(stil @ stil)
    theta1 = float(stil @ ytil) / ss if ss > 0 else 0.0
    eta_init = math.expm1(min(max(theta1, -30.0), 30.0))

    smax = int(s.max())
    eta, _, iterations, converged = _minimize_profiled(
        scalars,
        smax,
        eta_init,
        pair.n,
        grad_tol_scale=grad_tol_scale,
        rel_sse_tol=rel_sse_tol,
        max_iter=max_iter,
        eta_upper=eta_upper,
        coarse_points=coarse_points,
    )

    a1 = math.log1p(eta) if scalars.has1 else 0.0
    a2 = math.log1p(2.0 * eta) if scalars.has2 else 0.0
    resid = ytil - a1 * d1t - a2 * d2t
    sse = float(resid @ resid)
    u = np.where(s == 1, a1, 0.0) + np.where(s == 2, a2, 0.0)
    coef = res.solve_coef(pair.y - u)
    sigma2 = sse / (pair.n - pair.p - 2)
    se_eta = _eta_standard_error(res, s, eta, resid, sigma2)
    return AcmeFit(
        beta0=math.exp(coef[0]),
        eta=eta,
        gamma=coef[1:].copy(),
        sigma2=sigma2,
        sse=sse,
        se_eta=se_eta,
        iterations=iterations,
        converged=converged,
    )


def fit_log_linear(pair: GenePair) -> LinearFit:
    """OLS of y on (1, s, Z rows); coefficients are (theta0, theta1, gamma)."""
    if np.all(pair.s == pair.s[0]):
        raise MonomorphicGenotypeError("all allele counts equal")
    return fit_ols(pair.y, pair.s.astype(float), pair.Z, model="log_linear")


def fit_log_ancova(pair: GenePair) -> LinearFit:
    """OLS on genotype-class indicators plus covariates.

    Coefficients are (alpha0, alpha1, alpha2, gamma...) with NaN for
    genotype classes absent from the sample; df_model is the number of
    observed classes minus one.  A missing class is not an error: the
    model collapses to fewer levels and the caller can see that from
    classes_observed.
    """
    s = pair.s
    classes = tuple(int(c) for c in np.unique(s))
    if len(classes) < 2:
        raise MonomorphicGenotypeError("all allele counts equal")
    cols = [(s == c).astype(float) for c in classes]
    design = np.column_stack(cols + [row for row in pair.Z])
    coef, sse = _lstsq_checked(design, pair.y)
    alphas = np.full(3, np.nan)
    for c, value in zip(classes, coef[: len(classes)]):
        alphas[c] = value
    coefficients = np.concatenate([alphas, coef[len(classes):]])
    return LinearFit(
        coefficients=coefficients,
        sse=sse,
        df_model=len(classes) - 1,
        model="log_ancova",
        classes_observed=classes,
    )


def fit_ols(
    response: np.ndarray,
    genotype_design: np.ndarray | None,
    Z: np.ndarray | None,
    *,
    model: str = "ols",
) -> LinearFit:
    """Shared OLS engine: response on (intercept, genotype columns, Z rows).

    genotype_design may be a length-n vector, an n x k matrix, or None
    for the covariate-only reduced model.  Coefficients are laid out as
    (intercept, genotype..., gamma...).
    """
    y = np.asarray(response, dtype=float).ravel()
    n = y.size
    blocks = [np.ones((n, 1))]
    k = 0
    if genotype_design is not None:
        G = np.asarray(genotype_design, dtype=float)
        if G.ndim == 1:
            G = G[:, None]
        if G.shape[0] != n:
            raise ModelInputError(
                f"genotype design has {G.shape[0]} rows, expected {n}"
            )
        k = G.shape[1]
        blocks.append(G)
    if Z is not None and np.size(Z) > 0:
        Zm = np.atleast_2d(np.asarray(Z, dtype=float))
        if Zm.shape[1] != n:
            raise ModelInputError(f"Z has {Zm.shape[1]} columns, expected {n}")
        blocks.append(Zm.T)
    design = np.hstack(blocks)
    if not np.all(np.isfinite(design)) or not np.all(np.isfinite(y)):
        raise NonFiniteInputError("design and response must be finite")
    coef, sse = _lstsq_checked(design, y)
    return LinearFit(coefficients=coef, sse=sse, df_model=k, model=model)


def _lstsq_checked(design: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, float]:
    coef, _, rank, _ = np.linalg.lstsq(design, y, rcond=None)
    if rank < design.shape[1]:
        raise RankDeficiencyError(
            f"design has rank {rank} < {design.shape[1]} columns"
        )
    resid = y - design @ coef
    return coef, float(resid @ resid)


def _nested_f(reduced_sse: float, full_sse: float, df1: int, df2: int) -> TestResult:
    """Shared nested-SSE F machinery with the degenerate-case conventions."""
    if df1 <= 0 or df2 <= 0:
        raise ModelInputError(f"degrees of freedom must be positive, got ({df1}, {df2})")
    if not (np.isfinite(full_sse) and np.isfinite(reduced_sse)) or full_sse < 0:
        raise ModelInputError("sums of squares must be finite and nonnegative")
    diff = reduced_sse - full_sse
    if diff < 0:
        logger.warning(
            "negative SSE difference %.3e clamped to 0 (numerical nesting violation)",
            diff,
        )
        diff = 0.0
    if diff == 0.0:
        return TestResult(f_stat=0.0, df1=df1, df2=df2, p_value=1.0)
    if full_sse == 0.0:
        return TestResult(f_stat=math.inf, df1=df1, df2=df2, p_value=0.0)
    f_stat = (diff / df1) / (full_sse / df2)
    return TestResult(
        f_stat=f_stat, df1=df1, df2=df2, p_value=float(stats.f.sf(f_stat, df1, df2))
    )


def f_test_association(full_sse: float, reduced_sse: float, n: int, p: int) -> TestResult:
    """F-test of the 1-parameter genotype term against F(1, n-p-2).

    full_sse is the genotype model's residual sum of squares, reduced_sse
    the covariate-only model's.  Exact zeros follow the conventions:
    equal SSEs give F=0, p=1; a perfect full fit with positive numerator
    gives an infinite F with p=0.  Negative differences are clamped.
    """
    return _nested_f(reduced_sse, full_sse, 1, n - p - 2)


def f_test_gof(small_sse: float, ancova_sse: float, n: int, p: int) -> TestResult:
    """Goodness-of-fit F of a 1-genotype-parameter model against ANCOVA.

    F = (SSE_small - SSE_ancova) / (SSE_ancova / (n - p - 3)) on
    (1, n - p - 3) degrees of freedom.  Requires all three genotype
    classes; with a collapsed ANCOVA the numerator df would be zero and
    the caller should skip the test instead.
    """
    return _nested_f(small_sse, ancova_sse, 1, n - p - 3)


def effect_size_se(fit: AcmeFit, pair: GenePair) -> float:
    """Delta-method standard error of eta at the fitted parameters.

    Uses the observed information of (log beta0, eta, gamma) with the
    error variance profiled out at sigma2 = sse/(n - p - 2); the second
    derivative of the mean with respect to eta contributes the residual
    weighted term that a pure Gauss-Newton approximation would drop.
    Raises SingularInformationError with condition diagnostics when the
    adjusted genotype direction carries no information.
    """
    res = _Residualizer(pair.Z, n=pair.n)
    s = pair.s
    a1 = math.log1p(fit.eta) if bool((s == 1).any()) else 0.0
    a2 = math.log1p(2.0 * fit.eta) if bool((s == 2).any()) else 0.0
    u = np.where(s == 1, a1, 0.0) + np.where(s == 2, a2, 0.0)
    resid = res.residualize(pair.y - u)
    return _eta_standard_error(res, s, fit.eta, resid, fit.sigma2)


def predict_expression(fit: AcmeFit, allele_count: int) -> float:
    """Systematic raw-scale expression beta0 * (1 + eta * allele_count).

    This is the noise-free (1 + count) prediction at covariates zero.
    """
    if allele_count not in (0, 1, 2):
        raise ModelInputError(f"allele_count must be 0, 1 or 2, got {allele_count!r}")
    return fit.beta0 * (1.0 + fit.eta * allele_count)


def _minimize_generic_1d(res, ytarget_til, t, *, coarse, grad_tol, max_iter):
    """Newton/bisection minimization of ||M(ytarget - log(1 + b*t))||^2.

    t >= 0 elementwise; the bracket keeps 1 + b*t positive.  Used by the
    multi-SNP coordinate steps where the profiled O(1) trick does not
    apply because t is not an indicator combination.
    """
    tmax = float(t.max())
    lo0 = -1.0 / tmax + BRACKET_MARGIN
    hi0 = ETA_UPPER

    def derivs(b):
        m = 1.0 + b * t
        v = np.log1p(b * t)
        e = ytarget_til - res.residualize(v)
        vb = t / m
        vbt = res.residualize(vb)
        sse = float(e @ e)
        grad = -2.0 * float(vb @ e)
        curv = 2.0 * float(vbt @ vbt) + 2.0 * float((t * t / (m * m)) @ e)
        return sse, grad, curv

    if coarse:
        g = np.linspace(np.log1p(tmax * lo0), np.log1p(tmax * hi0), 33)
        grid = np.expm1(g) / tmax
        values = [derivs(b)[0] for b in grid]
        k = int(np.argmin(values))
        b = float(grid[k])
        lo = float(grid[k - 1]) if k > 0 else lo0
        hi = float(grid[k + 1]) if k + 1 < grid.size else hi0
    else:
        b, lo, hi = 0.0, lo0, hi0

    best = (math.inf, b)
    converged = False
    for _ in range(max_iter):
        sse, grad, curv = derivs(b)
        if sse < best[0]:
            best = (sse, b)
        if abs(grad) < grad_tol:
            converged = True
            break
        if grad > 0.0:
            hi = b
        else:
            lo = b
        if curv > 0.0:
            cand = b - grad / curv
            if not lo < cand < hi:
                cand = 0.5 * (lo + hi)
        else:
            cand = 0.5 * (lo + hi)
        if hi - lo <= 1e-14 * max(1.0, abs(b)):
            break
        b = cand
    return best[1], best[0], converged


def fit_multi_snp_stepwise(
    y: np.ndarray,
    S: np.ndarray,
    Z: np.ndarray | None,
    *,
    max_sweeps: int = 50,
    sse_tol: float = 1e-12,
    max_snps: int = 10,
) -> MultiSnpFit:
    """Stepwise fit of the multi-SNP model with additive raw-scale loci.

    Model: y_i = log(beta0 + sum_j beta_j s_ij) + Z_i' gamma + eps_i.
    Writing eta_j = beta_j/beta0, each coordinate step profiles out the
    linear block and solves a 1-D problem in eta_j with the other
    coordinates held in an offset, cycling until the SSE improvement
    per sweep drops below tolerance.  Positivity of the inner sum is
    enforced through per-coordinate brackets.  Exploratory.
    """
    y = np.asarray(y, dtype=float).ravel()
    S = np.atleast_2d(np.asarray(S, dtype=float))
    k, n = S.shape
    if k > max_snps:
        raise ModelInputError(f"stepwise fitting supports at most {max_snps} SNPs, got {k}")
    if n != y.size:
        raise ModelInputError("y and S disagree on sample count")
    if not np.all(np.isin(S, (0.0, 1.0, 2.0))):
        raise ModelInputError("allele counts must be 0, 1 or 2")
    for j in range(k):
        if np.all(S[j] == S[j, 0]):
            raise MonomorphicGenotypeError(f"SNP row {j} is monomorphic")
    if Z is None:
        Z = np.empty((0, n))
    Z = np.atleast_2d(np.asarray(Z, dtype=float))
    p = Z.shape[0]
    if n <= p + k + 2:
        raise InsufficientSamplesError(f"need n > p + k + 2, got n={n}")

    res = _Residualizer(Z, n=n)
    etas = np.zeros(k)
    q = np.ones(n)
    grad_tol = 1e-10 * n

    def total_sse():
        e = res.residualize(y - np.log(q))
        return float(e @ e)

    prev = total_sse()
    converged = False
    sweeps = 0
    for sweeps in range(1, max_sweeps + 1):
        for j in range(k):
            q_minus = q - etas[j] * S[j]
            assert np.all(q_minus > 0.0), "offset left the positivity domain"
            t = S[j] / q_minus
            ytarget = y - np.log(q_minus)
            ytarget_til = res.residualize(ytarget)
            b, _, _ = _minimize_generic_1d(
                res,
                ytarget_til,
                t,
                coarse=(sweeps == 1),
                grad_tol=grad_tol,
                max_iter=100,
            )
            etas[j] = b
            q = q_minus * (1.0 + b * t)
        cur = total_sse()
        if prev - cur < sse_tol * max(1.0, prev):
            converged = True
            break
        prev = cur

    rhs = y - np.log(q)
    coef = res.solve_coef(rhs)
    resid = rhs - res.X @ coef
    beta0 = math.exp(coef[0])
    return MultiSnpFit(
        beta0=beta0,
        betas=etas * beta0,
        etas=etas.copy(),
        gamma=coef[1:].copy(),
        sse=float(resid @ resid),
        sweeps=sweeps,
        converged=converged,
    )
