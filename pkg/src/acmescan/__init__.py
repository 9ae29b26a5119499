"""Cis-eQTL effect sizes under a log-of-linear expression model.

The package fits y_i = log(beta0 + beta1*s_i) + Z_i'gamma + eps_i per
gene-SNP pair, reports the effect size eta = beta1/beta0 with a
delta-method standard error, tests association and goodness of fit
against nested baselines, and scales the whole thing to a parallel
cis scan with simulation and calibration tooling on the side.
"""

__version__ = "0.1.0"

from .model import (
    AcmeFit,
    GenePair,
    InsufficientSamplesError,
    LinearFit,
    ModelInputError,
    MonomorphicGenotypeError,
    MultiSnpFit,
    NonFiniteInputError,
    RankDeficiencyError,
    SingularInformationError,
    TestResult,
    effect_size_se,
    f_test_association,
    f_test_gof,
    fit_acme,
    fit_log_ancova,
    fit_log_linear,
    fit_multi_snp_stepwise,
    fit_ols,
    predict_expression,
)
from .transforms import (
    box_cox,
    library_normalize,
    log1p_counts,
    quantile_normalize,
    sample_skewness,
)
from .simulate import (
    BenchResult,
    NullStudyResult,
    PowerTable,
    QQData,
    SimConfig,
    SimulatedPair,
    TailErrorEstimate,
    benchmark_fitters,
    estimate_tail_type1,
    genomic_inflation,
    hwe_genotypes,
    qq_data,
    run_null_study,
    run_power_experiment,
    sample_skew_normal,
    shape_delta_for_skewness,
    simulate_acme_pair,
    simulate_null_resampled,
    skew_normal_logpdf,
    skew_normal_skewness,
    w_effect,
)
from .scan import (
    DataBundle,
    ExpressionMatrix,
    FailureRecord,
    GenotypeMatrix,
    ModelComparison,
    ScanInputError,
    ScanRecord,
    acme_effects,
    compare_models,
    enumerate_cis_pairs,
    ll_effects,
    load_matrices,
    qn_effects,
    read_scan_tsv,
    run_cis_scan,
    scan_to_tsv,
    write_bundle,
)

__all__ = [name for name in dir() if not name.startswith("_")]
