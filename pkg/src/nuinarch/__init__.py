"""Nearly unstable Poisson INARCH(1) count series: simulation, limit laws and inference."""
from .model import (
    InarchParams,
    NearlyUnstableSpec,
    autocov,
    cls_avar_from_moments,
    limiting_mean_scale,
    marginal_mean,
    marginal_var,
    stationary_cls_avar,
    w_cov_limit,
)
from .simulate import (
    CountSeries,
    RngStream,
    StepPath,
    normalize_path,
    poisson_draw,
    simulate_inarch,
    simulate_nu_inarch,
)
from .estimate import ClsFit, CmlFit, cls_alpha, cml_fit, predicted_means
from .infer import (
    CiResult,
    EmpiricalDistribution,
    UrtResult,
    ci_nearly_unstable,
    ci_stationary,
    quantile,
    unit_root_test,
)
from .cir import (
    CirParams,
    CirPath,
    CriticalTable,
    LimitLawSampler,
    limit_functional,
    sample_limit,
    simulate_cir,
)
from .harness import (
    ExperimentReport,
    McConfig,
    kde,
    qq_pairs,
    run_coverage,
    run_power,
    run_size,
    standardized_estimates,
)

__version__ = "0.1.0"
