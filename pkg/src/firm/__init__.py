"""Fixed-risk multicategory (FIRM) scoring of ordered categorical forecasts."""

from .distributions import (
    EmpiricalSample,
    Gaussian,
    HuberParams,
    PiecewiseLinearCdf,
    PointMassExponentialTail,
    PredictiveDistribution,
    SolverError,
    category_probabilities,
    cdf,
    expectile,
    huber_quantile,
    huber_residual,
    is_quantile,
    quantile,
)
from .scores import (
    FirmScore,
    FirmSpec,
    binary_likelihood_matrix,
    binary_likelihood_score,
    category_of,
    directive_category,
    elementary_huber_score,
    elementary_quantile_score,
    expected_elementary_quantile_score,
    expected_firm_scores,
    firm_score,
    firm_scores,
    scoring_matrix,
)
from .verification import (
    BinaryCounts,
    CategoricalForecastCase,
    ContingencyTable,
    UndefinedMeasureError,
    collapse_to_binary,
    mean_score,
    tabulate,
    tabulate_cases,
)

__version__ = "0.1.0"
