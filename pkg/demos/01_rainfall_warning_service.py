"""A three-category heavy rainfall service scored with FIRM.

Categories: at most 50 mm, 50 to 100 mm, above 100 mm. Misses cost three
times as much as false alarms (alpha = 0.75), and errors across the 100 mm
threshold weigh four times as much as those across 50 mm.
"""

import numpy as np

from firm import ContingencyTable, FirmSpec, PiecewiseLinearCdf, directive_category, mean_score, scoring_matrix
from firm.verification import collapse_to_binary, estimate_alpha_naive, estimate_alpha_signal_detection, far, pod

spec = FirmSpec(thresholds=(50, 100), weights=(1, 4), alpha=0.75)

# %% The scoring matrix: rows are forecast categories, columns observed.
S = scoring_matrix(spec)
print("scoring matrix\n", S)

# %% Turning a predictive distribution into a category.
# The forecaster issues the category holding the 0.75-quantile.
F = PiecewiseLinearCdf.from_quantiles([0.25, 0.5, 0.75, 0.9], [5.0, 30.0, 60.0, 110.0], lower_bound=0.0)
print("0.75-quantile:", F.quantile(0.75), "-> category", directive_category(F, spec))

# %% Scoring a season of forecasts from its contingency table.
tables = {
    "OCF": ContingencyTable(np.array([[77984, 259, 37], [199, 136, 50], [6, 15, 27]])),
    "Official": ContingencyTable(np.array([[77658, 165, 13], [451, 171, 36], [80, 74, 65]])),
}
for name, table in tables.items():
    ms = mean_score(table, S)
    print(f"{name:9s} mean {ms.total:.3e}  misses {ms.miss:.3e} ({ms.miss / ms.total:.0%})")

# %% POD and FAR say little about whether the service honoured its risk level.
# The implied risk parameter is more telling.
for name, table in tables.items():
    b = collapse_to_binary(table)
    print(f"{name:9s} POD {pod(b):.2f}  FAR {far(b):.2f}  "
          f"alpha naive {estimate_alpha_naive(b):.2f}  signal detection {estimate_alpha_signal_detection(b):.2f}")
