"""Is system A better than system B? Intervals for daily mean score differences.

Daily score differentials are serially correlated, so the Student t
interval is too narrow. The Diebold-Mariano interval and the circular block
bootstrap allow for this.
"""

import numpy as np
from scipy import signal

from firm.inference import (
    circular_block_bootstrap_ci,
    diebold_mariano_ci,
    lag1_correlation,
    one_sided_test,
    student_t_ci,
)

rng = np.random.default_rng(1)
n = 731  # two years of days
noise = signal.lfilter([1.0], [1.0, -0.34], rng.standard_normal(n + 200))[200:]
diff = 0.1 + 0.5 * noise  # A scores worse than B by 0.1 on average

print(f"lag-1 correlation {lag1_correlation(diff):.2f}")
for ci in (student_t_ci(diff), diebold_mariano_ci(diff, horizon=2),
           circular_block_bootstrap_ci(diff, block_length=27, replicates=27000, seed=0)):
    print(f"{ci.method:10s} [{ci.lower:+.4f}, {ci.upper:+.4f}]")

# %% One-sided: reject "A is no worse than B"?
print(one_sided_test(diff, "bootstrap", alternative="greater", block_length=27))
