"""Expected truncated swap rate E[min(1, S)] for a log-normal S.

Compares the closed form with Monte-Carlo and with the exponential tail
estimate. The estimate is an order-of-magnitude rate for large sigma, so at
small sigma and negative u it can sit below the true value. Noise in the
energy estimate (larger sigma) drives the expected acceptance towards zero
even when the mean rate is 1 (u = 0).

    python3 demos/truncated_swap_rate.py
"""

import numpy as np

from vrresgld import lognormal_bound, lognormal_truncated_mean, mc_truncated_mean

rng = np.random.default_rng(0)
print(f"{'u':>5s} {'sigma':>6s} {'closed':>9s} {'monte-carlo':>18s} {'bound':>9s}")
for u in (-2.0, 0.0, 2.0):
    for sigma in (0.5, 1.0, 2.0, 4.0, 8.0):
        mean, se = mc_truncated_mean(u, sigma, 10**6, rng)
        print(f"{u:5.1f} {sigma:6.1f} {lognormal_truncated_mean(u, sigma):9.5f} "
              f"{mean:9.5f} +/- {se:.5f} {lognormal_bound(u, sigma):9.4g}")
