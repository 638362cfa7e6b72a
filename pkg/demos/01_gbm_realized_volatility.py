"""Simulate a GBM price path and see realized volatility converge to
integrated variance as the intraday sampling rate rises.

Run: python3 demos/01_gbm_realized_volatility.py
"""

import numpy as np

from volforge import GbmSpec, log_returns, realized_volatility, simulate_gbm
from volforge.synth import rv_consistency_probe

# one trading year of daily buckets, 390 one-minute bars each, sigma = 20%/yr
spec = GbmSpec(sigma=0.2, dt=1.0 / (252 * 390), steps_per_bucket=390,
               buckets=252, seed=7)
prices, iv = simulate_gbm(spec)
print(f"simulated {len(prices)} prices over {spec.buckets} days")

rv = realized_volatility(log_returns(prices), "day")
print(f"true per-day integrated variance: {iv[0]:.3e}")
print(f"mean RV^2 across days:            {np.mean(rv.rv ** 2):.3e}")
print(f"relative bias:                    {np.mean(rv.rv ** 2) / iv[0] - 1:+.2%}")

# hold the bucket duration fixed and vary how finely each day is sampled
print("\nsampling-rate sweep (same days, fewer bars per day):")
print(f"{'bars/day':>9} {'mean |RV^2/IV - 1|':>20}")
for row in rv_consistency_probe(spec, [13, 39, 78, 390]):
    print(f"{row['m']:>9} {row['mean_rel_error']:>20.4f}")
print("\nfiner sampling, tighter estimate: RV^2 -> IV as bars/day grows.")
