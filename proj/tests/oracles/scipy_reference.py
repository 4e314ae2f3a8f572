#!/usr/bin/env python3
"""Reference values from scipy, pinned in stats_test.cpp."""
import numpy as np
from scipy import stats

x20 = np.random.default_rng(20240601).uniform(0.0, 10.0, 20)
for name, s in {
    "n20_uniform": x20,
    "n5": [2.1, 3.4, 1.9, 5.6, 4.4],
    "n11_skewed": [1, 1.2, 1.3, 1.5, 2, 2.2, 3, 4.5, 7, 9.5, 15],
    "n12": [4.9, 5.1, 5.0, 6.2, 4.4, 5.8, 5.3, 4.7, 5.6, 5.2, 6.0, 4.1],
    "n3": [1.0, 2.0, 4.0],
}.items():
    r = stats.shapiro(s)
    print(f"shapiro {name}: W={r.statistic:.9f} p={r.pvalue:.9f}")

a = [3, 5, 5, 7, 9, 9, 9, 12, 14, 15, 18]
b = [1, 2, 2, 4, 5, 6, 8, 8, 10, 11]
r = stats.mannwhitneyu(a, b, alternative="two-sided", method="asymptotic", use_continuity=True)
print(f"mwu asymptotic ties: U={r.statistic} p={r.pvalue:.12f}")
r = stats.mannwhitneyu([1.5, 2.5, 7.1, 3.3, 9.0, 4.2], [5.5, 6.6, 8.1, 9.9, 10.4, 12.0, 11.1], alternative="two-sided", method="exact")
print(f"mwu exact: U={r.statistic} p={r.pvalue:.12f}")
print(f"f.sf(13.5,1,4) = {stats.f.sf(13.5, 1, 4):.12f}")
print(f"oneway 3 groups: {stats.f_oneway([2.0, 3.1, 4.5, 3.3], [5.2, 6.1, 5.9], [4.0, 4.4, 3.9, 5.0, 4.8])}")
