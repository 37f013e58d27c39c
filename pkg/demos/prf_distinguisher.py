"""
Distinguishing PRF oracles from random ones
===========================================

A measure-first learner that worked on PRF-keyed functions would give a
distinguisher. With the shadow strategy the acceptance rates are the same
within error.
"""

import numpy as np
from mfsep import Strategy
from mfsep.prfcrypto import DEFAULT_SPEC, estimate_advantage, prf_table, sample_key

rng = np.random.default_rng(11)

key = sample_key(DEFAULT_SPEC, rng)
table = prf_table(DEFAULT_SPEC, key, 10)
print("fraction of ones:", table.mean())

n = 4
report = estimate_advantage(DEFAULT_SPEC, Strategy.shadow(40), n, 300, rng)
print("p_prf", report.p_prf, "p_rand", report.p_rand)
print("gap", round(report.gap, 3), "CI", np.round(report.gap_ci, 3))
print("consistent with zero:", report.gap_consistent_with_zero)
