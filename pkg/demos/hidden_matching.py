"""
Hidden Matching with a one-qubit-per-bit message
================================================

Alice holds f, Bob holds x. A phase state on n qubits wins every time,
while revealing a handful of classical positions rarely does.
"""

import numpy as np
from mfsep.hmgame import (estimate_success, hm_classical_baseline, hm_quantum,
                          hm_random_guess)

rng = np.random.default_rng(3)
n = 8
trials = 500

q = estimate_success(hm_quantum, n, trials, rng)
print("quantum  ", q.rate, (round(q.low, 3), round(q.high, 3)), "bits:", q.mean_cost_bits)

g = estimate_success(hm_random_guess, n, trials, rng)
print("guess    ", g.rate, (round(g.low, 3), round(g.high, 3)))

# a classical message needs about sqrt(2^n) revealed positions before a
# matched pair shows up
for c in [4, 16, 64]:
    s = estimate_success(lambda inst, r: hm_classical_baseline(c, inst, r), n, trials, rng)
    print("classical c=%-3d" % c, round(s.rate, 3), "bits:", s.mean_cost_bits)
