"""
Fuzzy Potts: merging symbols
============================

Three Potts states, two of them painted the same colour.  The conditional
of the painted chain is a ratio of two averages taken under the Potts chain
restricted to the colouring.
"""

import itertools

from gibbs1d.lattice import Interval, SpinConfig
from gibbs1d.potential import potts, truncation
from gibbs1d.transform import (
    conditional_table_bruteforce,
    constrained_consistency_check,
    constrained_first_layer,
    fuzzy_potts_map,
    transformed_conditional_firstlayer_deterministic,
)

pot = potts(3, 0.4)
phi = fuzzy_potts_map()  # 1, 2 -> a ; 3 -> b
trunc = truncation(pot, 1)
boundary = SpinConfig.constant(pot.alphabet, Interval(-8, 8), "1")

eta = SpinConfig.from_symbols(phi.target, Interval(-2, 2), "aabab")
layer = constrained_first_layer(pot, phi, Interval(-2, 2), boundary, eta, trunc)
print(f"compatible first-layer configurations: {layer.support_size} of {3 ** 4}")

n = 2
table = conditional_table_bruteforce(pot, phi, n, boundary, trunc)
worst = 0.0
for idx in itertools.product(range(2), repeat=2 * n + 1):
    eta = SpinConfig(phi.target, Interval(-n, n), idx)
    v = transformed_conditional_firstlayer_deterministic(pot, phi, n, eta, boundary, trunc)
    worst = max(worst, abs(v - table[idx]))
print(f"ratio of averages vs brute force: {worst:.1e}")

eta = SpinConfig.from_symbols(phi.target, Interval(-3, 3), "abbaaba")
err = constrained_consistency_check(pot, phi, Interval(-1, 1), Interval(-3, 3), boundary, eta, trunc)
print(f"nested-volume consistency of the constrained kernels: {err:.1e}")
