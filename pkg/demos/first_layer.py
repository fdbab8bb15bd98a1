"""
Transformed conditionals, two ways
==================================

A nearest-neighbour Ising chain seen through a noisy binary channel.  The
image is no longer Markov, but its single-site conditionals can still be
written as the average of a local function under an ordinary Gibbs measure
whose single-site terms remember the observed image.
"""

import itertools

import numpy as np

from gibbs1d.lattice import Interval, SpinConfig, ising_alphabet
from gibbs1d.potential import nearest_neighbor_ising, truncation
from gibbs1d.transform import (
    conditional_table_bruteforce,
    flip_kernel,
    transformed_conditional_firstlayer_stochastic,
)

A = ising_alphabet()
pot = nearest_neighbor_ising(0.8)
trunc = truncation(pot, 1)
kernel = flip_kernel(A, 0.1)
boundary = SpinConfig.constant(A, Interval(-10, 10), "+")

# brute force: push the whole window through the channel and divide
n = 3
table = conditional_table_bruteforce(pot, kernel, n, boundary, trunc)

# first layer: one Gibbs computation per observed window
gaps = []
for idx in itertools.product(range(2), repeat=2 * n + 1):
    xi = SpinConfig(A, Interval(-n, n), idx)
    v = transformed_conditional_firstlayer_stochastic(pot, kernel, n, xi, boundary, trunc)
    gaps.append(abs(v - table[idx]))
print(f"{len(gaps)} windows, largest disagreement {max(gaps):.1e}")

# the conditional depends on far-away image spins, a little
for far in ("+", "-"):
    xi = SpinConfig.from_symbols(A, Interval(-n, n), far + "+++++" + far)
    v = transformed_conditional_firstlayer_stochastic(pot, kernel, n, xi, boundary, trunc)
    print(f"outer image spins {far}: nu(+ | rest) = {v:.6f}")

# with a fully noisy channel nothing is learned from the image
flat = flip_kernel(A, 0.5)
xi = SpinConfig.from_symbols(A, Interval(-n, n), "+-+-+-+")
print("eps = 0.5:", transformed_conditional_firstlayer_stochastic(pot, flat, n, xi, boundary, trunc))
print("row sums of the brute-force table:", np.nanmax(np.abs(table.sum(axis=n) - 1)))
