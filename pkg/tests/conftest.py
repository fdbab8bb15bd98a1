import itertools

import numpy as np
import pytest

from gibbs1d.lattice import Interval, SpinConfig, ising_alphabet
from gibbs1d.potential import hamiltonian


def constant_boundary(alphabet, symbol=None, radius=40):
    return SpinConfig.constant(alphabet, Interval(-radius, radius), symbol)


def slow_gibbs_table(potential, volume, boundary, trunc):
    """Boltzmann table by a plain loop over configurations and the scalar Hamiltonian."""
    a = potential.alphabet
    w = []
    for idx in itertools.product(range(a.size), repeat=len(volume)):
        sigma = SpinConfig(a, volume, idx)
        w.append(np.exp(-hamiltonian(potential, volume, boundary, sigma, trunc)))
    w = np.asarray(w)
    return w / w.sum()


def slow_image_law(potential, channel_matrix, volume, boundary, trunc):
    """Image law by explicit Kronecker-product channel applied to the slow Gibbs table."""
    p = slow_gibbs_table(potential, volume, boundary, trunc)
    M = np.ones((1, 1))
    for _ in volume:
        M = np.kron(M, channel_matrix)
    return p @ M


@pytest.fixture
def ising():
    return ising_alphabet()


#: criterion number -> (passed, detail), filled in by test_acceptance.py
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
