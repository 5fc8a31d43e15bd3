"""Shared fixtures and the from-scratch dense oracle used across the suite.

The oracle here deliberately avoids the package's operator machinery: the
Hamiltonian is assembled from literal 2x2 matrices with explicit Kronecker
products and diagonalized with a full dense eigensolve, so it can referee the
library's sparse/iterative and MPS paths.
"""

from functools import reduce

import numpy as np
import pytest

import mbqclab as m

I2 = np.eye(2, dtype=complex)
X2 = np.array([[0, 1], [1, 0]], dtype=complex)
Y2 = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z2 = np.array([[1, 0], [0, -1]], dtype=complex)
LETTER = {"I": I2, "X": X2, "Y": Y2, "Z": Z2}


def kron_chain(n, sites):
    """Dense operator with the given 1-based site -> letter placement."""
    mats = [LETTER[sites.get(i, "I")] for i in range(1, n + 1)]
    return reduce(np.kron, mats)


def dense_hamiltonian(n, alpha):
    """Independent H(alpha) assembly: stabilizers everywhere, field inside."""
    h = -np.cos(alpha) * kron_chain(n, {1: "X", 2: "Z"})
    h = h - np.cos(alpha) * kron_chain(n, {n - 1: "Z", n: "X"})
    for i in range(2, n):
        h = h - np.cos(alpha) * kron_chain(n, {i - 1: "Z", i: "X", i + 1: "Z"})
        h = h - np.sin(alpha) * kron_chain(n, {i: "X"})
    return h


def dense_ground_state(n, alpha):
    """Full eigensolve; returns (energy, vector). Keep n <= 11."""
    vals, vecs = np.linalg.eigh(dense_hamiltonian(n, alpha))
    return float(vals[0]), vecs[:, 0]


def apply_letters(vec, n, sites):
    """Apply a letter placement to a statevector one site at a time."""
    out = vec.reshape([2] * n)
    for site, letter in sites.items():
        out = np.moveaxis(
            np.tensordot(LETTER[letter], np.moveaxis(out, site - 1, 0), axes=([1], [0])),
            0,
            site - 1,
        )
    return out.reshape(-1)


def bra_op_ket(vec, n, sites):
    return complex(np.vdot(vec, apply_letters(vec, n, sites)))


@pytest.fixture(scope="session")
def solved():
    """Memoized ground-state solver shared by the whole test session."""
    cache = {}

    def get(n, alpha, method="exact", chi=None):
        key = (n, round(alpha, 14), method, chi)
        if key not in cache:
            spec = m.ChainSpec(n, alpha)
            if method == "exact":
                cache[key] = m.solve_exact(spec)
            else:
                overrides = {"chi_max": chi} if chi else {}
                cache[key] = m.solve_dmrg(spec, m.SolverParams.for_spec(spec, **overrides))
        return cache[key]

    return get


@pytest.fixture(scope="session")
def boundary_state(solved):
    """The near-transition workhorse state used by the figure-scale criteria."""
    return solved(201, 0.98 * np.pi / 4, method="dmrg")


@pytest.fixture(scope="session")
def boundary_profile(boundary_state):
    from mbqclab import profile

    return profile(boundary_state, "odd")
