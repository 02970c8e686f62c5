import numpy as np
import pytest
import scipy.linalg

from entadc.dynamics import build_hamiltonian
from entadc.fock import DensityMatrix, PureState, RegisterLayout, cv_mode, qubit


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_vector(rng, dim):
    z = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return z / np.linalg.norm(z)


def random_density(rng, dim, rank=None):
    rank = rank or dim
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    m = g @ g.conj().T
    return m / np.trace(m).real


def random_unitary(rng, dim):
    q, r = np.linalg.qr(rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim)))
    return q * (np.diag(r) / np.abs(np.diag(r)))


def two_qubit_layout(a="C", b="D"):
    return RegisterLayout.of(qubit(a), qubit(b))


def one_mode(n, label="A"):
    return RegisterLayout.of(cv_mode(label, n))


def dense_propagator(k, n):
    """Oracle: scaling-and-squaring exp(-i H_k t_k) of the assembled Hamiltonian."""
    return scipy.linalg.expm(-1j * build_hamiltonian(k, n) * np.pi / 2**k)


def bell_state():
    return PureState(two_qubit_layout(), np.array([1, 0, 0, -1]) / np.sqrt(2))


def maximally_mixed_qubit(label="q"):
    return DensityMatrix(RegisterLayout.of(qubit(label)), np.eye(2) / 2)
