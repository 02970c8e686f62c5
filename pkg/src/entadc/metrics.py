"""Entanglement and distance measures.  All logarithms are base 2."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .fock import (
    DEFAULT_TOL,
    QUBIT,
    PureState,
    State,
    Tolerances,
    as_dm,
    bipartite_matrix,
)

_SIGMA_YY = np.kron([[0, -1j], [1j, 0]], [[0, -1j], [1j, 0]])


def shannon_bits(p: np.ndarray) -> float:
    p = np.asarray(p, dtype=float)
    p = p[p > 0]
    return float(-(p * np.log2(p)).sum())


def _clipped_eigvalsh(m: np.ndarray, tol: Tolerances) -> np.ndarray:
    ev = np.linalg.eigvalsh(0.5 * (m + m.conj().T))
    if ev.min(initial=0.0) < -tol.psd:
        raise ValueError(f"matrix has negative eigenvalue {ev.min():.3g}")
    return np.clip(ev, 0.0, None)


@dataclass(frozen=True, eq=False)
class SchmidtDecomposition:
    coefficients: np.ndarray
    left: np.ndarray
    right: np.ndarray

    @property
    def rank(self) -> int:
        return int(np.count_nonzero(self.coefficients > 1e-15))


def _check_cut(psi: PureState, cut: Iterable[str]) -> set[str]:
    cut = set(cut)
    labels = set(psi.layout.labels)
    if not cut or not cut < labels:
        raise ValueError(f"cut {sorted(cut)} must be a non-empty proper subset of {sorted(labels)}")
    return cut


def schmidt_decomposition(psi: PureState, cut: Iterable[str], tol: Tolerances = DEFAULT_TOL) -> SchmidtDecomposition:
    """Schmidt form across ``cut | rest``; columns of ``left``/``right`` are the modes."""
    psi.check(tol)
    m = bipartite_matrix(psi, _check_cut(psi, cut))
    u, s, vh = np.linalg.svd(m, full_matrices=False)
    return SchmidtDecomposition(s, u, vh.T)


def entanglement_entropy(psi: PureState, cut: Iterable[str], tol: Tolerances = DEFAULT_TOL) -> float:
    """Entropy in bits of the squared Schmidt coefficients across ``cut``."""
    psi.check(tol)
    m = bipartite_matrix(psi, _check_cut(psi, cut))
    s = np.linalg.svd(m, compute_uv=False)
    return shannon_bits(s**2)


def von_neumann_entropy(rho: State, tol: Tolerances = DEFAULT_TOL) -> float:
    if isinstance(rho, PureState):
        return 0.0
    return shannon_bits(_clipped_eigvalsh(rho.matrix, tol))


def tmsv_entropy(lam: float) -> float:
    """Closed-form entanglement of the untruncated two-mode squeezed vacuum."""
    if lam == 0:
        return 0.0
    c2 = 1.0 / (1.0 - lam**2)
    s2 = lam**2 * c2
    return float(c2 * np.log2(c2) - s2 * np.log2(s2))


def phi_k_entropy_closed_form(lam: float, k: int) -> float:
    """Entanglement of the stage-``k`` qubit pair.

    ``log(1 + x) - x / (1 + x) * log(x)`` with ``x = lam**(2**k)``.
    """
    if not 0.0 <= lam < 1.0:
        raise ValueError("lambda must lie in [0, 1)")
    x = lam ** (2**k)
    if x == 0:
        return 0.0
    return float(np.log2(1 + x) - x / (1 + x) * 2**k * np.log2(lam))


def psi_k_entropy_closed_form(lam: float, k: int) -> float:
    """Entanglement left in the CV modes after ``k`` stages (``k = 0``: the input)."""
    if not 0.0 <= lam < 1.0:
        raise ValueError("lambda must lie in [0, 1)")
    y = lam ** (2 ** (k + 1))
    if y == 0:
        return 0.0
    return float(-np.log2(1 - y) - 2 ** (k + 1) * y / (1 - y) * np.log2(lam))


def transferred_entropy_closed_form(lam: float, k: int) -> float:
    """Total entanglement of the first ``k`` qubit pairs, summed form."""
    if lam == 0:
        return 0.0
    y = lam ** (2 ** (k + 1))
    l2 = lam**2
    return float(
        np.log2((1 - y) / (1 - l2)) - (l2 / (1 - l2) - 2**k * y / (1 - y)) * np.log2(l2)
    )


def concurrence(rho: State, conjugate: bool = True, tol: Tolerances = DEFAULT_TOL) -> float:
    """Wootters concurrence of a two-qubit state.

    ``max(0, mu1 - mu2 - mu3 - mu4)`` with ``mu`` the descending square roots
    of the eigenvalues of ``rho (Y(x)Y) rho* (Y(x)Y)``.  ``conjugate=False``
    drops the complex conjugation in the spin flip; that variant is not an
    entanglement monotone and exists only for comparison with published
    numbers computed that way.
    """
    layout = rho.layout
    if len(layout) != 2 or any(s.role != QUBIT for s in layout.subsystems):
        raise ValueError(f"concurrence needs exactly two qubits, got layout {layout.labels}")
    m = as_dm(rho).matrix
    flipped = _SIGMA_YY @ (m.conj() if conjugate else m) @ _SIGMA_YY
    ev = np.linalg.eigvals(m @ flipped)
    mu = np.sort(np.sqrt(np.abs(ev)))[::-1]
    return float(max(0.0, mu[0] - mu[1:].sum()))


def pure_concurrence(psi: PureState) -> float:
    """``2 * s0 * s1`` from the Schmidt coefficients of a pure two-qubit state."""
    s = np.linalg.svd(psi.amplitudes.reshape(2, 2), compute_uv=False)
    return float(2 * s[0] * s[1])


def _psd_sqrt(m: np.ndarray, tol: Tolerances) -> np.ndarray:
    ev, vec = np.linalg.eigh(0.5 * (m + m.conj().T))
    if ev.min() < -tol.psd:
        raise ValueError(f"matrix has negative eigenvalue {ev.min():.3g}")
    return (vec * np.sqrt(np.clip(ev, 0.0, None))) @ vec.conj().T


def uhlmann_fidelity(rho: State, sigma: State, tol: Tolerances = DEFAULT_TOL) -> float:
    """Root fidelity ``tr sqrt(sqrt(rho) sigma sqrt(rho))``.

    Pure arguments use the overlap shortcuts ``|<a|b>|`` and ``sqrt(<a|s|a>)``.
    """
    if rho.layout.dims != sigma.layout.dims:
        raise ValueError(f"layout mismatch: {rho.layout.dims} vs {sigma.layout.dims}")
    if isinstance(rho, PureState) and isinstance(sigma, PureState):
        return float(abs(np.vdot(rho.amplitudes, sigma.amplitudes)))
    if isinstance(sigma, PureState):
        rho, sigma = sigma, rho
    if isinstance(rho, PureState):
        sigma.check(tol)
        a = rho.amplitudes
        return float(np.sqrt(max(np.vdot(a, sigma.matrix @ a).real, 0.0)))
    rho.check(tol)
    sigma.check(tol)
    r = _psd_sqrt(rho.matrix, tol)
    inner = r @ sigma.matrix @ r
    ev = np.clip(np.linalg.eigvalsh(0.5 * (inner + inner.conj().T)), 0.0, None)
    return float(min(np.sqrt(ev).sum(), 1.0))


def phase_invariant_overlap(a: PureState | np.ndarray, b: PureState | np.ndarray) -> float:
    """``|<a|b>|`` for unit vectors, ignoring global phase."""
    va = a.amplitudes if isinstance(a, PureState) else np.asarray(a).reshape(-1)
    vb = b.amplitudes if isinstance(b, PureState) else np.asarray(b).reshape(-1)
    return float(abs(np.vdot(va, vb)))

