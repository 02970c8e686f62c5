"""Nonlinear Jaynes-Cummings stages and their exact propagators.

Stage ``k`` couples ``|m, ->`` to ``|m - h, +>`` with ``h = 2**(k-1)`` and
coupling ``hbar * Omega * m``.  At the stage time ``t_k = pi / (2**k Omega)``
the propagator is a direct sum of 2x2 rotations with angles
``theta_m = m * pi / 2**k`` plus identity on uncoupled levels.  Angles that
are multiples of pi/2 are evaluated from a lookup table, so the parity
phases and the ``-i`` hops come out exactly.

Units: hbar = 1.  Every observable depends only on ``Omega * t``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import AlignmentError
from .fock import CV, QUBIT, DensityMatrix, PureState, State

FORWARD = "forward"
BACKWARD = "backward"

# cos, sin of q * pi / 2
_QUARTER_COS = (1.0, 0.0, -1.0, 0.0)
_QUARTER_SIN = (0.0, 1.0, 0.0, -1.0)


def check_alignment(k: int, n: int) -> None:
    if k < 1:
        raise ValueError(f"stage index must be >= 1, got {k}")
    block = 2**k
    if n % block:
        raise AlignmentError(
            f"CV truncation {n} is not a multiple of 2**{k} = {block}; stage {k} would "
            f"leave half-open rotation blocks at the cutoff"
        )


@dataclass(frozen=True)
class StageSpec:
    k: int
    omega: float = 1.0

    def __post_init__(self):
        if self.k < 1:
            raise ValueError(f"stage index must be >= 1, got {self.k}")

    @property
    def hop(self) -> int:
        return 2 ** (self.k - 1)

    @property
    def time_over_pi(self) -> Fraction:
        """Omega * t_k / pi, held exactly."""
        return Fraction(1, 2**self.k)

    @property
    def t(self) -> float:
        return np.pi / (2**self.k * self.omega)


def rotation_angle(m: int, k: int) -> tuple[float, float]:
    """``(cos, sin)`` of ``m * pi / 2**k``, exact at multiples of pi/2."""
    period = 2 ** (k + 1)
    r = m % period
    quarter = 2 ** (k - 1)
    if r % quarter == 0:
        q = r // quarter
        return _QUARTER_COS[q], _QUARTER_SIN[q]
    theta = np.pi * r / 2**k
    return float(np.cos(theta)), float(np.sin(theta))


def ladder_matrix_elements(k: int, n: int, omega: float = 1.0) -> list[tuple[int, int, float]]:
    """Coupled level pairs ``(m, m - 2**(k-1), m * omega)`` inside the truncation."""
    check_alignment(k, n)
    h = 2 ** (k - 1)
    return [(m, m - h, m * omega) for m in range(h, n)]


def build_hamiltonian(k: int, n: int, omega: float = 1.0) -> np.ndarray:
    """Dense ``H_k`` on CV (x) qubit, index ``2 * level + qubit``."""
    h = np.zeros((2 * n, 2 * n))
    for m, low, g in ladder_matrix_elements(k, n, omega):
        h[2 * m, 2 * low + 1] = g
        h[2 * low + 1, 2 * m] = g
    return h


def hamiltonian_from_operators(k: int, n: int, omega: float = 1.0) -> np.ndarray:
    """``H_k`` assembled from the operator string ``n (n^-1/2 a+)^h sigma_-`` + h.c.

    Uses truncated ladder matrices and the pseudo-inverse ``0 -> 0`` for
    ``n^-1/2``.  Kept as an independent cross-check of :func:`build_hamiltonian`.
    """
    check_alignment(k, n)
    levels = np.arange(n, dtype=float)
    adag = np.diag(np.sqrt(levels[1:]), -1)
    num = np.diag(levels)
    inv_sqrt = np.diag([0.0] + list(1.0 / np.sqrt(levels[1:])))
    raise_str = np.linalg.matrix_power(inv_sqrt @ adag, 2 ** (k - 1))
    sigma_minus = np.array([[0.0, 1.0], [0.0, 0.0]])
    up = omega * np.kron(num @ raise_str, sigma_minus)
    return up + up.conj().T


@dataclass(frozen=True, eq=False)
class StagePropagator:
    """Exact ``exp(-i H_k t_k)`` stored as 2x2 rotation blocks.

    ``upper[i]`` and ``lower[i]`` are the CV levels of block ``i``
    (``|upper, ->`` couples to ``|lower, +>``); the block matrix is
    ``[[c, s], [s, c]]`` with ``c = cos(theta)``, ``s = -i sin(theta)``.
    """

    stage: StageSpec
    cv_dim: int
    upper: np.ndarray
    lower: np.ndarray
    cos: np.ndarray
    sin: np.ndarray

    @property
    def angles_over_pi(self) -> list[Fraction]:
        return [Fraction(int(m), 2**self.stage.k) for m in self.upper]

    @property
    def fixed_points(self) -> list[tuple[int, int]]:
        """``(level, qubit)`` basis states left untouched."""
        h = self.stage.hop
        return [(m, 0) for m in range(h)] + [(m, 1) for m in range(self.cv_dim - h, self.cv_dim)]

    def offdiag(self, direction: str = FORWARD) -> np.ndarray:
        s = -1j * self.sin
        return s if direction == FORWARD else s.conj()

    def matrix(self, direction: str = FORWARD) -> np.ndarray:
        """Dense operator on CV (x) qubit (same indexing as :func:`build_hamiltonian`)."""
        d = 2 * self.cv_dim
        u = np.eye(d, dtype=complex)
        up = 2 * self.upper
        lo = 2 * self.lower + 1
        s = self.offdiag(direction)
        u[up, up] = self.cos
        u[lo, lo] = self.cos
        u[up, lo] = s
        u[lo, up] = s
        return u

    def apply_axes(self, x: np.ndarray, cv_axis: int, q_axis: int, direction: str = FORWARD) -> np.ndarray:
        """Apply the propagator to the (cv_axis, q_axis) indices of tensor ``x``."""
        if direction not in (FORWARD, BACKWARD):
            raise ValueError(f"direction must be {FORWARD!r} or {BACKWARD!r}")
        t = np.moveaxis(x, (cv_axis, q_axis), (0, 1))
        out = t.copy()
        a = t[self.upper, 0]
        b = t[self.lower, 1]
        extra = (slice(None),) + (None,) * (a.ndim - 1)
        c = self.cos[extra]
        s = self.offdiag(direction)[extra]
        out[self.upper, 0] = c * a + s * b
        out[self.lower, 1] = s * a + c * b
        return np.moveaxis(out, (0, 1), (cv_axis, q_axis))


def stage_propagator(k: int, n: int, omega: float = 1.0) -> StagePropagator:
    check_alignment(k, n)
    h = 2 ** (k - 1)
    upper = np.arange(h, n)
    cs = np.array([rotation_angle(int(m), k) for m in upper], dtype=float).reshape(-1, 2)
    for arr in (upper, cs):
        arr.setflags(write=False)
    return StagePropagator(StageSpec(k, omega), n, upper, upper - h, cs[:, 0], cs[:, 1])


def apply_stage(
    state: State,
    cv_label: str,
    qubit_label: str,
    k: int,
    direction: str = FORWARD,
    propagator: StagePropagator | None = None,
) -> State:
    """Return ``U_k state`` (forward) or ``U_k^dagger state`` (backward).

    The rotation acts on the designated (cv mode, qubit) pair and as the
    identity on every other subsystem.  Density matrices are conjugated on
    both sides.
    """
    layout = state.layout
    ci, qi = layout.index(cv_label), layout.index(qubit_label)
    cv, q = layout.subsystems[ci], layout.subsystems[qi]
    if cv.role != CV:
        raise ValueError(f"{cv_label!r} is not a CV mode")
    if q.role != QUBIT:
        raise ValueError(f"{qubit_label!r} is not a qubit")
    prop = propagator or stage_propagator(k, cv.dim)
    if prop.stage.k != k or prop.cv_dim != cv.dim:
        raise ValueError("propagator does not match stage / CV dimension")
    dims = layout.dims
    if isinstance(state, PureState):
        out = prop.apply_axes(state.as_tensor(), ci, qi, direction)
        return PureState(layout, out, state.leakage)
    d = layout.total_dim
    # U rho U^dagger = (U (U rho)^dagger)^dagger
    left = prop.apply_axes(state.matrix.reshape(dims + (d,)), ci, qi, direction).reshape(d, d)
    both = prop.apply_axes(left.conj().T.reshape(dims + (d,)), ci, qi, direction).reshape(d, d)
    return DensityMatrix(layout, both.conj().T, state.leakage)
