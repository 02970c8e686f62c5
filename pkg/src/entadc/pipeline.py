"""Entanglement A/D and D/A conversion between CV modes and qubit registers.

Bipartite A/D: a two-mode state on modes (A, B) meets a fresh qubit pair
(C_j, D_j) at every stage ``j``; stage ``j`` acts on (A, C_j) and (B, D_j)
and peels off bit ``j`` of the photon number (stage 1 is the least
significant bit).  D/A runs the conjugate stages from the highest pair down.

Single-mode A/D converts one mode into qubits ``q1 .. qk`` (q1 = LSB).

Simulated propagator cascades are the reference.  The explicit amplitude
and coefficient formulas (:func:`da_amplitude_formula`,
:func:`two_qubit_d_coefficients`) are evaluated as written and compared
against them.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import asdict, dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .dynamics import BACKWARD, FORWARD, apply_stage, check_alignment, stage_propagator
from .errors import FactorizationError, ResidualExcitationError
from .fock import (
    CV,
    DensityMatrix,
    PureState,
    RegisterLayout,
    State,
    as_dm,
    basis_state,
    bipartite_matrix,
    cv_mode,
    ground_qubits,
    make_tmsv,
    partial_trace,
    qubit,
    tensor,
)
from .metrics import (
    entanglement_entropy,
    phase_invariant_overlap,
    phi_k_entropy_closed_form,
    psi_k_entropy_closed_form,
    tmsv_entropy,
)

FACTORIZATION_PURITY = 1 - 1e-7
GROUND_TOLERANCE = 1e-9


def pair_labels(j: int) -> tuple[str, str]:
    return f"C{j}", f"D{j}"


def qubit_labels(k: int) -> tuple[str, ...]:
    return tuple(f"q{j}" for j in range(1, k + 1))


@dataclass(frozen=True, eq=False)
class QubitPairState:
    """Two-qubit state received (or supplied) at stage ``stage``.

    Amplitudes are ordered ``a00, a01, a10, a11`` over ``|C D>`` with
    0 = ``|->`` and 1 = ``|+>``.
    """

    stage: int
    state: State

    def __post_init__(self):
        if self.state.layout.dims != (2, 2):
            raise ValueError("a qubit pair state must live on two qubits")

    @classmethod
    def from_amplitudes(cls, stage: int, amplitudes: Sequence[complex]) -> "QubitPairState":
        c, d = pair_labels(stage)
        layout = RegisterLayout.of(qubit(c), qubit(d))
        return cls(stage, PureState(layout, np.asarray(amplitudes, dtype=complex)).check())

    @classmethod
    def from_matrix(cls, stage: int, matrix: np.ndarray) -> "QubitPairState":
        c, d = pair_labels(stage)
        layout = RegisterLayout.of(qubit(c), qubit(d))
        return cls(stage, DensityMatrix(layout, matrix).check())

    @property
    def is_pure(self) -> bool:
        return isinstance(self.state, PureState)

    @property
    def amplitudes(self) -> np.ndarray:
        if not self.is_pure:
            raise ValueError("mixed pair has no amplitude vector")
        return self.state.amplitudes

    @property
    def density_matrix(self) -> DensityMatrix:
        return as_dm(self.state)

    def relabelled(self) -> State:
        """The pair state carrying the canonical labels ``C<stage>, D<stage>``."""
        c, d = pair_labels(self.stage)
        layout = RegisterLayout.of(qubit(c), qubit(d))
        if self.is_pure:
            return PureState(layout, self.state.amplitudes)
        return DensityMatrix(layout, self.state.matrix)

    def entropy(self) -> float:
        return entanglement_entropy(self.relabelled(), {pair_labels(self.stage)[0]})


# ---------------------------------------------------------------------------
# closed forms


def closed_form_phi(lam: float, k: int) -> QubitPairState:
    """``(|--> - lam**(2**(k-1)) |++>) / sqrt(1 + lam**(2**k))``."""
    if not 0.0 <= lam < 1.0:
        raise ValueError("lambda must lie in [0, 1)")
    x = lam ** (2 ** (k - 1))
    return QubitPairState.from_amplitudes(k, np.array([1.0, 0.0, 0.0, -x]) / math.sqrt(1 + x * x))


def closed_form_psi(lam: float, k: int, n_trunc: int, labels: tuple[str, str] = ("A", "B")) -> PureState:
    """CV state left after ``k`` stages: support on ``|2**k m, 2**k m>`` only."""
    if not 0.0 <= lam < 1.0:
        raise ValueError("lambda must lie in [0, 1)")
    check_alignment(k, n_trunc)
    step = 2**k
    levels = np.arange(0, n_trunc, step)
    amp = lam ** levels.astype(float)
    amp /= np.linalg.norm(amp)
    psi = np.zeros((n_trunc, n_trunc), dtype=complex)
    psi[levels, levels] = amp
    layout = RegisterLayout.of(cv_mode(labels[0], n_trunc), cv_mode(labels[1], n_trunc))
    return PureState(layout, psi, leakage=float(lam ** (2 * n_trunc)))


# ---------------------------------------------------------------------------
# bipartite A/D


@dataclass
class StageRecord:
    stage: int
    e_transferred: float
    e_remaining: float
    pair_purity: float
    conservation_defect: float
    e_transferred_closed_form: float | None = None
    e_remaining_closed_form: float | None = None
    pair_fidelity: float | None = None
    residual_fidelity: float | None = None


@dataclass
class ConversionLedger:
    """Per-stage entanglement bookkeeping of an A/D cascade (bits)."""

    e_initial: float
    stages: list[StageRecord] = field(default_factory=list)
    e_initial_closed_form: float | None = None

    @property
    def e_residual(self) -> float:
        return self.stages[-1].e_remaining if self.stages else self.e_initial

    @property
    def e_transferred(self) -> float:
        return sum(s.e_transferred for s in self.stages)

    @property
    def conservation_defect(self) -> float:
        return abs(self.e_initial - self.e_residual - self.e_transferred)

    def to_dict(self) -> dict:
        return {
            "e_initial": self.e_initial,
            "e_initial_closed_form": self.e_initial_closed_form,
            "e_residual": self.e_residual,
            "e_transferred": self.e_transferred,
            "conservation_defect": self.conservation_defect,
            "stages": [asdict(s) for s in self.stages],
        }


class CascadeResult(NamedTuple):
    ledger: ConversionLedger
    residual: PureState
    pairs: list[QubitPairState]


def _fix_phase(v: np.ndarray) -> complex:
    """Unit phase making the first significant entry of ``v`` real positive."""
    i = int(np.argmax(np.abs(v) > 1e-12 * np.abs(v).max()))
    return np.exp(-1j * np.angle(v[i]))


def _cv_labels(psi: State) -> tuple[str, str]:
    subs = psi.layout.subsystems
    if len(subs) != 2 or any(s.role != CV for s in subs):
        raise ValueError(f"expected a two-mode CV state, got layout {psi.layout.labels}")
    return subs[0].label, subs[1].label


def ad_convert(psi: PureState, k_stages: int, min_purity: float = FACTORIZATION_PURITY) -> CascadeResult:
    """Run ``k_stages`` forward stages on a two-mode pure state.

    After every stage the fresh qubit pair must factor out of the register
    (reduced purity at least ``min_purity``); it is then split off and the
    next pair is appended to the CV residual.
    """
    a, b = _cv_labels(psi)
    for lab in (a, b):
        check_alignment(k_stages, psi.layout.subsystem(lab).dim)
    e0 = entanglement_entropy(psi, {a})
    ledger = ConversionLedger(e_initial=e0)
    cur = psi
    pairs = []
    for j in range(1, k_stages + 1):
        c, d = pair_labels(j)
        reg = tensor(cur, ground_qubits(c, d))
        reg = apply_stage(reg, a, c, j, FORWARD)
        reg = apply_stage(reg, b, d, j, FORWARD)
        m = bipartite_matrix(reg, {a, b})
        u, s, vh = np.linalg.svd(m, full_matrices=False)
        weights = s**2 / (s**2).sum()
        pair_purity = float((weights**2).sum())
        if pair_purity < min_purity:
            raise FactorizationError(
                f"stage {j}: qubit pair ({c}, {d}) is entangled with the CV modes "
                f"(reduced purity {pair_purity:.12g} < {min_purity}); Schmidt weights "
                f"{np.round(weights, 12).tolist()}"
            )
        phase = _fix_phase(vh[0])
        pair_vec = vh[0] * phase
        resid = u[:, 0] / phase
        pair = QubitPairState.from_amplitudes(j, pair_vec)
        cur = PureState(psi.layout, resid, psi.leakage)
        e_pair = pair.entropy()
        e_rest = entanglement_entropy(cur, {a})
        transferred = sum(r.e_transferred for r in ledger.stages) + e_pair
        ledger.stages.append(
            StageRecord(
                stage=j,
                e_transferred=e_pair,
                e_remaining=e_rest,
                pair_purity=pair_purity,
                conservation_defect=abs(e0 - e_rest - transferred),
            )
        )
        pairs.append(pair)
    return CascadeResult(ledger, cur, pairs)


def ad_cascade(lam: float, k_stages: int, n_trunc: int, min_purity: float = FACTORIZATION_PURITY) -> CascadeResult:
    """A/D conversion of a truncated two-mode squeezed vacuum.

    The ledger carries both the measured entropies and their closed forms;
    each extracted pair and the residual are compared (phase-invariantly)
    with the predicted states.  Closed-form residuals are truncated at the
    same cutoff, which corrects for leakage.
    """
    check_alignment(k_stages, n_trunc)
    psi = make_tmsv(lam, n_trunc)
    result = ad_convert(psi, k_stages, min_purity)
    ledger = result.ledger
    ledger.e_initial_closed_form = tmsv_entropy(lam)
    for rec, pair in zip(ledger.stages, result.pairs):
        j = rec.stage
        rec.e_transferred_closed_form = phi_k_entropy_closed_form(lam, j)
        rec.e_remaining_closed_form = psi_k_entropy_closed_form(lam, j)
        rec.pair_fidelity = phase_invariant_overlap(pair.state, closed_form_phi(lam, j).state)
    # intermediate residuals are discarded; only the final one is compared
    ledger.stages[-1].residual_fidelity = phase_invariant_overlap(
        result.residual, closed_form_psi(lam, k_stages, n_trunc)
    )
    return result


# ---------------------------------------------------------------------------
# bipartite D/A


class DAResult(NamedTuple):
    state: State
    ground_overlap: float
    formula_fidelity: float | None


def _check_pairs(pairs: Sequence[QubitPairState]) -> int:
    k = len(pairs)
    if k == 0:
        raise ValueError("need at least one qubit pair")
    for i, p in enumerate(pairs, start=1):
        if p.stage != i:
            raise ValueError(f"pairs must be ordered by stage: position {i} holds stage {p.stage}")
    return k


def da_convert(
    pairs: Sequence[QubitPairState],
    n_trunc: int,
    labels: tuple[str, str] = ("A", "B"),
    ground_tol: float = GROUND_TOLERANCE,
) -> DAResult:
    """Load qubit pairs into the two-mode vacuum, highest stage first.

    Pure pairs are propagated as one state vector over the whole register;
    mixed pairs are loaded one at a time (each pair returns to ``|-->`` and
    is traced away before the next one is appended).
    """
    k = _check_pairs(pairs)
    check_alignment(k, n_trunc)
    a, b = labels
    vac = basis_state(RegisterLayout.of(cv_mode(a, n_trunc), cv_mode(b, n_trunc)), (0, 0))
    props = {j: stage_propagator(j, n_trunc) for j in range(1, k + 1)}

    if all(p.is_pure for p in pairs):
        reg = vac
        for p in pairs:
            reg = tensor(reg, p.relabelled())
        for j in range(k, 0, -1):
            c, d = pair_labels(j)
            reg = apply_stage(reg, a, c, j, BACKWARD, props[j])
            reg = apply_stage(reg, b, d, j, BACKWARD, props[j])
        m = bipartite_matrix(reg, {a, b})
        ground = float(np.vdot(m[:, 0], m[:, 0]).real)
        if 1 - ground > ground_tol:
            t = m.reshape((n_trunc * n_trunc,) + (4,) * k)
            excited = [
                1 - float((np.abs(np.take(t, 0, axis=j)) ** 2).sum()) for j in range(1, k + 1)
            ]
            worst = int(np.argmax(excited)) + 1
            raise ResidualExcitationError(
                f"qubit pair {worst} kept excitation {excited[worst - 1]:.3g} after D/A "
                f"(all-ground overlap {ground:.12g})"
            )
        out = PureState(vac.layout, m[:, 0] / math.sqrt(ground))
        formula = da_amplitude_formula(pairs, n_trunc, labels)
        return DAResult(out, ground, phase_invariant_overlap(out, formula))

    rho = as_dm(vac)
    ground = 1.0
    for j in range(k, 0, -1):
        c, d = pair_labels(j)
        reg = tensor(rho, as_dm(pairs[j - 1].relabelled()))
        reg = apply_stage(reg, a, c, j, BACKWARD, props[j])
        reg = apply_stage(reg, b, d, j, BACKWARD, props[j])
        p_ground = float(partial_trace(reg, {c, d}).matrix[0, 0].real)
        if 1 - p_ground > ground_tol:
            raise ResidualExcitationError(
                f"qubit pair {j} kept excitation {1 - p_ground:.3g} after D/A"
            )
        ground *= p_ground
        rho = partial_trace(reg, {a, b})
    return DAResult(rho, ground, None)


def da_amplitude_formula(
    pairs: Sequence[QubitPairState], n_trunc: int | None = None, labels: tuple[str, str] = ("A", "B")
) -> PureState:
    """Two-mode state predicted by the explicit D/A amplitude formula.

    ``psi(n, m) = prod_j (-1)**(m_{j+1} + n_{j+1}) i**(m_j + n_j) a^j_{n_j m_j}``
    where ``n = sum_j n_j 2**(j-1)`` and the bits beyond the last stage are 0.
    """
    k = _check_pairs(pairs)
    dim = n_trunc or 2**k
    check_alignment(k, dim)
    amps = [np.asarray(p.amplitudes).reshape(2, 2) for p in pairs]
    out = np.zeros((dim, dim), dtype=complex)
    for bits in itertools.product((0, 1), repeat=2 * k):
        nb = bits[:k] + (0,)
        mb = bits[k:] + (0,)
        val = complex(1.0)
        for j in range(k):
            val *= (-1) ** (nb[j + 1] + mb[j + 1]) * 1j ** (nb[j] + mb[j]) * amps[j][nb[j], mb[j]]
        n = sum(nb[j] << j for j in range(k))
        m = sum(mb[j] << j for j in range(k))
        out[n, m] = val
    layout = RegisterLayout.of(cv_mode(labels[0], dim), cv_mode(labels[1], dim))
    return PureState(layout, out)


# ---------------------------------------------------------------------------
# single-mode A/D and D/A


def _single_mode_label(rho: State) -> str:
    subs = rho.layout.subsystems
    if len(subs) != 1 or subs[0].role != CV:
        raise ValueError(f"expected a single CV mode, got layout {rho.layout.labels}")
    return subs[0].label


def convert_single_mode(rho: State, k_stages: int) -> State:
    """Register (mode, q1 .. qk) after the forward cascade, before any trace."""
    mode = _single_mode_label(rho)
    n = rho.layout.dims[0]
    check_alignment(k_stages, n)
    qs = qubit_labels(k_stages)
    fresh = ground_qubits(*qs)
    reg = tensor(rho, fresh if isinstance(rho, PureState) else as_dm(fresh))
    for j, q in enumerate(qs, start=1):
        reg = apply_stage(reg, mode, q, j, FORWARD)
    return reg


def single_mode_ad(rho: State, k_stages: int) -> DensityMatrix:
    """k-qubit state obtained by converting one mode and discarding it."""
    reg = convert_single_mode(rho, k_stages)
    return partial_trace(reg, set(qubit_labels(k_stages)))


def two_qubit_d_coefficients(rho: State) -> DensityMatrix:
    """Two-qubit state from the explicit coefficient formula.

    ``sum i**(k1-k2-l1+l2) d[k1 k2 l1 l2] |k2 k1><l2 l1|`` with
    ``d[k1 k2 l1 l2] = sum_m c[4m + 2 k1 + k2, 4m + 2 l1 + l2]``; the ket
    ``|k2 k1>`` lists q1 (the low bit ``k2``) first.
    """
    _single_mode_label(rho)
    c = as_dm(rho).matrix
    n = c.shape[0]
    pad = (-n) % 4
    if pad:
        c = np.pad(c, ((0, pad), (0, pad)))
    nb = c.shape[0] // 4
    blocks = c.reshape(nb, 4, nb, 4)
    d = blocks[np.arange(nb), :, np.arange(nb), :].sum(axis=0)  # d[2k1+k2, 2l1+l2]
    out = np.zeros((4, 4), dtype=complex)
    for k1, k2, l1, l2 in itertools.product((0, 1), repeat=4):
        out[2 * k2 + k1, 2 * l2 + l1] = 1j ** ((k1 - k2 - l1 + l2) % 4) * d[2 * k1 + k2, 2 * l1 + l2]
    layout = RegisterLayout.of(*(qubit(q) for q in qubit_labels(2)))
    return DensityMatrix(layout, out)


class SingleModeDA(NamedTuple):
    state: DensityMatrix
    ground_overlap: float


def single_mode_da(qubits: State, n_trunc: int, label: str = "A") -> SingleModeDA:
    """Load a k-qubit register (q1 = LSB) into a vacuum mode and trace the qubits."""
    k = len(qubits.layout)
    check_alignment(k, n_trunc)
    qs = qubit_labels(k)
    if qubits.layout.dims != (2,) * k:
        raise ValueError("expected a register of qubits")
    qlayout = RegisterLayout(tuple(qubit(q) for q in qs))
    q = as_dm(qubits)
    q = DensityMatrix(qlayout, q.matrix)
    vac = as_dm(basis_state(RegisterLayout.of(cv_mode(label, n_trunc)), (0,)))
    reg = tensor(vac, q)
    for j in range(k, 0, -1):
        reg = apply_stage(reg, label, qs[j - 1], j, BACKWARD)
    ground = float(partial_trace(reg, set(qs)).matrix[0, 0].real)
    return SingleModeDA(partial_trace(reg, {label}), ground)
