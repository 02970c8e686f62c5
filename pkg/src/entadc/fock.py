"""Truncated Fock-space and qubit registers.

A register is an ordered list of subsystems, each a truncated CV mode or a
qubit.  Composite indices are big-endian over that list: subsystem 0 is the
slowest-varying index, exactly as ``np.kron`` and C-order reshapes produce.
Qubit basis index 0 is the ground state ``|->`` and index 1 the excited
state ``|+>``.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from typing import Iterable, Sequence, Union

import numpy as np
from scipy.special import gammainc, gammaln

from .errors import TruncationError

CV = "cv"
QUBIT = "qubit"


@dataclass(frozen=True)
class Tolerances:
    """Numerical tolerances shared by validity checks."""

    norm: float = 1e-10
    herm: float = 1e-10
    psd: float = 1e-9
    trunc: float = 1e-8


DEFAULT_TOL = Tolerances()


@dataclass(frozen=True)
class Subsystem:
    role: str
    dim: int
    label: str

    def __post_init__(self):
        if self.role not in (CV, QUBIT):
            raise ValueError(f"unknown subsystem role {self.role!r}")
        if self.role == QUBIT and self.dim != 2:
            raise ValueError(f"qubit {self.label!r} must have dimension 2, got {self.dim}")
        if self.role == CV and self.dim < 2:
            raise ValueError(f"cv mode {self.label!r} needs truncation >= 2, got {self.dim}")


def cv_mode(label: str, dim: int) -> Subsystem:
    return Subsystem(CV, int(dim), label)


def qubit(label: str) -> Subsystem:
    return Subsystem(QUBIT, 2, label)


@dataclass(frozen=True)
class RegisterLayout:
    """Ordered subsystems of a register (subsystem 0 varies slowest)."""

    subsystems: tuple[Subsystem, ...]

    def __post_init__(self):
        subs = tuple(self.subsystems)
        object.__setattr__(self, "subsystems", subs)
        labels = [s.label for s in subs]
        dup = {x for x in labels if labels.count(x) > 1}
        if dup:
            raise ValueError(f"duplicate subsystem labels: {sorted(dup)}")

    @classmethod
    def of(cls, *subsystems: Subsystem) -> "RegisterLayout":
        return cls(tuple(subsystems))

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(s.dim for s in self.subsystems)

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(s.label for s in self.subsystems)

    @property
    def total_dim(self) -> int:
        return int(np.prod(self.dims, dtype=np.int64)) if self.subsystems else 1

    def __len__(self):
        return len(self.subsystems)

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise KeyError(f"no subsystem labelled {label!r} in {self.labels}") from None

    def subsystem(self, label: str) -> Subsystem:
        return self.subsystems[self.index(label)]

    def select(self, labels: Iterable[str]) -> "RegisterLayout":
        """Sub-layout holding ``labels``, kept in register order."""
        wanted = set(labels)
        for lab in wanted:
            self.index(lab)
        return RegisterLayout(tuple(s for s in self.subsystems if s.label in wanted))

    def __add__(self, other: "RegisterLayout") -> "RegisterLayout":
        return RegisterLayout(self.subsystems + other.subsystems)

    def compose(self, multi_index: Sequence[int]) -> int:
        return int(np.ravel_multi_index(tuple(multi_index), self.dims))

    def decompose(self, index: int) -> tuple[int, ...]:
        return tuple(int(i) for i in np.unravel_index(index, self.dims))


@dataclass(frozen=True, eq=False)
class PureState:
    """State vector over a register; ``leakage`` is the weight lost to truncation."""

    layout: RegisterLayout
    amplitudes: np.ndarray
    leakage: float = 0.0

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=complex).reshape(-1)
        if amps.size != self.layout.total_dim:
            raise ValueError(
                f"{amps.size} amplitudes do not fit layout of dimension {self.layout.total_dim}"
            )
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def as_tensor(self) -> np.ndarray:
        return self.amplitudes.reshape(self.layout.dims)

    def check(self, tol: Tolerances = DEFAULT_TOL) -> "PureState":
        if abs(self.norm**2 - 1.0) > tol.norm:
            raise ValueError(f"state is not normalized (|psi|^2 = {self.norm**2:.15g})")
        return self

    def normalized(self) -> "PureState":
        return PureState(self.layout, self.amplitudes / self.norm, self.leakage)


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    layout: RegisterLayout
    matrix: np.ndarray
    leakage: float = 0.0

    def __post_init__(self):
        d = self.layout.total_dim
        mat = np.array(self.matrix, dtype=complex)
        if mat.shape != (d, d):
            raise ValueError(f"matrix of shape {mat.shape} does not fit layout of dimension {d}")
        mat.setflags(write=False)
        object.__setattr__(self, "matrix", mat)

    @property
    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    def check(self, tol: Tolerances = DEFAULT_TOL) -> "DensityMatrix":
        m = self.matrix
        if np.abs(m - m.conj().T).max(initial=0.0) > tol.herm:
            raise ValueError("density matrix is not Hermitian")
        tr = np.trace(m)
        if abs(tr - 1.0) > tol.norm:
            raise ValueError(f"density matrix trace is {tr:.15g}, expected 1")
        lo = np.linalg.eigvalsh(0.5 * (m + m.conj().T)).min()
        if lo < -tol.psd:
            raise ValueError(f"density matrix has negative eigenvalue {lo:.3g}")
        return self


State = Union[PureState, DensityMatrix]


@dataclass(frozen=True)
class SqueezingParams:
    """Two-mode squeezing strength ``lam = tanh(r)``."""

    lam: float
    r: float = field(init=False)

    def __post_init__(self):
        if not 0.0 <= self.lam < 1.0:
            raise ValueError(f"squeezing lambda must lie in [0, 1), got {self.lam}")
        object.__setattr__(self, "r", float(np.arctanh(self.lam)))

    @classmethod
    def from_r(cls, r: float) -> "SqueezingParams":
        if r < 0:
            raise ValueError("squeezing parameter r must be non-negative")
        return cls(float(np.tanh(r)))


# ---------------------------------------------------------------------------
# constructors


def make_tmsv(
    params: SqueezingParams | float, n_trunc: int, labels: tuple[str, str] = ("A", "B")
) -> PureState:
    """Two-mode squeezed vacuum truncated to ``n_trunc`` levels per mode.

    Amplitudes ``lam**m`` on ``|m>|m>`` are renormalized on the truncated
    space; the discarded weight ``lam**(2 n_trunc)`` is stored as leakage.
    """
    if not isinstance(params, SqueezingParams):
        params = SqueezingParams(float(params))
    if n_trunc < 2:
        raise ValueError("n_trunc must be at least 2")
    lam = params.lam
    layout = RegisterLayout.of(cv_mode(labels[0], n_trunc), cv_mode(labels[1], n_trunc))
    diag = lam ** np.arange(n_trunc, dtype=float)
    diag /= np.linalg.norm(diag)
    amps = np.zeros((n_trunc, n_trunc), dtype=complex)
    amps[np.arange(n_trunc), np.arange(n_trunc)] = diag
    return PureState(layout, amps, leakage=float(lam ** (2 * n_trunc)))


def make_coherent(
    alpha: complex,
    n_trunc: int,
    label: str = "A",
    tol: Tolerances = DEFAULT_TOL,
    strict: bool = True,
) -> PureState:
    """Coherent state ``|alpha>`` on ``n_trunc`` Fock levels.

    Raises :class:`TruncationError` when the Poisson tail beyond the cutoff
    reaches ``tol.trunc``; with ``strict=False`` it warns instead.
    """
    alpha = complex(alpha)
    mean = abs(alpha) ** 2
    n = np.arange(n_trunc)
    if alpha == 0:
        amps = np.zeros(n_trunc, dtype=complex)
        amps[0] = 1.0
        leak = 0.0
    else:
        logmag = n * np.log(abs(alpha)) - 0.5 * gammaln(n + 1)
        amps = np.exp(logmag - logmag.max() + 1j * n * np.angle(alpha))
        amps /= np.linalg.norm(amps)
        leak = float(gammainc(n_trunc, mean))
    if leak >= tol.trunc:
        msg = f"coherent state alpha={alpha} leaks {leak:.3g} beyond n_trunc={n_trunc}"
        if strict:
            raise TruncationError(msg)
        warnings.warn(msg, stacklevel=2)
    return PureState(RegisterLayout.of(cv_mode(label, n_trunc)), amps, leakage=leak)


def make_thermal(v: float, n_trunc: int, label: str = "A") -> DensityMatrix:
    """Thermal state with populations proportional to ``v**n``, renormalized."""
    if not 0.0 <= v < 1.0:
        raise ValueError(f"thermal parameter v must lie in [0, 1), got {v}")
    p = v ** np.arange(n_trunc, dtype=float)
    p /= p.sum()
    return DensityMatrix(
        RegisterLayout.of(cv_mode(label, n_trunc)), np.diag(p), leakage=float(v**n_trunc)
    )


def make_fock(n: int, n_trunc: int, label: str = "A") -> PureState:
    if not 0 <= n < n_trunc:
        raise ValueError(f"Fock level {n} outside truncation {n_trunc}")
    amps = np.zeros(n_trunc, dtype=complex)
    amps[n] = 1.0
    return PureState(RegisterLayout.of(cv_mode(label, n_trunc)), amps)


def basis_state(layout: RegisterLayout, multi_index: Sequence[int]) -> PureState:
    amps = np.zeros(layout.total_dim, dtype=complex)
    amps[layout.compose(multi_index)] = 1.0
    return PureState(layout, amps)


def ground_qubits(*labels: str) -> PureState:
    """All listed qubits in ``|->``."""
    layout = RegisterLayout(tuple(qubit(lab) for lab in labels))
    return basis_state(layout, [0] * len(labels))


# ---------------------------------------------------------------------------
# composition and reduction


def tensor(a: State, b: State) -> State:
    """Kronecker product ``a (x) b``; the layout of ``a`` comes first."""
    layout = a.layout + b.layout
    leak = 1.0 - (1.0 - a.leakage) * (1.0 - b.leakage)
    if isinstance(a, PureState) and isinstance(b, PureState):
        return PureState(layout, np.kron(a.amplitudes, b.amplitudes), leak)
    if isinstance(a, DensityMatrix) and isinstance(b, DensityMatrix):
        return DensityMatrix(layout, np.kron(a.matrix, b.matrix), leak)
    raise TypeError("tensor needs two pure states or two density matrices")


def pure_to_dm(psi: PureState) -> DensityMatrix:
    a = psi.amplitudes
    return DensityMatrix(psi.layout, np.outer(a, a.conj()), psi.leakage)


def as_dm(state: State) -> DensityMatrix:
    return pure_to_dm(state) if isinstance(state, PureState) else state


def purity(rho: State) -> float:
    if isinstance(rho, PureState):
        return float(np.vdot(rho.amplitudes, rho.amplitudes).real ** 2)
    m = rho.matrix
    # tr(rho^2) without forming the product
    return float(np.einsum("ij,ji->", m, m).real)


def _split_axes(layout: RegisterLayout, keep: Iterable[str]) -> tuple[list[int], list[int]]:
    keep = set(keep)
    if not keep:
        raise ValueError("keep must name at least one subsystem")
    for lab in keep:
        layout.index(lab)
    kept = [i for i, lab in enumerate(layout.labels) if lab in keep]
    traced = [i for i, lab in enumerate(layout.labels) if lab not in keep]
    return kept, traced


def bipartite_matrix(psi: PureState, left: Iterable[str]) -> np.ndarray:
    """Amplitudes reshaped to a (left, right) matrix across the cut."""
    kept, traced = _split_axes(psi.layout, left)
    dims = psi.layout.dims
    dl = int(np.prod([dims[i] for i in kept], dtype=np.int64))
    return psi.as_tensor().transpose(kept + traced).reshape(dl, -1)


def partial_trace(rho: State, keep: Iterable[str]) -> DensityMatrix:
    """Reduced state on the subsystems labelled ``keep`` (in register order).

    Pure inputs are reduced directly from the amplitudes, so the full
    density matrix of a large register is never formed.
    """
    layout = rho.layout
    kept, traced = _split_axes(layout, keep)
    sub = RegisterLayout(tuple(layout.subsystems[i] for i in kept))
    if isinstance(rho, PureState):
        m = bipartite_matrix(rho, sub.labels)
        return DensityMatrix(sub, m @ m.conj().T, rho.leakage)
    dims = layout.dims
    n = len(dims)
    dk = sub.total_dim
    dt = layout.total_dim // dk
    perm = kept + traced
    t = rho.matrix.reshape(dims + dims).transpose(perm + [n + p for p in perm])
    t = t.reshape(dk, dt, dk, dt)
    return DensityMatrix(sub, np.einsum("ajbj->ab", t), rho.leakage)


def reorder(state: State, labels: Sequence[str]) -> State:
    """Same state with subsystems permuted into the order ``labels``."""
    layout = state.layout
    if sorted(labels) != sorted(layout.labels):
        raise ValueError(f"{labels} is not a permutation of {layout.labels}")
    perm = [layout.index(lab) for lab in labels]
    new = RegisterLayout(tuple(layout.subsystems[i] for i in perm))
    if isinstance(state, PureState):
        return PureState(new, state.as_tensor().transpose(perm), state.leakage)
    n = len(perm)
    t = state.matrix.reshape(layout.dims * 2).transpose(perm + [n + p for p in perm])
    return DensityMatrix(new, t.reshape(new.total_dim, new.total_dim), state.leakage)


# ---------------------------------------------------------------------------
# JSON debug format: layout plus a flat array of [re, im] pairs


def state_to_json(state: State) -> str:
    data = state.amplitudes if isinstance(state, PureState) else state.matrix.reshape(-1)
    doc = {
        "kind": "pure" if isinstance(state, PureState) else "density",
        "layout": [{"role": s.role, "dim": s.dim, "label": s.label} for s in state.layout.subsystems],
        "data": [[float(z.real), float(z.imag)] for z in data],
        "leakage": state.leakage,
    }
    return json.dumps(doc)


def state_from_json(text: str | dict) -> State:
    doc = json.loads(text) if isinstance(text, str) else text
    layout = RegisterLayout(tuple(Subsystem(**s) for s in doc["layout"]))
    flat = np.array([complex(re, im) for re, im in doc["data"]], dtype=complex)
    if doc["kind"] == "pure":
        return PureState(layout, flat, doc.get("leakage", 0.0))
    d = layout.total_dim
    return DensityMatrix(layout, flat.reshape(d, d), doc.get("leakage", 0.0))
