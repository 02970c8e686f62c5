"""Exception hierarchy.

Numerical guards (truncation leakage, Fock-level misalignment, failed
factorization, residual qubit excitation) share a base class so callers
such as the CLI can map them to a single exit status.
"""


class NumericalGuardError(RuntimeError):
    """A numerical precondition or postcondition of a conversion was violated."""


class AlignmentError(NumericalGuardError, ValueError):
    """CV truncation is not a multiple of the block size a stage requires."""


class TruncationError(NumericalGuardError):
    """Probability weight above the Fock cutoff exceeds the allowed leakage."""


class FactorizationError(NumericalGuardError):
    """A register expected to be a product state is entangled with the rest."""


class ResidualExcitationError(NumericalGuardError):
    """Qubits expected to return to the ground state did not."""
