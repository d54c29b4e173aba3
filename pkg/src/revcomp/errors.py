"""Exception hierarchy shared by every revcomp module."""


class RevcompError(Exception):
    """Base class for all errors raised by revcomp."""


class InvalidGateError(RevcompError, ValueError):
    """A gate references a bad qubit index or has the wrong number of controls."""


class DimensionError(RevcompError, ValueError):
    """Qubit counts of interacting values do not agree, or exceed a hard limit."""


class InvalidStateError(RevcompError, ValueError):
    """A sparse state or training set violates its invariants."""


class CircuitParseError(RevcompError, ValueError):
    """Malformed circuit string. ``position`` is the 0-based character offset."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.position = position


class ArtifactError(RevcompError):
    """An artifact file is malformed, has the wrong version, or is inconsistent."""


class InvalidSpecError(RevcompError, ValueError):
    """A family specification or run configuration is invalid."""


class ComplementEquivalentError(InvalidSpecError):
    """m-particle spec with m > n/2; the bit-complemented spec is the real problem."""

    def __init__(self, n_qubits: int, m: int):
        self.n_qubits = n_qubits
        self.m = m
        self.suggested_m = n_qubits - m
        super().__init__(
            f"{m}-particle states on {n_qubits} qubits are complement-equivalent to "
            f"{self.suggested_m}-particle states; use --m {self.suggested_m}"
        )


class InfeasibleTargetError(RevcompError, ValueError):
    """More trash qubits requested than the union support allows."""
