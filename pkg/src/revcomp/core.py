"""Sparse simulation of X / CX / CCX circuits.

Every gate in the restricted set permutes computational basis states, so a
state is stored as a map ``basis index -> amplitude`` and a circuit just
relabels the keys. Nothing here ever allocates a dense state vector except
:func:`permutation_table`, which is the brute-force verification oracle.

Bit ordering: qubit 0 is the leftmost character of the ket string, and the
integer label of a basis state is that ket read as a big-endian binary
numeral. Qubit ``q`` of an ``n``-qubit register is therefore bit ``n-1-q``
of the integer.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np

from .errors import DimensionError, InvalidGateError, InvalidStateError

MAX_QUBITS = 64
MAX_TABLE_QUBITS = 12
NORM_TOL = 1e-12
ZERO_AMPLITUDE = 1e-15

KINDS = ("X", "CX", "CCX")


def qubit_mask(n_qubits: int, qubit: int) -> int:
    """Integer mask selecting ``qubit`` in an ``n_qubits`` register."""
    return 1 << (n_qubits - 1 - qubit)


def qubits_mask(n_qubits: int, qubits: Iterable[int]) -> int:
    mask = 0
    for q in qubits:
        mask |= 1 << (n_qubits - 1 - q)
    return mask


def _check_qubit_count(n_qubits: int) -> None:
    if not isinstance(n_qubits, (int, np.integer)) or not 1 <= n_qubits <= MAX_QUBITS:
        raise DimensionError(f"n_qubits must be in [1, {MAX_QUBITS}], got {n_qubits!r}")


def _check_index(n_qubits: int, qubit: int) -> None:
    if not 0 <= qubit < n_qubits:
        raise InvalidGateError(f"qubit index {qubit} out of range for {n_qubits} qubits")


class BasisState(NamedTuple):
    """One computational basis vector, ``bits`` holding the big-endian label."""

    bits: int
    n_qubits: int

    @classmethod
    def from_ket(cls, ket: str) -> "BasisState":
        ket = ket.strip().strip("|⟩>")
        if not ket or set(ket) - {"0", "1"}:
            raise InvalidStateError(f"not a ket bitstring: {ket!r}")
        _check_qubit_count(len(ket))
        return cls(int(ket, 2), len(ket))

    @property
    def ket(self) -> str:
        return format_ket(self.bits, self.n_qubits)

    def bit(self, qubit: int) -> int:
        _check_index(self.n_qubits, qubit)
        return (self.bits >> (self.n_qubits - 1 - qubit)) & 1


def format_ket(bits: int, n_qubits: int) -> str:
    return format(bits, f"0{n_qubits}b")


@dataclass(frozen=True, slots=True)
class Gate:
    """An X, CX or CCX gate: ``target`` is flipped iff every control reads 1.

    Controls are stored sorted, so ``Gate(2, (1, 0)) == Gate(2, (0, 1))``.
    """

    target: int
    controls: tuple[int, ...] = ()

    def __post_init__(self):
        controls = tuple(sorted(int(c) for c in self.controls))
        object.__setattr__(self, "controls", controls)
        object.__setattr__(self, "target", int(self.target))
        if len(controls) > 2:
            raise InvalidGateError(f"at most two controls allowed, got {len(controls)}")
        qubits = (self.target,) + controls
        if min(qubits) < 0:
            raise InvalidGateError(f"negative qubit index in {qubits}")
        if len(set(qubits)) != len(qubits):
            raise InvalidGateError(f"gate qubits must be distinct, got {qubits}")

    @property
    def kind(self) -> str:
        return KINDS[len(self.controls)]

    @property
    def qubits(self) -> tuple[int, ...]:
        return (self.target,) + self.controls

    def masks(self, n_qubits: int) -> tuple[int, int]:
        """``(control_mask, target_mask)`` for an ``n_qubits`` register."""
        return qubits_mask(n_qubits, self.controls), qubit_mask(n_qubits, self.target)

    def __str__(self) -> str:
        return "(" + ", ".join(str(q) for q in self.qubits) + ")"


def X(target: int) -> Gate:
    return Gate(target)


def CX(target: int, control: int) -> Gate:
    return Gate(target, (control,))


def CCX(target: int, control1: int, control2: int) -> Gate:
    return Gate(target, (control1, control2))


@dataclass(frozen=True)
class Circuit:
    """Ordered gate list on ``n_qubits`` qubits; ``gates[0]`` is applied first."""

    n_qubits: int
    gates: tuple[Gate, ...] = ()

    def __post_init__(self):
        _check_qubit_count(self.n_qubits)
        gates = tuple(self.gates)
        object.__setattr__(self, "gates", gates)
        for g in gates:
            if not isinstance(g, Gate):
                raise InvalidGateError(f"expected Gate, got {type(g).__name__}")
            for q in g.qubits:
                _check_index(self.n_qubits, q)

    def __len__(self) -> int:
        return len(self.gates)

    def __iter__(self):
        return iter(self.gates)

    def __add__(self, other: "Circuit") -> "Circuit":
        if other.n_qubits != self.n_qubits:
            raise DimensionError(f"cannot concatenate {self.n_qubits}- and {other.n_qubits}-qubit circuits")
        return Circuit(self.n_qubits, self.gates + other.gates)

    def inverse(self) -> "Circuit":
        return Circuit(self.n_qubits, self.gates[::-1])

    def gate_counts(self) -> dict[str, int]:
        counts = dict.fromkeys(KINDS, 0)
        for g in self.gates:
            counts[g.kind] += 1
        return counts


class SparseState:
    """Normalized state stored as ``{basis index: complex amplitude}``.

    Immutable after construction. Equality is exact on both the support and the
    amplitudes; use :meth:`isclose` for tolerance-based comparison.
    """

    __slots__ = ("n_qubits", "terms")

    def __init__(self, n_qubits: int, terms: Mapping[int, complex]):
        _check_qubit_count(n_qubits)
        clean: dict[int, complex] = {}
        limit = 1 << n_qubits
        for key, amp in terms.items():
            if isinstance(key, BasisState):
                if key.n_qubits != n_qubits:
                    raise DimensionError(f"basis state width {key.n_qubits} != {n_qubits}")
                key = key.bits
            elif isinstance(key, str):
                key = BasisState.from_ket(key).bits
            key = int(key)
            if not 0 <= key < limit:
                raise InvalidStateError(f"basis index {key} does not fit in {n_qubits} qubits")
            if key in clean:
                raise InvalidStateError(f"duplicate basis index {key}")
            amp = complex(amp)
            if abs(amp) < ZERO_AMPLITUDE:
                raise InvalidStateError(f"zero amplitude stored for basis index {key}")
            clean[key] = amp
        if not clean:
            raise InvalidStateError("state has empty support")
        norm = math.fsum(abs(a) ** 2 for a in clean.values())
        if abs(norm - 1.0) > NORM_TOL:
            raise InvalidStateError(f"state not normalized: sum |a|^2 = {norm!r}")
        self.n_qubits = n_qubits
        self.terms = MappingProxyType(clean)

    @classmethod
    def _trusted(cls, n_qubits: int, terms: dict[int, complex]) -> "SparseState":
        obj = cls.__new__(cls)
        obj.n_qubits = n_qubits
        obj.terms = MappingProxyType(terms)
        return obj

    @classmethod
    def basis(cls, n_qubits: int, bits: int | str) -> "SparseState":
        return cls(n_qubits, {bits: 1.0})

    @classmethod
    def uniform(cls, n_qubits: int, support: Iterable[int | str]) -> "SparseState":
        support = list(support)
        if not support:
            raise InvalidStateError("uniform superposition over an empty support")
        amp = 1.0 / math.sqrt(len(support))
        return cls(n_qubits, {b: amp for b in support})

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(sorted(self.terms))

    def kets(self) -> list[str]:
        return [format_ket(b, self.n_qubits) for b in self.support]

    def probabilities(self) -> dict[int, float]:
        return {b: abs(a) ** 2 for b, a in sorted(self.terms.items())}

    def __len__(self) -> int:
        return len(self.terms)

    def __eq__(self, other) -> bool:
        if not isinstance(other, SparseState):
            return NotImplemented
        return self.n_qubits == other.n_qubits and dict(self.terms) == dict(other.terms)

    def __hash__(self):
        return hash((self.n_qubits, frozenset(self.terms.items())))

    def isclose(self, other: "SparseState", atol: float = 1e-12) -> bool:
        if self.n_qubits != other.n_qubits or set(self.terms) != set(other.terms):
            return False
        return all(abs(self.terms[k] - other.terms[k]) <= atol for k in self.terms)

    def __repr__(self) -> str:
        body = ", ".join(f"|{format_ket(b, self.n_qubits)}>: {a:.6g}" for b, a in sorted(self.terms.items()))
        return f"SparseState({self.n_qubits}, {{{body}}})"


@dataclass(frozen=True)
class TrainingSet:
    """States to compress together with their weights (uniform by default)."""

    states: tuple[SparseState, ...]
    weights: tuple[float, ...] = field(default=())

    def __post_init__(self):
        states = tuple(self.states)
        if not states:
            raise InvalidStateError("training set is empty")
        n = states[0].n_qubits
        if any(s.n_qubits != n for s in states):
            raise DimensionError("training states disagree on n_qubits")
        weights = tuple(float(w) for w in self.weights) or (1.0 / len(states),) * len(states)
        if len(weights) != len(states):
            raise InvalidStateError(f"{len(weights)} weights for {len(states)} states")
        if any(w < 0 for w in weights):
            raise InvalidStateError("weights must be non-negative")
        if abs(math.fsum(weights) - 1.0) > NORM_TOL:
            raise InvalidStateError(f"weights sum to {math.fsum(weights)!r}, expected 1")
        object.__setattr__(self, "states", states)
        object.__setattr__(self, "weights", weights)

    @property
    def n_qubits(self) -> int:
        return self.states[0].n_qubits

    def __len__(self) -> int:
        return len(self.states)

    def union_support(self) -> tuple[int, ...]:
        return tuple(sorted(set().union(*(s.terms for s in self.states))))

    def weighted_support(self) -> tuple[np.ndarray, np.ndarray]:
        """Union support and per-element mass ``sum_j p_j |a_jb|^2``.

        Fitness is linear in these masses, which is what lets the search
        evaluate a circuit on one flat array instead of per training state.
        """
        mass: dict[int, float] = {}
        for state, w in zip(self.states, self.weights):
            for b, a in state.terms.items():
                mass[b] = mass.get(b, 0.0) + w * abs(a) ** 2
        keys = sorted(mass)
        return np.array(keys, dtype=np.uint64), np.array([mass[k] for k in keys])

    def is_basis_set(self) -> bool:
        return all(len(s) == 1 for s in self.states)

    def map(self, circuit: "Circuit") -> "TrainingSet":
        return TrainingSet(tuple(apply_circuit(s, circuit) for s in self.states), self.weights)


def _check_gate(n_qubits: int, gate: Gate) -> None:
    for q in gate.qubits:
        _check_index(n_qubits, q)


def apply_gate(state: SparseState, gate: Gate) -> SparseState:
    _check_gate(state.n_qubits, gate)
    cmask, tmask = gate.masks(state.n_qubits)
    out = {}
    for b, a in state.terms.items():
        out[b ^ tmask if b & cmask == cmask else b] = a
    return SparseState._trusted(state.n_qubits, out)


def apply_circuit(state: SparseState, circuit: Circuit) -> SparseState:
    if state.n_qubits != circuit.n_qubits:
        raise DimensionError(f"{circuit.n_qubits}-qubit circuit applied to {state.n_qubits}-qubit state")
    masks = [g.masks(circuit.n_qubits) for g in circuit.gates]
    out = {}
    for b, a in state.terms.items():
        for cmask, tmask in masks:
            if b & cmask == cmask:
                b ^= tmask
        out[b] = a
    return SparseState._trusted(state.n_qubits, out)


def target_zero_mass(state: SparseState, target: int, guard: Iterable[int] = ()) -> float:
    """Probability that ``target`` (and every ``guard`` qubit) reads 0."""
    _check_index(state.n_qubits, target)
    for q in guard:
        _check_index(state.n_qubits, q)
    mask = qubits_mask(state.n_qubits, (target, *guard))
    return math.fsum(abs(a) ** 2 for b, a in state.terms.items() if not b & mask)


def is_disentangled(state: SparseState, target: int | Iterable[int]) -> bool:
    """True iff every support element has all ``target`` bits equal to 0."""
    targets = (target,) if isinstance(target, (int, np.integer)) else tuple(target)
    for q in targets:
        _check_index(state.n_qubits, q)
    mask = qubits_mask(state.n_qubits, targets)
    return not any(b & mask for b in state.terms)


def fitness(
    circuit: Circuit,
    training: TrainingSet,
    target: int,
    length_penalty: float = 0.0,
    guard: Sequence[int] = (),
) -> float:
    """Weighted mass of ``target`` reading 0 after ``circuit``, minus a gate-count penalty.

    ``guard`` lists qubits that must also read 0 for a basis element to count;
    the compressor uses it to keep already-cleared trash qubits clear.
    """
    if training.n_qubits != circuit.n_qubits:
        raise DimensionError(f"{circuit.n_qubits}-qubit circuit, {training.n_qubits}-qubit training set")
    total = math.fsum(
        w * target_zero_mass(apply_circuit(s, circuit), target, guard)
        for s, w in zip(training.states, training.weights)
    )
    return total - length_penalty * len(circuit)


def permutation_table(circuit: Circuit) -> list[int]:
    """Image of every basis index ``0 .. 2^n - 1`` under ``circuit`` (dense oracle)."""
    n = circuit.n_qubits
    if n > MAX_TABLE_QUBITS:
        raise DimensionError(f"permutation table limited to {MAX_TABLE_QUBITS} qubits, got {n}")
    table = np.arange(1 << n, dtype=np.int64)
    for g in circuit.gates:
        cmask, tmask = g.masks(n)
        fire = (table & cmask) == cmask
        table[fire] ^= tmask
    return table.tolist()
