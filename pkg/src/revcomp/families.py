"""Benchmark state families and their default compression targets.

Unary and m-particle families train on each basis state separately; GHZ,
prime and random-support families train on one uniform superposition.

Random supports are drawn with Python's ``random.Random`` (MT19937) seeded
with the spec's integer seed, using ``Random.sample`` over ``range(2**n)``.
Both are part of CPython's documented reproducibility guarantees for a fixed
seed, so the same seed yields the same support on every platform.
"""
from __future__ import annotations

import math
import random
from dataclasses import dataclass
from itertools import combinations
from typing import Optional, Sequence

from .core import MAX_QUBITS, SparseState, TrainingSet
from .errors import ComplementEquivalentError, InfeasibleTargetError, InvalidSpecError

FAMILY_KINDS = ("unary", "ghz", "random_support", "prime", "m_particle")


@dataclass(frozen=True)
class FamilySpec:
    kind: str
    n_qubits: int
    m: Optional[int] = None
    support_size: Optional[int] = None
    seed: int = 0

    @property
    def label(self) -> str:
        """Family name as it appears in summary tables (``m_particle:2`` etc.)."""
        return f"m_particle:{self.m}" if self.kind == "m_particle" else self.kind

    @property
    def applicable(self) -> bool:
        try:
            self.validate()
        except ComplementEquivalentError:
            return False
        return True

    def validate(self) -> "FamilySpec":
        kind, n = self.kind, self.n_qubits
        if kind not in FAMILY_KINDS:
            raise InvalidSpecError(f"unknown family {kind!r}; expected one of {', '.join(FAMILY_KINDS)}")
        if not isinstance(n, int) or not 2 <= n <= MAX_QUBITS:
            raise InvalidSpecError(f"{kind} family needs 2 <= n <= {MAX_QUBITS}, got {n!r}")
        if kind == "m_particle":
            if self.m is None or not 1 <= self.m <= n:
                raise InvalidSpecError(f"m_particle needs 1 <= m <= n, got m={self.m!r}")
            if 2 * self.m > n:
                raise ComplementEquivalentError(n, self.m)
        elif self.m is not None:
            raise InvalidSpecError(f"m is only meaningful for m_particle, not {kind}")
        if kind == "random_support":
            size = self.support_size if self.support_size is not None else n
            if not 1 <= size <= 2**n:
                raise InvalidSpecError(f"support_size must be in [1, 2^{n}], got {size}")
        elif self.support_size is not None:
            raise InvalidSpecError(f"support_size is only meaningful for random_support, not {kind}")
        if kind in ("unary", "m_particle") and n > 24:
            raise InvalidSpecError(f"{kind} family with n={n} produces too many training states")
        return self

    def generate(self) -> TrainingSet:
        self.validate()
        n = self.n_qubits
        if self.kind == "unary":
            return gen_unary(n)
        if self.kind == "ghz":
            return gen_ghz(n)
        if self.kind == "prime":
            return gen_prime(n)
        if self.kind == "m_particle":
            return gen_m_particle(n, self.m)
        size = self.support_size if self.support_size is not None else n
        return gen_random_support(n, size, self.seed)


@dataclass(frozen=True)
class CompressionTarget:
    trash_qubits: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "trash_qubits", tuple(int(q) for q in self.trash_qubits))
        if len(set(self.trash_qubits)) != len(self.trash_qubits):
            raise InvalidSpecError(f"duplicate trash qubits {self.trash_qubits}")

    @property
    def trash_count(self) -> int:
        return len(self.trash_qubits)


def _one_hot(n: int, qubit: int) -> int:
    return 1 << (n - 1 - qubit)


def _basis_training(n: int, labels: Sequence[int]) -> TrainingSet:
    return TrainingSet(tuple(SparseState.basis(n, b) for b in labels))


def gen_unary(n: int) -> TrainingSet:
    if n < 2:
        raise InvalidSpecError(f"unary family needs n >= 2, got {n}")
    return _basis_training(n, [_one_hot(n, j) for j in range(n)])


def gen_ghz(n: int) -> TrainingSet:
    if n < 2:
        raise InvalidSpecError(f"GHZ family needs n >= 2, got {n}")
    return TrainingSet((SparseState.uniform(n, [0, (1 << n) - 1]),))


def gen_random_support(n: int, support_size: Optional[int] = None, seed: int = 0) -> TrainingSet:
    size = n if support_size is None else support_size
    if not 1 <= size <= 2**n:
        raise InvalidSpecError(f"support_size must be in [1, 2^{n}], got {size}")
    rng = random.Random(seed)
    support = rng.sample(range(2**n), size)
    return TrainingSet((SparseState.uniform(n, support),))


def primes_below(limit: int) -> list[int]:
    """Sieve of Eratosthenes: all primes ``p < limit``."""
    if limit < 3:
        return []
    sieve = bytearray([1]) * limit
    sieve[0] = sieve[1] = 0
    for p in range(2, math.isqrt(limit - 1) + 1):
        if sieve[p]:
            sieve[p * p :: p] = bytes(len(range(p * p, limit, p)))
    return [i for i, v in enumerate(sieve) if v]


def gen_prime(n: int) -> TrainingSet:
    if n < 2:
        raise InvalidSpecError(f"prime family needs n >= 2, got {n}")
    return TrainingSet((SparseState.uniform(n, primes_below(2**n)),))


def gen_m_particle(n: int, m: int) -> TrainingSet:
    FamilySpec("m_particle", n, m=m).validate()
    labels = [sum(_one_hot(n, q) for q in ones) for ones in combinations(range(n), m)]
    return _basis_training(n, labels)


def max_trash(training: TrainingSet) -> int:
    """Information-theoretic bound ``n - ceil(log2 U)`` on clearable qubits."""
    u = len(training.union_support())
    return training.n_qubits - math.ceil(math.log2(u)) if u > 1 else training.n_qubits


def default_target(
    training: TrainingSet,
    requested: Optional[int] = None,
    trash_qubits: Optional[Sequence[int]] = None,
) -> CompressionTarget:
    """Leading-qubit trash target, or an explicit qubit list, checked for feasibility."""
    bound = max_trash(training)
    n = training.n_qubits
    if trash_qubits is not None:
        qubits = tuple(trash_qubits)
        if requested is not None and requested != len(qubits):
            raise InvalidSpecError(f"trash count {requested} disagrees with {len(qubits)} trash qubits")
        if any(not 0 <= q < n for q in qubits):
            raise InvalidSpecError(f"trash qubits {qubits} out of range for {n} qubits")
    else:
        k = bound if requested is None else requested
        if k < 0:
            raise InvalidSpecError(f"trash count must be non-negative, got {k}")
        qubits = tuple(range(min(k, n)))
    if len(qubits) > bound:
        raise InfeasibleTargetError(
            f"{len(qubits)} trash qubits requested but union support of "
            f"{len(training.union_support())} states allows at most {bound}"
        )
    return CompressionTarget(qubits)
