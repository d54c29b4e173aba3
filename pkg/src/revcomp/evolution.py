"""(mu + lambda) evolutionary search for a circuit that clears one target qubit.

Candidates are gate tuples. All random draws (initial population, parent
choice, operator choice, mutation internals) come from one ``random.Random``
(MT19937) stream, consumed in a fixed order before a generation's children
are evaluated, so splitting evaluation across threads cannot change results.

Ranking is a total order: higher fitness first, then the most recent birth.
Preferring newcomers on ties lets the population drift across the wide
fitness plateaus this problem has (a single unsolved basis state keeps the
fitness constant); preferring shorter or older circuits instead freezes the
search at one- and two-gate circuits. Bloat is held back by ``max_length``:
a growth mutation that would exceed it is replaced by a removal.

Survivors are the best ``population_size`` distinct circuits (by canonical
string) among the current population and its children.
"""
from __future__ import annotations

import math
import random
from itertools import permutations
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .codec import serialize_gates
from .core import KINDS, Circuit, Gate, TrainingSet, format_ket, qubits_mask
from .errors import DimensionError, InvalidSpecError

Gates = tuple[Gate, ...]

OPERATORS = ("add", "remove", "permute", "repeat", "replace")
MAX_ARITY = 3
DEDUP_ATTEMPTS = 100


@dataclass(frozen=True)
class EAParams:
    population_size: int = 50
    parent_count: int = 10
    children_per_generation: int = 40
    mutation_weights: tuple[float, ...] = (1.0, 1.0, 1.0, 1.0, 1.0)
    init_length: Optional[int] = None  # None -> 2 * n_qubits
    max_length: Optional[int] = None  # None -> 10 * n_qubits
    max_generations: int = 1000
    restarts: int = 5
    length_penalty: float = 0.0
    seed: int = 0
    snapshots: bool = False
    workers: int = 1
    prune: bool = True

    def __post_init__(self):
        object.__setattr__(self, "mutation_weights", tuple(float(w) for w in self.mutation_weights))
        for name in ("population_size", "parent_count", "children_per_generation", "max_generations", "restarts", "workers"):
            if getattr(self, name) < 1:
                raise InvalidSpecError(f"{name} must be positive, got {getattr(self, name)}")
        if self.parent_count > self.population_size:
            raise InvalidSpecError("parent_count cannot exceed population_size")
        if len(self.mutation_weights) != len(OPERATORS):
            raise InvalidSpecError(f"need {len(OPERATORS)} mutation weights ({', '.join(OPERATORS)})")
        if any(w < 0 for w in self.mutation_weights) or not sum(self.mutation_weights) > 0:
            raise InvalidSpecError("mutation weights must be non-negative with a positive sum")
        if self.init_length is not None and self.init_length < 1:
            raise InvalidSpecError("init_length must be positive")
        if self.max_length is not None and self.max_length < 1:
            raise InvalidSpecError("max_length must be positive")
        if self.length_penalty < 0:
            raise InvalidSpecError("length_penalty must be non-negative")

    def initial_length(self, n_qubits: int) -> int:
        return self.init_length if self.init_length is not None else 2 * n_qubits

    def length_cap(self, n_qubits: int) -> int:
        return self.max_length if self.max_length is not None else 10 * n_qubits


@dataclass(slots=True)
class Candidate:
    gates: Gates
    fitness: float
    canonical_key: str
    birth_order: int
    n_qubits: int
    solved: bool = False

    @property
    def circuit(self) -> Circuit:
        return Circuit(self.n_qubits, self.gates)

    def rank_key(self):
        return (-self.fitness, -self.birth_order)


@dataclass
class EAResult:
    best: Candidate
    success: bool
    generations_used: int
    evaluations: int = 0
    restarts_used: int = 1
    trace: list[dict] = field(default_factory=list)

    @property
    def circuit(self) -> Circuit:
        return self.best.circuit


# ------------------------------------------------------------ evaluation


class Evaluator:
    """Scores many circuits at once against one flattened training set.

    A basis element counts toward fitness when the target qubit and every
    ``guard`` qubit read 0 after the circuit. ``solved`` is the exact
    combinatorial check: every support element counts.
    """

    def __init__(
        self,
        training: TrainingSet,
        target: int | Sequence[int],
        guard: Sequence[int] = (),
        length_penalty: float = 0.0,
        workers: int = 1,
    ):
        n = training.n_qubits
        targets = (target,) if isinstance(target, (int, np.integer)) else tuple(target)
        for q in (*targets, *guard):
            if not 0 <= q < n:
                raise DimensionError(f"qubit {q} out of range for {n} qubits")
        self.n_qubits = n
        self.basis, self.mass = training.weighted_support()
        self.mask = np.uint64(qubits_mask(n, (*targets, *guard)))
        self.length_penalty = length_penalty
        self.workers = workers
        self._gate_masks: dict[Gate, tuple[int, int]] = {}

    def masks(self, gate: Gate) -> tuple[int, int]:
        m = self._gate_masks.get(gate)
        if m is None:
            m = self._gate_masks[gate] = gate.masks(self.n_qubits)
        return m

    def evaluate(self, batch: Sequence[Gates]) -> tuple[list[float], list[bool]]:
        if not batch:
            return [], []
        if self.workers > 1 and len(batch) > 1:
            size = math.ceil(len(batch) / self.workers)
            chunks = [batch[i : i + size] for i in range(0, len(batch), size)]
            with ThreadPoolExecutor(self.workers) as pool:
                parts = list(pool.map(self._evaluate_chunk, chunks))
            return [f for p in parts for f in p[0]], [s for p in parts for s in p[1]]
        return self._evaluate_chunk(batch)

    def _evaluate_chunk(self, batch: Sequence[Gates]) -> tuple[list[float], list[bool]]:
        width = max(len(g) for g in batch)
        cm = np.zeros((len(batch), max(width, 1)), dtype=np.uint64)
        tm = np.zeros_like(cm)
        for i, gates in enumerate(batch):
            for j, g in enumerate(gates):
                cm[i, j], tm[i, j] = self.masks(g)
        return self._run(cm, tm, [len(g) for g in batch])

    def _run(self, cm: np.ndarray, tm: np.ndarray, lengths) -> tuple[list[float], list[bool]]:
        x = np.repeat(self.basis[None, :], cm.shape[0], axis=0)
        for j in range(cm.shape[1]):
            c = cm[:, j : j + 1]
            x ^= ((x & c) == c) * tm[:, j : j + 1]
        cleared = (x & self.mask) == 0
        raw = np.where(cleared, self.mass, 0.0).sum(axis=1)
        penalty = self.length_penalty * np.asarray(lengths, dtype=float)
        return (raw - penalty).tolist(), cleared.all(axis=1).tolist()


# ------------------------------------------------------------- mutations


def random_gate(n_qubits: int, rng: random.Random) -> Gate:
    """Kind uniform over those that fit in ``n_qubits``, then a uniform distinct qubit tuple."""
    arity = rng.randrange(min(MAX_ARITY, n_qubits)) + 1
    qubits = rng.sample(range(n_qubits), arity)
    return Gate(qubits[0], tuple(qubits[1:]))


def _count(length: int, rng: random.Random) -> int:
    return rng.randint(1, min(MAX_ARITY, length))


def _add(gates: Gates, n: int, rng: random.Random) -> Gates:
    pos = rng.randint(0, len(gates))
    return gates[:pos] + (random_gate(n, rng),) + gates[pos:]


def _remove(gates: Gates, n: int, rng: random.Random) -> Gates:
    if not gates:
        return _add(gates, n, rng)
    drop = set(rng.sample(range(len(gates)), _count(len(gates), rng)))
    return tuple(g for i, g in enumerate(gates) if i not in drop)


def _permute(gates: Gates, n: int, rng: random.Random) -> Gates:
    out = list(gates)
    rng.shuffle(out)
    return tuple(out)


def _repeat(gates: Gates, n: int, rng: random.Random) -> Gates:
    if not gates:
        return _add(gates, n, rng)
    picked = [gates[i] for i in rng.sample(range(len(gates)), _count(len(gates), rng))]
    out = list(gates)
    for g in picked:
        out.insert(rng.randint(0, len(out)), g)
    return tuple(out)


def _replace(gates: Gates, n: int, rng: random.Random) -> Gates:
    if not gates:
        return _add(gates, n, rng)
    out = list(gates)
    for i in rng.sample(range(len(gates)), _count(len(gates), rng)):
        out[i] = random_gate(n, rng)
    return tuple(out)


_OPERATOR_FUNCS: dict[str, Callable[[Gates, int, random.Random], Gates]] = {
    "add": _add,
    "remove": _remove,
    "permute": _permute,
    "repeat": _repeat,
    "replace": _replace,
}


def _circuit_op(op):
    def mutate(circuit: Circuit, rng: random.Random) -> Circuit:
        return Circuit(circuit.n_qubits, op(circuit.gates, circuit.n_qubits, rng))

    mutate.__name__ = f"mutate_{op.__name__.lstrip('_')}"
    return mutate


mutate_add = _circuit_op(_add)
mutate_remove = _circuit_op(_remove)
mutate_permute = _circuit_op(_permute)
mutate_repeat = _circuit_op(_repeat)
mutate_replace = _circuit_op(_replace)


# ------------------------------------------------------------ population


def _random_gates(n: int, length: int, rng: random.Random) -> Gates:
    return tuple(random_gate(n, rng) for _ in range(length))


def init_population(
    params: EAParams,
    n_qubits: int,
    rng: random.Random,
    evaluator: Optional[Evaluator] = None,
) -> list[Candidate]:
    """``params.population_size`` random circuits, distinct by canonical key where possible.

    Without an ``evaluator`` the fitness fields are NaN.
    """
    top = min(params.initial_length(n_qubits), params.length_cap(n_qubits))
    seen: set[str] = set()
    drafts: list[tuple[Gates, str]] = []
    for _ in range(params.population_size):
        for _attempt in range(DEDUP_ATTEMPTS):
            gates = _random_gates(n_qubits, rng.randint(1, top), rng)
            key = serialize_gates(gates, n_qubits)
            if key not in seen:
                break
        seen.add(key)
        drafts.append((gates, key))
    if evaluator is None:
        scores = [math.nan] * len(drafts)
        solved = [False] * len(drafts)
    else:
        scores, solved = evaluator.evaluate([d[0] for d in drafts])
    return [
        Candidate(gates, f, key, i, n_qubits, s)
        for i, ((gates, key), f, s) in enumerate(zip(drafts, scores, solved))
    ]


def _snapshot(gates: Gates, states: TrainingSet) -> list[list[str]]:
    circuit = Circuit(states.n_qubits, gates)
    return [[format_ket(b, states.n_qubits) for b in s.support] for s in states.map(circuit).states]


def _record(generation, restart, population, evaluations, snapshot_of) -> dict:
    best = population[0]
    rec = {
        "generation": generation,
        "restart": restart,
        "best_fitness": best.fitness,
        "best_gate_count": len(best.gates),
        "population_size": len(population),
        "evaluations": evaluations,
    }
    if snapshot_of is not None:
        rec["support_snapshot"] = _snapshot(best.gates, snapshot_of)
    return rec


def _run_once(
    evaluator: Evaluator,
    params: EAParams,
    seed: int,
    restart: int,
    snapshot_of: Optional[TrainingSet],
    trace: list[dict],
) -> tuple[Candidate, int, int]:
    """One seeded run; returns (best, generations evaluated, fitness evaluations)."""
    n = evaluator.n_qubits
    rng = random.Random(seed)
    population = init_population(params, n, rng, evaluator)
    population.sort(key=Candidate.rank_key)
    births = len(population)
    evaluations = len(population)
    trace.append(_record(0, restart, population, evaluations, snapshot_of))

    ops = [_OPERATOR_FUNCS[name] for name in OPERATORS]
    weights = params.mutation_weights
    mu = params.parent_count
    cap = params.length_cap(n)
    generation = 0
    while not population[0].solved and generation + 1 < params.max_generations:
        generation += 1
        parents = population[:mu]
        seen = {c.canonical_key for c in population}
        fresh: list[tuple[Gates, str]] = []
        for _ in range(params.children_per_generation):
            parent = parents[rng.randrange(mu)]
            op = rng.choices(ops, weights)[0]
            gates = op(parent.gates, n, rng)
            if len(gates) > cap:
                gates = _remove(parent.gates, n, rng)
            key = serialize_gates(gates, n)
            if key not in seen:
                seen.add(key)
                fresh.append((gates, key))
        scores, solved = evaluator.evaluate([g for g, _ in fresh])
        evaluations += len(fresh)
        children = [
            Candidate(gates, f, key, births + i, n, s)
            for i, ((gates, key), f, s) in enumerate(zip(fresh, scores, solved))
        ]
        births += len(fresh)
        pool = population + children
        pool.sort(key=Candidate.rank_key)
        population = pool[: params.population_size]
        trace.append(_record(generation, restart, population, evaluations, snapshot_of))
    return population[0], generation + 1, evaluations


def commutes(a: Gate, b: Gate) -> bool:
    """Multi-controlled X gates commute unless one's target is the other's control."""
    return a.target not in b.controls and b.target not in a.controls


def cancel_pairs(gates: Gates) -> Gates:
    """Remove pairs of identical gates separated only by gates they commute with."""
    out: list[Gate] = []
    for g in gates:
        for j in range(len(out) - 1, -1, -1):
            if out[j] == g:
                del out[j]
                break
            if not commutes(out[j], g):
                out.append(g)
                break
        else:
            out.append(g)
    return tuple(out)


def prune(gates: Gates, evaluator: Evaluator) -> Gates:
    """Shorten a solved circuit without losing the solution.

    Cancels self-inverse pairs exactly, then greedily drops single gates:
    each pass scores every single-gate deletion in one batch and keeps the
    lowest-index one that still solves, until none does.
    """
    gates = cancel_pairs(gates)
    while gates:
        variants = [gates[:i] + gates[i + 1 :] for i in range(len(gates))]
        _, solved = evaluator.evaluate(variants)
        if True not in solved:
            break
        gates = variants[solved.index(True)]
    return gates


def _result_key(c: Candidate):
    return (not c.solved, -c.fitness, len(c.gates))


def ea_disentangle(
    training: TrainingSet,
    target: int,
    params: EAParams = EAParams(),
    guard: Sequence[int] = (),
) -> EAResult:
    """Search for a circuit after which ``target`` (and every ``guard`` qubit) reads 0 on all states.

    Restart ``i`` is seeded with ``params.seed + i``; restarts stop at the first
    success. The best candidate over all restarts is returned.
    """
    evaluator = Evaluator(training, target, guard, params.length_penalty, params.workers)
    snapshot_of = training if params.snapshots else None
    n = training.n_qubits

    # an already-clear target needs no gates at all
    (empty_fit,), (empty_ok,) = evaluator.evaluate([()])
    if empty_ok:
        best = Candidate((), empty_fit, "", 0, n, True)
        trace = [_record(0, 0, [best], 1, snapshot_of)]
        trace[0]["population_size"] = params.population_size
        return EAResult(best, True, 1, 1, 1, trace)

    trace: list[dict] = []
    best: Optional[Candidate] = None
    generations = evaluations = 0
    restart = 0
    for restart in range(params.restarts):
        cand, gens, evals = _run_once(evaluator, params, params.seed + restart, restart, snapshot_of, trace)
        generations += gens
        evaluations += evals
        if best is None or _result_key(cand) < _result_key(best):
            best = cand
        if best.solved:
            break
    if best.solved and params.prune:
        gates = prune(best.gates, evaluator)
        if gates != best.gates:
            (fit,), (ok,) = evaluator.evaluate([gates])
            best = Candidate(gates, fit, serialize_gates(gates, n), best.birth_order, n, ok)
    return EAResult(best, best.solved, generations, evaluations, restart + 1, trace)


# --------------------------------------------------------- random search


def cnot_cascade(order: Sequence[int]) -> Gates:
    """CX chain ``order[0] -> order[1] -> ...``: each qubit controls a flip of the next."""
    return tuple(Gate(order[i + 1], (order[i],)) for i in range(len(order) - 1))


def random_search(
    training: TrainingSet,
    target: int | Sequence[int],
    budget: int,
    max_length: Optional[int] = None,
    seed: int = 0,
    cascade: bool = True,
    batch_size: int = 2000,
) -> EAResult:
    """Baseline: sample ``budget`` random circuits and keep the best.

    With ``cascade`` each sample starts with a CNOT cascade along a random
    qubit order, followed by 1..``max_length`` uniformly random gates
    (default ``max_length`` is ``2 * n_qubits``). ``target`` may be a single
    qubit or the whole trash set. Sampling uses numpy's PCG64 so that large
    budgets can be drawn in vectorized batches.
    """
    if budget < 1:
        raise InvalidSpecError(f"budget must be positive, got {budget}")
    n = training.n_qubits
    max_length = 2 * n if max_length is None else max_length
    if max_length < 1:
        raise InvalidSpecError("max_length must be positive")
    evaluator = Evaluator(training, target)
    gen = np.random.Generator(np.random.PCG64(seed))

    # every ordered distinct qubit tuple, grouped by arity
    kinds = min(MAX_ARITY, n)
    tuples = [np.array(list(permutations(range(n), a)), dtype=np.int64) for a in range(1, kinds + 1)]
    tuple_masks = [
        (
            np.array([qubits_mask(n, t[1:]) for t in tbl.tolist()], dtype=np.uint64),
            np.array([qubits_mask(n, t[:1]) for t in tbl.tolist()], dtype=np.uint64),
        )
        for tbl in tuples
    ]
    prefix = n - 1 if cascade else 0

    best: Optional[tuple] = None
    trace: list[dict] = []
    drawn = 0
    batch_index = 0
    while drawn < budget:
        size = min(batch_size, budget - drawn)
        lengths = gen.integers(1, max_length + 1, size=size)
        width = prefix + max_length
        cm = np.zeros((size, width), dtype=np.uint64)
        tm = np.zeros_like(cm)
        if cascade:
            orders = gen.permuted(np.tile(np.arange(n), (size, 1)), axis=1)
            for j in range(prefix):
                cm[:, j] = np.left_shift(np.uint64(1), (n - 1 - orders[:, j]).astype(np.uint64))
                tm[:, j] = np.left_shift(np.uint64(1), (n - 1 - orders[:, j + 1]).astype(np.uint64))
        kind = gen.integers(0, kinds, size=(size, max_length))
        pick = gen.random(size=(size, max_length))
        active = np.arange(max_length)[None, :] < lengths[:, None]
        for a in range(kinds):
            sel = (kind == a) & active
            idx = np.minimum((pick[sel] * len(tuples[a])).astype(np.int64), len(tuples[a]) - 1)
            sub_c = cm[:, prefix:]
            sub_t = tm[:, prefix:]
            sub_c[sel] = tuple_masks[a][0][idx]
            sub_t[sel] = tuple_masks[a][1][idx]
        scores, solved = evaluator._run(cm, tm, lengths + prefix)
        scores = np.asarray(scores)
        # best in batch: max fitness, then shortest, then first drawn
        order = np.lexsort((np.arange(size), lengths, -scores))
        i = int(order[0])
        key = (-scores[i], int(lengths[i]) + prefix, drawn + i)
        if best is None or key < best[0]:
            best = (key, cm[i].copy(), tm[i].copy(), int(lengths[i]) + prefix, bool(solved[i]))
        drawn += size
        trace.append(
            {
                "generation": batch_index,
                "best_fitness": float(-best[0][0]),
                "best_gate_count": best[3],
                "population_size": size,
                "evaluations": drawn,
            }
        )
        batch_index += 1
        if best[4]:
            break

    (key, cmask, tmask, length, ok) = best
    gates = tuple(_gate_from_masks(n, int(c), int(t)) for c, t in zip(cmask[:length], tmask[:length]))
    cand = Candidate(gates, float(-key[0]), serialize_gates(gates, n), key[2], n, ok)
    return EAResult(cand, ok, batch_index, drawn, 1, trace)


def _gate_from_masks(n: int, cmask: int, tmask: int) -> Gate:
    def qubits(mask):
        return [q for q in range(n) if mask >> (n - 1 - q) & 1]

    (target,) = qubits(tmask)
    return Gate(target, tuple(qubits(cmask)))
