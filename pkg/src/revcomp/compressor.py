"""Sequential compression: clear trash qubits one at a time and glue the stages.

Stage ``i`` searches on the training states already transformed by stages
``0 .. i-1`` and must keep every previously cleared trash qubit at 0, so the
concatenated circuit clears all trash qubits simultaneously.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

from .core import (
    MAX_TABLE_QUBITS,
    Circuit,
    SparseState,
    TrainingSet,
    apply_circuit,
    format_ket,
    is_disentangled,
    permutation_table,
    qubits_mask,
    target_zero_mass,
)
from .errors import DimensionError, InfeasibleTargetError, InvalidSpecError, InvalidStateError
from .evolution import EAParams, EAResult, ea_disentangle
from .families import CompressionTarget, FamilySpec, max_trash

log = logging.getLogger(__name__)

ORDER_STRATEGIES = ("fixed", "greedy")


@dataclass(frozen=True)
class CompressionPlan:
    training: TrainingSet
    target: CompressionTarget
    ea_params: EAParams = EAParams()
    order_strategy: str = "fixed"

    def __post_init__(self):
        if self.order_strategy not in ORDER_STRATEGIES:
            raise InvalidSpecError(f"order_strategy must be one of {ORDER_STRATEGIES}, got {self.order_strategy!r}")
        n = self.training.n_qubits
        if any(not 0 <= q < n for q in self.target.trash_qubits):
            raise InvalidSpecError(f"trash qubits {self.target.trash_qubits} out of range for {n} qubits")
        if self.target.trash_count > max_trash(self.training):
            raise InfeasibleTargetError(
                f"{self.target.trash_count} trash qubits exceed the bound {max_trash(self.training)}"
            )


@dataclass
class VerificationReport:
    trash_cleared: list[bool]
    injective: bool
    oracle_equivalent: Optional[bool]  # None when n_qubits exceeds the table limit
    mapping: Optional[list[tuple[str, str]]]  # only for basis-state training sets

    @property
    def ok(self) -> bool:
        return all(self.trash_cleared) and self.injective and self.oracle_equivalent is not False


@dataclass
class CompressionResult:
    stage_circuits: list[Circuit]
    stage_targets: list[int]
    full_circuit: Circuit
    success: bool
    verification: VerificationReport
    total_steps: int
    evaluations: int = 0
    failed_qubit: Optional[int] = None
    trace: list[dict] = field(default_factory=list)

    @property
    def gate_histogram(self) -> dict[str, int]:
        return self.full_circuit.gate_counts()


def verify(
    full_circuit: Circuit,
    training: TrainingSet,
    target: CompressionTarget,
    oracle: bool = True,
) -> VerificationReport:
    """Check trash bits, injectivity on the union support, and (for n <= 12) the dense oracle."""
    n = training.n_qubits
    if full_circuit.n_qubits != n:
        raise DimensionError(f"{full_circuit.n_qubits}-qubit circuit, {n}-qubit training set")
    outputs = [apply_circuit(s, full_circuit) for s in training.states]
    trash = target.trash_qubits
    cleared = [is_disentangled(o, trash) if trash else True for o in outputs]

    # the induced map b -> image on the union support, via the sparse simulator
    union = training.union_support()
    probe = SparseState._trusted(n, {b: 1.0 for b in union})
    images = list(apply_circuit(probe, full_circuit).terms)
    image_of = dict(zip(probe.terms, images))
    injective = len(set(images)) == len(union)

    oracle_ok = None
    if oracle and n <= MAX_TABLE_QUBITS:
        table = permutation_table(full_circuit)
        oracle_ok = all(table[b] == image_of[b] for b in union) and all(
            set(o.terms) == {table[b] for b in s.terms} for s, o in zip(training.states, outputs)
        )

    mapping = None
    if training.is_basis_set():
        mapping = [
            (format_ket(s.support[0], n), format_ket(o.support[0], n)) for s, o in zip(training.states, outputs)
        ]
    return VerificationReport(cleared, injective, oracle_ok, mapping)


def _stage_order(training: TrainingSet, trash: Sequence[int], strategy: str, done: Sequence[int]) -> int:
    remaining = [q for q in trash if q not in done]
    if strategy == "fixed":
        return remaining[0]
    # greedy: the qubit that is already closest to clear; lowest index on ties
    return max(
        remaining,
        key=lambda q: (
            sum(w * target_zero_mass(s, q) for s, w in zip(training.states, training.weights)),
            -q,
        ),
    )


def compress(
    plan: CompressionPlan,
    on_stage: Optional[Callable[[int, int, EAResult], None]] = None,
) -> CompressionResult:
    """Run one EA stage per trash qubit; stop at the first stage that fails."""
    training = plan.training
    n = training.n_qubits
    current = training
    cleared: list[int] = []
    stages: list[Circuit] = []
    trace: list[dict] = []
    steps = evaluations = 0
    failed = None

    for index in range(plan.target.trash_count):
        qubit = _stage_order(current, plan.target.trash_qubits, plan.order_strategy, cleared)
        params = replace(plan.ea_params, seed=plan.ea_params.seed + 1000 * index)
        result = ea_disentangle(current, qubit, params, guard=tuple(cleared))
        steps += result.generations_used
        evaluations += result.evaluations
        for rec in result.trace:
            trace.append({"stage": index, "target": qubit, **rec})
        log.info(
            "stage %d qubit %d: success=%s generations=%d gates=%d",
            index, qubit, result.success, result.generations_used, len(result.best.gates),
        )
        if on_stage is not None:
            on_stage(index, qubit, result)
        if not result.success:
            failed = qubit
            break
        stage = result.circuit
        mapped = current.map(stage)
        # a later stage must never dirty an earlier trash qubit
        if not all(is_disentangled(s, (*cleared, qubit)) for s in mapped.states):
            failed = qubit
            break
        stages.append(stage)
        current = mapped
        cleared.append(qubit)

    full = Circuit(n, tuple(g for c in stages for g in c.gates))
    report = verify(full, training, plan.target)
    success = failed is None and report.ok
    return CompressionResult(stages, cleared, full, success, report, steps, evaluations, failed, trace)


def encode(state: SparseState, full_circuit: Circuit) -> SparseState:
    return apply_circuit(state, full_circuit)


def decode(compressed: SparseState, full_circuit: Circuit, target: CompressionTarget) -> SparseState:
    """Undo the compression: apply the reversed gate list (every gate is self-inverse)."""
    if compressed.n_qubits != full_circuit.n_qubits:
        raise DimensionError(f"{full_circuit.n_qubits}-qubit circuit, {compressed.n_qubits}-qubit state")
    mask = qubits_mask(compressed.n_qubits, target.trash_qubits)
    dirty = [b for b in compressed.terms if b & mask]
    if dirty:
        raise InvalidStateError(
            f"compressed state has nonzero trash bits in |{format_ket(dirty[0], compressed.n_qubits)}>"
        )
    return apply_circuit(compressed, full_circuit.inverse())


def result_row(label: str, n_qubits: int, result: CompressionResult, trash_requested: int, seed: int) -> dict:
    counts = result.gate_histogram
    return {
        "family": label,
        "n_qubits": n_qubits,
        "trash_requested": trash_requested,
        "success": result.success,
        "generations": result.total_steps,
        "x_count": counts["X"],
        "cx_count": counts["CX"],
        "ccx_count": counts["CCX"],
        "seed": seed,
    }


def summary_row(spec: FamilySpec, result: Optional[CompressionResult], trash_requested: int, seed: int) -> dict:
    """One summary-table row; not-applicable or skipped cells keep only family and size."""
    if result is None or not spec.applicable:
        return {"family": spec.label, "n_qubits": spec.n_qubits}
    return result_row(spec.label, spec.n_qubits, result, trash_requested, seed)


def summarize(
    results: Sequence[Optional[CompressionResult]],
    specs: Sequence[FamilySpec],
    trash_requested: Optional[Sequence[int]] = None,
    seeds: Optional[Sequence[int]] = None,
) -> list[dict]:
    """Summary-table rows; complement-equivalent or skipped cells become ``-`` rows."""
    if len(results) != len(specs):
        raise ValueError(f"{len(results)} results for {len(specs)} specs")
    rows = []
    for i, (res, spec) in enumerate(zip(results, specs)):
        if trash_requested is not None:
            k = trash_requested[i]
        else:
            k = len(res.stage_targets) + (res.failed_qubit is not None) if res is not None else 0
        seed = seeds[i] if seeds is not None else spec.seed
        rows.append(summary_row(spec, res, k, seed))
    return rows
