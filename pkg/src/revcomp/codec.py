"""Circuit strings and on-disk artifacts.

A gate is written as its qubit tuple, target first: ``(t)``, ``(t, c)`` or
``(t, c1, c2)``. A circuit is the space-separated list of its gate tokens in
canonical order: gates are packed into ASAP moments and emitted moment by
moment, ascending target inside a moment. Equal circuits up to commuting
gates inside a moment therefore get byte-identical strings, which the search
uses as a deduplication key.

Artifact formats (all UTF-8, LF line endings, written atomically):

* circuit ``.rvc``: ``revcomp-circuit v1`` / ``n_qubits=<n>`` / circuit string
* training set ``.json``: ``{"format": "revcomp-training v1", "n_qubits", "states"}``
* trace ``.jsonl``: one JSON object per generation
* summary ``.csv``: one row per (family, size) cell
"""
from __future__ import annotations

import csv
import io
import json
import os
import re
import tempfile
from pathlib import Path
from typing import Any, Iterable

from .core import Circuit, Gate, SparseState, TrainingSet, format_ket
from .errors import ArtifactError, CircuitParseError, DimensionError, InvalidGateError, InvalidStateError

CIRCUIT_MAGIC = "revcomp-circuit v1"
TRAINING_FORMAT = "revcomp-training v1"
SUMMARY_COLUMNS = (
    "family",
    "n_qubits",
    "trash_requested",
    "success",
    "generations",
    "x_count",
    "cx_count",
    "ccx_count",
    "seed",
)
NOT_APPLICABLE = "-"


def schedule_moments(circuit: Circuit) -> list[int]:
    """ASAP moment index of every gate, in gate order."""
    frontier = [0] * circuit.n_qubits
    moments = []
    for g in circuit.gates:
        m = max(frontier[q] for q in g.qubits)
        for q in g.qubits:
            frontier[q] = m + 1
        moments.append(m)
    return moments


def canonical_gates(circuit: Circuit) -> list[Gate]:
    moments = schedule_moments(circuit)
    order = sorted(range(len(circuit.gates)), key=lambda i: (moments[i], circuit.gates[i].target))
    return [circuit.gates[i] for i in order]


def serialize_gates(gates: Iterable[Gate], n_qubits: int) -> str:
    """Canonical string for a raw gate sequence; skips :class:`Circuit` validation."""
    frontier = [0] * n_qubits
    keyed = []
    for g in gates:
        qs = g.qubits
        m = max(frontier[q] for q in qs)
        for q in qs:
            frontier[q] = m + 1
        keyed.append((m, g.target, str(g)))
    keyed.sort()
    return " ".join(k[2] for k in keyed)


def serialize_circuit(circuit: Circuit) -> str:
    return serialize_gates(circuit.gates, circuit.n_qubits)


_TOKEN = re.compile(r"\(([^()]*)\)")


def parse_circuit(text: str, n_qubits: int) -> Circuit:
    """Parse a circuit string; arity picks the gate kind (1 X, 2 CX, 3 CCX)."""
    gates = []
    pos = 0
    length = len(text)
    while True:
        while pos < length and text[pos].isspace():
            pos += 1
        if pos >= length:
            break
        if text[pos] != "(":
            raise CircuitParseError(f"expected '(' but found {text[pos]!r}", pos)
        m = _TOKEN.match(text, pos)
        if m is None:
            raise CircuitParseError("unterminated or nested gate tuple", pos)
        fields = m.group(1).split(",")
        if len(fields) > 3:
            raise CircuitParseError(f"gate tuple has arity {len(fields)}, at most 3 allowed", pos)
        qubits = []
        for f in fields:
            f = f.strip()
            if not f.isdigit():
                raise CircuitParseError(f"qubit index {f!r} is not a non-negative integer", pos)
            qubits.append(int(f))
        if len(set(qubits)) != len(qubits):
            raise CircuitParseError(f"duplicate qubit in tuple {m.group(0)}", pos)
        bad = [q for q in qubits if q >= n_qubits]
        if bad:
            raise CircuitParseError(f"qubit index {bad[0]} out of range for {n_qubits} qubits", pos)
        gates.append(Gate(qubits[0], tuple(qubits[1:])))
        pos = m.end()
        if pos < length and not text[pos].isspace():
            raise CircuitParseError("gate tokens must be separated by whitespace", pos)
    return Circuit(n_qubits, tuple(gates))


# ---------------------------------------------------------------- file I/O


def atomic_write_text(path: str | os.PathLike, text: str) -> None:
    """Write ``text`` to ``path`` via a temporary file and an atomic rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _read_text(path) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ArtifactError(f"cannot read {path}: {exc}") from exc


def dump_circuit(circuit: Circuit) -> str:
    return f"{CIRCUIT_MAGIC}\nn_qubits={circuit.n_qubits}\n{serialize_circuit(circuit)}\n"


def load_circuit(text: str) -> Circuit:
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    if not lines or lines[0] != CIRCUIT_MAGIC:
        found = lines[0] if lines else ""
        raise ArtifactError(f"unsupported circuit header {found!r}, expected {CIRCUIT_MAGIC!r}")
    if len(lines) not in (2, 3):
        raise ArtifactError(f"circuit file must have 3 lines, found {len(lines)}")
    m = re.fullmatch(r"n_qubits=(\d+)", lines[1])
    if m is None:
        raise ArtifactError(f"bad n_qubits line {lines[1]!r}")
    body = lines[2] if len(lines) == 3 else ""
    try:
        return parse_circuit(body, int(m.group(1)))
    except (CircuitParseError, DimensionError, InvalidGateError) as exc:
        raise ArtifactError(f"bad circuit body: {exc}") from exc


def training_to_dict(training: TrainingSet) -> dict[str, Any]:
    n = training.n_qubits
    return {
        "format": TRAINING_FORMAT,
        "n_qubits": n,
        "states": [
            {
                "weight": w,
                "terms": [[format_ket(b, n), a.real, a.imag] for b, a in sorted(s.terms.items())],
            }
            for s, w in zip(training.states, training.weights)
        ],
    }


def training_from_dict(data: dict[str, Any]) -> TrainingSet:
    if not isinstance(data, dict) or data.get("format") != TRAINING_FORMAT:
        found = data.get("format") if isinstance(data, dict) else None
        raise ArtifactError(f"unsupported training-set format {found!r}, expected {TRAINING_FORMAT!r}")
    try:
        n = int(data["n_qubits"])
        states, weights = [], []
        for entry in data["states"]:
            terms = {}
            for ket, re_, im in entry["terms"]:
                if len(ket) != n:
                    raise ArtifactError(f"ket {ket!r} has width {len(ket)}, file says n_qubits={n}")
                terms[ket] = complex(re_, im)
            states.append(SparseState(n, terms))
            weights.append(float(entry["weight"]))
        return TrainingSet(tuple(states), tuple(weights))
    except ArtifactError:
        raise
    except (KeyError, TypeError, ValueError, InvalidStateError, DimensionError) as exc:
        raise ArtifactError(f"malformed training set: {exc}") from exc


def dump_trace(records: Iterable[dict[str, Any]]) -> str:
    return "".join(json.dumps(r, sort_keys=True, separators=(",", ":")) + "\n" for r in records)


def load_trace(text: str) -> list[dict[str, Any]]:
    records = []
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ArtifactError(f"trace line {lineno}: {exc}") from exc
        if not isinstance(rec, dict) or not {"generation", "best_fitness"} <= rec.keys():
            raise ArtifactError(f"trace line {lineno}: missing generation/best_fitness")
        records.append(rec)
    return records


def dump_summary(rows: Iterable[dict[str, Any]]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=SUMMARY_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: _csv_value(row.get(k, NOT_APPLICABLE)) for k in SUMMARY_COLUMNS})
    return buf.getvalue()


def _csv_value(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    return v


def _parse_summary_value(key: str, raw: str):
    if raw == NOT_APPLICABLE or key == "family":
        return raw
    if key == "success":
        if raw not in ("true", "false"):
            raise ArtifactError(f"success must be true/false/-, got {raw!r}")
        return raw == "true"
    try:
        return int(raw)
    except ValueError as exc:
        raise ArtifactError(f"column {key}: expected integer, got {raw!r}") from exc


def load_summary(text: str) -> list[dict[str, Any]]:
    reader = csv.DictReader(io.StringIO(text))
    if tuple(reader.fieldnames or ()) != SUMMARY_COLUMNS:
        raise ArtifactError(f"summary header {reader.fieldnames} != {list(SUMMARY_COLUMNS)}")
    rows = []
    for row in reader:
        if None in row or any(v is None for v in row.values()):
            raise ArtifactError(f"summary row {reader.line_num} has the wrong number of fields")
        rows.append({k: _parse_summary_value(k, row[k]) for k in SUMMARY_COLUMNS})
    return rows


_DUMPERS = {
    "circuit": dump_circuit,
    "training-set": lambda t: json.dumps(training_to_dict(t), indent=1) + "\n",
    "trace": dump_trace,
    "summary": dump_summary,
}

_LOADERS = {
    "circuit": load_circuit,
    "training-set": lambda text: training_from_dict(_json(text)),
    "trace": load_trace,
    "summary": load_summary,
}


def _json(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ArtifactError(f"invalid JSON: {exc}") from exc


def write_artifact(kind: str, path, value) -> None:
    if kind not in _DUMPERS:
        raise ValueError(f"unknown artifact kind {kind!r}; expected one of {sorted(_DUMPERS)}")
    atomic_write_text(path, _DUMPERS[kind](value))


def read_artifact(kind: str, path):
    if kind not in _LOADERS:
        raise ValueError(f"unknown artifact kind {kind!r}; expected one of {sorted(_LOADERS)}")
    return _LOADERS[kind](_read_text(path))
