import math
from itertools import product

import pytest
from hypothesis import strategies as st

from revcomp.core import Circuit, Gate, SparseState


def ket_apply(ket: str, gates) -> str:
    """String-level reference: flip character ``target`` when all control characters are '1'."""
    bits = list(ket)
    for g in gates:
        if all(bits[c] == "1" for c in g.controls):
            bits[g.target] = "1" if bits[g.target] == "0" else "0"
    return "".join(bits)


def is_prime_trial_division(k: int) -> bool:
    if k < 2:
        return False
    return all(k % d for d in range(2, math.isqrt(k) + 1))


def all_kets(n: int):
    return ["".join(bits) for bits in product("01", repeat=n)]


@st.composite
def gates(draw, n_qubits: int):
    arity = draw(st.integers(1, min(3, n_qubits)))
    qubits = draw(st.permutations(range(n_qubits)))[:arity]
    return Gate(qubits[0], tuple(qubits[1:]))


@st.composite
def circuits(draw, min_qubits: int = 1, max_qubits: int = 8, max_gates: int = 30):
    n = draw(st.integers(min_qubits, max_qubits))
    gs = draw(st.lists(gates(n), max_size=max_gates))
    return Circuit(n, tuple(gs))


@st.composite
def circuit_and_state(draw, max_qubits: int = 8):
    circuit = draw(circuits(max_qubits=max_qubits))
    n = circuit.n_qubits
    support = draw(st.sets(st.integers(0, 2**n - 1), min_size=1, max_size=min(2**n, 12)))
    raw = [complex(draw(st.floats(0.1, 1.0)), draw(st.floats(-1.0, 1.0))) for _ in support]
    norm = math.sqrt(math.fsum(abs(a) ** 2 for a in raw))
    terms = dict(zip(sorted(support), (a / norm for a in raw)))
    return circuit, SparseState(n, terms)


@pytest.fixture
def eq7_left_kets():
    return ["11000", "10100", "10010", "10001", "01100", "01010", "01001", "00110", "00101", "00011"]


# one line per acceptance criterion, printed at the end of the session
ACCEPTANCE_LINES: list[str] = []


def report_criterion(name: str, ok: bool, detail: str) -> bool:
    ACCEPTANCE_LINES.append(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
    return ok


def report_info(name: str, detail: str) -> None:
    ACCEPTANCE_LINES.append(f"[INFO] {name}: {detail}")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
