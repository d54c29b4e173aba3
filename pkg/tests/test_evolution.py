import random
from collections import Counter
from dataclasses import replace
from itertools import permutations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from revcomp.core import CX, X, Circuit, SparseState, TrainingSet, apply_circuit, fitness, is_disentangled
from revcomp.evolution import (
    EAParams,
    Evaluator,
    cancel_pairs,
    ea_disentangle,
    init_population,
    mutate_add,
    mutate_permute,
    mutate_remove,
    mutate_repeat,
    mutate_replace,
    random_search,
)
from revcomp.errors import InvalidSpecError
from revcomp.families import gen_ghz, gen_m_particle, gen_prime, gen_unary

from conftest import circuits

FAST = EAParams(max_generations=200, restarts=1)


def random_circuit(n, length, seed):
    rng = random.Random(seed)
    c = Circuit(n)
    for _ in range(length):
        c = mutate_add(c, rng)
    return c


class TestInitPopulation:
    def test_size_validity_and_determinism(self):
        params = EAParams(population_size=30)
        a = init_population(params, 5, random.Random(7))
        b = init_population(params, 5, random.Random(7))
        assert len(a) == 30
        assert [c.gates for c in a] == [c.gates for c in b]
        for cand in a:
            assert 1 <= len(cand.gates) <= 10
            cand.circuit  # validates every gate
        assert len({c.canonical_key for c in a}) == 30

    def test_dedup_gives_up_gracefully(self):
        # X(0) is the only gate on one qubit, so dedup cannot fill the population
        params = EAParams(population_size=5, parent_count=1, init_length=1)
        pop = init_population(params, 1, random.Random(0))
        assert len(pop) == 5


class TestMutations:
    def test_add(self):
        rng = random.Random(1)
        assert len(mutate_add(Circuit(4), rng)) == 1
        c = random_circuit(4, 6, 2)
        assert len(mutate_add(c, rng)) == 7

    def test_remove(self):
        rng = random.Random(2)
        assert len(mutate_remove(Circuit(3, (X(0),)), rng)) == 0
        assert len(mutate_remove(Circuit(3), rng)) == 1  # falls back to add
        c = random_circuit(5, 12, 3)
        for _ in range(50):
            out = mutate_remove(c, rng)
            k = len(c) - len(out)
            assert 1 <= k <= 3
            it = iter(c.gates)
            assert all(g in it for g in out.gates)  # subsequence: survivors keep their order

    def test_permute(self):
        rng = random.Random(3)
        single = Circuit(3, (X(1),))
        assert mutate_permute(single, rng) == single
        c = random_circuit(5, 10, 4)
        assert Counter(mutate_permute(c, rng).gates) == Counter(c.gates)

    def test_permute_is_uniform(self):
        c = Circuit(3, (X(0), X(1), X(2)))
        rng = random.Random(4)
        draws = 6000
        counts = Counter(tuple(g.target for g in mutate_permute(c, rng).gates) for _ in range(draws))
        assert set(counts) == set(permutations(range(3)))
        expected = draws / 6
        chi2 = sum((counts[p] - expected) ** 2 / expected for p in permutations(range(3)))
        assert chi2 < 20.515  # chi-square critical value, 5 dof, alpha = 0.001

    def test_repeat(self):
        rng = random.Random(5)
        assert len(mutate_repeat(Circuit(3), rng)) == 1
        c = random_circuit(5, 8, 6)
        for _ in range(50):
            out = mutate_repeat(c, rng)
            assert 1 <= len(out) - len(c) <= 3
            assert set(out.gates) <= set(c.gates)

    def test_replace(self):
        c = random_circuit(5, 8, 7)
        a = mutate_replace(c, random.Random(8))
        assert len(a) == len(c)
        assert a == mutate_replace(c, random.Random(8))
        assert len(mutate_replace(Circuit(3), random.Random(0))) == 1


def test_cancel_pairs_is_exact():
    c = Circuit(4, (CX(1, 0), X(3), CX(1, 0), X(2)))
    assert cancel_pairs(c.gates) == (X(3), X(2))
    blocked = Circuit(3, (CX(1, 0), X(0), CX(1, 0)))
    assert cancel_pairs(blocked.gates) == blocked.gates


@settings(max_examples=100, deadline=None)
@given(circuits(min_qubits=2, max_qubits=7, max_gates=40))
def test_cancel_pairs_preserves_function(circuit):
    from revcomp.core import permutation_table

    assert permutation_table(Circuit(circuit.n_qubits, cancel_pairs(circuit.gates))) == permutation_table(circuit)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10_000), st.integers(4, 6), st.floats(0, 1e-3))
def test_evaluator_matches_reference_fitness(seed, n, penalty):
    training = gen_m_particle(n, 2) if seed % 2 else gen_prime(n)
    batch = [random_circuit(n, length, seed + length) for length in range(0, 25, 3)]
    ev = Evaluator(training, 0, guard=(1,), length_penalty=penalty)
    scores, solved = ev.evaluate([c.gates for c in batch])
    for c, f, ok in zip(batch, scores, solved):
        assert f == pytest.approx(fitness(c, training, 0, penalty, guard=(1,)), abs=1e-12)
        assert ok == all(is_disentangled(apply_circuit(s, c), (0, 1)) for s in training.states)


def test_params_validation():
    with pytest.raises(InvalidSpecError):
        EAParams(parent_count=0)
    with pytest.raises(InvalidSpecError):
        EAParams(mutation_weights=(1, 1))
    with pytest.raises(InvalidSpecError):
        EAParams(population_size=5, parent_count=10)


class TestEADisentangle:
    def test_ghz_target_one(self):
        result = ea_disentangle(gen_ghz(4), 1, replace(FAST, seed=3))
        assert result.success
        out = apply_circuit(gen_ghz(4).states[0], result.circuit)
        assert is_disentangled(out, 1)

    def test_already_disentangled(self):
        training = TrainingSet((SparseState.uniform(3, ["000", "011"]),))
        result = ea_disentangle(training, 0, FAST)
        assert result.success and len(result.best.gates) == 0
        assert result.best.fitness == pytest.approx(1.0, abs=1e-12)
        assert [r["generation"] for r in result.trace] == [0]

    def test_success_iff_combinatorial(self):
        training = gen_unary(5)
        result = ea_disentangle(training, 0, replace(FAST, seed=11))
        ok = all(is_disentangled(apply_circuit(s, result.circuit), 0) for s in training.states)
        assert result.success == ok
        if result.success:
            assert result.best.fitness + FAST.length_penalty * len(result.best.gates) == pytest.approx(1, abs=1e-12)

    def test_deterministic_and_parallel_invariant(self):
        params = EAParams(max_generations=60, restarts=2, seed=5)
        training = gen_prime(5)
        a = ea_disentangle(training, 0, params)
        b = ea_disentangle(training, 0, params)
        c = ea_disentangle(training, 0, replace(params, workers=3))
        assert a.trace == b.trace == c.trace
        assert a.best.gates == b.best.gates == c.best.gates

    def test_population_size_and_monotone_best(self):
        result = ea_disentangle(gen_m_particle(6, 3), 0, EAParams(max_generations=80, restarts=2, seed=9))
        by_restart = {}
        for rec in result.trace:
            assert rec["population_size"] == 50
            by_restart.setdefault(rec["restart"], []).append(rec["best_fitness"])
        for series in by_restart.values():
            assert all(a <= b for a, b in zip(series, series[1:]))

    def test_snapshots(self):
        result = ea_disentangle(gen_unary(4), 0, replace(FAST, snapshots=True, seed=1))
        last = result.trace[-1]["support_snapshot"]
        assert len(last) == 4
        if result.success and not result.best.gates == ():
            assert all(k[0][0] == "0" for k in last)

    def test_length_cap_respected(self):
        params = EAParams(max_generations=100, restarts=1, max_length=6, seed=2)
        result = ea_disentangle(gen_m_particle(6, 3), 0, replace(params, prune=False))
        assert len(result.best.gates) <= 6


class TestRandomSearch:
    def test_budget_one_solved_input(self):
        training = TrainingSet((SparseState.basis(3, "000"),))
        result = random_search(training, 0, budget=1, seed=0, cascade=False)
        assert result.evaluations == 1

    def test_best_is_reconstructed_exactly(self):
        training = gen_unary(4)
        result = random_search(training, (0, 1), budget=3000, seed=1)
        f = fitness(result.circuit, training, 0, guard=(1,))
        assert f == pytest.approx(result.best.fitness, abs=1e-12)
        assert result.success == all(is_disentangled(apply_circuit(s, result.circuit), (0, 1)) for s in training.states)

    def test_deterministic(self):
        a = random_search(gen_prime(5), 0, budget=5000, seed=4)
        b = random_search(gen_prime(5), 0, budget=5000, seed=4)
        assert a.best.gates == b.best.gates and a.trace == b.trace

    def test_rejects_empty_budget(self):
        with pytest.raises(InvalidSpecError):
            random_search(gen_unary(4), 0, budget=0)
