import math
from itertools import product

import pytest

from revcomp.core import NORM_TOL
from revcomp.errors import ComplementEquivalentError, InfeasibleTargetError, InvalidSpecError
from revcomp.families import (
    FamilySpec,
    default_target,
    gen_ghz,
    gen_m_particle,
    gen_prime,
    gen_random_support,
    gen_unary,
    max_trash,
    primes_below,
)

from conftest import is_prime_trial_division


def kets(training):
    return [k for s in training.states for k in s.kets()]


def test_unary():
    assert kets(gen_unary(4)) == ["1000", "0100", "0010", "0001"]
    assert kets(gen_unary(2)) == ["10", "01"]
    for n in range(2, 10):
        assert len(gen_unary(n).union_support()) == n
    with pytest.raises(InvalidSpecError):
        gen_unary(1)


@pytest.mark.parametrize("n", range(2, 9))
def test_ghz(n):
    (state,) = gen_ghz(n).states
    assert state.kets() == ["0" * n, "1" * n]
    assert all(a == 1 / math.sqrt(2) for a in state.terms.values())
    assert abs(sum(abs(a) ** 2 for a in state.terms.values()) - 1) <= NORM_TOL


def test_random_support():
    a = gen_random_support(6, 6, seed=11)
    assert a == gen_random_support(6, 6, seed=11)
    (state,) = gen_random_support(4, 4, seed=5).states
    assert len(set(state.support)) == 4
    assert all(abs(amp - 0.5) < 1e-15 for amp in state.terms.values())
    (full,) = gen_random_support(3, 8, seed=0).states
    assert full.support == tuple(range(8))
    with pytest.raises(InvalidSpecError):
        gen_random_support(3, 9)


def test_random_support_is_pinned():
    # frozen MT19937 output; catches any drift in the sampler across platforms/versions
    (state,) = gen_random_support(6, 6, seed=2024).states
    assert state.support == (11, 12, 19, 37, 46, 60)


@pytest.mark.parametrize("n, count", [(4, 6), (5, 11), (6, 18)])
def test_prime_support_sizes(n, count):
    expected = [k for k in range(2**n) if is_prime_trial_division(k)]
    assert len(expected) == count
    (state,) = gen_prime(n).states
    assert list(state.support) == expected
    assert all(abs(a - 1 / math.sqrt(count)) < 1e-15 for a in state.terms.values())


def test_sieve_matches_trial_division():
    assert primes_below(1000) == [k for k in range(1000) if is_prime_trial_division(k)]
    assert primes_below(2) == [] and primes_below(3) == [2]


def test_m_particle(eq7_left_kets):
    assert kets(gen_m_particle(5, 2)) == eq7_left_kets
    assert len(gen_m_particle(4, 2)) == 6
    assert len(gen_m_particle(6, 3)) == 20
    for n in range(2, 8):
        assert gen_m_particle(n, 1) == gen_unary(n)


def test_m_particle_weights_by_enumeration():
    for n in range(2, 8):
        for m in range(1, n // 2 + 1):
            expected = sorted("".join(b) for b in product("01", repeat=n) if b.count("1") == m)
            assert sorted(kets(gen_m_particle(n, m))) == expected


def test_complement_equivalent_rejected():
    with pytest.raises(ComplementEquivalentError) as err:
        gen_m_particle(5, 3)
    assert err.value.suggested_m == 2
    assert not FamilySpec("m_particle", 5, m=3).applicable
    assert FamilySpec("m_particle", 6, m=3).applicable


def test_spec_validation():
    with pytest.raises(InvalidSpecError):
        FamilySpec("bogus", 4).validate()
    with pytest.raises(InvalidSpecError):
        FamilySpec("ghz", 4, m=2).validate()
    assert FamilySpec("random_support", 5, seed=3).generate() == gen_random_support(5, 5, 3)


@pytest.mark.parametrize(
    "training, count",
    [(gen_unary(6), 3), (gen_m_particle(5, 2), 1), (gen_ghz(4), 3), (gen_ghz(8), 7), (gen_prime(6), 1)],
)
def test_default_target(training, count):
    target = default_target(training)
    assert target.trash_count == count
    assert target.trash_qubits == tuple(range(count))


def test_default_target_bound_is_tight_for_unary():
    for n in range(2, 12):
        assert max_trash(gen_unary(n)) == n - math.ceil(math.log2(n))


def test_infeasible_target():
    with pytest.raises(InfeasibleTargetError):
        default_target(gen_unary(6), requested=4)
    with pytest.raises(InfeasibleTargetError):
        default_target(gen_unary(4), trash_qubits=[1, 2, 3])
    assert default_target(gen_ghz(4), trash_qubits=[1, 2, 3]).trash_qubits == (1, 2, 3)
