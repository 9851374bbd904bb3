import itertools
from fractions import Fraction

import pytest

from freeprob.fock import semicircular_family, vacuum_moment
from freeprob.freeness import (
    Block,
    MarginalSpec,
    NotCenteredError,
    build_free_state,
    build_tensor_state,
    check_freeness,
    free_clt_moments,
    free_mixed_moment,
    tensor_mixed_moment,
)
from freeprob.groupalg import moment_state_from_group
from freeprob.ncpoly import Word, gram_psd_check, state_from_sequence, trace_property_check


def test_alternating_centered_vanishes(free_pair):
    for n in range(2, 8):
        w = Word.of(*[i % 2 for i in range(n)])
        assert free_mixed_moment(free_pair, w) == 0


def test_abab_and_aabb(free_pair):
    assert free_mixed_moment(free_pair, Word.of(0, 1, 0, 1)) == 0
    assert free_mixed_moment(free_pair, Word.of(0, 0, 1, 1)) == Fraction(1, 16)


def test_single_block_pass_through(sc8):
    marg = MarginalSpec.singletons([sc8])
    assert free_mixed_moment(marg, Word.of(0, 0, 0, 0)) == Fraction(1, 8)
    assert tensor_mixed_moment(marg, Word.of(0, 0, 0, 0)) == Fraction(1, 8)
    assert build_free_state(marg, 8) is sc8


def test_unknown_letter(free_pair):
    with pytest.raises(KeyError):
        free_mixed_moment(free_pair, Word.of(0, 2))


def test_block_degree_overflow():
    small = state_from_sequence([1, 0, Fraction(1, 4)])
    marg = MarginalSpec.singletons([small, small])
    with pytest.raises(ValueError):
        free_mixed_moment(marg, Word.of(0, 0, 0, 1))


def test_blocks_must_partition(sc8):
    with pytest.raises(ValueError):
        MarginalSpec([Block((0,), sc8), Block((0,), sc8)])
    with pytest.raises(ValueError):
        MarginalSpec([Block((1,), sc8)])


def test_fock_oracle_equivalence(free_pair):
    space, ops = semicircular_family(2, 8)
    for L in range(9):
        for w in itertools.product((0, 1), repeat=L):
            got = float(free_mixed_moment(free_pair, Word.of(*w)))
            assert got == pytest.approx(vacuum_moment(space, ops, w), abs=1e-10)


def test_non_centered_recursion_against_fock():
    """Shifted semicirculars s_i + c_i: free from each other, not centered."""
    from freeprob.spectral import measure_state, semicircular

    a, b = Fraction(1, 3), Fraction(-1, 2)
    sa = measure_state(semicircular(float(a), 1.0), 6)
    sb = measure_state(semicircular(float(b), 1.0), 6)
    marg = MarginalSpec.singletons([sa, sb])
    space, (s0, s1) = semicircular_family(2, 6)
    eye = space.vacuum()
    import numpy as np
    from scipy import sparse
    from freeprob.fock import FockOperator

    ident = FockOperator(sparse.identity(space.dim, format="csc"), space)
    ops = [s0 + ident * float(a), s1 + ident * float(b)]
    for w in [(0, 1), (0, 1, 0, 1), (0, 0, 1, 0, 1, 1), (1, 0, 1, 1, 0)]:
        assert float(free_mixed_moment(marg, Word.of(*w))) == pytest.approx(
            vacuum_moment(space, ops, w), abs=1e-9
        )


def test_build_free_state(free_pair, free_pair_state):
    s = free_pair_state
    assert s.value(Word.of(0, 1, 0, 1)) == 0
    assert s.value(Word.of(0, 0, 1, 1)) == Fraction(1, 16)
    marginal = s.restrict([0])
    for k in range(7):
        assert marginal.value(Word.of(*[0] * k)) == free_pair.blocks[0].state.value(Word.of(*[0] * k))
    assert trace_property_check(s, 6).ok
    assert gram_psd_check(s, 6)[0]
    assert check_freeness(s, [[0], [1]], 6).max_violation == 0


def test_tensor_examples(bernoulli):
    marg = MarginalSpec.singletons([bernoulli, bernoulli])
    assert tensor_mixed_moment(marg, Word.of(0, 1, 0, 1)) == Fraction(1, 16)
    assert tensor_mixed_moment(marg, Word.of(0, 1, 1)) == 0


@pytest.mark.parametrize("j,k", [(j, k) for j in range(5) for k in range(5)])
def test_tensor_and_free_agree_without_interleaving(free_pair, j, k):
    w = Word.of(*([0] * j + [1] * k))
    assert tensor_mixed_moment(free_pair, w) == free_mixed_moment(free_pair, w)


def test_check_freeness_group_state():
    for gens in ([0, 1], [0, 1, 2]):
        g = moment_state_from_group(gens, 6)
        rep = check_freeness(g, [[i] for i in range(len(gens))], 6)
        assert rep.max_violation == 0 and rep.passed


def test_check_freeness_tensor_fails(bernoulli):
    s = build_tensor_state(MarginalSpec.singletons([bernoulli, bernoulli]), 4)
    rep = check_freeness(s, [[0], [1]], 4)
    assert not rep.passed
    assert rep.max_violation == pytest.approx(1 / 16)
    assert rep.witness_word == Word.of(0, 1, 0, 1)


def test_clt_examples(bernoulli, sc8):
    assert free_clt_moments(bernoulli, 1, 8) == [bernoulli.value(Word.of(*[0] * k)) for k in range(9)]
    assert free_clt_moments(bernoulli, 2, 4)[4] == Fraction(3, 32)
    with pytest.raises(NotCenteredError):
        free_clt_moments(state_from_sequence([1, Fraction(1, 2), 1]), 2, 2)


def test_clt_bruteforce_enumeration(bernoulli):
    """All 2^4 letter assignments of (A_1 + A_2)^4 / 4."""
    marg = MarginalSpec.singletons([bernoulli, bernoulli])
    total = sum(free_mixed_moment(marg, Word.of(*w)) for w in itertools.product((0, 1), repeat=4))
    assert total / 4 == free_clt_moments(bernoulli, 2, 4)[4]


@pytest.mark.parametrize("n", [1, 2, 3, 5, 8, 16, 50])
def test_clt_variance_and_rate(bernoulli, n):
    m = free_clt_moments(bernoulli, n, 4)
    assert m[2] == Fraction(1, 4)
    assert Fraction(1, 8) - m[4] == Fraction(1, 16 * n)


def test_clt_semicircular_fixed_point(sc8):
    """Free sums of semicirculars stay semicircular."""
    for n in (2, 3):
        assert free_clt_moments(sc8, n, 8) == [sc8.value(Word.of(*[0] * k)) for k in range(9)]
