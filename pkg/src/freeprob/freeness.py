"""Joint moments of free and of tensor-independent families, freeness checks,
and the free central limit theorem."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

from .ncpoly import MomentState, Word, all_words, cyclic_canonical


class NotCenteredError(ValueError):
    pass


@dataclass(frozen=True)
class Block:
    """Generators ``generators`` (global indices) with their joint law ``state``
    written in local indices ``0..len(generators)-1``."""

    generators: tuple
    state: MomentState

    def __post_init__(self):
        object.__setattr__(self, "generators", tuple(int(g) for g in self.generators))
        if len(self.generators) != self.state.generators:
            raise ValueError("block state generator count differs from block size")


class MarginalSpec:
    """Partition of generators ``0..n-1`` into blocks with given marginals."""

    def __init__(self, blocks):
        self.blocks = tuple(blocks)
        self.home = {}
        for b, block in enumerate(self.blocks):
            for local, g in enumerate(block.generators):
                if g in self.home:
                    raise ValueError(f"generator {g} appears in two blocks")
                self.home[g] = (b, local)
        n = len(self.home)
        if set(self.home) != set(range(n)):
            raise ValueError("blocks must cover generators 0..n-1 exactly")
        self.generators = n

    @classmethod
    def singletons(cls, states):
        """One single-generator block per state."""
        return cls(Block((i,), s) for i, s in enumerate(states))

    @property
    def self_adjoint(self):
        return all(b.state.self_adjoint for b in self.blocks)

    @property
    def trace(self):
        return all(b.state.trace for b in self.blocks)

    def split(self, word):
        """Merge maximal same-block runs: ``((block, local_word), ...)``."""
        out = []
        for g, s in word:
            try:
                b, local = self.home[g]
            except KeyError:
                raise KeyError(f"letter x{g} has no home block") from None
            if out and out[-1][0] == b:
                out[-1] = (b, out[-1][1] + ((local, s),))
            else:
                out.append((b, ((local, s),)))
        return tuple(out)


def _merge(pieces):
    out = []
    for b, w in pieces:
        if out and out[-1][0] == b:
            out[-1] = (b, out[-1][1] + w)
        else:
            out.append((b, w))
    return tuple(out)


class FreeMomentEngine:
    """Memoized evaluator of moments in the free product of the block states.

    For an alternating product ``A_1 ... A_n`` with centers ``c_i = tau(A_i)``,
    freeness gives ``tau(prod (A_i - c_i)) = 0``.  Expanding the product
    expresses ``tau(A_1 ... A_n)`` through moments of proper sub-products, which
    merge into strictly shorter alternating words.
    """

    def __init__(self, marg):
        self.marg = marg
        self._memo = {}

    def _block_value(self, b, local):
        return self.marg.blocks[b].state.value(Word(local))

    def moment(self, word):
        return self._alternating(self.marg.split(Word(word)))

    def _alternating(self, seq):
        if not seq:
            return 1
        if len(seq) == 1:
            return self._block_value(*seq[0])
        if seq in self._memo:
            return self._memo[seq]
        n = len(seq)
        centers = [self._block_value(b, w) for b, w in seq]
        movable = [i for i in range(n) if centers[i] != 0]
        total = 0
        # drop a nonempty subset T of positions with nonzero centers
        for r in range(1, len(movable) + 1):
            for dropped in itertools.combinations(movable, r):
                coeff = (-1) ** r
                for i in dropped:
                    coeff = coeff * centers[i]
                gone = set(dropped)
                rest = _merge(seq[i] for i in range(n) if i not in gone)
                total = total + coeff * self._alternating(rest)
        value = -total
        self._memo[seq] = value
        return value


def free_mixed_moment(marg, w):
    """Moment of ``w`` under the free product of the marginals."""
    return FreeMomentEngine(marg).moment(w)


def tensor_mixed_moment(marg, w):
    """Moment of ``w`` when the blocks commute and are tensor independent."""
    parts = {}
    for g, s in Word(w):
        b, local = marg.home[g]
        parts.setdefault(b, []).append((local, s))
    value = 1
    for b, local in parts.items():
        value = value * marg.blocks[b].state.value(Word(local))
    return value


def _build_state(marg, degree, moment, trace):
    sa = marg.self_adjoint
    vals = {}
    for w in all_words(marg.generators, degree, starred=not sa):
        if trace and cyclic_canonical(w, reversal=sa) != w:
            continue
        vals[w] = moment(w)
    return MomentState(marg.generators, degree, vals, trace=trace, self_adjoint=sa)


def build_free_state(marg, degree):
    """Moment state of the free product up to ``degree``."""
    if len(marg.blocks) == 1 and marg.blocks[0].generators == tuple(range(marg.generators)):
        state = marg.blocks[0].state
        if degree == state.degree:
            return state
    engine = FreeMomentEngine(marg)
    return _build_state(marg, degree, engine.moment, marg.trace)


def build_tensor_state(marg, degree):
    """Moment state of the tensor product (commuting blocks) up to ``degree``."""
    return _build_state(marg, degree, lambda w: tensor_mixed_moment(marg, w), marg.trace)


@dataclass
class FreenessReport:
    max_violation: float
    witness_word: Word | None
    words_tested: int
    tol: float

    @property
    def passed(self):
        return self.max_violation <= self.tol

    def to_json(self):
        return {
            "max_violation": self.max_violation,
            "witness_word": None if self.witness_word is None else self.witness_word.to_json(),
            "words_tested": self.words_tested,
            "passed": self.passed,
        }


def _centered_product(s, factors):
    centers = [s.value(f) for f in factors]
    n = len(factors)
    total = 0
    for keep in itertools.product((False, True), repeat=n):
        coeff = 1
        word = Word()
        for i, k in enumerate(keep):
            if k:
                word = word * factors[i]
            else:
                coeff = -coeff * centers[i]
        if coeff != 0:
            total = total + coeff * s.value(word)
    return total


def check_freeness(s, blocks, degree=None, tol=1e-9):
    """Largest ``|s(centered alternating product)|`` over block monomials.

    Factors have degree at most ``max(1, degree // 2)`` and products at most
    ``degree`` letters in total.
    """
    degree = s.degree if degree is None else degree
    if degree > s.degree:
        raise ValueError(f"degree {degree} exceeds state degree {s.degree}")
    blocks = [tuple(b) for b in blocks]
    per_factor = max(1, degree // 2)
    letters = {}
    for b, gens in enumerate(blocks):
        stars = (False,) if s.self_adjoint else (False, True)
        letters[b] = [(g, st) for g in gens for st in stars]
    factor_words = {
        b: [Word(c) for L in range(1, per_factor + 1) for c in itertools.product(lets, repeat=L)]
        for b, lets in letters.items()
    }

    worst, witness, tested = 0.0, None, 0

    def extend(prefix, last_block, used):
        nonlocal worst, witness, tested
        if len(prefix) >= 2:
            tested += 1
            v = abs(complex(_centered_product(s, prefix)))
            if v > worst:
                worst = v
                witness = Word(itertools.chain.from_iterable(prefix))
        for b in range(len(blocks)):
            if b == last_block:
                continue
            for f in factor_words[b]:
                if used + len(f) <= degree:
                    extend(prefix + [f], b, used + len(f))

    extend([], None, 0)
    return FreenessReport(worst, witness, tested, tol)


def free_clt_moments(marginal, n, degree):
    """Moments ``m_0..m_degree`` of ``(A_1 + ... + A_n) / sqrt(n)`` for ``n``
    free copies of a centered single-generator marginal.

    Exact (``Fraction``) for even orders when the marginal is exact.  Letter
    assignments are grouped by their set-partition pattern; a pattern with
    ``b`` classes occurs ``n (n-1) ... (n-b+1)`` times.
    """
    if marginal.generators != 1:
        raise ValueError("marginal must have a single generator")
    if degree > marginal.degree:
        raise ValueError("degree exceeds marginal degree")
    if marginal.value(Word.of(0)) != 0:
        raise NotCenteredError("marginal must be centered")
    marg = MarginalSpec.singletons([marginal] * min(n, degree) if degree else [marginal])
    engine = FreeMomentEngine(marg)
    out = [1]
    for k in range(1, degree + 1):
        total = 0
        for pattern in _set_partitions(k):
            b = max(pattern) + 1
            if b > n:
                continue
            total = total + math.perm(n, b) * engine.moment(Word.of(*pattern))
        if k % 2 == 0:
            out.append(total * Fraction(1, n ** (k // 2)) if _exact(total) else total / n ** (k // 2))
        else:
            out.append(total if total == 0 else total / n ** (k / 2))
    return out


def _exact(x):
    return isinstance(x, (int, Fraction))


def _set_partitions(k):
    """Restricted growth strings of length ``k``."""

    def rec(prefix, top):
        if len(prefix) == k:
            yield tuple(prefix)
            return
        for j in range(top + 2):
            yield from rec(prefix + [j], max(top, j))

    yield from rec([], -1)
