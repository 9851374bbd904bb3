"""Real symmetric Gaussian random matrices and their asymptotic freeness."""

from __future__ import annotations

import math
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import _rng
from .freeness import Block, MarginalSpec, free_mixed_moment
from .ncpoly import Word, state_from_sequence
from .spectral import measure_moment, quantile, semicircular_state


@dataclass(frozen=True)
class GaussianEnsemble:
    """``count`` independent symmetric ``n x n`` matrices with all entries
    N(0, 1/n); entry ``(i, j)`` is drawn once for ``i <= j``."""

    n: int
    count: int = 2
    seed: int = _rng.DEFAULT_SEED

    def __post_init__(self):
        if self.n < 1 or self.count < 1:
            raise ValueError("need n >= 1 and count >= 1")


@dataclass(frozen=True)
class DiagonalTarget:
    values: tuple

    @property
    def n(self):
        return len(self.values)

    @classmethod
    def from_measure(cls, mu, n):
        """Quantiles of ``mu`` at ``(i + 1/2) / n``."""
        probs = (np.arange(n) + 0.5) / n
        return cls(tuple(float(x) for x in quantile(mu, probs)))


def _symmetric(rng, n):
    g = rng.standard_normal((n, n)) / math.sqrt(n)
    upper = np.triu(g)
    return upper + np.triu(g, 1).T


def sample_matrices(e, trial=0):
    """The ``count`` matrices of trial ``trial``; stream ``(seed, trial, s)``."""
    return [_symmetric(_rng.stream(e.seed, "randmat", e.n, trial, s), e.n) for s in range(e.count)]


_TOKEN = re.compile(r"X(\d+)|D")


def parse_matrix_word(text):
    """``"X1 X2 X1 X2"`` or ``"X1X2D"`` -> ``[1, 2, 1, 2]`` / ``[1, 2, 'D']``."""
    compact = text.replace(" ", "")
    tokens = []
    pos = 0
    while pos < len(compact):
        m = _TOKEN.match(compact, pos)
        if not m:
            raise ValueError(f"bad symbol at {compact[pos:]!r}; use X1..Xs or D")
        tokens.append(int(m.group(1)) if m.group(1) else "D")
        pos = m.end()
    if any(t != "D" and t < 1 for t in tokens):
        raise ValueError("matrix symbols are numbered from X1")
    return tokens


def _normalize_word(word):
    return parse_matrix_word(word) if isinstance(word, str) else list(word)


def normalized_trace(word, mats, diag=None):
    """``(1/n) Tr`` of the product along ``word`` (symbols ``1..s`` or ``'D'``)."""
    n = mats[0].shape[0] if mats else len(diag.values)
    prod = np.eye(n)
    for sym in word:
        if sym == "D":
            if diag is None:
                raise ValueError("word uses D but no diagonal target was given")
            prod = prod * np.asarray(diag.values)[None, :]
        else:
            if sym > len(mats):
                raise ValueError(f"word uses X{sym} but only {len(mats)} matrices exist")
            prod = prod @ mats[sym - 1]
    return float(np.trace(prod)) / n


def _pairwise_sum(xs):
    xs = list(xs)
    while len(xs) > 1:
        xs = [xs[i] + xs[i + 1] if i + 1 < len(xs) else xs[i] for i in range(0, len(xs), 2)]
    return xs[0] if xs else 0.0


def empirical_word_moment(e, word, trials, diag=None, workers=1):
    """Mean and standard error of the normalized trace over ``trials``."""
    if trials < 2:
        raise ValueError("need at least two trials for a standard error")
    word = _normalize_word(word)
    needed = max((s for s in word if s != "D"), default=0)
    if needed > e.count:
        raise ValueError(f"word uses X{needed} but the ensemble has {e.count} matrices")
    if diag is not None and diag.n != e.n:
        raise ValueError("diagonal target size differs from matrix size")

    def one(t):
        return normalized_trace(word, sample_matrices(e, t), diag)

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            vals = list(pool.map(one, range(trials)))
    else:
        vals = [one(t) for t in range(trials)]
    mean = _pairwise_sum(vals) / trials
    var = _pairwise_sum((v - mean) ** 2 for v in vals) / (trials - 1)
    return mean, math.sqrt(var / trials)


def free_prediction(word, count=None, diag_measure=None, degree=None):
    """Limit of the normalized trace: free semicirculars of radius 2 (second
    moment 1) together with ``D`` distributed as ``diag_measure``."""
    word = _normalize_word(word)
    count = count or max((s for s in word if s != "D"), default=1)
    degree = degree or max(len(word), 1)
    blocks = [Block((s,), semicircular_state(degree, 2)) for s in range(count)]
    letters = {s + 1: s for s in range(count)}
    if "D" in word:
        if diag_measure is None:
            raise ValueError("word uses D but no diagonal measure was given")
        moments = [1] + [measure_moment(diag_measure, j) for j in range(1, degree + 1)]
        blocks.append(Block((count,), state_from_sequence(moments)))
        letters["D"] = count
    marg = MarginalSpec(blocks)
    return free_mixed_moment(marg, Word.of(*(letters[s] for s in word)))


@dataclass
class ReportRow:
    n: int
    mean: float
    stderr: float
    prediction: float
    gap: float


def asymptotic_freeness_report(word, sizes, trials, seed=_rng.DEFAULT_SEED, count=None,
                               diag_measure=None, workers=1):
    """Empirical normalized trace of ``word`` at each size against the free limit."""
    sizes = list(sizes)
    if any(b <= a for a, b in zip(sizes, sizes[1:])):
        raise ValueError("sizes must be increasing")
    word = _normalize_word(word)
    count = count or max((s for s in word if s != "D"), default=1)
    pred = float(free_prediction(word, count, diag_measure))
    rows = []
    for n in sizes:
        e = GaussianEnsemble(n, count, seed)
        diag = DiagonalTarget.from_measure(diag_measure, n) if "D" in word else None
        mean, se = empirical_word_moment(e, word, trials, diag, workers)
        rows.append(ReportRow(n, mean, se, pred, abs(mean - pred)))
    return rows


def spectrum(matrix, tol=1e-12):
    """Ascending eigenvalues of a symmetric matrix."""
    a = np.asarray(matrix, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("matrix must be square")
    if not np.allclose(a, a.T, rtol=0, atol=tol * max(1.0, float(np.abs(a).max(initial=0)))):
        raise ValueError("matrix is not symmetric")
    return np.linalg.eigvalsh(a)
