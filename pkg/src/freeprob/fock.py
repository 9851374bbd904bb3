"""Truncated full Fock space over ``d`` orthonormal letters.

Basis vectors are words of length ``<= N`` ordered by (length, lexicographic);
index 0 is the vacuum.  Creation operators prepend a letter and send the top
level ``N`` to zero, so a product of ``k <= N`` creation/annihilation operators
applied to the vacuum agrees with the untruncated model.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy import sparse

from .ncpoly import MomentState, all_words, trace_property_check


class TruncationError(ValueError):
    """Word too long for the truncation level to give exact moments."""


class TruncatedFock:
    def __init__(self, letters, level):
        if letters < 1 or level < 0:
            raise ValueError("need letters >= 1 and level >= 0")
        self.letters = letters
        self.level = level
        d = letters
        self.offsets = [0]
        for L in range(level + 1):
            self.offsets.append(self.offsets[-1] + d**L)
        self.dim = self.offsets[-1]

    @staticmethod
    def dimension(letters, level):
        if letters == 1:
            return level + 1
        return (letters ** (level + 1) - 1) // (letters - 1)

    def index(self, word):
        num = 0
        for a in word:
            num = num * self.letters + a
        return self.offsets[len(word)] + num

    def basis(self):
        for L in range(self.level + 1):
            yield from itertools.product(range(self.letters), repeat=L)

    def lengths(self):
        """Tensor level of each basis vector."""
        return np.repeat(np.arange(self.level + 1), np.diff(self.offsets))

    def vacuum(self):
        v = np.zeros(self.dim)
        v[0] = 1.0
        return v


@dataclass(frozen=True)
class FockOperator:
    matrix: sparse.csc_matrix
    space: TruncatedFock

    def adjoint(self):
        return FockOperator(self.matrix.conj().T.tocsc(), self.space)

    @property
    def H(self):
        return self.adjoint()

    def __add__(self, other):
        return FockOperator((self.matrix + other.matrix).tocsc(), self.space)

    def __sub__(self, other):
        return FockOperator((self.matrix - other.matrix).tocsc(), self.space)

    def __mul__(self, c):
        return FockOperator((self.matrix * c).tocsc(), self.space)

    __rmul__ = __mul__

    def __truediv__(self, c):
        return FockOperator((self.matrix / c).tocsc(), self.space)

    def __matmul__(self, other):
        if isinstance(other, FockOperator):
            return FockOperator((self.matrix @ other.matrix).tocsc(), self.space)
        return self.matrix @ other

    def toarray(self):
        return self.matrix.toarray()


def _letter_creation(space, a):
    d, N = space.letters, space.level
    rows, cols = [], []
    for L in range(N):
        start = space.offsets[L]
        count = d**L
        cols.extend(range(start, start + count))
        # prepending letter a to a length-L word w gives number a * d^L + num(w)
        rows.extend(space.offsets[L + 1] + a * count + j for j in range(count))
    data = np.ones(len(rows))
    return sparse.csc_matrix((data, (rows, cols)), shape=(space.dim, space.dim))


def creation(space, h):
    """Left creation operator ``l(h)``: ``xi -> h (x) xi``.

    ``h`` is a letter index or a real unit vector of length ``space.letters``.
    """
    if isinstance(h, (int, np.integer)):
        if not 0 <= h < space.letters:
            raise ValueError(f"letter {h} out of range")
        return FockOperator(_letter_creation(space, int(h)), space)
    h = np.asarray(h, dtype=float)
    if h.shape != (space.letters,):
        raise ValueError(f"vector must have length {space.letters}")
    if abs(np.linalg.norm(h) - 1.0) > 1e-12:
        raise ValueError("creation vector must be a unit vector")
    mat = sparse.csc_matrix((space.dim, space.dim))
    for a, c in enumerate(h):
        if c != 0:
            mat = mat + c * _letter_creation(space, a)
    return FockOperator(mat.tocsc(), space)


def _as_vector(space, h):
    if isinstance(h, (int, np.integer)):
        v = np.zeros(space.letters)
        v[h] = 1.0
        return v
    return np.asarray(h, dtype=float)


def annihilation_identity_check(space, h1, h2):
    """Max deviation of ``l(h1)* l(h2)`` from ``<h2, h1> I`` below the top level."""
    op = (creation(space, h1).adjoint() @ creation(space, h2)).toarray()
    inner = float(np.dot(_as_vector(space, h2), _as_vector(space, h1)))
    below_top = space.lengths() < space.level
    diff = op - inner * np.eye(space.dim)
    return float(np.abs(diff[:, below_top]).max()) if below_top.any() else 0.0


def semicircular_element(space, h):
    """``(l(h) + l(h)*) / 2``."""
    l = creation(space, h)
    return (l + l.adjoint()) / 2


def vacuum_moment(space, operators, word):
    """``<op_{w_1} ... op_{w_k} vacuum, vacuum>``; requires ``k <= level``."""
    word = list(word)
    if len(word) > space.level:
        raise TruncationError(
            f"word of length {len(word)} exceeds truncation level {space.level}; "
            "the moment would not be exact"
        )
    v = space.vacuum()
    for j in reversed(word):
        v = operators[j].matrix @ v
    return complex(v[0]) if np.iscomplexobj(v) else float(v[0])


def semicircular_family(letters, level):
    """Space and ``(l(e_i) + l(e_i)*)/2`` for each basis letter."""
    space = TruncatedFock(letters, level)
    return space, [semicircular_element(space, a) for a in range(letters)]


def fock_moment_state(letters, degree, tol=1e-10):
    """Vacuum moment state of the orthogonal semicircular family.

    Traciality is checked on the computed values, never assumed.
    """
    space, ops = semicircular_family(letters, degree)
    vals = {}
    for w in all_words(letters, degree, starred=False):
        vals[w] = vacuum_moment(space, ops, [i for i, _ in w])
    raw = MomentState(letters, degree, vals, trace=False, self_adjoint=True)
    is_trace = trace_property_check(raw, degree, tol).ok
    return MomentState(letters, degree, vals, trace=is_trace, self_adjoint=True)


def catalan_table(degree):
    """Rows ``(k, vacuum moment, C_{k/2}/4^{k/2}, abs error)`` for ``d = 1``."""
    space, (s,) = semicircular_family(1, degree)
    rows = []
    for k in range(degree + 1):
        got = vacuum_moment(space, [s], [0] * k)
        exact = 0.0 if k % 2 else math.comb(k, k // 2) / (k // 2 + 1) / 4 ** (k // 2)
        rows.append((k, got, exact, abs(got - exact)))
    return rows
