"""Group algebra of a free group with its canonical trace.

Coefficients are kept exact (``int``/``Fraction``) unless floats are passed in.
"""

from __future__ import annotations

import re
from fractions import Fraction

from .ncpoly import MomentState, Word, all_words, cyclic_canonical

MAX_SUPPORT = 10_000


class GroupWord(tuple):
    """Reduced word: syllables ``(generator, nonzero exponent)``, adjacent
    syllables on distinct generators."""

    def __new__(cls, syllables=()):
        return super().__new__(cls, _reduce_syllables(syllables))

    @classmethod
    def identity(cls):
        return cls()

    @classmethod
    def gen(cls, i, e=1):
        return cls([(i, e)])

    @classmethod
    def parse(cls, text):
        return cls(parse_syllables(text))

    def inverse(self):
        return GroupWord((g, -e) for g, e in reversed(self))

    def __mul__(self, other):
        return GroupWord(tuple.__add__(self, other))

    def generators(self):
        return {g for g, _ in self}

    def __repr__(self):
        if not self:
            return "e"
        return " ".join(_NAMES[g] + (f"^{e}" if e != 1 else "") for g, e in self)

    __str__ = __repr__


_NAMES = "abcdefghijklmnopqrstuvwxyz"


def _reduce_syllables(raw):
    out = []
    for g, e in raw:
        g, e = int(g), int(e)
        if e == 0:
            continue
        if out and out[-1][0] == g:
            e += out[-1][1]
            out.pop()
            if e != 0:
                out.append((g, e))
        else:
            out.append((g, e))
    return tuple(out)


def reduce(raw):
    """Free-group normal form of a syllable list."""
    return GroupWord(raw)


_SYLLABLE = re.compile(r"^([a-z])(?:\^(-?\d+))?$")


def parse_syllables(text):
    """``"a b a^-1 b^-1"`` -> ``[(0, 1), (1, 1), (0, -1), (1, -1)]``."""
    out = []
    for tok in text.split():
        m = _SYLLABLE.match(tok)
        if not m:
            raise ValueError(f"bad syllable {tok!r}; expected gen(^exp)? with gen in a-z")
        out.append((_NAMES.index(m.group(1)), int(m.group(2) or 1)))
    return out


class GroupAlgebraElement:
    """Finitely supported function on the free group."""

    __slots__ = ("terms",)

    def __init__(self, terms=None):
        acc = {}
        for g, c in (terms or {}).items():
            g = g if isinstance(g, GroupWord) else GroupWord(g)
            acc[g] = acc.get(g, 0) + c
        self.terms = {g: c for g, c in acc.items() if c != 0}
        if len(self.terms) > MAX_SUPPORT:
            raise ValueError(f"support exceeds {MAX_SUPPORT} group elements")

    @classmethod
    def of(cls, word, coeff=1):
        return cls({GroupWord(word): coeff})

    @classmethod
    def one(cls):
        return cls.of(GroupWord())

    def __add__(self, other):
        out = dict(self.terms)
        for g, c in other.terms.items():
            out[g] = out.get(g, 0) + c
        return GroupAlgebraElement(out)

    def __sub__(self, other):
        return self + other * -1

    def __neg__(self):
        return self * -1

    def __mul__(self, other):
        if not isinstance(other, GroupAlgebraElement):
            return GroupAlgebraElement({g: c * other for g, c in self.terms.items()})
        out = {}
        for g, a in self.terms.items():
            for h, b in other.terms.items():
                gh = g * h
                out[gh] = out.get(gh, 0) + a * b
        return GroupAlgebraElement(out)

    def __rmul__(self, c):
        return self * c

    def __pow__(self, k):
        out = GroupAlgebraElement.one()
        for _ in range(k):
            out = out * self
        return out

    def __eq__(self, other):
        return isinstance(other, GroupAlgebraElement) and self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def star(self):
        return GroupAlgebraElement(
            {g.inverse(): (c.conjugate() if isinstance(c, complex) else c) for g, c in self.terms.items()}
        )

    def __repr__(self):
        if not self.terms:
            return "0"
        items = sorted(self.terms.items(), key=lambda t: (len(t[0]), t[0]))
        return " + ".join(f"({c})[{g}]" for g, c in items)


def canonical_trace(a):
    """Coefficient of the identity."""
    return a.terms.get(GroupWord(), 0)


def l2_norm_squared(a):
    """``tau(a* a)``, equal to the sum of ``|coeff|^2``."""
    return canonical_trace(a.star() * a)


def conditional_expectation(a, subgroup_generators):
    """Trace-preserving projection onto the algebra of the free factor generated
    by ``subgroup_generators``: keeps the terms supported there."""
    keep = set(subgroup_generators)
    return GroupAlgebraElement({g: c for g, c in a.terms.items() if g.generators() <= keep})


def _letter_to_group(generators, word):
    return GroupWord((generators[i], -1 if s else 1) for i, s in word)


def moment_state_from_group(generators, degree):
    """*-moments of the unitaries ``u_g`` for ``g`` in ``generators``; letter
    ``(i, starred)`` maps to ``u_{generators[i]}^{-1 if starred else 1}``."""
    if degree < 1:
        raise ValueError("degree must be >= 1")
    generators = list(generators)
    vals = {}
    for w in all_words(len(generators), degree, starred=True):
        if cyclic_canonical(w) != w:
            continue
        vals[w] = Fraction(1) if not _letter_to_group(generators, w) else Fraction(0)
    return MomentState(len(generators), degree, vals, trace=True, self_adjoint=False)


def compress_param(r, n):
    """Parameter of ``L(F_r) (x) M_n``: ``1 + (r - 1) / n^2``."""
    if not r > 1:
        raise ValueError("interpolated free group factors need r > 1")
    if int(n) != n or n < 1:
        raise ValueError("matrix size n must be a positive integer")
    return 1 + (r - 1) / Fraction(n) ** 2 if isinstance(r, (int, Fraction)) else 1 + (r - 1) / n**2


def free_product_param(r, s):
    """Parameter of ``L(F_r) * L(F_s)``: ``r + s``."""
    if not (r > 1 and s > 1):
        raise ValueError("interpolated free group factors need r, s > 1")
    return r + s
