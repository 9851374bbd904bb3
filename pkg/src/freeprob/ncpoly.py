"""Words and polynomials in non-commuting starred indeterminates, moment states
on them, and the GNS inner product."""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Number

import numpy as np

Letter = tuple  # (generator index, starred)

PSD_RTOL = 1e-9


class DegreeOverflowError(ValueError):
    """A word is longer than the degree bound of a moment state."""


class MissingMomentError(KeyError):
    """A moment state has no value for the requested word."""


class Word(tuple):
    """Monomial in the letters ``(index, starred)``; ``Word()`` is the unit."""

    def __new__(cls, letters=()):
        return super().__new__(cls, ((int(i), bool(s)) for i, s in letters))

    @classmethod
    def of(cls, *indices):
        """Word of unstarred letters, ``Word.of(0, 1)`` is ``x0 x1``."""
        return cls((i, False) for i in indices)

    @classmethod
    def parse(cls, text):
        """Parse ``"x0 x1* x0"``; ``"1"`` or ``""`` is the empty word."""
        if text.strip() == "1":
            return cls()
        letters = []
        for tok in text.replace(",", " ").split():
            starred = tok.endswith("*")
            tok = tok.rstrip("*")
            if tok[:1] not in ("x", "X") or not tok[1:].isdigit():
                raise ValueError(f"bad letter {tok!r} in word {text!r}; expected x<index>")
            tok = tok[1:]
            letters.append((int(tok), starred))
        return cls(letters)

    def star(self):
        return Word((i, not s) for i, s in reversed(self))

    def __mul__(self, other):
        return Word(tuple.__add__(self, other))

    def __add__(self, other):
        return self * other

    def sort_key(self):
        return (len(self), tuple(self))

    def rotations(self):
        for j in range(max(len(self), 1)):
            yield Word(self[j:] + self[:j])

    def unstarred(self):
        return Word((i, False) for i, _ in self)

    def max_index(self):
        return max((i for i, _ in self), default=-1)

    def to_json(self):
        return [[i, s] for i, s in self]

    def __repr__(self):
        if not self:
            return "1"
        return " ".join(f"x{i}" + ("*" if s else "") for i, s in self)

    __str__ = __repr__


def cyclic_canonical(word, reversal=False):
    """Least rotation of ``word`` (and of its reversal when ``reversal``)."""
    candidates = list(word.rotations())
    if reversal:
        candidates += list(Word(tuple(reversed(word))).rotations())
    return min(candidates, key=Word.sort_key)


def all_words(generators, degree, starred=True, min_length=0):
    """All words of length ``min_length..degree`` in canonical order."""
    letters = [(i, False) for i in range(generators)]
    if starred:
        letters = [(i, s) for i in range(generators) for s in (False, True)]
    for length in range(min_length, degree + 1):
        for combo in itertools.product(letters, repeat=length):
            yield Word(combo)


def _conj(c):
    return c.conjugate() if isinstance(c, complex) else c


class NcPolynomial:
    """Finite linear combination of words."""

    __slots__ = ("terms",)

    def __init__(self, terms=None):
        self.terms = {}
        for w, c in (terms or {}).items():
            if c != 0:
                self.terms[Word(w)] = self.terms.get(Word(w), 0) + c
        self.terms = {w: c for w, c in self.terms.items() if c != 0}

    @classmethod
    def word(cls, word, coeff=1):
        return cls({Word(word): coeff})

    @classmethod
    def constant(cls, c=1):
        return cls({Word(): c})

    def __add__(self, other):
        other = _as_poly(other)
        out = dict(self.terms)
        for w, c in other.terms.items():
            out[w] = out.get(w, 0) + c
        return NcPolynomial(out)

    __radd__ = __add__

    def __neg__(self):
        return NcPolynomial({w: -c for w, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-_as_poly(other))

    def __rsub__(self, other):
        return _as_poly(other) - self

    def __mul__(self, other):
        if isinstance(other, Number):
            return NcPolynomial({w: c * other for w, c in self.terms.items()})
        out = {}
        for (w1, c1), (w2, c2) in itertools.product(self.terms.items(), other.terms.items()):
            w = w1 * w2
            out[w] = out.get(w, 0) + c1 * c2
        return NcPolynomial(out)

    def __rmul__(self, other):
        if isinstance(other, Number):
            return self * other
        return NotImplemented

    def __pow__(self, k):
        out = NcPolynomial.constant(1)
        for _ in range(k):
            out = out * self
        return out

    def __eq__(self, other):
        if isinstance(other, Number):
            other = NcPolynomial.constant(other)
        return isinstance(other, NcPolynomial) and self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def degree(self):
        return max((len(w) for w in self.terms), default=0)

    def star(self):
        return star(self)

    def __repr__(self):
        if not self.terms:
            return "0"
        items = sorted(self.terms.items(), key=lambda t: t[0].sort_key())
        return " + ".join(f"({c})*{w}" for w, c in items)


def _as_poly(p):
    if isinstance(p, NcPolynomial):
        return p
    if isinstance(p, Word):
        return NcPolynomial.word(p)
    return NcPolynomial.constant(p)


def star(p):
    """Adjoint: conjugate coefficients, reverse words, flip stars."""
    p = _as_poly(p)
    return NcPolynomial({w.star(): _conj(c) for w, c in p.terms.items()})


@dataclass(frozen=True)
class MomentState:
    """Unital linear functional known on words up to ``degree``.

    With ``trace`` set, a word missing from ``values`` is looked up through its
    least cyclic rotation, so tracial states need only store one word per
    rotation class.  With ``self_adjoint`` set, stars are ignored and the
    rotation class also includes reversals.
    """

    generators: int
    degree: int
    values: dict = field(repr=False)
    trace: bool = False
    self_adjoint: bool = False

    def __post_init__(self):
        vals = {}
        for w, v in self.values.items():
            w = self._normalize(Word(w))
            if len(w) > self.degree:
                raise DegreeOverflowError(f"word {w} exceeds degree {self.degree}")
            if w.max_index() >= self.generators:
                raise ValueError(f"word {w} uses a generator outside [0, {self.generators})")
            vals[w] = v
        if vals.setdefault(Word(), 1) != 1:
            raise ValueError("a state must take the value 1 on the unit")
        object.__setattr__(self, "values", vals)

    def _normalize(self, w):
        return w.unstarred() if self.self_adjoint else w

    def canonical(self, w):
        return cyclic_canonical(self._normalize(w), reversal=self.self_adjoint)

    def value(self, w):
        w = self._normalize(Word(w))
        if len(w) > self.degree:
            raise DegreeOverflowError(f"word {w} of length {len(w)} exceeds degree {self.degree}")
        if w in self.values:
            return self.values[w]
        if self.trace:
            c = self.canonical(w)
            if c in self.values:
                return self.values[c]
        raise MissingMomentError(f"no moment recorded for {w}")

    def __call__(self, w):
        return self.value(w)

    def letters(self):
        if self.self_adjoint:
            return [(i, False) for i in range(self.generators)]
        return [(i, s) for i in range(self.generators) for s in (False, True)]

    def words(self, degree=None):
        degree = self.degree if degree is None else degree
        return all_words(self.generators, degree, starred=not self.self_adjoint)

    def restrict(self, generators):
        """Marginal on the listed generators, re-indexed from 0."""
        vals = {}
        for w in all_words(len(generators), self.degree, starred=not self.self_adjoint):
            if self.trace and self.canonical(w) != w:
                continue
            try:
                vals[w] = self.value(Word((generators[i], s) for i, s in w))
            except MissingMomentError:
                continue
        return MomentState(len(generators), self.degree, vals, self.trace, self.self_adjoint)

    # --- serialization -------------------------------------------------
    def to_json(self):
        rows = []
        for w in sorted(self.values, key=Word.sort_key):
            v = complex(self.values[w])
            rows.append({"word": w.to_json(), "re": v.real, "im": v.imag})
        return {
            "generators": self.generators,
            "degree": self.degree,
            "trace": self.trace,
            "self_adjoint": self.self_adjoint,
            "moments": rows,
        }

    @classmethod
    def from_json(cls, obj):
        if isinstance(obj, str):
            obj = json.loads(obj)
        allowed = {"generators", "degree", "trace", "self_adjoint", "moments"}
        unknown = set(obj) - allowed
        if unknown:
            raise ValueError(f"unknown key(s) in moment state: {sorted(unknown)}")
        for key in ("generators", "degree", "moments"):
            if key not in obj:
                raise ValueError(f"moment state is missing key {key!r}")
        vals = {}
        for row in obj["moments"]:
            extra = set(row) - {"word", "re", "im"}
            if extra or "word" not in row:
                raise ValueError(f"bad moment entry keys: {sorted(row)}")
            re, im = float(row.get("re", 0.0)), float(row.get("im", 0.0))
            w = Word.parse(row["word"]) if isinstance(row["word"], str) else Word(row["word"])
            vals[w] = complex(re, im) if im else re
        return cls(
            int(obj["generators"]),
            int(obj["degree"]),
            vals,
            bool(obj.get("trace", False)),
            bool(obj.get("self_adjoint", False)),
        )


def state_from_sequence(moments, trace=True):
    """Single self-adjoint generator with moments ``m_0..m_d``."""
    if moments[0] != 1:
        raise ValueError("m_0 must be 1")
    vals = {Word.of(*([0] * j)): m for j, m in enumerate(moments)}
    return MomentState(1, len(moments) - 1, vals, trace=trace, self_adjoint=True)


def evaluate(p, s):
    """Apply ``s`` to a polynomial (or word)."""
    p = _as_poly(p)
    total = 0
    for w, c in p.terms.items():
        total = total + c * s.value(w)
    return total


def gns_inner(a, b, s, tol=1e-9):
    """``<a, b> = s(b* a)``; raises if ``<a, a>`` comes out negative."""
    a, b = _as_poly(a), _as_poly(b)
    val = evaluate(star(b) * a, s)
    if a is b or a == b:
        re = complex(val).real
        if re < -tol or abs(complex(val).imag) > tol:
            raise ValueError(f"state is not positive: <a, a> = {val}")
    return val


def _psd_verdict(mat):
    mat = np.asarray(mat, dtype=complex)
    mat = (mat + mat.conj().T) / 2
    lam = float(np.linalg.eigvalsh(mat).min())
    scale = float(np.abs(mat).max()) if mat.size else 0.0
    return lam >= -PSD_RTOL * scale, lam


def hankel_psd_check(moments):
    """PSD test of the Hankel matrix ``H[i, j] = m[i + j]``.

    Returns ``(ok, minimal eigenvalue)``.  ``moments`` must have odd length
    ``2d + 1``; a trailing odd moment is ignored.
    """
    m = [float(x) for x in moments]
    if not m or m[0] != 1:
        raise ValueError("m_0 must be 1")
    d = (len(m) - 1) // 2
    H = np.array([[m[i + j] for j in range(d + 1)] for i in range(d + 1)])
    return _psd_verdict(H)


def gram_psd_check(s, degree=None):
    """PSD test of ``G[u, v] = s(u* v)`` over words of length <= degree/2."""
    half = (s.degree if degree is None else degree) // 2
    basis = list(s.words(half))
    G = [[complex(s.value(u.star() * v)) for v in basis] for u in basis]
    return _psd_verdict(G)


@dataclass
class TraceReport:
    violations: list
    classes_tested: int

    @property
    def ok(self):
        return not self.violations


def trace_property_check(s, degree=None, tol=1e-9):
    """Compare every word with the representative of its rotation class."""
    degree = s.degree if degree is None else degree
    if degree > s.degree:
        raise DegreeOverflowError(f"degree {degree} exceeds state degree {s.degree}")
    seen = set()
    violations = []
    classes = 0
    for w in s.words(degree):
        w = s._normalize(w)
        rep = cyclic_canonical(w)
        if rep in seen:
            continue
        seen.add(rep)
        members = []
        for r in dict.fromkeys(w.rotations()):
            try:
                members.append((r, s.value(r)))
            except MissingMomentError:
                pass
        if len(members) < 2:
            continue
        classes += 1
        w0, v0 = members[0]
        for r, v in members[1:]:
            diff = abs(complex(v) - complex(v0))
            if diff > tol:
                violations.append((w0, r, diff))
    return TraceReport(violations, classes)
