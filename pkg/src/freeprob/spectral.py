"""Compactly supported probability measures on the real line.

Densities are named built-ins (semicircular, uniform, truncated Gaussian) so
they can be serialized, dilated and translated by parameter arithmetic.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy import integrate
from scipy.interpolate import PchipInterpolator

from . import _rng
from .ncpoly import state_from_sequence

QUAD_EPSREL = 1e-10
QUAD_EPSABS = 1e-13
QUAD2_EPSREL = 1e-8
CDF_KNOTS = 4096


class AtomicMeasureError(ValueError):
    """Operation needs a measure without atoms."""


# --------------------------------------------------------------------------
# measures


@dataclass(frozen=True)
class Density:
    """Absolutely continuous measure given by a named built-in density."""

    name: str
    params: tuple

    def __post_init__(self):
        if self.name not in _BUILTINS:
            raise ValueError(f"unknown density {self.name!r}; known: {sorted(_BUILTINS)}")
        _BUILTINS[self.name].check(*self.params)

    @property
    def support(self):
        return _BUILTINS[self.name].support(*self.params)

    def pdf(self, t):
        return _BUILTINS[self.name].pdf(np.asarray(t, dtype=float), *self.params)

    def scalar_pdf(self, t):
        return _BUILTINS[self.name].scalar_pdf(t, *self.params)

    def to_json(self):
        return {"type": "density", "name": self.name, "params": list(self.params)}


@dataclass(frozen=True)
class Atoms:
    """Finitely many point masses."""

    locations: tuple
    masses: tuple

    def __post_init__(self):
        if len(self.locations) != len(self.masses) or not self.locations:
            raise ValueError("atoms need matching, nonempty locations and masses")
        if any(m < 0 for m in self.masses) or abs(sum(self.masses) - 1) > 1e-9:
            raise ValueError("atom masses must be nonnegative and sum to 1")

    @property
    def support(self):
        return min(self.locations), max(self.locations)

    def to_json(self):
        return {"type": "atoms", "locations": list(self.locations), "masses": list(self.masses)}


@dataclass(frozen=True)
class Empirical:
    """Equal-weight sample points, e.g. an eigenvalue list."""

    points: tuple

    def __post_init__(self):
        if not self.points:
            raise ValueError("empirical measure needs at least one point")

    @property
    def support(self):
        return min(self.points), max(self.points)

    def to_json(self):
        return {"type": "empirical", "points": list(self.points)}


class _Builtin:
    def __init__(self, scalar_pdf, support, check, dilate):
        self.scalar_pdf, self.support, self.check, self.dilate = scalar_pdf, support, check, dilate
        self.pdf = np.vectorize(scalar_pdf, otypes=[float])


def _semicircle_pdf(t, a, r):
    u = r * r - (t - a) ** 2
    return 2.0 / (math.pi * r * r) * math.sqrt(u) if u > 0 else 0.0


def _check_radius(a, r):
    if not r > 0:
        raise ValueError(f"radius must be positive, got {r}")


def _uniform_pdf(t, lo, hi):
    return 1.0 / (hi - lo) if lo <= t <= hi else 0.0


def _check_interval(lo, hi):
    if not hi > lo:
        raise ValueError(f"need lo < hi, got [{lo}, {hi}]")


def _gauss_mass(cut):
    return math.erf(cut / math.sqrt(2))


def _gauss_pdf(t, mu, sigma, cut=8.0):
    z = (t - mu) / sigma
    if abs(z) > cut:
        return 0.0
    return math.exp(-0.5 * z * z) / (sigma * math.sqrt(2 * math.pi) * _gauss_mass(cut))


def _check_gauss(mu, sigma, cut=8.0):
    if not (sigma > 0 and cut > 0):
        raise ValueError("gaussian-truncated needs sigma > 0 and cutoff > 0")


_BUILTINS = {
    "semicircular": _Builtin(
        _semicircle_pdf,
        lambda a, r: (a - r, a + r),
        _check_radius,
        lambda lam, shift, a, r: (lam * a + shift, lam * r),
    ),
    "uniform": _Builtin(
        _uniform_pdf,
        lambda lo, hi: (lo, hi),
        _check_interval,
        lambda lam, shift, lo, hi: (lam * lo + shift, lam * hi + shift),
    ),
    "gaussian-truncated": _Builtin(
        _gauss_pdf,
        lambda mu, sigma, cut=8.0: (mu - cut * sigma, mu + cut * sigma),
        _check_gauss,
        lambda lam, shift, mu, sigma, cut=8.0: (lam * mu + shift, lam * sigma, cut),
    ),
}


def semicircular(a=0.0, r=1.0):
    return Density("semicircular", (a, r))


def uniform(lo=0.0, hi=1.0):
    return Density("uniform", (lo, hi))


def gaussian_truncated(mu=0.0, sigma=1.0, cutoff=8.0):
    return Density("gaussian-truncated", (mu, sigma, cutoff))


def point_mass(x=0.0):
    return Atoms((x,), (1.0,))


def affine(mu, lam, shift=0.0):
    """Push-forward of ``mu`` under ``t -> lam * t + shift`` with ``lam > 0``."""
    if not lam > 0:
        raise ValueError("dilation factor must be positive")
    if isinstance(mu, Density):
        return Density(mu.name, _BUILTINS[mu.name].dilate(lam, shift, *mu.params))
    if isinstance(mu, Atoms):
        return Atoms(tuple(lam * x + shift for x in mu.locations), mu.masses)
    return Empirical(tuple(lam * x + shift for x in mu.points))


def dilate(mu, lam):
    return affine(mu, lam)


def measure_from_json(obj):
    kind = obj.get("type")
    if kind == "density":
        unknown = set(obj) - {"type", "name", "params"}
        if unknown:
            raise ValueError(f"unknown key(s) in density: {sorted(unknown)}")
        return Density(obj["name"], tuple(float(p) for p in obj.get("params", ())))
    if kind == "atoms":
        unknown = set(obj) - {"type", "locations", "masses"}
        if unknown:
            raise ValueError(f"unknown key(s) in atoms: {sorted(unknown)}")
        return Atoms(tuple(map(float, obj["locations"])), tuple(map(float, obj["masses"])))
    if kind == "empirical":
        unknown = set(obj) - {"type", "points"}
        if unknown:
            raise ValueError(f"unknown key(s) in empirical: {sorted(unknown)}")
        return Empirical(tuple(map(float, obj["points"])))
    raise ValueError(f"unknown measure type {kind!r}")


def parse_measure(text):
    """``"semicircular:0,1"``, ``"point:0"`` or ``"uniform:0,1"``."""
    name, _, rest = text.partition(":")
    params = tuple(float(x) for x in rest.split(",") if x.strip())
    if name == "point":
        return point_mass(*params)
    return Density(name, params)


# --------------------------------------------------------------------------
# integrals


def _quad(f, lo, hi, points=None):
    with warnings.catch_warnings():
        # odd moments of symmetric laws cancel to ~1e-17; epsrel is unreachable there
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        val, _ = integrate.quad(
            f, lo, hi, epsabs=QUAD_EPSABS, epsrel=QUAD_EPSREL, limit=500, points=points
        )
    return val


def _scalar_pdf(mu):
    return mu.scalar_pdf


def semicircular_density(a, r, t):
    _check_radius(a, r)
    return _semicircle_pdf(float(t), a, r)


def total_mass(mu):
    if isinstance(mu, Density):
        lo, hi = mu.support
        return _quad(_scalar_pdf(mu), lo, hi)
    if isinstance(mu, Atoms):
        return float(sum(mu.masses))
    return 1.0


def measure_moment(mu, k):
    if k < 0:
        raise ValueError("moment order must be >= 0")
    if isinstance(mu, Density):
        lo, hi = mu.support
        pdf = _scalar_pdf(mu)
        return _quad(lambda t: t**k * pdf(t), lo, hi)
    if isinstance(mu, Atoms):
        return float(sum(m * x**k for x, m in zip(mu.locations, mu.masses)))
    pts = np.asarray(mu.points, dtype=float)
    return float(np.mean(pts**k))


def semicircular_moment_closed_form(k, r=1):
    """``C_{k/2} (r/2)^k`` for even ``k``, 0 for odd; exact for rational ``r``."""
    if k < 0:
        raise ValueError("moment order must be >= 0")
    if k % 2:
        return 0
    j = k // 2
    catalan = math.comb(2 * j, j) // (j + 1)
    if isinstance(r, (int, Fraction)):
        return catalan * Fraction(r, 2) ** k
    return catalan * (r / 2.0) ** k


def semicircular_state(degree, r=1):
    """Moment state of one semicircular generator of radius ``r``."""
    return state_from_sequence([semicircular_moment_closed_form(j, r) for j in range(degree + 1)])


def measure_state(mu, degree):
    """Moment state of one self-adjoint generator distributed as ``mu``."""
    if isinstance(mu, Density) and mu.name == "semicircular" and mu.params[0] == 0:
        return semicircular_state(degree, mu.params[1])
    return state_from_sequence([1] + [measure_moment(mu, j) for j in range(1, degree + 1)])


def _log_potential(pdf, lo, hi, s):
    """``int log|s - t| pdf(t) dt`` with the singular point split off."""
    f = lambda t: math.log(abs(s - t)) * pdf(t) if t != s else 0.0
    total = 0.0
    if s > lo:
        total += _quad(f, lo, s)
    if s < hi:
        total += _quad(f, s, hi)
    return total


def log_energy(mu):
    """``iint log|s - t| dmu(s) dmu(t)``.

    Densities are first mapped affinely onto [-1, 1]; the energy shifts by the
    log of the scale factor, so dilations are handled exactly.  Atomic measures
    give ``-inf``.  Empirical measures use the off-diagonal pair mean, a biased
    but consistent estimator.
    """
    if isinstance(mu, Atoms):
        return -math.inf
    if isinstance(mu, Empirical):
        return _empirical_log_energy(np.asarray(mu.points, dtype=float))
    lo, hi = mu.support
    half = (hi - lo) / 2.0
    std = affine(mu, 1.0 / half, -(lo + hi) / (2.0 * half))
    pdf = _scalar_pdf(std)
    inner = lambda s: _log_potential(pdf, -1.0, 1.0, s) * pdf(s)
    val, _ = integrate.quad(inner, -1.0, 1.0, epsabs=1e-10, epsrel=QUAD2_EPSREL, limit=200)
    return math.log(half) + val


def _empirical_log_energy(x):
    n = len(x)
    if n < 2:
        return -math.inf
    # row blocks keep memory bounded; fixed order keeps the sum reproducible
    total = 0.0
    step = 1024
    for i in range(0, n, step):
        d = np.abs(x[i : i + step, None] - x[None, :])
        idx = np.arange(i, min(i + step, n))
        d[idx - i, idx] = 1.0
        if np.any(d == 0):
            return -math.inf
        total += float(np.sum(np.log(d)))
    return total / (n * (n - 1))


def classical_entropy(mu):
    """``-int phi log phi`` for a one-dimensional density."""
    if not isinstance(mu, Density):
        raise TypeError("classical entropy needs a density measure")
    lo, hi = mu.support
    pdf = _scalar_pdf(mu)

    def f(t):
        p = pdf(t)
        return -p * math.log(p) if p > 0 else 0.0

    return _quad(f, lo, hi)


# --------------------------------------------------------------------------
# sampling


def _cdf_table(mu):
    lo, hi = mu.support
    x = np.linspace(lo, hi, CDF_KNOTS)
    pdf = _scalar_pdf(mu)
    pieces = [0.0] + [_quad(pdf, a, b) for a, b in zip(x[:-1], x[1:])]
    cdf = np.cumsum(pieces)
    cdf /= cdf[-1]
    keep = np.concatenate([[True], np.diff(cdf) > 0])
    return cdf[keep], x[keep]


def quantile(mu, probs):
    """Quantile function evaluated at ``probs`` in [0, 1]."""
    probs = np.asarray(probs, dtype=float)
    if isinstance(mu, Density):
        cdf, x = _cdf_table(mu)
        return PchipInterpolator(cdf, x)(probs)
    if isinstance(mu, Atoms):
        order = np.argsort(mu.locations)
        locs = np.asarray(mu.locations)[order]
        cum = np.cumsum(np.asarray(mu.masses)[order])
        return locs[np.minimum(np.searchsorted(cum, probs, side="left"), len(locs) - 1)]
    pts = np.sort(np.asarray(mu.points, dtype=float))
    return np.quantile(pts, probs, method="inverted_cdf")


def sample(mu, count, seed=_rng.DEFAULT_SEED):
    """``count`` i.i.d. draws, deterministic given ``seed``."""
    if count < 0:
        raise ValueError("count must be >= 0")
    if count == 0:
        return np.empty(0)
    rng = _rng.stream(seed, "spectral.sample")
    if isinstance(mu, Density):
        return quantile(mu, rng.random(count))
    if isinstance(mu, Atoms):
        p = np.asarray(mu.masses, dtype=float)
        return rng.choice(np.asarray(mu.locations, dtype=float), size=count, p=p / p.sum())
    return rng.choice(np.asarray(mu.points, dtype=float), size=count)


def empirical_from_eigenvalues(values):
    values = tuple(float(v) for v in values)
    if not values:
        raise ValueError("need at least one eigenvalue")
    return Empirical(values)
