"""Microstate free entropy.

Microstates are real symmetric ``k x k`` matrices.  Volumes are Euclidean for
``||A||_e^2 = Tr(A^2)``: in coordinates ``(a_ii, sqrt(2) a_ij for i < j)`` the
Lebesgue measure is that volume, so sampling in entry coordinates carries a
factor ``sqrt(2)`` per off-diagonal entry.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

from . import _rng
from .freeness import Block, MarginalSpec, FreeMomentEngine
from .ncpoly import MomentState, Word, all_words
from .spectral import Atoms, Density, Empirical, log_energy, measure_state, semicircular, semicircular_state

Z95 = 1.959963984540054
BATCH = 1 << 15


@dataclass(frozen=True)
class MicrostateParams:
    m: int
    k: int
    eps: float
    R: float
    n: int = 1

    def __post_init__(self):
        if self.m < 1 or self.k < 1 or self.n < 1:
            raise ValueError("need m, k, n >= 1")
        if not self.eps > 0 or self.R < 0:
            raise ValueError("need eps > 0 and R >= 0")

    @property
    def dim(self):
        """Real dimension of one symmetric ``k x k`` matrix."""
        return self.k * (self.k + 1) // 2


@dataclass
class ChiEstimate:
    log_volume: float
    ci_halfwidth: float
    hits: int
    samples: int
    params: MicrostateParams
    chi_value: float
    censored: bool = False
    region: str = "cube"

    def row(self):
        p = self.params
        return (p.m, p.k, p.eps, self.hits, self.samples, self.log_volume, self.ci_halfwidth, self.chi_value)


CSV_COLUMNS = ("m", "k", "eps", "hits", "samples", "log_vol", "ci", "chi_value")


# --------------------------------------------------------------------------
# membership


def _monomials(n, m):
    return [w for w in all_words(n, m, starred=False, min_length=1)]


def _targets(target, words):
    try:
        return np.array([complex(target.value(w)) for w in words])
    except KeyError as exc:
        raise KeyError(f"target is missing a required moment: {exc}") from None


def membership_mask(A, target, m, eps, R):
    """Vectorized condition check for samples ``A`` of shape ``(N, n, k, k)``.

    Strict ``< eps`` on every monomial of degree ``1..m`` in the normalized
    trace ``(1/k) Tr``, and ``||A_j|| <= R`` in operator norm.
    """
    A = np.asarray(A, dtype=float)
    N, n, k, _ = A.shape
    words = _monomials(n, m)
    want = _targets(target, words)
    ok = np.ones(N, dtype=bool)
    norms = np.abs(np.linalg.eigvalsh(A)).max(axis=2)
    ok &= (norms <= R).all(axis=1)
    prods = {(): None}
    for w, tv in zip(words, want):
        last = w[-1][0]
        prev = prods[tuple(w[:-1])]
        if len(w) < m:
            P = A[:, last] if prev is None else prev @ A[:, last]
            prods[tuple(w)] = P
            tr = np.trace(P, axis1=1, axis2=2) / k
        else:
            # last factor only needed inside the trace
            P = prev if prev is not None else np.broadcast_to(np.eye(k), (N, k, k))
            tr = np.einsum("nij,nji->n", P, A[:, last]) / k
        ok &= np.abs(tr - tv) < eps
    return ok


def microstate_membership(A, target, m, eps, R):
    """Whether the matrix tuple ``A`` lies in the microstate set."""
    A = np.asarray([np.asarray(a, dtype=float) for a in A])
    if not np.allclose(A, np.swapaxes(A, 1, 2)):
        raise ValueError("microstates must be symmetric")
    return bool(membership_mask(A[None], target, m, eps, R)[0])


# --------------------------------------------------------------------------
# sampling regions


def _cube_log_volume(k, R):
    d = k * (k + 1) // 2
    return d * math.log(2 * R) + (k * (k - 1) // 2) * 0.5 * math.log(2)


def _ball_log_volume(d, rho):
    return 0.5 * d * math.log(math.pi) - gammaln(0.5 * d + 1) + d * math.log(rho)


def _ball_radius(target, j, params):
    """Radius containing every microstate: ``Tr(A_j^2) < k (tau(X_j^2) + eps)``."""
    second = complex(target.value(Word.of(j, j))).real
    return math.sqrt(params.k * (second + params.eps))


def _regions(target, params, region):
    out = []
    for j in range(params.n):
        cube = _cube_log_volume(params.k, params.R) if params.R > 0 else -math.inf
        if region == "cube" or params.m < 2:
            out.append(("cube", None, cube))
            continue
        rho = _ball_radius(target, j, params)
        ball = _ball_log_volume(params.dim, rho)
        if region == "ball" or ball < cube:
            out.append(("ball", rho, ball))
        else:
            out.append(("cube", None, cube))
    return out


def _fill(vals, k):
    """Rows of upper-triangle entries -> symmetric matrices."""
    N = vals.shape[0]
    A = np.zeros((N, k, k))
    iu = np.triu_indices(k)
    A[:, iu[0], iu[1]] = vals
    A[:, iu[1], iu[0]] = vals
    return A


def _draw(rng, kind, rho, N, k, R):
    d = k * (k + 1) // 2
    iu = np.triu_indices(k)
    off = iu[0] != iu[1]
    if kind == "cube":
        vals = rng.uniform(-R, R, size=(N, d))
    else:
        x = rng.standard_normal((N, d))
        x /= np.linalg.norm(x, axis=1, keepdims=True)
        x *= rho * rng.random(N)[:, None] ** (1.0 / d)
        vals = np.where(off, x / math.sqrt(2), x)
    return _fill(vals, k)


def _draw_tuple(rng, regions, N, params):
    return np.stack([_draw(rng, kind, rho, N, params.k, params.R) for kind, rho, _ in regions], axis=1)


# --------------------------------------------------------------------------
# volume estimates


def _wilson(hits, n):
    p = hits / n
    denom = 1 + Z95**2 / n
    centre = (p + Z95**2 / (2 * n)) / denom
    half = Z95 * math.sqrt(p * (1 - p) / n + Z95**2 / (4 * n * n)) / denom
    return max(centre - half, 0.0), min(centre + half, 1.0)


def _estimate(hits, samples, log_ref, params, region):
    kk = params.k**2
    if hits == 0:
        log_vol = log_ref - math.log(samples)
        ci = math.nan
        censored = True
    else:
        lo, hi = _wilson(hits, samples)
        log_vol = math.log(hits / samples) + log_ref
        ci = 0.5 * (math.log(hi) - math.log(lo))
        censored = False
    log_vol = float(log_vol)
    chi = log_vol / kk + 0.5 * params.n * math.log(params.k)
    return ChiEstimate(log_vol, ci, hits, samples, params, chi, censored, region)


def _batches(samples):
    return [(b, min(BATCH, samples - b * BATCH)) for b in range(math.ceil(samples / BATCH))]


def _map(fn, items, workers):
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            return list(pool.map(fn, items))
    return [fn(x) for x in items]


def microstate_volume_mc(target, params, samples, seed=_rng.DEFAULT_SEED, region="auto",
                         cell=0, workers=1):
    """Hit-or-miss estimate of the microstate volume.

    ``region`` is ``"cube"`` (entries uniform in [-R, R]), ``"ball"`` (the
    Euclidean ball implied by the degree-2 conditions, needs ``m >= 2``) or
    ``"auto"`` (the smaller of the two per matrix).  Zero hits give the
    one-sided bound ``log(reference volume / samples)`` with ``censored`` set.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    if params.R == 0:
        raise ValueError("R = 0 leaves a null set; volume is zero")
    regions = _regions(target, params, region)
    log_ref = sum(r[2] for r in regions)

    def run(batch):
        b, size = batch
        rng = _rng.stream(seed, "microstates", cell, b)
        A = _draw_tuple(rng, regions, size, params)
        return int(membership_mask(A, target, params.m, params.eps, params.R).sum())

    hits = sum(_map(run, _batches(samples), workers))
    kinds = {r[0] for r in regions}
    return _estimate(hits, samples, log_ref, params, kinds.pop() if len(kinds) == 1 else "mixed")


@dataclass
class ChiMCResult:
    value: float
    cells: list
    per_tolerance: dict = field(default_factory=dict)


def chi_mc(target, schedule, samples, seed=_rng.DEFAULT_SEED, region="auto", workers=1):
    """Finite-schedule surrogate for the entropy: for each ``(m, eps)`` the
    maximum over scheduled ``k`` of the chi value, then the minimum over
    ``(m, eps)``.  It is not the limit itself."""
    schedule = list(schedule)
    if not schedule:
        raise ValueError("schedule must be nonempty")
    cells = [
        microstate_volume_mc(target, p, samples, seed, region, cell=i, workers=workers)
        for i, p in enumerate(schedule)
    ]
    groups = {}
    for est in cells:
        key = (est.params.m, est.params.eps)
        groups[key] = max(groups.get(key, -math.inf), est.chi_value)
    return ChiMCResult(min(groups.values()), cells, groups)


# --------------------------------------------------------------------------
# closed forms


def chi_single(mu):
    """Entropy of one self-adjoint variable with distribution ``mu``:
    log energy + 3/4 + log(2 pi)/2."""
    e = log_energy(mu)
    if e == -math.inf:
        return -math.inf
    return e + 0.75 + 0.5 * math.log(2 * math.pi)


def chi_upper_bound(n, c2):
    """``(n/2) log(2 pi e C^2 / n)`` with ``C^2 = tau(X_1^2 + ... + X_n^2)``."""
    if not c2 > 0:
        raise ValueError("C^2 must be positive")
    return 0.5 * n * math.log(2 * math.pi * math.e * c2 / n)


def chi_free_sum(measures):
    """Entropy of a free family: the sum of the single-variable entropies."""
    total = 0.0
    for mu in measures:
        c = chi_single(mu)
        if c == -math.inf:
            return -math.inf
        total += c
    return total


# --------------------------------------------------------------------------
# entropy dimension


@dataclass(frozen=True)
class DeltaConfig:
    """Microstate settings for the Monte Carlo path of ``delta_estimate``."""

    m: int = 2
    k: int = 1
    tol: float = 0.1
    R: float = 3.0
    samples: int = 20000
    inner: int = 32
    seed: int = _rng.DEFAULT_SEED


@dataclass
class DeltaEstimate:
    value: float
    path: str
    eps: list
    chi: list
    ratios: list
    clamped: bool
    raw: float
    diagnostics: dict = field(default_factory=dict)


def _analytic_perturbation(mu, eps):
    """Law of ``X + eps S`` for a point mass or semicircular ``X``, or None."""
    if isinstance(mu, Atoms) and len(mu.locations) == 1:
        return semicircular(mu.locations[0], eps)
    if isinstance(mu, Density) and mu.name == "semicircular":
        a, r = mu.params
        return semicircular(a, math.hypot(r, eps))
    return None


def _clamp(raw, n):
    value = min(max(raw, 0.0), float(n))
    return value, value != raw


def delta_estimate(target, eps_list, config=None):
    """Free entropy dimension from a decreasing perturbation schedule.

    Point-mass and semicircular measures take the closed-form path: the law of
    ``X + eps S`` is semicircular, its entropy comes from ``chi_single``, and
    the limit of ``chi / |log eps|`` is read off as minus the slope of chi
    against ``log eps`` over the two smallest ``eps``.  Other targets use the
    microstate path (see ``_delta_mc``).
    """
    eps_list = [float(e) for e in eps_list]
    if any(not 0 < e < 1 for e in eps_list) or any(b >= a for a, b in zip(eps_list, eps_list[1:])):
        raise ValueError("eps schedule must be decreasing and inside (0, 1)")
    if isinstance(target, (Atoms, Density)) and _analytic_perturbation(target, eps_list[0]) is not None:
        if len(eps_list) < 2:
            raise ValueError("the closed-form path needs at least two eps values")
        chis = [chi_single(_analytic_perturbation(target, e)) for e in eps_list]
        ratios = [c / abs(math.log(e)) for c, e in zip(chis, eps_list)]
        if isinstance(target, Atoms):
            # chi(eps S) = chi(S) + log eps, so the slope is exactly one
            slope = 1.0
        else:
            slope = (chis[-1] - chis[-2]) / (math.log(eps_list[-1]) - math.log(eps_list[-2]))
        raw = 1 - slope
        value, clamped = _clamp(raw, 1)
        return DeltaEstimate(value, "closed-form", eps_list, chis, ratios, clamped, raw,
                             {"slope": slope, "n_plus_max_ratio": 1 + max(ratios)})
    if isinstance(target, (Atoms, Density, Empirical)):
        cfg = config or DeltaConfig()
        target = measure_state(target, max(cfg.m, 2))
    return _delta_mc(target, eps_list, config or DeltaConfig())


def perturbed_joint_state(target, eps, degree):
    """Moments of ``(X_1 + eps S_1, ..., X_n + eps S_n, S_1, ..., S_n)`` with
    the ``S_j`` standard semicircular, free from each other and from ``X``."""
    n = target.generators
    blocks = [Block(tuple(range(n)), target)]
    blocks += [Block((n + j,), semicircular_state(degree)) for j in range(n)]
    engine = FreeMomentEngine(MarginalSpec(blocks))
    vals = {}
    for w in all_words(2 * n, degree, starred=False):
        total = 0
        choices = [[(g, 1)] if g >= n else [(g, 1), (g + n, eps)] for g, _ in w]
        for pick in itertools.product(*choices):
            coeff = 1
            for _, c in pick:
                coeff *= c
            total += coeff * engine.moment(Word.of(*(g for g, _ in pick)))
        vals[w] = total
    return MomentState(2 * n, degree, vals, trace=False, self_adjoint=True)


def _delta_mc(target, eps_list, cfg):
    """Entropy of ``X + eps S`` in the presence of ``S``, read as the volume of
    the projection onto the first ``n`` matrices of the joint microstates; an
    ``A`` counts as a hit when one of ``cfg.inner`` sampled ``B`` completes it.
    Returns ``n + max_eps chi / |log eps|`` clamped to ``[0, n]``."""
    n = target.generators
    chis, cells = [], []
    for i, eps in enumerate(eps_list):
        joint = perturbed_joint_state(target, eps, cfg.m)
        p_all = MicrostateParams(cfg.m, cfg.k, cfg.tol, cfg.R, 2 * n)
        regions = _regions(joint, p_all, "auto")
        a_regions, b_regions = regions[:n], regions[n:]
        log_ref = sum(r[2] for r in a_regions)
        rng = _rng.stream(cfg.seed, "delta", i)
        hits = 0
        for b, size in _batches(cfg.samples):
            A = _draw_tuple(rng, a_regions, size, p_all)
            found = np.zeros(size, dtype=bool)
            for _ in range(cfg.inner):
                B = _draw_tuple(rng, b_regions, size, p_all)
                pair = np.concatenate([A, B], axis=1)
                found |= membership_mask(pair, joint, cfg.m, cfg.tol, cfg.R)
            hits += int(found.sum())
        est = _estimate(hits, cfg.samples, log_ref, MicrostateParams(cfg.m, cfg.k, cfg.tol, cfg.R, n), "projection")
        cells.append(est)
        chis.append(est.chi_value)
    ratios = [c / abs(math.log(e)) for c, e in zip(chis, eps_list)]
    raw = n + max(ratios)
    value, clamped = _clamp(raw, n)
    return DeltaEstimate(value, "microstates", eps_list, chis, ratios, clamped, raw, {"cells": cells})
