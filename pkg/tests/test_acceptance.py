"""Acceptance criteria, one check per criterion.

Run ``python3 tests/test_acceptance.py`` for a PASS/FAIL line per criterion;
under pytest each criterion is a separate test.
"""

import itertools
import math
import random
import sys
import time
from fractions import Fraction

import numpy as np
import pytest

from freeprob.entropy import (
    MicrostateParams,
    chi_single,
    chi_upper_bound,
    delta_estimate,
    membership_mask,
    microstate_volume_mc,
)
from freeprob.fock import catalan_table, semicircular_family, vacuum_moment
from freeprob.freeness import MarginalSpec, check_freeness, free_clt_moments, free_mixed_moment
from freeprob.groupalg import (
    GroupAlgebraElement as E,
    GroupWord,
    canonical_trace,
    compress_param,
    conditional_expectation,
    free_product_param,
    l2_norm_squared,
    moment_state_from_group,
)
from freeprob.ncpoly import Word, state_from_sequence
from freeprob.randmat import GaussianEnsemble, empirical_word_moment
from freeprob.spectral import point_mass, semicircular, semicircular_state


def _bernoulli(degree):
    return state_from_sequence([Fraction(1, 2) ** j if j % 2 == 0 else 0 for j in range(degree + 1)])


def crit1():
    t0 = time.perf_counter()
    worst = max(err for k, _, _, err in catalan_table(12))
    took = time.perf_counter() - t0
    return worst <= 1e-12 and took < 10, f"max abs error {worst:.2e}, {took:.2f}s"


def crit2():
    t0 = time.perf_counter()
    sc = semicircular_state(8)
    marg = MarginalSpec.singletons([sc, sc])
    space, ops = semicircular_family(2, 8)
    worst, count = 0.0, 0
    for L in range(9):
        for w in itertools.product((0, 1), repeat=L):
            got = float(free_mixed_moment(marg, Word.of(*w)))
            worst = max(worst, abs(got - vacuum_moment(space, ops, w)))
            count += 1
    took = time.perf_counter() - t0
    return worst <= 1e-10 and took < 60, f"{count} words, max gap {worst:.2e}, {took:.2f}s"


def crit3():
    chi = chi_single(semicircular(0, 1))
    bound = chi_upper_bound(1, 0.25)
    closed = 0.5 + math.log(math.sqrt(2 * math.pi) / 2)
    ok = abs(chi - 0.725792) <= 1e-3 and abs(bound - closed) <= 1e-9 and abs(chi - bound) <= 1e-9
    return ok, f"chi {chi:.12f}, bound {bound:.12f}"


def crit4():
    b = _bernoulli(4)
    limit = Fraction(1, 8)
    errs = []
    ok = True
    for n in (1, 2, 4, 8, 16, 32):
        m4 = free_clt_moments(b, n, 4)[4]
        ok &= m4 == Fraction(1, 16 * n) + 2 * (1 - Fraction(1, n)) / 16
        errs.append(limit - m4)
    ok &= free_clt_moments(b, 2, 4)[4] == Fraction(3, 32)
    ok &= all(e2 * 2 == e1 for e1, e2 in zip(errs, errs[1:]))
    return ok, f"m4(S_2) = {free_clt_moments(b, 2, 4)[4]}, errors {[str(e) for e in errs]}"


def crit5():
    t0 = time.perf_counter()
    e = GaussianEnsemble(512, 2)
    mixed, _ = empirical_word_moment(e, "X1 X2 X1 X2", 20)
    m2, _ = empirical_word_moment(e, "X1 X1", 20)
    m4, _ = empirical_word_moment(e, "X1 X1 X1 X1", 20)
    took = time.perf_counter() - t0
    ok = abs(mixed) < 0.05 and 0.95 <= m2 <= 1.05 and 1.9 <= m4 <= 2.1 and took < 120
    return ok, f"X1X2X1X2 {mixed:.4f}, X1^2 {m2:.4f}, X1^4 {m4:.4f}, {took:.1f}s"


def _interval_length(moments, m, eps, R):
    cuts = {-R, R}
    for j in range(1, m + 1):
        for sign in (1, -1):
            for z in np.roots([1] + [0] * (j - 1) + [-(moments[j] + sign * eps)]):
                if abs(z.imag) < 1e-12 and -R < z.real < R:
                    cuts.add(float(z.real))
    cuts = sorted(cuts)
    return sum(b - a for a, b in zip(cuts, cuts[1:])
               if all(abs(moments[j] - (0.5 * (a + b)) ** j) < eps for j in range(1, m + 1)))


def crit6():
    sc = semicircular_state(2)
    parts, ok = [], True
    for eps in (0.2, 0.3):
        est = microstate_volume_mc(sc, MicrostateParams(2, 1, eps, 2.0), 10**6, region="cube")
        vol = 0.0 if est.hits == 0 else math.exp(est.log_volume)
        oracle = _interval_length([1, 0, 0.25], 2, eps, 2.0)
        ok &= abs(vol - oracle) <= 0.01 * oracle if oracle else vol == 0.0
        parts.append(f"eps={eps}: MC {vol:.5f} vs oracle {oracle:.5f}")
    return ok, "; ".join(parts)


def crit7():
    sc = semicircular_state(2)
    bound = chi_upper_bound(1, 0.25) + 0.2
    values = []
    for k in (2, 4, 6):
        est = microstate_volume_mc(sc, MicrostateParams(2, k, 0.3, 2.0), 200_000, cell=k)
        values.append(est.chi_value)
    rng = np.random.default_rng(7)
    mono = True
    for k in (2, 4, 6):
        A = rng.uniform(-1, 1, size=(20_000, 1, k, k))
        A = (A + np.swapaxes(A, 2, 3)) / 2
        masks = [membership_mask(A, sc, 2, e, 2.0) for e in (0.1, 0.2, 0.3, 0.5)]
        mono &= all(np.all(~a | b) for a, b in zip(masks, masks[1:]))
    ok = mono and all(v <= bound for v in values)
    return ok, (f"chi values {[round(v, 4) for v in values]} vs bound {bound:.4f}; "
                f"monotone in eps: {mono}")


def crit8():
    eps = [1e-1, 1e-2, 1e-3]
    d0 = delta_estimate(point_mass(0), eps).value
    d1 = delta_estimate(semicircular(0, 1), eps).value
    return d0 == 0 and abs(d1 - 1) <= 0.15, f"point mass {d0:.3g}, semicircular {d1:.5f}"


def _random_element(rng, gens=2, size=4, length=4):
    terms = {}
    for _ in range(rng.randint(1, size)):
        w = GroupWord((rng.randrange(gens), rng.choice((-2, -1, 1, 2))) for _ in range(rng.randint(0, length)))
        terms[w] = Fraction(rng.randint(-5, 5), rng.randint(1, 4))
    return E(terms)


def crit9():
    t0 = time.perf_counter()
    rng = random.Random(11)
    ok = True
    for _ in range(1000):
        a, b = _random_element(rng), _random_element(rng)
        ok &= canonical_trace(a * b) == canonical_trace(b * a)
        ok &= l2_norm_squared(a) == sum(abs(c) ** 2 for c in a.terms.values())
        x, y = _random_element(rng, gens=1), _random_element(rng, gens=1)
        ok &= conditional_expectation(x * a * y, [0]) == x * conditional_expectation(a, [0]) * y
    rep = check_freeness(moment_state_from_group([0, 1], 6), [[0], [1]], 6)
    ok &= rep.max_violation == 0
    took = time.perf_counter() - t0
    return ok and took < 30, f"1000 cases exact, F2 degree 6 over {rep.words_tested} words, {took:.1f}s"


def crit10():
    ok = compress_param(5, 2) == 2 and free_product_param(Fraction(3, 2), Fraction(7, 3)) == Fraction(23, 6)
    rng = random.Random(5)
    for _ in range(100):
        r = 1 + Fraction(rng.randint(1, 10**4), rng.randint(1, 100))
        n, m = rng.randint(1, 20), rng.randint(1, 20)
        ok &= compress_param(compress_param(r, n), m) == compress_param(r, n * m)
    return ok, "exact rational arithmetic"


CRITERIA = [
    ("1 Fock/Catalan exactness", crit1),
    ("2 freeness oracle equivalence", crit2),
    ("3 single-variable closed form", crit3),
    ("4 free CLT rate", crit4),
    ("5 asymptotic freeness n=512", crit5),
    ("6 k=1 microstate volume", crit6),
    ("7 MC chi below upper bound", crit7),
    ("8 delta endpoints", crit8),
    ("9 group algebra exactness", crit9),
    ("10 parameter arithmetic", crit10),
]


@pytest.mark.parametrize("name,check", CRITERIA, ids=[c[0].split()[0] for c in CRITERIA])
def test_criterion(name, check):
    ok, detail = check()
    print(f"{'PASS' if ok else 'FAIL'} criterion {name}: {detail}")
    assert ok, detail


if __name__ == "__main__":
    failed = 0
    for name, check in CRITERIA:
        ok, detail = check()
        failed += not ok
        print(f"{'PASS' if ok else 'FAIL'} criterion {name}: {detail}", flush=True)
    sys.exit(1 if failed else 0)
