import math

import numpy as np
import pytest

from freeprob.entropy import (
    DeltaConfig,
    MicrostateParams,
    chi_free_sum,
    chi_mc,
    chi_single,
    chi_upper_bound,
    delta_estimate,
    membership_mask,
    microstate_membership,
    microstate_volume_mc,
    perturbed_joint_state,
)
from freeprob.freeness import MarginalSpec, build_free_state
from freeprob.ncpoly import Word
from freeprob.spectral import dilate, point_mass, semicircular, semicircular_state

CHI_SC = 0.5 + math.log(math.sqrt(2 * math.pi) / 2)


def interval_length_oracle(moments, m, eps, R):
    """Length of {t in [-R, R] : |m_j - t^j| < eps, j <= m} by root isolation."""
    cuts = {-R, R}
    for j in range(1, m + 1):
        for sign in (1, -1):
            coeffs = [1] + [0] * (j - 1) + [-(moments[j] + sign * eps)]
            for z in np.roots(coeffs):
                if abs(z.imag) < 1e-12 and -R < z.real < R:
                    cuts.add(float(z.real))
    cuts = sorted(cuts)
    total = 0.0
    for a, b in zip(cuts, cuts[1:]):
        t = 0.5 * (a + b)
        if all(abs(moments[j] - t**j) < eps for j in range(1, m + 1)):
            total += b - a
    return total


def test_membership_examples(sc8):
    assert microstate_membership([[[0.0]]], sc8, 2, 0.3, 2)
    assert not microstate_membership([[[0.0]]], sc8, 2, 0.2, 2)
    assert not microstate_membership([[[2.5]]], sc8, 1, 10, 2)
    with pytest.raises(ValueError):
        microstate_membership([[[0, 1], [0, 0]]], sc8, 2, 0.3, 2)


def test_membership_missing_moment(sc8):
    with pytest.raises(KeyError):
        microstate_membership([[[0.0]], [[0.0]]], sc8, 2, 0.3, 2)


def test_membership_against_direct_trace(free_pair_state):
    rng = np.random.default_rng(0)
    A = rng.normal(size=(200, 2, 3, 3)) * 0.4
    A = (A + np.swapaxes(A, 2, 3)) / 2
    got = membership_mask(A, free_pair_state, 3, 0.25, 2.0)
    for i in range(200):
        ok = all(np.abs(np.linalg.eigvalsh(A[i, j])).max() <= 2.0 for j in range(2))
        for L in range(1, 4):
            for w in np.ndindex(*(2,) * L):
                P = np.eye(3)
                for g in w:
                    P = P @ A[i, g]
                ok &= abs(np.trace(P) / 3 - float(free_pair_state.value(Word.of(*w)))) < 0.25
        assert got[i] == ok


def test_oracle_sanity():
    moments = [1, 0, 0.25]
    assert interval_length_oracle(moments, 2, 0.3, 2) == pytest.approx(0.6)
    assert interval_length_oracle(moments, 2, 0.2, 2) == 0.0


@pytest.mark.parametrize("region", ["cube", "ball", "auto"])
def test_k1_volume_matches_oracle(sc8, region):
    p = MicrostateParams(2, 1, 0.3, 2.0)
    est = microstate_volume_mc(sc8, p, 200_000, seed=1, region=region)
    assert math.exp(est.log_volume) == pytest.approx(interval_length_oracle([1, 0, 0.25], 2, 0.3, 2), rel=0.02)


def test_k1_empty_set_is_censored(sc8):
    est = microstate_volume_mc(sc8, MicrostateParams(2, 1, 0.2, 2.0), 50_000, region="cube")
    assert est.hits == 0 and est.censored
    assert est.log_volume == pytest.approx(math.log(4.0) - math.log(50_000))


def test_always_hit_normalization(sc8):
    # for k > 1 the norm gate cuts the cube, so every sample hits only at k = 1
    est = microstate_volume_mc(sc8, MicrostateParams(1, 1, 10.0, 0.5), 5000, region="cube")
    assert est.hits == est.samples
    assert est.log_volume == math.log(1.0)
    assert est.chi_value == est.log_volume


@pytest.mark.parametrize("k", [2, 3])
def test_chi_value_normalization(sc8, k):
    est = microstate_volume_mc(sc8, MicrostateParams(1, k, 10.0, 0.5), 5000, region="cube")
    d = k * (k + 1) // 2
    log_cube = d * math.log(2 * 0.5) + (k * (k - 1) // 2) * 0.5 * math.log(2)
    assert est.log_volume == pytest.approx(math.log(est.hits / est.samples) + log_cube, abs=1e-12)
    assert est.chi_value == pytest.approx(est.log_volume / k**2 + 0.5 * math.log(k), abs=1e-12)


def test_ci_and_hits(sc8):
    est = microstate_volume_mc(sc8, MicrostateParams(2, 2, 0.3, 2.0), 20_000)
    assert 0 < est.hits <= est.samples
    assert est.ci_halfwidth > 0


def test_determinism_and_threads(sc8):
    p = MicrostateParams(2, 2, 0.3, 2.0)
    a = microstate_volume_mc(sc8, p, 70_000, seed=5)
    b = microstate_volume_mc(sc8, p, 70_000, seed=5, workers=4)
    assert a.hits == b.hits and a.log_volume == b.log_volume


def test_monotonicity_samplewise(free_pair_state):
    rng = np.random.default_rng(2)
    A = rng.uniform(-1.2, 1.2, size=(20_000, 2, 2, 2))
    A = (A + np.swapaxes(A, 2, 3)) / 2
    s = free_pair_state
    base = membership_mask(A, s, 2, 0.3, 1.5)
    assert np.all(~base | membership_mask(A, s, 2, 0.5, 1.5))   # eps up
    assert np.all(~base | membership_mask(A, s, 1, 0.3, 1.5))   # m down
    assert np.all(~base | membership_mask(A, s, 2, 0.3, 2.5))   # R up
    assert base.any()


def test_volume_monotone_in_eps(sc8):
    lo = microstate_volume_mc(sc8, MicrostateParams(2, 2, 0.2, 2.0), 100_000, region="cube")
    hi = microstate_volume_mc(sc8, MicrostateParams(2, 2, 0.4, 2.0), 100_000, region="cube")
    assert lo.log_volume <= hi.log_volume + 2 * hi.ci_halfwidth


def test_chi_mc_single_cell(sc8):
    p = MicrostateParams(2, 2, 0.3, 2.0)
    res = chi_mc(sc8, [p], 20_000, seed=4)
    assert res.value == microstate_volume_mc(sc8, p, 20_000, seed=4, cell=0).chi_value


def test_chi_mc_inf_of_max(sc8):
    sched = [MicrostateParams(2, k, e, 2.0) for e in (0.3, 0.5) for k in (1, 2)]
    res = chi_mc(sc8, sched, 20_000)
    per = {}
    for c in res.cells:
        key = (c.params.m, c.params.eps)
        per[key] = max(per.get(key, -math.inf), c.chi_value)
    assert res.value == min(per.values())
    with pytest.raises(ValueError):
        chi_mc(sc8, [], 10)


def test_chi_single_values():
    assert chi_single(semicircular(0, 1)) == pytest.approx(CHI_SC, abs=1e-9)
    assert chi_single(point_mass(0)) == -math.inf
    mu = semicircular(0.3, 0.7)
    assert chi_single(dilate(mu, 2)) - chi_single(mu) == pytest.approx(math.log(2), abs=1e-4)


def test_upper_bound():
    assert chi_upper_bound(1, 0.25) == pytest.approx(CHI_SC, abs=1e-12)
    assert chi_upper_bound(1, 0.25) == pytest.approx(chi_single(semicircular(0, 1)), abs=1e-9)
    assert chi_upper_bound(2, 0.5) == pytest.approx(2 * CHI_SC, abs=1e-12)
    assert chi_upper_bound(3, 2.0) - chi_upper_bound(3, 1.0) == pytest.approx(1.5 * math.log(2))
    with pytest.raises(ValueError):
        chi_upper_bound(1, 0)


def test_free_sum():
    sc = semicircular(0, 1)
    assert chi_free_sum([sc, sc, sc]) == pytest.approx(3 * CHI_SC, abs=1e-8)
    assert chi_free_sum([sc, point_mass(1)]) == -math.inf
    assert chi_free_sum([sc]) == chi_single(sc)


def test_delta_endpoints():
    eps = [1e-1, 1e-2, 1e-3]
    d0 = delta_estimate(point_mass(0), eps)
    assert d0.value == 0
    d1 = delta_estimate(semicircular(0, 1), eps)
    assert abs(d1.value - 1) <= 0.15
    assert d0.path == d1.path == "closed-form"


def test_delta_schedule_validation():
    with pytest.raises(ValueError):
        delta_estimate(point_mass(0), [0.01, 0.1])
    with pytest.raises(ValueError):
        delta_estimate(point_mass(0), [1.5, 0.1])


def test_delta_mc_in_range(sc8):
    cfg = DeltaConfig(samples=4000, inner=8)
    d = delta_estimate(sc8, [0.3, 0.1], cfg)
    assert d.path == "microstates"
    assert 0 <= d.value <= 1
    assert d.clamped == (d.raw != d.value)


def test_perturbed_joint_state(sc8):
    eps = 0.5
    j = perturbed_joint_state(sc8, eps, 4)
    # X + eps S is semicircular of variance (1 + eps^2)/4
    assert float(j.value(Word.of(0, 0))) == pytest.approx((1 + eps**2) / 4)
    assert float(j.value(Word.of(0, 0, 0, 0))) == pytest.approx(2 * ((1 + eps**2) / 4) ** 2)
    assert float(j.value(Word.of(0, 1))) == pytest.approx(eps / 4)
    assert float(j.value(Word.of(1, 1))) == pytest.approx(0.25)


@pytest.mark.slow
def test_additivity_upper_consistency():
    """Joint MC estimate for two free semicirculars against twice the single
    value plus 0.3.  Known to fail for k >= 5 with real symmetric microstates;
    see the decisions ledger."""
    sc = semicircular_state(4)
    pair = build_free_state(MarginalSpec.singletons([sc, sc]), 4)
    bound = chi_free_sum([semicircular(0, 1)] * 2) + 0.3
    worst = max(
        microstate_volume_mc(pair, MicrostateParams(2, k, 0.3, 2.0, n=2), 200_000, cell=k).chi_value
        for k in range(2, 7)
    )
    assert worst <= bound, f"MC chi {worst:.4f} exceeds {bound:.4f}"
