import math

import numpy as np
import pytest

from heteroselect.estimation import KAPPA, TruthSpec
from heteroselect.model_space import Model, projection_diagonal
from heteroselect.oracle_checks import (
    InverseMomentCase,
    lemma10_battery,
    lemma10_check,
    lemma11_battery,
    lemma11_check,
    prop1_sandwich_check,
    variance_mean_check,
)
from heteroselect.simlab import SeedPolicy, get_scenario


def test_inverse_moment_exact_chi_square_case():
    case = InverseMomentCase(a=np.zeros(4), b=np.ones(4))
    res = lemma11_check(case, reps=100_000, seeds=SeedPolicy(51))
    assert abs(res.mc_estimate - 0.5) <= 4 * res.std_error
    assert res.bound == pytest.approx(0.25 * (1 + KAPPA), abs=1e-12)
    assert res.bound == pytest.approx(0.6839, abs=1e-3)
    assert res.holds


def test_inverse_moment_homogeneity():
    c = 3.7
    base = lemma11_check(InverseMomentCase(a=np.zeros(6), b=np.ones(6)), 20_000, SeedPolicy(52))
    scaled = lemma11_check(InverseMomentCase(a=np.zeros(6), b=np.full(6, c)), 20_000, SeedPolicy(52))
    assert scaled.mc_estimate == pytest.approx(base.mc_estimate / c, rel=1e-12)
    assert scaled.bound == pytest.approx(base.bound / c, rel=1e-12)


def test_inverse_moment_mean_of_z():
    rng = np.random.default_rng(53)
    case = InverseMomentCase(a=rng.normal(size=8), b=np.exp(rng.normal(size=8)))
    reps = 50_000
    z = SeedPolicy(54).stream().standard_normal((reps, 8))
    Z = ((case.a + np.sqrt(case.b) * z) ** 2).sum(axis=1)
    expected = float(np.sum(case.a**2 + case.b))
    se = Z.std(ddof=1) / math.sqrt(reps)
    assert abs(Z.mean() - expected) <= 4 * se


def test_inverse_moment_battery_holds():
    results = lemma11_battery(50, reps=10_000, seeds=SeedPolicy(55))
    assert len(results) == 50
    assert all(r.holds for r in results)


def test_inverse_moment_adversarial_kappa_fails():
    case = InverseMomentCase(a=np.zeros(4), b=np.ones(4))
    res = lemma11_check(case, reps=100_000, seeds=SeedPolicy(56), kappa=0.05)
    assert not res.holds


def test_inverse_moment_case_validation():
    with pytest.raises(ValueError):
        InverseMomentCase(a=np.zeros(2), b=np.ones(2))
    with pytest.raises(ValueError):
        InverseMomentCase(a=np.zeros(4), b=np.array([1.0, 1.0, 0.0, 1.0]))
    with pytest.raises(ValueError):
        lemma11_check(InverseMomentCase(a=np.zeros(4), b=np.ones(4)), 100, SeedPolicy(0))


def test_compressed_spectrum_identity_projection():
    m = Model.create(2, 0, 2)  # fine blocks of size 1: projection is the identity
    res = lemma10_check(np.array([1.0, 2.0]), m)
    assert (res.tau_min, res.tau_max) == (1.0, 2.0)
    assert res.holds


def test_compressed_spectrum_single_block():
    m = Model.create(2, 0, 1)  # one fine block of 2
    res = lemma10_check(np.array([1.0, 2.0]), m)
    assert res.tau_min == res.tau_max == pytest.approx(1.5)
    assert res.holds


def test_compressed_spectrum_constant_sigma():
    m = Model.create(16, 1, 2)
    res = lemma10_check(np.full(16, 2.5), m)
    assert res.tau_min == res.tau_max == pytest.approx(2.5)
    assert res.holds


def test_compressed_spectrum_battery():
    results = lemma10_battery(100, n=64, seeds=SeedPolicy(57))
    assert len(results) == 100
    assert all(r.holds for r in results)


def test_compressed_spectrum_trace_identity():
    rng = np.random.default_rng(58)
    for _ in range(20):
        m = Model.create(64, int(rng.integers(0, 4)), 2 ** int(rng.integers(0, 3)))
        sigma = np.exp(rng.normal(size=64))
        tau = m.fine.block_means(sigma)
        direct = float(np.sum(projection_diagonal(m) * sigma))
        assert tau.sum() == pytest.approx(direct, rel=1e-12)


def test_variance_estimator_mean_identity():
    rng = np.random.default_rng(59)
    m = Model.create(16, 1, 2)
    truth = TruthSpec(s=rng.normal(size=16), sigma=np.exp(rng.normal(size=16) * 0.4))
    res = variance_mean_check(truth, m, reps=100_000, seeds=SeedPolicy(60))
    assert res.holds
    assert np.all(res.expected > 0)


def test_prop1_sandwich_small_case():
    entries = prop1_sandwich_check(get_scenario("M1"), n=256, reps=500, seeds=SeedPolicy(61))
    assert entries
    assert all(e.holds for e in entries)
    for e in entries:
        assert e.lower <= e.upper
