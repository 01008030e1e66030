import numpy as np
import pytest
from scipy.special import ndtr

from homint import skew
from homint.errors import DomainError
from homint.harness import ks_critical, ks_distance


def make_rng(seed):
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))


def test_params_validation():
    with pytest.raises(DomainError):
        skew.SkewParams(p=0.0)
    with pytest.raises(DomainError):
        skew.SkewParams(p=1.2)
    with pytest.raises(DomainError):
        skew.SkewParams(p=0.5, c_plus=-1.0)


def test_g_map_roundtrip():
    params = skew.SkewParams(p=0.3, c_plus=2.0, c_minus=0.5)
    x = np.linspace(-3, 3, 41)
    assert np.allclose(skew.g_inverse(params, skew.g_map(params, x)), x, atol=1e-14)
    assert skew.g_map(params, 1.0) == 2.0 and skew.g_map(params, -1.0) == -0.5


def test_density_gate_several_p():
    for p in (0.5, 0.75, 0.11920292202211755):
        assert skew.density_gate(skew.SkewParams(p=p))


def test_density_reduces_to_gaussian_at_half():
    params = skew.SkewParams(p=0.5)
    y = np.linspace(-4, 4, 81)
    q = skew.skew_transition_density(params, 0.7, 0.3, y)
    gauss = np.exp(-((y - 0.3) ** 2) / 1.4) / np.sqrt(1.4 * np.pi)
    assert np.max(np.abs(q - gauss)) < 1e-14


def test_cdf_consistent_with_density():
    params = skew.SkewParams(p=0.75)
    from homint import quadrature
    for x in (-0.4, 0.0, 1.1):
        for y in (-1.0, 0.0, 0.6):
            # the density has a kink at z = 0: integrate piecewise
            f = lambda z: skew.skew_transition_density(params, 1.0, x, z)
            num = quadrature.integrate(f, -14.0, min(y, 0.0), rtol=1e-11, atol=1e-13)
            if y > 0:
                num += quadrature.integrate(f, 0.0, y, rtol=1e-11, atol=1e-13)
            assert abs(num - float(skew.skew_transition_cdf(params, 1.0, x, y))) < 1e-9


def test_positive_mass_from_origin():
    # P(B_p(t) > 0 | B_p(0) = 0) = p for every t
    for p in (0.25, 0.75):
        params = skew.SkewParams(p=p)
        for t in (0.2, 1.0, 5.0):
            assert float(skew.skew_transition_cdf(params, t, 0.0, 0.0)) == pytest.approx(
                1.0 - p, abs=1e-12)


def test_exact_sampler_matches_cdf():
    params = skew.SkewParams(p=0.75)
    rng = make_rng(1)
    y = skew.sample_skew_increment(params, 1.0, np.zeros(20000), rng)
    ks = ks_distance(y, lambda z: skew.skew_transition_cdf(params, 1.0, 0.0, z))
    assert ks < ks_critical(20000, 0.01)
    assert np.mean(y > 0) == pytest.approx(0.75, abs=0.01)


def test_sampler_from_offset_start():
    params = skew.SkewParams(p=0.3)
    rng = make_rng(2)
    x0 = np.full(20000, 1.5)
    y = skew.sample_skew_increment(params, 0.5, x0, rng)
    ks = ks_distance(y, lambda z: skew.skew_transition_cdf(params, 0.5, 1.5, z))
    assert ks < ks_critical(20000, 0.01)


def test_limit_path_brownian_at_half():
    params = skew.SkewParams(p=0.5)
    rng = make_rng(3)
    paths = skew.sample_limit_path(params, [0.5, 1.0], np.zeros(10000), rng)
    x1 = paths[:, 1]
    assert np.var(x1, ddof=1) == pytest.approx(1.0, abs=0.05)
    ks = ks_distance(x1, lambda z: ndtr(z))
    assert ks < ks_critical(10000, 0.01)
    # increments independent: covariance of disjoint increments ~ 0
    inc = x1 - paths[:, 0]
    cov = np.mean(paths[:, 0] * inc)
    assert abs(cov) < 0.03


def test_limit_path_scaling_self_similarity():
    params = skew.SkewParams(p=0.75, c_plus=1.3, c_minus=0.7)
    rng = make_rng(4)
    s = 0.25
    a = skew.sample_limit_path(params, [s], np.zeros(10000), rng)[:, 0] / np.sqrt(s)
    cdf = lambda z: skew.limit_marginal_cdf(params, 1.0, 0.0, z)
    assert ks_distance(a, cdf) < 0.02


def test_limit_marginal_matches_sampler():
    params = skew.SkewParams(p=0.11920292202211755, c_plus=0.4387, c_minus=1.0)
    rng = make_rng(5)
    paths = skew.sample_limit_path(params, [1.0], np.zeros(20000), rng)
    cdf = lambda z: skew.limit_marginal_cdf(params, 1.0, 0.0, z)
    assert ks_distance(paths[:, 0], cdf) < ks_critical(20000, 0.01)
    assert np.mean(paths[:, 0] > 0) == pytest.approx(params.p, abs=0.01)


def test_time_grid_validation():
    params = skew.SkewParams(p=0.5)
    with pytest.raises(DomainError):
        skew.sample_limit_path(params, [1.0, 0.5], 0.0, make_rng(0))
    with pytest.raises(DomainError):
        skew.skew_transition_density(params, -1.0, 0.0, 0.0)


def test_domain_condition_cases():
    params = skew.SkewParams(p=0.75, c_plus=1.3, c_minus=0.7)
    p, cp, cm = params.p, params.c_plus, params.c_minus
    zero2 = lambda x: np.zeros_like(x)

    # compatible tent: p C+ f'(0+) = (1-p) C- f'(0-)
    tent = lambda x: np.where(x >= 0, (1 - p) * cm * x, p * cp * x)
    res, se = skew.check_domain_condition(params, tent, zero2, 1.0, 256, 8000,
                                          0.0, make_rng(11))
    assert abs(res) <= 3.0 * se

    # |x| violates the matching condition at p = 0.75
    res, se = skew.check_domain_condition(params, np.abs, zero2, 1.0, 256, 8000,
                                          0.0, make_rng(11))
    assert abs(res) > 5.0 * se

    # smooth f with f'(0) = 0: condition degenerate, any p
    f = lambda x: x * x
    fs = lambda x: 2.0 * np.ones_like(x)
    res, se = skew.check_domain_condition(params, f, fs, 1.0, 256, 8000,
                                          0.0, make_rng(11))
    assert abs(res) <= 3.0 * se
