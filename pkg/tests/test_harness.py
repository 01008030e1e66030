import numpy as np
import pytest
from scipy.special import ndtr

from homint import harness, skew
from homint.errors import ConfigError, DegenerateFit


def test_fit_rate_exact_power_law():
    eps = np.array([0.2, 0.1, 0.05, 0.025])
    slope, intercept, r2 = harness.fit_rate(eps, 3.0 * eps**1.5)
    assert slope == pytest.approx(1.5, abs=1e-12)
    assert np.exp(intercept) == pytest.approx(3.0, rel=1e-12)
    assert r2 == pytest.approx(1.0, abs=1e-12)


def test_fit_rate_errors():
    with pytest.raises(ConfigError):
        harness.fit_rate([0.1, 0.2], [1.0, 2.0])
    with pytest.raises(DegenerateFit):
        harness.fit_rate([0.1, 0.2, 0.4], [1.0, 0.0, 2.0])
    with pytest.raises(ConfigError):
        harness.fit_rate([-0.1, 0.2, 0.4], [1.0, 1.0, 2.0])


def test_ks_distance_known_value():
    # empirical CDF of {0} vs U(0,1)-like CDF: distance is 1 at x=0+
    assert harness.ks_distance([0.5], lambda x: np.clip(x, 0, 1)) == pytest.approx(0.5)
    rng = np.random.default_rng(0)
    z = rng.standard_normal(5000)
    assert harness.ks_distance(z, ndtr) < harness.ks_critical(5000, 0.01)


def test_ks_self_consistency_two_limit_samples():
    params = skew.SkewParams(p=0.75, c_plus=1.2, c_minus=0.8)
    r1 = np.random.Generator(np.random.Philox(np.random.SeedSequence(1)))
    r2 = np.random.Generator(np.random.Philox(np.random.SeedSequence(2)))
    a = skew.sample_limit_path(params, [1.0], np.zeros(10000), r1)[:, 0]
    b = np.sort(skew.sample_limit_path(params, [1.0], np.zeros(10000), r2)[:, 0])
    emp = lambda x: np.searchsorted(b, x, side="right") / len(b)
    # two-sample distance; critical value scaled for equal sample sizes
    assert harness.ks_distance(a, emp) < np.sqrt(2.0) * harness.ks_critical(10000, 0.01)


def test_config_hash_ignores_execution_details(asym_spec):
    a = harness.ExperimentConfig(spec=asym_spec, n_workers=1, out_dir="x")
    b = harness.ExperimentConfig(spec=asym_spec, n_workers=8, out_dir="y")
    c = harness.ExperimentConfig(spec=asym_spec, seed=999)
    assert a.config_hash() == b.config_hash()
    assert a.config_hash() != c.config_hash()


def test_config_validation(asym_spec):
    with pytest.raises(ConfigError):
        harness.ExperimentConfig(spec=asym_spec, sign_eps=(0.1, 0.2))
    with pytest.raises(ConfigError):
        harness.ExperimentConfig(spec=asym_spec, exit_eps=(2.0, 0.1))


def test_write_csv_format(tmp_path):
    path = tmp_path / "t.csv"
    harness.write_csv(path, ["a", "b"], [(0.1, 1), (0.2, 2)], "deadbeef", 42)
    lines = path.read_text().splitlines()
    assert lines[0] == "# config_hash=deadbeef seed=42"
    assert lines[1] == "a,b"
    assert lines[2].startswith("0.1000000000000000")
