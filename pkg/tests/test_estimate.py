"""Tests for the phase estimators and the Monte-Carlo drivers."""

import numpy as np
import pytest

from qisac import estimate
from qisac.estimate import (
    CountTable,
    InsufficientDataError,
    expectations_from_counts,
    log_likelihood,
    mle_combined,
    monte_carlo_bias,
    sample_count_table,
    split_counts,
    theta_from_expectations,
    wrap_error,
)

TWO_PI = 2 * np.pi


def table_from(o1=None, o2=None, o1m=None, o2m=None, n_passes=1):
    z = np.zeros(4, dtype=np.int64)
    return CountTable(n_passes=n_passes,
                      o1_single=np.asarray(o1 if o1 is not None else z),
                      o2_single=np.asarray(o2 if o2 is not None else z),
                      o1_multi=np.asarray(o1m if o1m is not None else z),
                      o2_multi=np.asarray(o2m if o2m is not None else z))


def ideal_table(nu, theta, n_passes=1, rng=None, split=0.0):
    rng = rng or np.random.default_rng(0)
    return sample_count_table(nu, theta, n_passes, split, rng)


# ---------------------------------------------------------------------------
# Expectations
# ---------------------------------------------------------------------------

def test_expectations_all_detector4():
    tab = table_from(o1=[0, 0, 0, 50], o2=[0, 0, 25, 25])
    e1, e2 = expectations_from_counts(tab, "single")
    assert e1 == pytest.approx(-1.0)
    assert e2 == pytest.approx(0.0)


def test_expectations_balanced():
    tab = table_from(o1=[0, 0, 50, 50], o2=[30, 0, 0, 30])
    e1, e2 = expectations_from_counts(tab, "single")
    assert e1 == pytest.approx(0.0)
    assert e2 == pytest.approx(0.0)


def test_expectations_large_sample_value():
    rng = np.random.default_rng(42)
    tab = sample_count_table(10 ** 6, 0.8 * np.pi, 1, 0.0, rng)
    e1, _ = expectations_from_counts(tab, "multi")
    # -cos(0.8 pi) = 0.80902, Monte-Carlo error ~ 1e-3
    assert e1 == pytest.approx(0.8090, abs=5e-3)


def test_expectations_insufficient_data():
    with pytest.raises(InsufficientDataError):
        expectations_from_counts(table_from(o1=[1, 0, 0, 0]), "single")


# ---------------------------------------------------------------------------
# Branch resolution
# ---------------------------------------------------------------------------

def test_theta_from_expectations_axis_points():
    assert theta_from_expectations(-1.0, 0.0, 1).theta_est == pytest.approx(0.0, abs=1e-12)
    assert theta_from_expectations(0.0, -1.0, 1).theta_est == pytest.approx(np.pi / 2, abs=1e-12)


def test_theta_from_expectations_interior_point():
    res = theta_from_expectations(0.809, -0.588, 1)
    assert res.theta_est == pytest.approx(0.8 * np.pi, abs=2e-3)
    assert res.theta1 == pytest.approx(0.8 * np.pi, abs=2e-3)
    assert res.theta2 == pytest.approx(0.8 * np.pi, abs=2e-3)


@pytest.mark.parametrize("theta", np.linspace(0.05, TWO_PI - 0.05, 23))
def test_theta_from_expectations_roundtrip(theta):
    e1 = -np.cos(theta)
    e2 = -np.sin(theta)
    res = theta_from_expectations(e1, e2, 1)
    assert res.theta_est == pytest.approx(theta, abs=1e-10)


def test_theta_from_expectations_principal_window():
    n = 4
    theta = 0.3
    res = theta_from_expectations(-np.cos(n * theta), -np.sin(n * theta), n)
    assert 0.0 <= res.theta_est < TWO_PI / n
    assert res.theta_est == pytest.approx(theta, abs=1e-10)


def test_circular_mean_never_crosses_the_cut():
    # noisy expectations near theta = 0: both branch angles land in the same
    # quadrant, so the average must stay near 0 mod 2pi, never near pi
    for s_noise in (0.03, -0.03):
        res = theta_from_expectations(-0.9995, s_noise, 1)
        dist = abs(wrap_error(res.theta_est))
        assert dist < 0.1


# ---------------------------------------------------------------------------
# Likelihood
# ---------------------------------------------------------------------------

def test_log_likelihood_zero_counts_flat():
    tab = table_from()
    grid = np.linspace(0, TWO_PI, 32)
    np.testing.assert_allclose(log_likelihood(tab, grid), np.zeros(32), atol=0)


def loglik_derivative_oracle(tab, theta):
    """Analytic score, written independently of the implementation."""
    total = 0.0
    for n, o1, o2 in tab.groups():
        x = n * theta
        c, s = np.cos(x), np.sin(x)
        n1 = o1[0] + o1[3]
        n2 = o1[1] + o1[2]
        n3 = o2[0] + o2[2]
        n4 = o2[1] + o2[3]
        total += n * (-n1 * s / (1 + c) + n2 * s / (1 - c)
                      + n3 * c / (1 + s) - n4 * c / (1 - s))
    return total


def test_score_matches_finite_differences():
    rng = np.random.default_rng(7)
    for _ in range(10):
        tab = table_from(o1=rng.integers(0, 40, 4), o2=rng.integers(0, 40, 4),
                         o1m=rng.integers(0, 40, 4), o2m=rng.integers(0, 40, 4),
                         n_passes=3)
        theta = rng.uniform(0.3, 1.2)
        h = 1e-6
        fd = (log_likelihood(tab, theta + h) - log_likelihood(tab, theta - h)) / (2 * h)
        analytic = loglik_derivative_oracle(tab, theta)
        assert fd == pytest.approx(analytic, rel=1e-6, abs=1e-4)


def test_loglik_scale_invariant_argmax():
    rng = np.random.default_rng(3)
    tab = ideal_table(400, 2.2, rng=rng)
    doubled = table_from(o1m=2 * tab.o1_multi, o2m=2 * tab.o2_multi, n_passes=1)
    r1 = mle_combined(tab)
    r2 = mle_combined(doubled)
    assert r1.theta_est == pytest.approx(r2.theta_est, abs=1e-6)


# ---------------------------------------------------------------------------
# Maximum likelihood
# ---------------------------------------------------------------------------

def test_mle_single_pass_near_truth():
    theta = 0.8 * np.pi
    rng = np.random.default_rng(11)
    tab = ideal_table(500, theta, rng=rng)
    res = mle_combined(tab)
    assert abs(wrap_error(res.theta_est - theta)) < 3 / np.sqrt(500)
    assert not res.ambiguous
    assert res.grid_resolution == pytest.approx(TWO_PI / 100000)


def test_mle_refinement_reaches_smooth_maximum():
    # symmetric counts put the exact maximum between grid points
    tab = table_from(o1=[0, 0, 300, 700], o2=[0, 0, 800, 200])
    res = mle_combined(tab)
    oracle = estimate._golden_max(lambda t: log_likelihood(tab, t), 0.0, np.pi / 2)[0]
    assert res.theta_est == pytest.approx(oracle, abs=1e-7)
    assert res.loglik_at_max == pytest.approx(log_likelihood(tab, res.theta_est), abs=1e-9)


def test_mle_single_observable_is_ambiguous():
    # cosine-only data cannot tell theta from 2pi - theta
    theta = 0.8 * np.pi
    c = np.cos(theta)
    n = 400
    n1 = int(round(n * (1 + c) / 2))
    tab = table_from(o1=[n1, n - n1, 0, 0])
    res = mle_combined(tab)
    assert res.ambiguous
    assert res.n_maxima >= 2
    assert res.theta_est < np.pi  # reports the smaller of the two peaks


def test_mle_multi_only_has_periodic_maxima():
    theta = 0.4
    rng = np.random.default_rng(5)
    tab = sample_count_table(280, theta, 4, 0.0, rng)
    res = mle_combined(tab)
    assert res.ambiguous
    assert res.n_maxima >= 2


def test_mle_combined_resolves_ambiguity():
    theta = 0.8 * np.pi
    rng = np.random.default_rng(9)
    tab = sample_count_table(140, theta, 4, 0.5, rng)
    res = mle_combined(tab)
    assert not res.ambiguous
    assert abs(wrap_error(res.theta_est - theta)) < 3 / np.sqrt(140 * 16)


def test_mle_empty_table_raises():
    with pytest.raises(InsufficientDataError):
        mle_combined(table_from())


def test_mle_agrees_with_expectation_estimator():
    # single-pass large samples: the two estimators see the same information
    theta = 2.1
    rng = np.random.default_rng(21)
    tab = ideal_table(20000, theta, rng=rng)
    e1, e2 = expectations_from_counts(tab, "multi")
    exp_est = theta_from_expectations(e1, e2, 1).theta_est
    mle_est = mle_combined(tab).theta_est
    combined_se = 2.0 / np.sqrt(20000)
    assert abs(wrap_error(mle_est - exp_est)) < 3 * combined_se


# ---------------------------------------------------------------------------
# Samplers and Monte-Carlo drivers
# ---------------------------------------------------------------------------

def test_split_counts():
    assert split_counts(140, 0.5) == (70, 70)
    assert split_counts(801, 0.1) == (80, 721)
    with pytest.raises(ValueError):
        split_counts(100, 1.5)


def test_sample_count_table_totals():
    rng = np.random.default_rng(1)
    tab = sample_count_table(1000, 1.1, 4, 0.1, rng)
    assert tab.o1_single.sum() + tab.o2_single.sum() == 100
    assert tab.o1_multi.sum() + tab.o2_multi.sum() == 900
    assert tab.total() == 1000


def test_sample_count_table_matches_expected_distribution():
    rng = np.random.default_rng(8)
    theta, nu = 1.9, 200000
    tab = sample_count_table(nu, theta, 1, 0.0, rng)
    freq = tab.o1_multi / tab.o1_multi.sum()
    c = np.cos(theta)
    expected = np.array([1 + c, 1 - c, 1 - c, 1 + c]) / 4
    np.testing.assert_allclose(freq, expected, atol=5e-3)


def test_wrap_error():
    assert wrap_error(0.1) == pytest.approx(0.1)
    assert wrap_error(TWO_PI - 0.1) == pytest.approx(-0.1)
    assert wrap_error(np.pi) == pytest.approx(np.pi)


@pytest.mark.parametrize("n_passes", [1, 2, 4])
def test_variance_saturates_error_propagation_floor(n_passes):
    # Monte-Carlo variance of the expectation estimator tracks 1/(nu N^2)
    nu, repeats, theta = 2500, 800, 0.35
    rng = np.random.default_rng(40 + n_passes)
    o1, o2 = estimate._sample_group(nu, theta, n_passes, 0.5, 0.0, rng, repeats)
    e1 = (-o1[:, 0] + o1[:, 1] + o1[:, 2] - o1[:, 3]) / o1.sum(axis=1)
    e2 = (-o2[:, 0] + o2[:, 1] - o2[:, 2] + o2[:, 3]) / o2.sum(axis=1)
    _, _, est = estimate._invert_expectations(e1, e2)
    var = np.var(est / n_passes, ddof=1)
    floor = 1.0 / (nu * n_passes ** 2)
    assert abs(var - floor) < 0.15 * floor


def test_monte_carlo_bias_interior_is_small():
    grid = np.array([0.8 * np.pi, 1.3 * np.pi])
    table = monte_carlo_bias(1000, grid, repeats=400, seed=4)
    for b in table.mean_bias:
        assert abs(b) < 1.0 / np.sqrt(1000)
    assert table.std.min() > 0


def test_monte_carlo_bias_consistency_at_large_samples():
    grid = np.array([0.6 * np.pi])
    table = monte_carlo_bias(200000, grid, repeats=50, seed=6)
    assert abs(table.mean_bias[0]) < 2e-3


def test_monte_carlo_bias_mle_estimator():
    grid = np.array([0.8 * np.pi])
    table = monte_carlo_bias(140, grid, repeats=30, n_passes=4,
                             single_pass_fraction=0.5, estimator="mle", seed=2)
    assert abs(table.mean_bias[0]) < 0.05


def test_monte_carlo_bias_rejects_bad_combination():
    with pytest.raises(ValueError):
        monte_carlo_bias(100, [0.1], 10, single_pass_fraction=0.2, estimator="expectation")


def test_optimal_n_scan_shapes():
    grid = np.linspace(0.3, 5.9, 4)
    scan = estimate.optimal_n_scan([200], [2, 50], grid, repeats=8, seed=3, refine=False)
    assert scan.heatmaps[200].shape == (2, 4)
    assert scan.scatter[200].shape == (2,)
    assert 200 in scan.single_pass_reference
    assert set(scan.best_n[200]) <= {2, 50}


def test_bias_table_rows():
    table = monte_carlo_bias(100, [0.5], repeats=20, seed=1)
    rows = list(table.rows())
    assert rows[0]["n"] == 100
    assert "stderr" in rows[0]
