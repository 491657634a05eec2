import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gcmg.sources import (
    AR3_COEFFS,
    AR3_SWITCHED_COEFFS,
    ARProcess,
    InsufficientDataError,
    PriceFileError,
    RegimeSwitchSource,
    ReturnSeries,
    ar_generate,
    ar_is_stable,
    load_prices,
)


def roots_stable(coeffs):
    """Independent check: all roots of z^p - c1 z^(p-1) - ... - cp inside the unit circle."""
    poly = np.concatenate([[1.0], -np.asarray(coeffs, dtype=float)])
    return bool(np.all(np.abs(np.roots(poly)) < 1))


def yule_walker_rho1(c):
    """Lag-1 autocorrelation of a stationary AR(3) from the Yule-Walker equations.

    rho_k = c1 rho_{k-1} + c2 rho_{k-2} + c3 rho_{k-3}, rho_0 = 1, rho_{-k} = rho_k,
    for k = 1, 2, 3: three linear equations in rho_1..rho_3.
    """
    c1, c2, c3 = c
    A = np.array([
        [1 - c2, -c3, 0.0],
        [-(c1 + c3), 1.0, 0.0],
        [-c2, -c1, 1.0],
    ])
    b = np.array([c1, c2, c3])
    return np.linalg.solve(A, b)[0]


def test_white_noise_degenerate_ar():
    y = ar_generate(ARProcess((0.0, 0.0, 0.0), seed=1), 10_000)
    assert abs(y.var() - 1.0) < 0.05


def test_noiseless_recursion_decays():
    p = ARProcess(AR3_COEFFS, noise_sd=0.0, initial=(1.0, 0.5, -0.25))
    y = ar_generate(p, 200)
    # hand iteration of the recursion
    hist = [-0.25, 0.5, 1.0]  # oldest first
    expected = []
    for _ in range(20):
        v = 0.7 * hist[-1] - 0.5 * hist[-2] - 0.2 * hist[-3]
        expected.append(v)
        hist.append(v)
    np.testing.assert_allclose(y[:20], expected, rtol=1e-12)
    assert abs(y[-1]) < 1e-6


def test_generation_is_deterministic():
    p = ARProcess(seed=42)
    np.testing.assert_array_equal(ar_generate(p, 500), ar_generate(p, 500))
    assert not np.array_equal(ar_generate(p, 500), ar_generate(ARProcess(seed=43), 500))


def test_burn_in_drops_prefix():
    full = ar_generate(ARProcess(seed=3), 150)
    burned = ar_generate(ARProcess(seed=3, burn_in=100), 50)
    np.testing.assert_array_equal(full[100:], burned)


def test_lag1_autocorrelation_matches_yule_walker():
    y = ar_generate(ARProcess(AR3_COEFFS, seed=7), 50_000)
    y = y - y.mean()
    rho1 = (y[:-1] @ y[1:]) / (y @ y)
    assert abs(rho1 - yule_walker_rho1(AR3_COEFFS)) < 0.02


def test_conditional_mean_is_one_step_recursion():
    p = ARProcess(AR3_COEFFS, seed=0)
    y = p.samples(50)
    mean = p.conditional_mean(y)
    for n in range(3, 50):
        assert mean[n] == pytest.approx(0.7 * y[n - 1] - 0.5 * y[n - 2] - 0.2 * y[n - 3])
    assert mean[0] == 0.0


def test_stability_examples():
    assert ar_is_stable(AR3_COEFFS)
    assert not ar_is_stable([1.5])
    assert ar_is_stable([0.0, 0.0])
    assert ar_is_stable(AR3_SWITCHED_COEFFS) == roots_stable(AR3_SWITCHED_COEFFS)


@settings(max_examples=80, deadline=None)
@given(st.lists(st.floats(-1.5, 1.5), min_size=1, max_size=4))
def test_stability_agrees_with_root_finding(coeffs):
    radius = max(np.abs(np.roots(np.concatenate([[1.0], -np.asarray(coeffs)]))), default=0.0)
    if abs(radius - 1.0) < 1e-3:
        return  # too close to the boundary to call
    assert ar_is_stable(coeffs) == (radius < 1)


def test_regime_switch_prefix_matches_first_process():
    first = ARProcess(AR3_COEFFS, seed=5)
    src = RegimeSwitchSource(first, ARProcess(AR3_SWITCHED_COEFFS), 1500)
    y = src.samples(3000)
    np.testing.assert_array_equal(y[:1500], first.samples(1500))
    # continuity: the second regime continues the recursion from the first's tail
    rng = np.random.default_rng(5)
    noise = rng.standard_normal(3000)
    t = 1500
    expected = -0.3 * y[t - 1] - 0.2 * y[t - 2] + 0.6 * y[t - 3] + noise[t]
    assert y[t] == pytest.approx(expected)
    mean = src.conditional_mean(y)
    assert mean[t] == pytest.approx(expected - noise[t])
    assert mean[t - 1] == pytest.approx(0.7 * y[t - 2] - 0.5 * y[t - 3] - 0.2 * y[t - 4])


def _write(tmp_path, text, name="p.csv"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


def test_load_prices_returns_and_signs(tmp_path):
    path = _write(tmp_path, "date,price\n1,100\n2,101\n3,101\n4,99\n")
    series = load_prices(path)
    np.testing.assert_allclose(series.returns, [0.01, 0.0, -2 / 101])
    assert list(series.signs) == [1, 0, -1]
    assert series.instrument == "p"


def test_load_prices_monotone_and_delimiter(tmp_path):
    path = _write(tmp_path, "close;volume\n" + "".join(f"{10 + i};5\n" for i in range(8)))
    series = load_prices(path, column="close", delimiter=";")
    assert list(series.signs) == [1] * 7


def test_load_prices_blank_price_names_row(tmp_path):
    rows = [f"{i},{100 + i}" for i in range(10)]
    rows[6] = "6,"
    path = _write(tmp_path, "date,price\n" + "\n".join(rows) + "\n")
    with pytest.raises(PriceFileError, match=r":8: missing price"):
        load_prices(path)


@pytest.mark.parametrize("body, pattern", [
    ("1,100\n2,abc\n", ":3: cannot parse"),
    ("1,100\n2,-5\n", ":3: price must be positive"),
    ("1,100\n\n2,101\n", ":3: blank row"),
])
def test_load_prices_errors(tmp_path, body, pattern):
    path = _write(tmp_path, "date,price\n" + body)
    with pytest.raises(PriceFileError, match=pattern):
        load_prices(path)


def test_load_prices_missing_column_and_short_file(tmp_path):
    with pytest.raises(PriceFileError, match="no column"):
        load_prices(_write(tmp_path, "date,close\n1,2\n"))
    with pytest.raises(InsufficientDataError):
        load_prices(_write(tmp_path, "price\n1\n2\n3\n"), min_prices=5)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(1.0, 1000.0), min_size=3, max_size=30), st.floats(0.01, 100.0))
def test_signs_invariant_under_rescaling(prices, k):
    a = ReturnSeries.from_prices(prices)
    b = ReturnSeries.from_prices(np.asarray(prices) * k)
    # exact ties can drift by rounding, so only nonzero moves are compared
    moved = np.abs(np.diff(prices)) > 1e-9 * np.asarray(prices[:-1])
    np.testing.assert_array_equal(a.signs[moved], b.signs[moved])
