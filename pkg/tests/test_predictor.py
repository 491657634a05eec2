import numpy as np
import pytest

from gcmg.game import GameConfig
from gcmg.predictor import (
    TruncatedRunError,
    psi_max_oracle,
    psi_running,
    psi_windowed,
    run_prediction,
)
from gcmg.sources import (
    ARProcess,
    IIDNoise,
    PeriodicSource,
    ReturnSeries,
    UnsupportedSourceError,
)


def test_psi_running_examples():
    assert psi_running([1, 1, 0, 1]) == 0.75
    assert psi_running([1] * 100) == 1.0
    assert psi_running([0, 1] * 500) == 0.5
    with pytest.raises(ValueError):
        psi_running([])


def test_psi_windowed_examples():
    hits = np.array([1, 0, 0, 1, 1])
    np.testing.assert_array_equal(psi_windowed(hits, 1), hits.astype(float))
    np.testing.assert_array_equal(psi_windowed(np.ones(20), 7), np.ones(20))
    step = np.r_[np.ones(500), np.zeros(500)]
    out = psi_windowed(step, 100)
    # direct trailing means
    direct = [step[max(0, k - 99): k + 1].mean() for k in range(1000)]
    np.testing.assert_allclose(out, direct)
    assert out[599] == 0.0 and out[598] > 0.0
    with pytest.raises(ValueError):
        psi_windowed(hits, 0)


def test_running_equals_full_window():
    hits = np.random.default_rng(0).integers(0, 2, 300)
    for t in (1, 17, 150, 300):
        assert psi_windowed(hits, t)[t - 1] == pytest.approx(psi_running(hits[:t]))


def test_iid_source_is_chance_level():
    cfg = GameConfig(N=1, m=3, space="rss", lam=0.97, seed=0)
    result = run_prediction(cfg, IIDNoise(seed=1), 10_000)
    assert abs(result.psi_final - 0.5) < 0.02


def test_periodic_source_is_learned():
    cfg = GameConfig(N=1, m=1, space="rss", lam=1.0, seed=0)
    result = run_prediction(cfg, PeriodicSource((1.0, -1.0)), 1000)
    assert result.psi_final >= 0.99


def test_record_invariants():
    cfg = GameConfig(N=1, m=3, space="rss", lam=0.97, seed=3)
    result = run_prediction(cfg, ARProcess(seed=3), 400, record_utilities=True)
    assert result.psi_final == result.records[-1].psi_running
    counts = result.psi * np.arange(1, 401)
    np.testing.assert_allclose(counts, np.round(counts), atol=1e-9)
    assert np.all((result.psi >= 0) & (result.psi <= 1))
    assert result.utilities.shape == (400, 16)
    rec = result.records[10]
    assert rec.t == 11 and rec.psi_running == psi_running(result.hits[:11])


def test_run_is_deterministic():
    cfg = GameConfig(N=7, S=3, m=2, lam=0.95, grand_canonical=True, seed=9)
    a = run_prediction(cfg, ARProcess(seed=2), 500)
    b = run_prediction(cfg, ARProcess(seed=2), 500)
    assert a.predicted.tobytes() == b.predicted.tobytes()
    assert a.psi.tobytes() == b.psi.tobytes()


def test_history_seeded_from_source_signs():
    # a period-3 pattern is fully determined by the last two signs, so the
    # matching table in the full space takes over
    cfg = GameConfig(N=1, m=2, space="fss", lam=1.0, seed=0)
    result = run_prediction(cfg, PeriodicSource((1.0, 1.0, -1.0)), 300)
    assert result.hits[30:].all()


def test_zero_returns_are_skipped():
    returns = np.array([0.1, -0.1, 0.0, 0.2, 0.0, 0.0, -0.3] * 30)
    series = ReturnSeries(returns, np.sign(returns).astype(np.int8))
    cfg = GameConfig(N=1, m=2, space="rss", lam=0.97, seed=1)
    result = run_prediction(cfg, series, len(returns) - 2)
    skipped = result.realized == 0
    assert skipped.sum() == 3 * 30  # the two seed signs are nonzero
    assert not result.hits[skipped].any()
    assert result.n_scored == len(returns) - 2 - skipped.sum()
    assert result.psi_final == pytest.approx(result.hits[~skipped].mean())


def test_warmup_excludes_first_steps():
    cfg = GameConfig(N=1, m=3, space="rss", lam=0.97, seed=3)
    result = run_prediction(cfg, ARProcess(seed=3), 600, warmup=100)
    assert np.isnan(result.psi[:100]).all()
    assert result.psi_final == pytest.approx(result.hits[100:].mean())


def test_truncation_reports_progress():
    series = ReturnSeries(np.ones(50), np.ones(50, dtype=np.int8))
    with pytest.raises(TruncatedRunError) as info:
        run_prediction(GameConfig(N=1, m=3, space="rss"), series, 100)
    assert info.value.completed == 47


def test_oracle_near_deterministic_ar1():
    p = ARProcess((0.999,), noise_sd=1e-6, initial=(1.0,), seed=0)
    assert psi_max_oracle(p, p.samples(3000), 0) == 1.0


def test_oracle_pure_noise_is_chance():
    p = ARProcess((0.0, 0.0, 0.0), seed=4)
    assert abs(psi_max_oracle(p, p.samples(10_000), 1) - 0.5) < 0.02


def test_oracle_needs_known_coefficients():
    with pytest.raises(UnsupportedSourceError):
        psi_max_oracle(PeriodicSource(), np.ones(10))


def test_predictor_does_not_beat_oracle():
    mg, orc = [], []
    for seed in range(6):
        src = ARProcess(seed=seed)
        cfg = GameConfig(N=1, m=3, space="rss", lam=0.97, seed=seed)
        mg.append(run_prediction(cfg, src, 2000).psi_final)
        orc.append(psi_max_oracle(src, src.samples(2003)[3:], seed))
    se = np.std(np.array(mg) - np.array(orc), ddof=1) / np.sqrt(len(mg))
    assert np.mean(mg) <= np.mean(orc) + 2 * se


@pytest.mark.slow
@pytest.mark.xfail(strict=True, reason=(
    "a predictor that only sees the last 3 signs tops out near 0.732 on this AR(3) "
    "(best per-pattern table on 10^6 samples) while the oracle sits at 0.78; "
    "lambda=0.97 RSS reaches about 0.69"))
def test_rss_lambda097_close_to_ceiling():
    mg = [run_prediction(GameConfig(N=1, m=3, space="rss", lam=0.97, seed=s), ARProcess(seed=s), 3000).psi_final
          for s in range(10)]
    assert abs(np.mean(mg) - 0.77) < 0.05
