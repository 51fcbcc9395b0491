import math

import numpy as np
import pytest

import nowcast


def test_ulsif_gaussian_shift():
    rng = np.random.default_rng(1)
    denom = rng.normal(size=(800, 1))
    numer = rng.normal(0.5, 1.0, size=(800, 1))
    model = nowcast.fit_ulsif(denom, numer, seed=3)
    assert len(model["alpha"]) == 100
    assert min(model["alpha"]) >= 0.0
    w = nowcast.predict_ratio(model["centers"], model["sigma"], model["alpha"], denom)
    truth = np.exp(0.5 * denom[:, 0] - 0.125)
    assert np.corrcoef(w, truth)[0, 1] > 0.8
    kde = nowcast.kde_ratio_baseline(denom, numer)
    assert kde.shape == (800,)


def test_small_helpers():
    assert nowcast.simple_extrapolation(30.0, 33.0, 30.0) == pytest.approx(33.0)
    assert nowcast.apply_beta([0.4, 0.8], 1.5) == pytest.approx(80.0)
    assert nowcast.compute_beta([36.0, 48.0], [30.0, 40.0]) == pytest.approx(1.2)
    assert nowcast.mae([1.0, 5.0], [3.0, 3.0]) == pytest.approx(2.0)
    assert nowcast.regression_to_score(math.log(1.1), 0.0, 0.3) == 0.5
    assert nowcast.weighted_mean_label(np.array([1.0, 0.0, 1.0]), np.array([1.0, 1.0, 2.0])) == 75.0
    r = nowcast.hln_test([1.0, 2.0, 3.0], [1.0, 2.0, 3.0])
    assert r["degenerate"]
    lam, z = nowcast.boxcox([0.5, 1.0, 2.0, 4.0, 8.0])
    assert len(z) == 5 and -3.0 <= lam <= 3.0
    with pytest.raises(nowcast.NowcastError):
        nowcast.apply_beta([], 1.0)


def test_sarima_and_learner():
    out = nowcast.sarima_forecast([100.0] * 12, 2)
    assert out["forecast"][1] == pytest.approx(100.0, abs=1e-3)
    rng = np.random.default_rng(2)
    x = rng.normal(size=(200, 2))
    y = (x[:, 0] > 0).astype(float)
    p = nowcast.fit_predict("gb_cls", x, y, np.ones(200), x)
    assert ((p > 0.5) == (y > 0.5)).mean() > 0.95


def test_end_to_end(tmp_path):
    truth = nowcast.synth(tmp_path / "data", periods=14, survey_rows=400, agency_rows=200, seed=5)
    assert len(truth["periods"]) == 14
    common = dict(data_dir=tmp_path / "data", tune="false", rf_trees=10, gb_rounds=10, ulsif_centers=40)
    est = nowcast.nowcast(common, target="2014H2", method="en_cls", dre="three", out=tmp_path / "n")
    assert 0.0 < est["estimate_pct"] <= 100.0
    assert (tmp_path / "n" / "estimate.json").exists()
    ev = nowcast.evaluate(common, window_start="2014H1", window_end="2014H2", methods=["weighting_only"],
                          dre_variants="three", out=tmp_path / "e")
    assert ev["lookahead_violations"] == 0
    assert ev["summary"][0]["method"] == "simple_extrapolation"
    assert len(ev["summary"]) == 1 + 2
