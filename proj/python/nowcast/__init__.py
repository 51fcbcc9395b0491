"""Nowcasting a wage-increase indicator from biased private-agency data.

Thin wrappers over the C++ core. Configuration dictionaries use the same
keys as the run configuration files (data_dir, target, method, dre, ...).
"""

import json

from ._core import (
    NowcastError,
    apply_beta,
    boxcox,
    compute_beta,
    fit_predict,
    fit_ulsif,
    hln_test,
    kde_ratio_baseline,
    mae,
    predict_ratio,
    regression_to_score,
    sarima_forecast,
    simple_extrapolation,
    weighted_mean_label,
)
from . import _core


def _settings(config=None, **kwargs):
    merged = dict(config or {})
    merged.update(kwargs)
    return {k: ",".join(map(str, v)) if isinstance(v, (list, tuple)) else str(v) for k, v in merged.items()}


def synth(out, **overrides):
    """Write a synthetic fixture under ``out`` and return its ground truth."""
    return json.loads(_core.synth(str(out), _settings(overrides)))


def nowcast(config=None, **kwargs):
    """Run one nowcast and return the estimate record."""
    return json.loads(_core.nowcast(_settings(config, **kwargs)))


def evaluate(config=None, write_outputs=True, **kwargs):
    """Evaluate every configured method over the validation window."""
    return _core.evaluate(_settings(config, **kwargs), write_outputs)


__all__ = [
    "NowcastError",
    "apply_beta",
    "boxcox",
    "compute_beta",
    "evaluate",
    "fit_predict",
    "fit_ulsif",
    "hln_test",
    "kde_ratio_baseline",
    "mae",
    "nowcast",
    "predict_ratio",
    "regression_to_score",
    "sarima_forecast",
    "simple_extrapolation",
    "synth",
    "weighted_mean_label",
]
