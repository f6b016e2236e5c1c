"""scikit-learn style wrappers.

``X`` is always a column of link distances in km, shape ``(n_samples, 1)``
(a 1-D array is accepted and reshaped).
"""
from __future__ import annotations

import math

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin, TransformerMixin
from sklearn.metrics import r2_score
from sklearn.utils.validation import check_array, check_is_fitted

from .channel import db_from_transmittance, total_transmittance
from .keyrate import Protocol
from .optimizer import SweepSpec, critical_distance, optimize_at_distance
from .presets import ScenarioPreset, get_preset


def _distances(X) -> np.ndarray:
    if np.ndim(X) == 1:
        X = np.asarray(X, dtype=float).reshape(-1, 1)
    X = check_array(X, dtype=float)
    if X.shape[1] != 1:
        raise ValueError(f"expected one distance column, got {X.shape[1]}")
    if np.any(X <= 0):
        raise ValueError("distances must be positive")
    return X[:, 0]


def _preset(scenario) -> ScenarioPreset:
    return scenario if isinstance(scenario, ScenarioPreset) else get_preset(scenario)


class LinkTransmittance(TransformerMixin, BaseEstimator):
    """Distance to end-to-end transmittance, or to loss in dB.

    Stateless; ``fit`` only validates parameters.
    """

    def __init__(self, scenario="downlink", output="transmittance"):
        self.scenario = scenario
        self.output = output

    def fit(self, X, y=None):
        _distances(X)
        if self.output not in ("transmittance", "loss_db"):
            raise ValueError(f"output must be 'transmittance' or 'loss_db', got {self.output!r}")
        self.preset_ = _preset(self.scenario)
        self.n_features_in_ = 1
        return self

    def transform(self, X):
        check_is_fitted(self, "preset_")
        d_km = _distances(X)
        delta = np.asarray(total_transmittance(self.preset_.scenario(), d_km * 1e3), dtype=float)
        if self.output == "loss_db":
            delta = np.asarray(db_from_transmittance(delta), dtype=float)
        return delta.reshape(-1, 1)


class IntensityOptimizer(RegressorMixin, BaseEstimator):
    """Optimal source intensities and key rate as a function of distance.

    ``fit`` optimises every training distance and records the signal
    intensity at the farthest secure one (``mu_``). ``predict`` returns
    rates in bits per pulse: re-optimised when ``pin_mu`` is false,
    otherwise with the signal intensity held at ``mu_``.

    ``y`` is ignored; it exists for pipeline compatibility.
    """

    def __init__(self, protocol="bb84", scenario="downlink", mu_step=0.001, mu_max=1.0,
                 pin_mu=False, tail_bound="signal"):
        self.protocol = protocol
        self.scenario = scenario
        self.mu_step = mu_step
        self.mu_max = mu_max
        self.pin_mu = pin_mu
        self.tail_bound = tail_bound

    def _spec(self) -> SweepSpec:
        return SweepSpec(protocol=Protocol(self.protocol), preset=_preset(self.scenario),
                         mu_step=self.mu_step, mu_max=self.mu_max, tail_bound=self.tail_bound)

    def fit(self, X, y=None):
        d_km = _distances(X)
        spec = self._spec()
        self.spec_ = spec
        self.optima_ = [optimize_at_distance(spec, d * 1e3) for d in d_km]
        secure = [(d, p) for d, p in zip(d_km, self.optima_) if p.best_rate > 0]
        self.mu_ = max(secure, key=lambda t: t[0])[1].best_mu if secure else None
        crit = critical_distance(spec)
        self.critical_distance_km_ = math.nan if crit.distance_km is None else crit.distance_km
        self.n_features_in_ = 1
        return self

    def predict(self, X):
        check_is_fitted(self, "spec_")
        d_km = _distances(X)
        if self.pin_mu and self.mu_ is None:
            return np.zeros(d_km.shape)
        fixed = self.mu_ if self.pin_mu else None
        return np.array([optimize_at_distance(self.spec_, d * 1e3, fixed).best_rate for d in d_km])

    def transform(self, X):
        """Columns: mu, nu1, nu2, rate. Missing intensities are NaN."""
        check_is_fitted(self, "spec_")
        d_km = _distances(X)
        fixed = self.mu_ if self.pin_mu else None
        rows = []
        for d in d_km:
            p = optimize_at_distance(self.spec_, d * 1e3, fixed)
            rows.append([np.nan if v is None else v
                         for v in (p.best_mu, p.best_nu1, p.best_nu2, p.best_rate)])
        return np.array(rows, dtype=float).reshape(-1, 4)

    def score(self, X, y, sample_weight=None):
        # R^2 on log10 rates is the meaningful fit measure across decades
        pred = np.log10(np.maximum(self.predict(X), 1e-300))
        return r2_score(np.log10(np.maximum(np.asarray(y, float), 1e-300)), pred,
                        sample_weight=sample_weight)
