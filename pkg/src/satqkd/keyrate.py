"""Gains, error rates and asymptotic secret-key rates.

Four protocol variants are covered: BB84 and SARG04 against photon-number
splitting / IRUD attacks, and their decoy-state versions (vacuum plus one
weak decoy for BB84, vacuum plus two weak decoys for SARG04).

Dark counts are the only source of bit errors. Every infinite photon-number
sum is replaced by its closed form.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace
from typing import NamedTuple, Sequence

import numpy as np

from . import adversary
from .channel import LinkScenario, total_transmittance
from .source import SourceConfig, check_two_decoy_constraint

DEFAULT_DARK_COUNT = 50e-6
DEFAULT_EC_INEFFICIENCY = 1.22


class Protocol(str, enum.Enum):
    BB84 = "bb84"
    SARG04 = "sarg04"
    BB84_DECOY = "bb84-decoy"
    SARG04_DECOY = "sarg04-decoy"

    @property
    def sifting(self) -> float:
        return 0.5 if self in (Protocol.BB84, Protocol.BB84_DECOY) else 0.25

    @property
    def uses_decoys(self) -> bool:
        return self in (Protocol.BB84_DECOY, Protocol.SARG04_DECOY)

    @property
    def label(self) -> str:
        return {
            Protocol.BB84: "BB84",
            Protocol.SARG04: "SARG04",
            Protocol.BB84_DECOY: "BB84 vacuum+weak decoy",
            Protocol.SARG04_DECOY: "SARG04 vacuum+two weak decoys",
        }[self]


@dataclass(frozen=True)
class ProtocolVariant:
    kind: Protocol
    f_ec: float = DEFAULT_EC_INEFFICIENCY

    def __post_init__(self):
        object.__setattr__(self, "kind", Protocol(self.kind))
        if self.f_ec < 1:
            raise ValueError("error-correction inefficiency must be >= 1")

    @property
    def q(self) -> float:
        return self.kind.sifting


class YieldModel(str, enum.Enum):
    ADDITIVE = "additive"
    MULTIPLICATIVE = "multiplicative"


@dataclass(frozen=True)
class DetectionModel:
    """Threshold detector behind a lossy channel.

    ``yield_model`` selects ``Y_n = Y0 + 1 - (1 - delta)^n`` (additive, the
    default) or ``Y_n = 1 - (1 - Y0)(1 - delta)^n``.
    """

    channel_transmittance: float
    y0: float = DEFAULT_DARK_COUNT
    e0: float = 0.5
    yield_model: YieldModel = YieldModel.ADDITIVE

    def __post_init__(self):
        object.__setattr__(self, "yield_model", YieldModel(self.yield_model))
        if not (0 <= self.channel_transmittance <= 1):
            raise ValueError("channel transmittance must lie in [0, 1]")
        if not (0 <= self.y0 < 1):
            raise ValueError("dark count probability must lie in [0, 1)")
        if not (0 <= self.e0 <= 1):
            raise ValueError("e0 must lie in [0, 1]")


@dataclass(frozen=True)
class DecoyEstimates:
    y0_est: float
    y1_lower: float
    q1_lower: float
    e1_upper: float
    y2_lower: float = 0.0
    q2_lower: float = 0.0
    e2_upper: float = 0.5
    degenerate: bool = False


@dataclass(frozen=True)
class KeyRateReport:
    protocol: Protocol
    transmittance: float
    gain_q_mu: float
    qber_e_mu: float
    rate_bits_per_pulse: float
    raw_rate: float
    mu: float
    distance_m: float | None = None
    omega: float | None = None
    eve_info: float | None = None
    bounds: DecoyEstimates | None = None
    nu1: float | None = None
    nu2: float | None = None

    @property
    def secure(self) -> bool:
        return self.raw_rate > 0


class DecoyObservable(NamedTuple):
    intensity: float
    gain: float
    qber: float


def binary_entropy(x):
    """Shannon binary entropy in bits, with H(0) = H(1) = 0."""
    arr = np.asarray(x, dtype=float)
    if np.any((arr < 0) | (arr > 1)):
        raise ValueError("binary entropy argument must lie in [0, 1]")
    out = _h2(arr)
    return float(out) if out.ndim == 0 else out


def _h2(x):
    x = np.asarray(x, dtype=float)
    inner = (x > 0) & (x < 1)
    xs = np.where(inner, x, 0.5)
    return np.where(inner, -xs * np.log2(xs) - (1 - xs) * np.log2(1 - xs), 0.0)


def _privacy_term(error):
    # 1 - H2(e), vanishing once the error reaches 1/2
    e = np.clip(np.asarray(error, dtype=float), 0.0, 0.5)
    return 1.0 - _h2(e)


def yield_n(n: int, det: DetectionModel) -> float:
    if n < 0:
        raise ValueError("photon count must be non-negative")
    if n == 0:
        return det.y0
    # 1 - (1 - delta)^n without cancellation
    click = -math.expm1(n * math.log1p(-det.channel_transmittance)) \
        if det.channel_transmittance < 1 else 1.0
    if det.yield_model is YieldModel.ADDITIVE:
        return min(det.y0 + click, 1.0)
    return click + det.y0 * (1.0 - click)


def error_n(n: int, det: DetectionModel) -> float:
    """Bit error rate of n-photon detections: dark counts only."""
    y = yield_n(n, det)
    return det.e0 * det.y0 / y if y > 0 else det.e0


def gain(mu, delta, y0=DEFAULT_DARK_COUNT, yield_model=YieldModel.ADDITIVE):
    """Closed form of sum_n Y_n P_n(mu); vectorised."""
    mu = np.asarray(mu, dtype=float)
    click = -np.expm1(-mu * np.asarray(delta, dtype=float))
    if YieldModel(yield_model) is YieldModel.ADDITIVE:
        return y0 + click
    return click + y0 * (1.0 - click)


def qber(q_mu, y0=DEFAULT_DARK_COUNT, e0=0.5):
    with np.errstate(divide="ignore", invalid="ignore"):
        return e0 * y0 / np.asarray(q_mu, dtype=float)


def gain_and_qber(mu: float, det: DetectionModel) -> tuple[float, float]:
    if mu < 0:
        raise ValueError("mu must be non-negative")
    q_mu = float(gain(mu, det.channel_transmittance, det.y0, det.yield_model))
    if q_mu <= 0:
        raise ValueError("zero gain: the error rate is undefined")
    return q_mu, float(qber(q_mu, det.y0, det.e0))


def error_correction_cost(q_mu, e_mu, f_ec=DEFAULT_EC_INEFFICIENCY):
    return q_mu * f_ec * _h2(np.clip(e_mu, 0.0, 1.0))


def nondecoy_rate_formula(q, q_mu, e_mu, omega, f_ec=DEFAULT_EC_INEFFICIENCY):
    """Unclamped non-decoy rate; vectorised over every argument."""
    omega = np.asarray(omega, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(omega > 0, e_mu / np.where(omega > 0, omega, 1.0), 1.0)
    distill = np.where((omega > 0) & (ratio < 0.5), omega * q_mu * _privacy_term(ratio), 0.0)
    return q * (distill - error_correction_cost(q_mu, e_mu, f_ec))


def rate_nondecoy(protocol: ProtocolVariant, mu: float, det: DetectionModel, omega: float,
                  eve_info: float | None = None) -> KeyRateReport:
    if not (0 <= omega <= 1):
        raise ValueError("omega must lie in [0, 1]")
    q_mu, e_mu = gain_and_qber(mu, det)
    raw = float(nondecoy_rate_formula(protocol.q, q_mu, e_mu, omega, protocol.f_ec))
    return KeyRateReport(
        protocol=protocol.kind, transmittance=det.channel_transmittance,
        gain_q_mu=q_mu, qber_e_mu=e_mu, rate_bits_per_pulse=max(raw, 0.0), raw_rate=raw,
        mu=mu, omega=omega, eve_info=eve_info,
    )


def simulate_decoy_observables(intensities: Sequence[float],
                               det: DetectionModel) -> list[DecoyObservable]:
    """Asymptotic gain and QBER Alice and Bob would record at each intensity."""
    out = []
    for nu in intensities:
        if nu < 0:
            raise ValueError("intensities must be non-negative")
        q_nu = float(gain(nu, det.channel_transmittance, det.y0, det.yield_model))
        # no clicks at all (vacuum with Y0 = 0): report a random error rate
        e_nu = float(qber(q_nu, det.y0, det.e0)) if q_nu > 0 else det.e0
        out.append(DecoyObservable(float(nu), q_nu, e_nu))
    return out


def _lookup(observables: Sequence[DecoyObservable], intensity: float) -> DecoyObservable:
    for ob in observables:
        if math.isclose(ob.intensity, intensity, rel_tol=1e-12, abs_tol=1e-15):
            return ob
    raise KeyError(f"no observable recorded for intensity {intensity}")


# --- array-level bound formulas, shared with the optimizer -----------------

def y1_lower_vacuum_weak(mu, nu, q_mu, q_nu, y0):
    """Single-photon yield lower bound from vacuum plus one weak decoy."""
    mu = np.asarray(mu, dtype=float)
    nu = np.asarray(nu, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        return mu / (mu * nu - nu**2) * (
            q_nu * np.exp(nu) - q_mu * np.exp(mu) * nu**2 / mu**2
            - (mu**2 - nu**2) / mu**2 * y0
        )


def y1_lower_two_weak(nu1, nu2, g1, g2):
    """Single-photon yield lower bound eliminating the two-photon term.

    ``g_i = Q_i exp(nu_i) - Y0``; the n >= 3 remainder enters with a
    negative sign, so dropping it leaves a lower bound.
    """
    with np.errstate(divide="ignore", invalid="ignore"):
        return (nu2**2 * g1 - nu1**2 * g2) / (nu1 * nu2 * (nu2 - nu1))


def unit_yield_tail(nu1, nu2):
    """sum_{n>=3} (nu2^(n-1) - nu1^(n-1)) / n!, i.e. the tail with every Y_n = 1."""
    def part(v):
        # (e^v - 1 - v - v^2/2) / v without cancellation for small v
        v = np.asarray(v, dtype=float)
        series = v**2 / 6 + v**3 / 24 + v**4 / 120 + v**5 / 720 + v**6 / 5040
        with np.errstate(divide="ignore", invalid="ignore"):
            exact = (np.expm1(v) - v - v**2 / 2) / v
        return np.where(v < 0.05, series, exact)
    return part(nu2) - part(nu1)


def y2_lower_two_weak(mu, nu1, nu2, g1, g2, q_mu, y0, y1_lower, tail_bound="signal"):
    """Two-photon yield lower bound from two weak decoys.

    ``tail_bound="signal"`` bounds the n >= 3 remainder with the signal
    gain, which requires ``nu1 + nu2 < mu``; ``"unit_yield"`` uses the
    looser bound where every multi-photon yield is replaced by 1.
    """
    nu1 = np.asarray(nu1, dtype=float)
    nu2 = np.asarray(nu2, dtype=float)
    spread = g2 / nu2 - g1 / nu1
    if tail_bound == "unit_yield":
        return 2.0 * (spread - unit_yield_tail(nu1, nu2)) / (nu2 - nu1)
    if tail_bound != "signal":
        raise ValueError(f"unknown tail bound {tail_bound!r}")
    mu = np.asarray(mu, dtype=float)
    k = (nu2**2 - nu1**2) / mu**3
    multi = q_mu * np.exp(mu) - y0 - mu * np.maximum(y1_lower, 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        return 2.0 * (spread - k * multi) / ((nu2 - nu1) * (1.0 - (nu1 + nu2) / mu))


def e2_upper_two_weak(nu1, nu2, w1, w2, y2_lower):
    with np.errstate(divide="ignore", invalid="ignore"):
        diff = w2 / nu2 - w1 / nu1
        primary = 2.0 * diff / (y2_lower * (nu2 - nu1))
        fallback = 2.0 * w2 / (nu2**2 * y2_lower)
    return np.where(diff > 0, primary, fallback)


def decoy_bounds_bb84(mu: float, nu: float, observables: Sequence[DecoyObservable],
                      det: DetectionModel) -> DecoyEstimates:
    if not (0 < nu < mu):
        raise ValueError(f"need 0 < nu < mu, got nu={nu}, mu={mu}")
    y0 = _lookup(observables, 0.0).gain
    q_nu = _lookup(observables, nu).gain
    q_mu = _lookup(observables, mu).gain
    y1 = float(y1_lower_vacuum_weak(mu, nu, q_mu, q_nu, y0))
    if not y1 > 0:
        return DecoyEstimates(y0_est=min(y0, 1.0), y1_lower=0.0, q1_lower=0.0,
                              e1_upper=0.5, degenerate=True)
    y1 = min(y1, 1.0)
    return DecoyEstimates(
        y0_est=min(y0, 1.0), y1_lower=y1, q1_lower=mu * math.exp(-mu) * y1,
        e1_upper=min(det.e0 * y0 / y1, 1.0),
    )


def decoy_bounds_sarg04(mu: float, nu1: float, nu2: float,
                        observables: Sequence[DecoyObservable], det: DetectionModel,
                        tail_bound: str = "signal") -> DecoyEstimates:
    check_two_decoy_constraint(mu, nu1, nu2)
    y0 = _lookup(observables, 0.0).gain
    ob1, ob2, obm = _lookup(observables, nu1), _lookup(observables, nu2), _lookup(observables, mu)
    g1 = ob1.gain * math.exp(nu1) - y0
    g2 = ob2.gain * math.exp(nu2) - y0
    w1 = ob1.qber * ob1.gain * math.exp(nu1) - det.e0 * y0
    w2 = ob2.qber * ob2.gain * math.exp(nu2) - det.e0 * y0
    y1 = float(y1_lower_two_weak(nu1, nu2, g1, g2))
    y2 = float(y2_lower_two_weak(mu, nu1, nu2, g1, g2, obm.gain, y0, y1, tail_bound))
    degenerate = not (y1 > 0 and y2 > 0)
    y1c = min(max(y1, 0.0), 1.0)
    y2c = min(max(y2, 0.0), 1.0)
    e1 = min(max(w1 / (nu1 * y1c), 0.0), 1.0) if y1c > 0 else 0.5
    e2 = min(max(float(e2_upper_two_weak(nu1, nu2, w1, w2, y2c)), 0.0), 1.0) if y2c > 0 else 0.5
    return DecoyEstimates(
        y0_est=min(y0, 1.0), y1_lower=y1c, q1_lower=mu * math.exp(-mu) * y1c,
        e1_upper=e1, y2_lower=y2c, q2_lower=0.5 * mu**2 * math.exp(-mu) * y2c,
        e2_upper=e2, degenerate=degenerate,
    )


def _decoy_report(protocol, mu, det, bounds, nu1, nu2=None, f_ec=DEFAULT_EC_INEFFICIENCY):
    q_mu, e_mu = gain_and_qber(mu, det)
    distill = bounds.q1_lower * float(_privacy_term(bounds.e1_upper))
    if protocol is Protocol.SARG04_DECOY:
        distill += bounds.q2_lower * float(_privacy_term(bounds.e2_upper))
    raw = protocol.sifting * (distill - float(error_correction_cost(q_mu, e_mu, f_ec)))
    return KeyRateReport(
        protocol=protocol, transmittance=det.channel_transmittance, gain_q_mu=q_mu,
        qber_e_mu=e_mu, rate_bits_per_pulse=max(raw, 0.0), raw_rate=raw, mu=mu,
        bounds=bounds, nu1=nu1, nu2=nu2,
    )


def rate_bb84_decoy(mu: float, nu: float, det: DetectionModel,
                    f_ec: float = DEFAULT_EC_INEFFICIENCY) -> KeyRateReport:
    obs = simulate_decoy_observables([0.0, nu, mu], det)
    bounds = decoy_bounds_bb84(mu, nu, obs, det)
    return _decoy_report(Protocol.BB84_DECOY, mu, det, bounds, nu, f_ec=f_ec)


def rate_sarg04_decoy(mu: float, nu1: float, nu2: float, det: DetectionModel,
                      f_ec: float = DEFAULT_EC_INEFFICIENCY,
                      tail_bound: str = "signal") -> KeyRateReport:
    obs = simulate_decoy_observables([0.0, nu1, nu2, mu], det)
    bounds = decoy_bounds_sarg04(mu, nu1, nu2, obs, det, tail_bound)
    return _decoy_report(Protocol.SARG04_DECOY, mu, det, bounds, nu1, nu2, f_ec=f_ec)


def eve_information(protocol: Protocol, mu, delta, irud: adversary.IrudParams | None = None):
    """Clamped Eve information fraction for the attack matched to ``protocol``."""
    if Protocol(protocol) in (Protocol.BB84, Protocol.BB84_DECOY):
        _, _, ratio = adversary.bb84_eve_information(mu, delta)
    else:
        _, _, ratio = adversary.sarg04_eve_information(mu, delta, irud)
    return np.minimum(ratio, 1.0)


def rate_for(protocol: ProtocolVariant | Protocol | str, scenario: LinkScenario,
             source: SourceConfig, irud: adversary.IrudParams | None = None,
             y0: float = DEFAULT_DARK_COUNT, yield_model=YieldModel.ADDITIVE,
             tail_bound: str = "signal") -> KeyRateReport:
    """Channel, adversary and rate formula for one configuration."""
    if not isinstance(protocol, ProtocolVariant):
        protocol = ProtocolVariant(Protocol(protocol))
    delta = float(total_transmittance(scenario))
    det = DetectionModel(channel_transmittance=delta, y0=y0, yield_model=yield_model)
    kind = protocol.kind
    if kind is Protocol.BB84_DECOY:
        weak = source.weak_decoys
        if len(weak) < 1:
            raise ValueError("BB84 decoy rate needs one weak decoy intensity")
        report = rate_bb84_decoy(source.mu, weak[0], det, protocol.f_ec)
    elif kind is Protocol.SARG04_DECOY:
        source.check_two_decoy()
        nu1, nu2 = source.weak_decoys
        report = rate_sarg04_decoy(source.mu, nu1, nu2, det, protocol.f_ec, tail_bound)
    else:
        if source.mu <= 0:
            raise ValueError("mu must be positive")
        i_eve = float(eve_information(kind, source.mu, delta, irud))
        report = rate_nondecoy(protocol, source.mu, det, 1.0 - i_eve, eve_info=i_eve)
    return replace(report, distance_m=scenario.distance_m)
