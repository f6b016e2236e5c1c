"""Eavesdropper models: photon-number splitting (BB84) and intercept-resend
with unambiguous discrimination (SARG04).

Eve hides behind the channel loss. She may remove pulses as long as Bob's
mean received photon number, ``mu * delta``, is unchanged.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple

import numpy as np

from .source import poisson_pn, poisson_tail


class Attack(str, enum.Enum):
    PNS = "PNS"
    IRUD = "IRUD"


class Regime(str, enum.Enum):
    TRANSPARENT_BLOCK_SINGLES = "TransparentBlockSingles"
    BLOCK_ALL_SINGLES_BLOCK_SOME_DOUBLES = "BlockAllSinglesBlockSomeDoubles"
    FULL_INFO = "FullInfo"


def single_copy_information() -> float:
    """Eve's information on one SARG04 bit from one stored photon.

    She waits for the sifting announcement and then discriminates two states
    whose overlap is cos(pi/4); the Helstrom error is (1 - sqrt(1/2))/2.
    """
    p_err = (1.0 - math.sqrt(0.5)) / 2.0
    h = -p_err * math.log2(p_err) - (1 - p_err) * math.log2(1 - p_err)
    return 1.0 - h


@dataclass(frozen=True)
class IrudParams:
    """Unambiguous-discrimination success model and two-photon information.

    ``p_ok`` is ``None`` for the constant 1/2 floor, otherwise a callable of
    the photon number returning a value in [1/2, 1].
    """

    p_ok: Callable[[int], float] | None = None
    i2: float = field(default_factory=single_copy_information)

    def __post_init__(self):
        if not (0.0 <= self.i2 <= 1.0):
            raise ValueError(f"i2 must lie in [0, 1], got {self.i2}")
        if self.p_ok is not None:
            for n in range(3, 40):
                v = self.p_ok(n)
                if not (0.5 <= v <= 1.0):
                    raise ValueError(f"p_ok({n}) = {v} outside [1/2, 1]")


@dataclass(frozen=True)
class EveStrategy:
    attack: Attack
    t: float
    s: float
    chi: float
    regime: Regime
    matched: bool = True

    def __post_init__(self):
        if not (0 <= self.t <= 1 and 0 <= self.s <= 1):
            raise ValueError("blocking fractions must lie in [0, 1]")
        if self.chi < 0:
            raise ValueError("chi must be non-negative")
        if self.regime is Regime.TRANSPARENT_BLOCK_SINGLES and self.s != 0:
            raise ValueError("the single-blocking regime keeps every double")
        if self.regime is Regime.BLOCK_ALL_SINGLES_BLOCK_SOME_DOUBLES and self.t != 1:
            raise ValueError("the double-blocking regime drops every single")

    def received_mean(self, mu: float) -> float:
        """Mean photon number Bob receives under this strategy."""
        p1, p2 = poisson_pn(mu, 1), poisson_pn(mu, 2)
        return (1 - self.t) * p1 + (1 - self.s) * p2 + self.chi


class MutualInfo(NamedTuple):
    i_ab: float
    i_be: float
    i_eve: float
    ratio: float


def chi(mu, p_ok: Callable[[int], float] | None = None):
    """Probability mass of conclusive discriminations on pulses with >= 3 photons."""
    if np.any(np.asarray(mu) < 0):
        raise ValueError("mu must be non-negative")
    if p_ok is None:
        return 0.5 * poisson_tail(mu, 3)
    mu_arr = np.asarray(mu, dtype=float)
    total = np.zeros_like(mu_arr)
    n = 3
    # P_ok <= 1, so the remainder is bounded by the Poisson tail
    while True:
        total = total + poisson_pn(mu_arr, n) * p_ok(n)
        n += 1
        if np.all(poisson_tail(mu_arr, n) < 1e-18) or n > 400:
            break
    return float(total) if total.ndim == 0 else total


def irud_fractions(mu, delta, chi_value):
    """Vectorised blocking fractions (t, s) that reproduce ``mu * delta``.

    Returns ``t, s`` clipped to [0, 1]; outside the two matching regimes the
    clip gives (0, 0) for a too-transparent channel and (1, 1) when even the
    conclusive pulses alone exceed the received mean.
    """
    mu = np.asarray(mu, dtype=float)
    m = mu * np.asarray(delta, dtype=float)
    p1 = mu * np.exp(-mu)
    p2 = 0.5 * mu**2 * np.exp(-mu)
    with np.errstate(divide="ignore", invalid="ignore"):
        t_raw = 1.0 - (m - p2 - chi_value) / p1
        s_raw = 1.0 - (m - chi_value) / p2
    doubles = m < p2 + chi_value
    t = np.where(doubles, 1.0, np.clip(t_raw, 0.0, 1.0))
    s = np.where(doubles, np.clip(s_raw, 0.0, 1.0), 0.0)
    return t, s


def solve_irud_strategy(mu: float, delta: float, params: IrudParams | None = None) -> EveStrategy:
    """Eve's loss-matching IRUD strategy for one (mu, delta) pair."""
    if mu <= 0:
        raise ValueError("mu must be positive")
    if not (0 < delta <= 1):
        raise ValueError("channel transmittance must lie in (0, 1]")
    params = IrudParams() if params is None else params
    c = chi(mu, params.p_ok)
    p1, p2 = poisson_pn(mu, 1), poisson_pn(mu, 2)
    m = mu * delta
    if m >= p1 + p2 + c:
        return EveStrategy(Attack.IRUD, 0.0, 0.0, c, Regime.TRANSPARENT_BLOCK_SINGLES,
                           matched=(m == p1 + p2 + c))
    if m >= p2 + c:
        t = 1.0 - (m - p2 - c) / p1
        return EveStrategy(Attack.IRUD, min(max(t, 0.0), 1.0), 0.0, c,
                           Regime.TRANSPARENT_BLOCK_SINGLES)
    if m >= c:
        s = 1.0 - (m - c) / p2
        return EveStrategy(Attack.IRUD, 1.0, min(max(s, 0.0), 1.0), c,
                           Regime.BLOCK_ALL_SINGLES_BLOCK_SOME_DOUBLES)
    return EveStrategy(Attack.IRUD, 1.0, 1.0, c, Regime.FULL_INFO)


def bb84_eve_information(mu, delta):
    """Vectorised (i_ab, i_be, ratio) for the PNS attack on BB84."""
    mu = np.asarray(mu, dtype=float)
    i_ab = -np.expm1(-mu * np.asarray(delta, dtype=float))
    i_be = poisson_tail(mu, 2)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(i_ab > 0, i_be / np.where(i_ab > 0, i_ab, 1.0), np.inf)
    return i_ab, i_be, ratio


def sarg04_eve_information(mu, delta, params: IrudParams | None = None, chi_value=None):
    """Vectorised (i_ab, i_be, ratio) for the IRUD attack on SARG04."""
    params = IrudParams() if params is None else params
    mu = np.asarray(mu, dtype=float)
    c = chi(mu, params.p_ok) if chi_value is None else chi_value
    t, s = irud_fractions(mu, delta, c)
    p1 = mu * np.exp(-mu)
    p2 = 0.5 * mu**2 * np.exp(-mu)
    i_ab = p1 * (1 - t) + p2 * (1 - s) + c
    i_be = p2 * (1 - s) * params.i2 + c
    full = mu * np.asarray(delta, dtype=float) < c
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(i_ab > 0, i_be / np.where(i_ab > 0, i_ab, 1.0), np.inf)
    ratio = np.where(full, np.maximum(ratio, 1.0), ratio)
    return i_ab, i_be, ratio


def mutual_info_bb84(mu: float, delta: float) -> MutualInfo:
    if mu <= 0 or not (0 < delta <= 1):
        raise ValueError("need mu > 0 and delta in (0, 1]")
    i_ab, i_be, ratio = bb84_eve_information(mu, delta)
    return MutualInfo(float(i_ab), float(i_be), float(min(ratio, 1.0)), float(ratio))


def mutual_info_sarg04(mu: float, delta: float, params: IrudParams | None = None) -> MutualInfo:
    if mu <= 0 or not (0 < delta <= 1):
        raise ValueError("need mu > 0 and delta in (0, 1]")
    i_ab, i_be, ratio = sarg04_eve_information(mu, delta, params)
    return MutualInfo(float(i_ab), float(i_be), float(min(ratio, 1.0)), float(ratio))
