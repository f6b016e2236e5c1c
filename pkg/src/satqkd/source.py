"""Poisson photon-number statistics of weak coherent pulses."""
from __future__ import annotations

from dataclasses import dataclass, field
from math import lgamma

import numpy as np


@dataclass(frozen=True)
class SourceConfig:
    """Signal intensity plus optional decoy intensities.

    The pulse counts are bookkeeping only; every rate in this package is
    asymptotic and does not depend on them.
    """

    mu: float
    decoys: tuple[float, ...] = field(default_factory=tuple)
    pulses_total: int = 100_000_000
    signal_fraction: float = 0.95
    vacuum_fraction: float = 0.05

    def __post_init__(self):
        object.__setattr__(self, "decoys", tuple(float(v) for v in self.decoys))
        if self.mu < 0:
            raise ValueError(f"mu must be non-negative, got {self.mu}")
        if any(v < 0 for v in self.decoys):
            raise ValueError("decoy intensities must be non-negative")
        if any(b <= a for a, b in zip(self.decoys, self.decoys[1:])):
            raise ValueError("decoy intensities must be strictly increasing")
        if self.signal_fraction < 0 or self.vacuum_fraction < 0:
            raise ValueError("pulse fractions must be non-negative")
        if self.signal_fraction + self.vacuum_fraction > 1 + 1e-12:
            raise ValueError("signal_fraction + vacuum_fraction must not exceed 1")

    @property
    def weak_decoys(self) -> tuple[float, ...]:
        return tuple(v for v in self.decoys if v > 0)

    def check_two_decoy(self) -> None:
        """Raise unless the weak decoys satisfy 0 < nu1 < nu2 and nu1 + nu2 < mu."""
        weak = self.weak_decoys
        if len(weak) != 2:
            raise ValueError("two weak decoy intensities are required")
        check_two_decoy_constraint(self.mu, *weak)


def check_two_decoy_constraint(mu: float, nu1: float, nu2: float) -> None:
    if not (0 < nu1 < nu2):
        raise ValueError(f"need 0 < nu1 < nu2, got nu1={nu1}, nu2={nu2}")
    if not (nu1 + nu2 < mu):
        raise ValueError(f"need nu1 + nu2 < mu, got {nu1} + {nu2} >= {mu}")


def poisson_pn(mu, n):
    """Probability that a pulse of mean photon number ``mu`` holds ``n`` photons.

    Evaluated in log space so large ``n`` neither overflows nor loses
    precision. Accepts scalars or arrays for ``mu``.
    """
    if n < 0:
        raise ValueError(f"photon count must be non-negative, got {n}")
    mu_arr = np.asarray(mu, dtype=float)
    if np.any(mu_arr < 0):
        raise ValueError("mean photon number must be non-negative")
    if n == 0:
        out = np.exp(-mu_arr)
    else:
        with np.errstate(divide="ignore"):
            out = np.exp(-mu_arr + n * np.log(mu_arr) - lgamma(n + 1))
    return float(out) if out.ndim == 0 else out


def poisson_cdf_below(mu, n_min):
    """Sum of P_n(mu) for n < n_min."""
    mu_arr = np.asarray(mu, dtype=float)
    total = np.zeros_like(mu_arr)
    for n in range(n_min):
        total = total + poisson_pn(mu_arr, n)
    return total


def poisson_tail(mu, n_min):
    """Probability of at least ``n_min`` photons, as an exact complement.

    Examples
    --------
    >>> round(poisson_tail(0.1, 2), 10)
    0.0046788402
    """
    if n_min < 0:
        raise ValueError("n_min must be non-negative")
    mu_arr = np.asarray(mu, dtype=float)
    if np.any(mu_arr < 0):
        raise ValueError("mean photon number must be non-negative")
    if n_min == 0:
        out = np.ones_like(mu_arr)
    else:
        if n_min == 1:
            out = -np.expm1(-mu_arr)
        else:
            out = 1.0 - poisson_cdf_below(mu_arr, n_min)
            out = _tail_series_guard(mu_arr, n_min, out)
    return float(out) if np.ndim(out) == 0 else out


def _tail_series_guard(mu, n_min, complement):
    # For small mu the complement 1 - sum cancels catastrophically; the
    # leading terms of the series are accurate there instead.
    small = mu < 0.05
    if not np.any(small):
        return complement
    terms = np.zeros_like(mu)
    for n in range(n_min, n_min + 12):
        terms = terms + poisson_pn(mu, n)
    return np.where(small, terms, complement)
