"""Critical-distance and maximum-rate tables, Eve-information crossings."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .adversary import IrudParams
from .channel import db_from_transmittance, transmittance_from_db
from .keyrate import Protocol, eve_information
from .optimizer import SweepSpec, critical_distance, max_rate
from .presets import PRESETS, ScenarioPreset
from .source import poisson_tail

SCENARIOS = ("downlink", "intersatellite", "uplink5db", "uplink11db")
PROTOCOLS = tuple(Protocol)

# Published reference values; None marks a protocol with no secure distance.
REFERENCE_CRITICAL_KM = {
    "downlink": (1540, 3290, 9450, 14100),
    "intersatellite": (430, 920, 2660, 3900),
    "uplink5db": (460, 1520, 4650, 6980),
    "uplink11db": (None, 500, 2200, 3460),
}
REFERENCE_MAX_RATE = {
    "downlink": (1.7e-2, 2.4e-2, 4.4e-2, 4.6e-2),
    "intersatellite": (2.0e-2, 2.6e-2, 4.8e-2, 5.0e-2),
    "uplink5db": (1.4e-4, 1.2e-3, 5.8e-3, 6.5e-3),
    "uplink11db": (None, 7.5e-5, 1.4e-3, 1.6e-3),
}
REFERENCE_CROSSING_DB = {Protocol.BB84: (0.1, 13.0), Protocol.SARG04: (0.2, 25.6)}


@dataclass(frozen=True)
class TableCell:
    scenario: str
    protocol: Protocol
    computed: float | None
    reference: float | None

    @property
    def relative_deviation(self) -> float | None:
        if self.computed is None or self.reference is None:
            return None
        return (self.computed - self.reference) / self.reference

    @property
    def both_none(self) -> bool:
        return self.computed is None and self.reference is None


def _spec(scenario: str | ScenarioPreset, protocol: Protocol, **kw) -> SweepSpec:
    preset = PRESETS[scenario] if isinstance(scenario, str) else scenario
    return SweepSpec(protocol=protocol, preset=preset, **kw)


def _name(scenario: str | ScenarioPreset) -> str:
    return scenario if isinstance(scenario, str) else scenario.name


def critical_distance_table(scenarios=SCENARIOS, **kw) -> list[TableCell]:
    cells = []
    for scen in scenarios:
        name = _name(scen)
        for j, proto in enumerate(PROTOCOLS):
            crit = critical_distance(_spec(scen, proto, **kw))
            ref = REFERENCE_CRITICAL_KM.get(name, (None,) * 4)[j]
            cells.append(TableCell(name, proto, crit.distance_km, ref))
    return cells


def max_rate_table(scenarios=SCENARIOS, **kw) -> list[TableCell]:
    cells = []
    for scen in scenarios:
        name = _name(scen)
        for j, proto in enumerate(PROTOCOLS):
            best = max_rate(_spec(scen, proto, **kw)).best_rate
            ref = REFERENCE_MAX_RATE.get(name, (None,) * 4)[j]
            cells.append(TableCell(name, proto, best if best > 0 else None, ref))
    return cells


def bb84_crossing_transmittance(mu: float) -> float:
    """Transmittance at which Eve's PNS information reaches one, in closed form."""
    return -math.log1p(-poisson_tail(mu, 2)) / mu


def eve_crossing_loss_db(protocol: Protocol, mu: float, irud: IrudParams | None = None,
                         lo_db: float = 0.0, hi_db: float = 120.0, tol_db: float = 1e-6) -> float:
    """Smallest loss at which Eve's information fraction reaches one.

    Eve's information only grows with loss, so bisection on the loss
    suffices. Returns ``inf`` if the crossing lies beyond ``hi_db``.
    """
    protocol = Protocol(protocol)

    def saturated(loss_db):
        delta = transmittance_from_db(loss_db)
        return float(eve_information(protocol, mu, delta, irud)) >= 1.0

    if saturated(lo_db):
        return lo_db
    if not saturated(hi_db):
        return math.inf
    while hi_db - lo_db > tol_db:
        mid = 0.5 * (lo_db + hi_db)
        if saturated(mid):
            hi_db = mid
        else:
            lo_db = mid
    return hi_db


def eve_information_curve(scenario: str, protocol: Protocol, mu: float, distances_km,
                          irud: IrudParams | None = None) -> np.ndarray:
    spec = _spec(scenario, protocol)
    delta = spec.transmittance(np.asarray(distances_km, dtype=float) * 1e3)
    return np.asarray(eve_information(protocol, mu, delta, irud))


def crossing_report(irud: IrudParams | None = None) -> list[tuple[Protocol, float, float, float]]:
    """(protocol, mu, computed dB, reference dB) for both non-decoy protocols."""
    rows = []
    for proto, (mu, ref) in REFERENCE_CROSSING_DB.items():
        rows.append((proto, mu, eve_crossing_loss_db(proto, mu, irud), ref))
    return rows


def loss_db_at(scenario: str, distance_km: float) -> float:
    spec = _spec(scenario, Protocol.BB84)
    return db_from_transmittance(spec.transmittance(distance_km * 1e3))
