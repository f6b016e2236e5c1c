"""Free-space optical channel transmittance for satellite links.

Internally every quantity is a transmittance in [0, 1]. Losses are reported
as positive decibels, ``-10 log10(transmittance)``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

import numpy as np


class AtmosphereKind(str, enum.Enum):
    VACUUM = "vacuum"
    DOWNLINK_CLEAR = "downlink_clear"
    UPLINK_FIXED_TURB = "uplink_fixed_turb"


@dataclass(frozen=True)
class TelescopeGeometry:
    """Cassegrain telescope: primary and secondary (obscuring) mirror radii."""

    primary_radius_m: float
    secondary_radius_m: float

    def __post_init__(self):
        if not (0 < self.secondary_radius_m < self.primary_radius_m):
            raise ValueError(
                "need 0 < secondary_radius_m < primary_radius_m, got "
                f"{self.secondary_radius_m} and {self.primary_radius_m}"
            )

    @property
    def obscuration(self) -> float:
        return self.secondary_radius_m / self.primary_radius_m


GROUND_TELESCOPE = TelescopeGeometry(primary_radius_m=0.50, secondary_radius_m=0.05)
SATELLITE_TELESCOPE = TelescopeGeometry(primary_radius_m=0.15, secondary_radius_m=0.01)


@dataclass(frozen=True)
class AtmosphereRegime:
    kind: AtmosphereKind
    turb_loss_db: float = 0.0
    scatter_abs_loss_db: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "kind", AtmosphereKind(self.kind))
        if self.turb_loss_db < 0 or self.scatter_abs_loss_db < 0:
            raise ValueError("atmospheric losses are positive decibels")
        if self.kind is AtmosphereKind.VACUUM and (
            self.turb_loss_db != 0 or self.scatter_abs_loss_db != 0
        ):
            raise ValueError("a vacuum path has no atmospheric loss")
        if self.kind is AtmosphereKind.DOWNLINK_CLEAR and self.turb_loss_db != 0:
            raise ValueError("downlink turbulence loss is taken as zero")

    @property
    def loss_db(self) -> float:
        return self.turb_loss_db + self.scatter_abs_loss_db

    @property
    def transmittance(self) -> float:
        return transmittance_from_db(self.loss_db)


@dataclass(frozen=True)
class LinkScenario:
    """A complete point-to-point optical link.

    ``extra_loss_db`` folds in pointing or misalignment losses, which are
    otherwise not modelled.
    """

    transmitter: TelescopeGeometry
    receiver: TelescopeGeometry
    wavelength_m: float
    atmosphere: AtmosphereRegime
    receiver_efficiency: float
    distance_m: float
    extra_loss_db: float = 0.0

    def __post_init__(self):
        if self.distance_m <= 0:
            raise ValueError(f"distance_m must be positive, got {self.distance_m}")
        if not (0 < self.receiver_efficiency <= 1):
            raise ValueError("receiver_efficiency must lie in (0, 1]")
        if self.wavelength_m <= 0:
            raise ValueError("wavelength_m must be positive")
        if self.extra_loss_db < 0:
            raise ValueError("extra_loss_db must be non-negative")

    def at_distance(self, distance_m: float) -> "LinkScenario":
        return replace(self, distance_m=distance_m)


@dataclass(frozen=True)
class AltUplinkParams:
    """Parameters of the divergence-cone uplink budget."""

    atm_loss_db: float = 1.0
    tx_diameter_m: float = 1.0
    rx_diameter_m: float = 0.3
    atm_divergence_rad: float = 0.0
    pointing_loss: float = 0.0
    tx_transmission: float = 0.8
    rx_transmission: float = 0.8

    def __post_init__(self):
        if not (0 <= self.pointing_loss < 1):
            raise ValueError("pointing_loss must lie in [0, 1)")
        if not (0 < self.tx_transmission <= 1 and 0 < self.rx_transmission <= 1):
            raise ValueError("telescope transmissions must lie in (0, 1]")
        if self.tx_diameter_m <= 0 or self.rx_diameter_m <= 0:
            raise ValueError("telescope diameters must be positive")


def db_from_transmittance(transmittance):
    """Positive loss in dB for a transmittance in (0, 1]."""
    t = np.asarray(transmittance, dtype=float)
    if np.any(t <= 0):
        raise ValueError("transmittance must be positive")
    out = -10.0 * np.log10(t)
    return float(out) if out.ndim == 0 else out


def transmittance_from_db(loss_db):
    out = np.power(10.0, -np.asarray(loss_db, dtype=float) / 10.0)
    return float(out) if out.ndim == 0 else out


def _aperture_factor(gamma, alpha):
    # fraction of a Gaussian beam of normalised radius 1/alpha passing an
    # annular aperture with obscuration ratio gamma
    return np.exp(-2.0 * gamma**2 * alpha**2) - np.exp(-2.0 * alpha**2)


def receiver_beam_radius(tx: TelescopeGeometry, wavelength_m, distance_m):
    return math.sqrt(2.0) * wavelength_m * np.asarray(distance_m, dtype=float) / (
        math.pi * tx.primary_radius_m
    )


def diffraction_transmittance(tx: TelescopeGeometry, rx: TelescopeGeometry,
                              wavelength_m: float, distance_m):
    """Geometric loss from beam diffraction and Cassegrain obscuration.

    The transmit beam waist equals the primary radius, so the transmitter
    factor is a constant; the receiver factor falls off as the beam spreads.
    Vectorised over ``distance_m``.
    """
    distance = np.asarray(distance_m, dtype=float)
    if np.any(distance <= 0):
        raise ValueError("distance_m must be positive")
    w_t = tx.primary_radius_m
    alpha_t = tx.primary_radius_m / w_t
    w_r = receiver_beam_radius(tx, wavelength_m, distance)
    alpha_r = rx.primary_radius_m / w_r
    out = _aperture_factor(tx.obscuration, alpha_t) * _aperture_factor(rx.obscuration, alpha_r)
    return float(out) if out.ndim == 0 else out


def far_field_onset_m(tx: TelescopeGeometry, rx: TelescopeGeometry, wavelength_m: float) -> float:
    """Distance beyond which the received beam is wider than the receive aperture.

    Past this point the diffraction transmittance decreases monotonically.
    """
    return math.pi * tx.primary_radius_m * rx.primary_radius_m / (math.sqrt(2.0) * wavelength_m)


def fried_parameter(wavelength_m, fried_ref_r0_m=0.09, fried_ref_wavelength_m=800e-9):
    return fried_ref_r0_m * (np.asarray(wavelength_m, dtype=float) / fried_ref_wavelength_m) ** 1.2


def turbulence_transmittance_model(wavelength_m, tx_primary_radius_m,
                                   fried_ref_r0_m=0.09, fried_ref_wavelength_m=800e-9):
    """Uplink turbulence transmittance from turbulence-induced beam divergence.

    Parameters
    ----------
    wavelength_m : float
    tx_primary_radius_m : float
        Primary mirror radius of the ground transmitter.
    fried_ref_r0_m, fried_ref_wavelength_m : float
        Fried parameter at a reference wavelength; it is scaled to
        ``wavelength_m`` with the 6/5 power law.

    Returns
    -------
    float
        ``(lambda/R)^2 / ((lambda/R)^2 + theta_turb^2)`` with ``theta_turb = lambda/r0``.
    """
    for v in (wavelength_m, tx_primary_radius_m, fried_ref_r0_m, fried_ref_wavelength_m):
        if np.any(np.asarray(v) <= 0):
            raise ValueError("all lengths must be positive")
    r0 = fried_parameter(wavelength_m, fried_ref_r0_m, fried_ref_wavelength_m)
    return turbulence_transmittance_from_divergence(
        wavelength_m, tx_primary_radius_m, np.asarray(wavelength_m) / r0
    )


def turbulence_transmittance_from_divergence(wavelength_m, tx_primary_radius_m, theta_turb_rad):
    diff = (np.asarray(wavelength_m, dtype=float) / tx_primary_radius_m) ** 2
    out = diff / (diff + np.asarray(theta_turb_rad, dtype=float) ** 2)
    return float(out) if np.ndim(out) == 0 else out


def total_transmittance(scenario: LinkScenario, distance_m=None):
    """Product of diffraction, atmospheric and receiver transmittances.

    ``distance_m`` overrides the scenario distance and may be an array.
    """
    distance = scenario.distance_m if distance_m is None else distance_m
    diff = diffraction_transmittance(
        scenario.transmitter, scenario.receiver, scenario.wavelength_m, distance
    )
    rest = transmittance_from_db(scenario.atmosphere.loss_db + scenario.extra_loss_db)
    return diff * rest * scenario.receiver_efficiency


def loss_breakdown_db(scenario: LinkScenario) -> dict[str, float]:
    diff = diffraction_transmittance(
        scenario.transmitter, scenario.receiver, scenario.wavelength_m, scenario.distance_m
    )
    parts = {
        "diffraction": db_from_transmittance(diff),
        "turbulence": scenario.atmosphere.turb_loss_db,
        "scatter_absorption": scenario.atmosphere.scatter_abs_loss_db,
        "extra": scenario.extra_loss_db,
        "receiver": db_from_transmittance(scenario.receiver_efficiency),
    }
    parts["total"] = sum(parts.values())
    return parts


def alt_uplink_transmittance(distance_m, wavelength_m: float, p: AltUplinkParams | None = None):
    """Uplink budget from the transmit divergence cone, excluding the detector.

    This is an independent cross-check on :func:`total_transmittance`; the
    scenario presets do not use it. At short range the cone is narrower than
    the receive aperture and the value exceeds 1; it is not clipped.
    """
    p = AltUplinkParams() if p is None else p
    distance = np.asarray(distance_m, dtype=float)
    if np.any(distance <= 0):
        raise ValueError("distance_m must be positive")
    theta_t = wavelength_m / p.tx_diameter_m
    loss_factor = (
        distance**2 * (theta_t**2 + p.atm_divergence_rad**2) / p.rx_diameter_m**2
        / (p.tx_transmission * (1.0 - p.pointing_loss) * p.rx_transmission)
        * 10.0 ** (p.atm_loss_db / 10.0)
    )
    out = 1.0 / loss_factor
    return float(out) if out.ndim == 0 else out


def peak_diffraction_distance_m(tx: TelescopeGeometry, rx: TelescopeGeometry,
                                wavelength_m: float) -> float:
    """Distance at which the diffraction transmittance is largest.

    Closer in, the beam is narrower than the receiver's secondary mirror and
    the obscuration blocks it; farther out, it spreads past the primary.
    """
    g2 = rx.obscuration**2
    alpha_sq = math.log(1.0 / g2) / (2.0 * (1.0 - g2))
    return math.pi * tx.primary_radius_m * rx.primary_radius_m / (
        math.sqrt(2.0) * wavelength_m * math.sqrt(alpha_sq)
    )
