"""Named link scenarios and the JSON scenario-file format.

A scenario file is a JSON object. Every key is optional except ``name``;
missing keys fall back to the preset of that name, or to the downlink
preset when the name is new::

    {
      "name": "uplink5db",
      "tx_primary_radius_m": 0.50,
      "tx_secondary_radius_m": 0.05,
      "rx_primary_radius_m": 0.15,
      "rx_secondary_radius_m": 0.01,
      "wavelength_nm": 650,
      "atmosphere": "uplink_fixed_turb",
      "turb_loss_db": 5.0,
      "scatter_loss_db": 1.0,
      "receiver_efficiency": 0.4732,
      "dark_count": 5e-05,
      "extra_loss_db": 0.0,
      "distance_min_km": 260,
      "distance_max_km": 8000
    }
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

from .channel import (
    GROUND_TELESCOPE,
    SATELLITE_TELESCOPE,
    AtmosphereKind,
    AtmosphereRegime,
    LinkScenario,
    TelescopeGeometry,
    far_field_onset_m,
)


@dataclass(frozen=True)
class ScenarioPreset:
    name: str
    tx_primary_radius_m: float
    tx_secondary_radius_m: float
    rx_primary_radius_m: float
    rx_secondary_radius_m: float
    wavelength_nm: float = 650.0
    atmosphere: str = AtmosphereKind.VACUUM.value
    turb_loss_db: float = 0.0
    scatter_loss_db: float = 0.0
    receiver_efficiency: float = 0.65
    dark_count: float = 50e-6
    extra_loss_db: float = 0.0
    distance_min_km: float | None = None
    distance_max_km: float = 20000.0

    def __post_init__(self):
        # build once so invalid values fail at load time
        self.scenario()

    @property
    def transmitter(self) -> TelescopeGeometry:
        return TelescopeGeometry(self.tx_primary_radius_m, self.tx_secondary_radius_m)

    @property
    def receiver(self) -> TelescopeGeometry:
        return TelescopeGeometry(self.rx_primary_radius_m, self.rx_secondary_radius_m)

    @property
    def wavelength_m(self) -> float:
        return self.wavelength_nm * 1e-9

    @property
    def min_distance_km(self) -> float:
        """Start of the sweep range; defaults to the far-field onset rounded up to 10 km."""
        if self.distance_min_km is not None:
            return self.distance_min_km
        onset = far_field_onset_m(self.transmitter, self.receiver, self.wavelength_m)
        return 10.0 * math.ceil(onset / 1e4)

    def scenario(self, distance_m: float = 1e6) -> LinkScenario:
        return LinkScenario(
            transmitter=self.transmitter,
            receiver=self.receiver,
            wavelength_m=self.wavelength_m,
            atmosphere=AtmosphereRegime(
                AtmosphereKind(self.atmosphere), self.turb_loss_db, self.scatter_loss_db
            ),
            receiver_efficiency=self.receiver_efficiency,
            distance_m=distance_m,
            extra_loss_db=self.extra_loss_db,
        )

    def to_dict(self) -> dict:
        return asdict(self)


# Photon counting on board is taken to cost 3.25 dB, the middle of the
# 3 to 3.5 dB quoted for space detectors between 650 and 1550 nm; ground
# receivers use the 65 % detector efficiency.
SATELLITE_RECEIVER_EFFICIENCY = 10.0 ** (-0.325)
GROUND_RECEIVER_EFFICIENCY = 0.65


def _ground_to_space(name, turb_db, max_km):
    g, s = GROUND_TELESCOPE, SATELLITE_TELESCOPE
    return ScenarioPreset(
        name=name,
        tx_primary_radius_m=g.primary_radius_m, tx_secondary_radius_m=g.secondary_radius_m,
        rx_primary_radius_m=s.primary_radius_m, rx_secondary_radius_m=s.secondary_radius_m,
        atmosphere=AtmosphereKind.UPLINK_FIXED_TURB.value,
        turb_loss_db=turb_db, scatter_loss_db=1.0,
        receiver_efficiency=SATELLITE_RECEIVER_EFFICIENCY, distance_max_km=max_km,
    )


# Sweep ranges end a little past the longest secure distance of each link.
PRESETS: dict[str, ScenarioPreset] = {
    "downlink": ScenarioPreset(
        name="downlink",
        tx_primary_radius_m=SATELLITE_TELESCOPE.primary_radius_m,
        tx_secondary_radius_m=SATELLITE_TELESCOPE.secondary_radius_m,
        rx_primary_radius_m=GROUND_TELESCOPE.primary_radius_m,
        rx_secondary_radius_m=GROUND_TELESCOPE.secondary_radius_m,
        atmosphere=AtmosphereKind.DOWNLINK_CLEAR.value,
        scatter_loss_db=1.0, receiver_efficiency=GROUND_RECEIVER_EFFICIENCY,
        distance_max_km=16000.0,
    ),
    "intersatellite": ScenarioPreset(
        name="intersatellite",
        tx_primary_radius_m=SATELLITE_TELESCOPE.primary_radius_m,
        tx_secondary_radius_m=SATELLITE_TELESCOPE.secondary_radius_m,
        rx_primary_radius_m=SATELLITE_TELESCOPE.primary_radius_m,
        rx_secondary_radius_m=SATELLITE_TELESCOPE.secondary_radius_m,
        receiver_efficiency=SATELLITE_RECEIVER_EFFICIENCY, distance_max_km=5000.0,
    ),
    "uplink5db": _ground_to_space("uplink5db", 5.0, 8000.0),
    "uplink11db": _ground_to_space("uplink11db", 11.0, 4000.0),
}


def get_preset(name: str) -> ScenarioPreset:
    try:
        return PRESETS[name]
    except KeyError:
        raise KeyError(f"unknown scenario {name!r}; choose from {sorted(PRESETS)}") from None


def preset_from_dict(data: dict, base: ScenarioPreset | None = None) -> ScenarioPreset:
    if "name" not in data:
        raise ValueError("scenario config needs a 'name'")
    known = {f.name for f in fields(ScenarioPreset)}
    unknown = set(data) - known
    if unknown:
        raise ValueError(f"unknown scenario keys: {sorted(unknown)}")
    if base is None:
        base = PRESETS.get(data["name"], PRESETS["downlink"])
    return replace(base, **data)


def load_scenario_file(path: str | Path, base: ScenarioPreset | None = None) -> ScenarioPreset:
    with open(path, encoding="utf-8") as fh:
        return preset_from_dict(json.load(fh), base)


def dump_scenario_file(preset: ScenarioPreset, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(preset.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
