"""Satellite free-space QKD link budgets and asymptotic key rates."""
from .adversary import IrudParams, mutual_info_bb84, mutual_info_sarg04, solve_irud_strategy
from .channel import (
    LinkScenario,
    TelescopeGeometry,
    db_from_transmittance,
    diffraction_transmittance,
    total_transmittance,
    transmittance_from_db,
)
from .estimator import IntensityOptimizer, LinkTransmittance
from .keyrate import DetectionModel, Protocol, rate_for
from .optimizer import SweepSpec, critical_distance, optimize_at_distance, sweep_curve
from .presets import PRESETS, get_preset
from .reproduce import eve_crossing_loss_db
from .source import SourceConfig, poisson_pn, poisson_tail

__version__ = "0.1.0"
