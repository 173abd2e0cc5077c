"""Transmission-line model of varactor-tuned reflective intelligent surfaces."""
from .cell import (
    IncidentWave,
    ModelOptions,
    Polarization,
    ReflectionSample,
    UnitCellDesign,
    VaractorModel,
    reflection_coefficient,
)
from .estimators import PhaseSynthesizer, ReflectionModel
from .link import LinkScenario, PlaneSpec, field_map, received_power
from .synthesis import build_lookup_table, capacitance_for_phase, ideal_phase_profile, synthesize_surface

__version__ = "0.1.0"
