"""Deterministic synthetic HIT-style cohort generator."""

from .schema import DEFAULT_SCHEMA, FEATURE_NAMES
from .config import GenConfig, load_gen_config, parse_gen_config
from .features import PatientTrajectory, extract_features
from .generator import (
    GeneratedCohort,
    SimulatedPatient,
    generate,
    order_prior,
    patient_id,
    policy_decide,
    simulate_patient,
)

__all__ = [
    "DEFAULT_SCHEMA",
    "FEATURE_NAMES",
    "GenConfig",
    "load_gen_config",
    "parse_gen_config",
    "PatientTrajectory",
    "extract_features",
    "GeneratedCohort",
    "SimulatedPatient",
    "generate",
    "order_prior",
    "patient_id",
    "policy_decide",
    "simulate_patient",
]
