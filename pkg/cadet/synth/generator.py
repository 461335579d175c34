"""
Synthetic post-operative cohort with a known ordering policy.

Every patient gets an independent random stream derived from
(seed, patient number), so patients can be simulated in any order or in
parallel and the output is still byte-identical.

Platelets follow a post-operative dip and recovery. A small fraction of
patients develop a HIT-like episode: under heparin, platelets fall by a
quarter to a third per result for four results, and heparin is stopped
two results after the first state at which the policy orders the test.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np
import pandas as pd

from cadet.data.model import Dataset, Decision, Example, FeatureSchema, PatientState
from cadet.synth.config import GenConfig
from cadet.synth.features import PatientTrajectory, extract_features
from cadet.synth.schema import DEFAULT_SCHEMA

logger = logging.getLogger(__name__)

# policy thresholds
DROP_ORDER = 0.5
LOW_PLATELETS = 100.0
LONG_EXPOSURE_HOURS = 96.0

# cohort shape
PLATELET_MEAN, PLATELET_SD, PLATELET_RANGE = 220.0, 55.0, (110.0, 450.0)
HGB_MEAN, HGB_SD, HGB_RANGE = 11.0, 1.4, (7.5, 15.5)
STEP_HOURS = (12.0, 30.0)
LAB_NOISE_SD, LAB_NOISE_CAP = 0.03, 0.06
RECOVERY_RATE = 0.35
CONTINUOUS_HEPARIN = 0.7
HIT_DECLINE = (0.62, 0.75)
HIT_DECLINE_STEPS = 4

TRACE_COLUMNS = ["patient_id", "state_index", "policy_decision", "noise_applied"]


@dataclass(frozen=True)
class SimulatedPatient:
    trajectory: PatientTrajectory
    states: Tuple[PatientState, ...]
    policy: Tuple[Decision, ...]
    noise: Tuple[bool, ...]
    hit: bool

    @property
    def decisions(self) -> Tuple[Decision, ...]:
        return tuple(d.flipped() if n else d for d, n in zip(self.policy, self.noise))


@dataclass(frozen=True)
class GeneratedCohort:
    dataset: Dataset
    trace: pd.DataFrame
    hit_patients: int


def patient_id(number: int) -> str:
    return f"P{number:05d}"


def policy_decide(state: PatientState, schema: FeatureSchema = DEFAULT_SCHEMA) -> Decision:
    """
    The cohort's ground-truth ordering policy, before decision noise:
    order iff on heparin and (platelets dropped by half from the first
    value, or platelets below 100 after 96 hours of heparin).
    """
    f = state.features
    if f[schema.index("on_heparin")] < 1:
        return Decision.NO_ORDER
    if f[schema.index("plt_drop_from_first")] >= DROP_ORDER:
        return Decision.ORDER
    if (
        f[schema.index("plt_recent_0")] < LOW_PLATELETS
        and f[schema.index("heparin_hours")] >= LONG_EXPOSURE_HOURS
    ):
        return Decision.ORDER
    return Decision.NO_ORDER


def _noise(rng: np.random.Generator, n: int) -> np.ndarray:
    return 1.0 + np.clip(rng.normal(0.0, LAB_NOISE_SD, n), -LAB_NOISE_CAP, LAB_NOISE_CAP)


def _dip_and_recover(
    rng: np.random.Generator, n: int, start: float, depth: Tuple[float, float], target: Tuple[float, float]
) -> np.ndarray:
    """Smooth course: linear dip to a nadir at step 1-3, then geometric recovery."""
    dip = rng.uniform(*depth)
    nadir_step = int(rng.integers(1, 4))
    goal = start * rng.uniform(*target)
    level = np.empty(n)
    for t in range(n):
        if t <= nadir_step:
            level[t] = start * (1.0 - dip * t / nadir_step)
        else:
            level[t] = level[t - 1] + RECOVERY_RATE * (goal - level[t - 1])
    return level


def simulate_patient(number: int, config: GenConfig) -> SimulatedPatient:
    """One patient, fully determined by (config.seed, number)."""
    rng = np.random.default_rng([config.seed, number])
    n = 1 + int(rng.poisson(config.mean_states_per_patient - 1.0))

    # draws happen unconditionally and in a fixed order
    hit_draw, heparin_draw = rng.random(2)
    hit = bool(hit_draw < config.hit_event_rate)
    heparin = hit or bool(heparin_draw < config.heparin_rate)
    heparin_start = int(rng.integers(0, 2))
    continuous = bool(rng.random() < CONTINUOUS_HEPARIN)
    course = int(rng.integers(2, 6))
    onset = heparin_start + int(rng.integers(3, 6))
    declines = rng.uniform(*HIT_DECLINE, size=HIT_DECLINE_STEPS)
    if hit:
        n = max(n, onset + 5)

    plt0 = float(np.clip(rng.normal(PLATELET_MEAN, PLATELET_SD), *PLATELET_RANGE))
    hgb0 = float(np.clip(rng.normal(HGB_MEAN, HGB_SD), *HGB_RANGE))
    times = np.concatenate([[0.0], np.cumsum(rng.uniform(*STEP_HOURS, size=n - 1))])
    plt_level = _dip_and_recover(rng, n, plt0, (0.05, 0.40), (0.9, 1.3))
    hgb_level = _dip_and_recover(rng, n, hgb0, (0.03, 0.15), (0.95, 1.05))
    plt_noise = _noise(rng, n)
    hgb_noise = _noise(rng, n)
    decision_draws = rng.random(n)

    if hit:
        factor = np.ones(n)
        for k, d in enumerate(declines):
            if onset + k < n:
                factor[onset + k:] *= d
        plt_level = plt_level * factor
    platelets = plt_level * plt_noise
    hemoglobin = hgb_level * hgb_noise

    stop = n
    if heparin and not continuous and not hit:
        stop = min(n, heparin_start + course)
    if hit:
        first = platelets[0]
        for t in range(onset, n):
            if (first - platelets[t]) / first >= DROP_ORDER:
                stop = min(n, t + 2)
                break
    on = np.zeros(n, dtype=bool)
    if heparin:
        on[heparin_start:stop] = True
    hours = np.where(on, times - times[min(heparin_start, n - 1)], 0.0)

    trajectory = PatientTrajectory(
        patient_id=patient_id(number),
        times=tuple(times.tolist()),
        platelets=tuple(platelets.tolist()),
        hemoglobin=tuple(hemoglobin.tolist()),
        on_heparin=tuple(bool(v) for v in on),
        heparin_hours=tuple(hours.tolist()),
    )
    states = tuple(extract_features(trajectory, t) for t in range(n))
    return SimulatedPatient(
        trajectory=trajectory,
        states=states,
        policy=tuple(policy_decide(s) for s in states),
        noise=tuple(bool(u < config.decision_noise) for u in decision_draws),
        hit=hit,
    )


def generate(config: GenConfig, threads: int = 1) -> GeneratedCohort:
    """
    Simulate the cohort: a dataset over the default schema plus the
    policy trace (decision before noise, and whether noise flipped it).
    """
    numbers = range(1, config.n_patients + 1)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            patients: List[SimulatedPatient] = list(
                pool.map(lambda k: simulate_patient(k, config), numbers)
            )
    else:
        patients = [simulate_patient(k, config) for k in numbers]

    examples = []
    trace_rows = []
    for patient in patients:
        for state, policy, noisy, decision in zip(
            patient.states, patient.policy, patient.noise, patient.decisions
        ):
            examples.append(Example(state=state, decision=decision))
            trace_rows.append((state.patient_id, state.state_index, int(policy), int(noisy)))

    dataset = Dataset(schema=DEFAULT_SCHEMA, examples=tuple(examples))
    trace = pd.DataFrame(trace_rows, columns=TRACE_COLUMNS)
    hit_patients = sum(p.hit for p in patients)
    _, orders = dataset.class_counts()
    logger.info(
        "generated %d states for %d patients (%d HIT episodes, order prior %.4f)",
        len(dataset), config.n_patients, hit_patients, orders / max(len(dataset), 1),
    )
    return GeneratedCohort(dataset=dataset, trace=trace, hit_patients=hit_patients)


def order_prior(dataset: Dataset) -> float:
    """Fraction of states with an order decision."""
    if len(dataset) == 0:
        return 0.0
    return dataset.class_counts()[1] / len(dataset)
