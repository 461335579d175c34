"""
Generator configuration and its key=value file format.

    # comments and blank lines are ignored
    n_patients = 3949
    mean_states_per_patient = 8.759
    decision_noise = 0.002
    hit_event_rate = 0.02
    heparin_rate = 0.7
    seed = 20240101

Keys are GenConfig field names; missing keys keep their defaults.
"""

from __future__ import annotations

from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Any, Dict, Optional, Union

from cadet.errors import CadetIOError, ConfigError


@dataclass(frozen=True)
class GenConfig:
    """
    Synthetic cohort knobs.

    The defaults give roughly 34.6k states over 3949 patients with an
    order prior a little under 1%.
    """

    n_patients: int = 3949
    mean_states_per_patient: float = 8.759
    decision_noise: float = 0.002
    hit_event_rate: float = 0.02
    heparin_rate: float = 0.7
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_patients <= 0:
            raise ConfigError(f"n_patients must be positive, got {self.n_patients}")
        if not self.mean_states_per_patient >= 1.0:
            raise ConfigError(
                f"mean_states_per_patient must be at least 1, got {self.mean_states_per_patient}"
            )
        if not 0.0 <= self.decision_noise < 1.0:
            raise ConfigError(f"decision_noise must be in [0, 1), got {self.decision_noise}")
        for name in ("hit_event_rate", "heparin_rate"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ConfigError(f"{name} must be in [0, 1], got {value}")
        if self.seed < 0:
            raise ConfigError(f"seed must be non-negative, got {self.seed}")

    def with_seed(self, seed: Optional[int]) -> "GenConfig":
        return self if seed is None else replace(self, seed=seed)


def parse_gen_config(text: str, source: Optional[str] = None) -> GenConfig:
    """
    Raises:
        ConfigError: unknown key, malformed line or out-of-range value
    """
    types = {f.name: f.type for f in fields(GenConfig)}
    values: Dict[str, Any] = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError("expected 'key = value'", path=source, line=number)
        key, _, value = (part.strip() for part in line.partition("="))
        if key not in types:
            raise ConfigError(f"unknown key {key!r}", path=source, line=number)
        if key in values:
            raise ConfigError(f"duplicate key {key!r}", path=source, line=number)
        try:
            values[key] = int(value) if types[key] in (int, "int") else float(value)
        except ValueError:
            raise ConfigError(f"{key}: bad value {value!r}", path=source, line=number) from None
    try:
        return GenConfig(**values)
    except ConfigError as e:
        raise ConfigError(e.message, path=source) from None


def load_gen_config(path: Union[str, Path]) -> GenConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise CadetIOError(f"cannot read config: {e}", path=str(path)) from e
    return parse_gen_config(text, source=str(path))
