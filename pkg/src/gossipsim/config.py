"""Run configuration: identifiers, validation, YAML loading.

Every run is described by one :class:`SimulationConfig`.  Validation is
strict and front-loaded so that sweeps fail before any simulation starts,
with error messages naming the offending field.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Any, Mapping

import yaml

from .version import VERSION

__all__ = [
    "SCHEMA_VERSION",
    "VERSION",
    "ConfigError",
    "SimulationConfig",
    "load_config",
    "RANDOM_PULL",
    "SEQUENTIAL_PULL",
    "RANDOM_PUSH",
    "PRIORITY_PUSH",
    "INTERLEAVE",
    "ADVOCATE",
    "PROTOCOLS",
    "SOURCE_SCHEDULED",
    "HARD",
    "SOFT",
    "CONSTRAINTS",
    "UNIFORM",
    "FIXED_LISTS",
    "CONTACT_MODELS",
    "SINGLE_SOURCE",
    "ETA_SEEDED",
    "ONE_UNIQUE",
    "INITIAL_STATES",
]

SCHEMA_VERSION = 1

# Protocol identifiers (normative strings used in configs, CSVs, and the CLI).
RANDOM_PULL = "random-pull"
SEQUENTIAL_PULL = "sequential-pull"
RANDOM_PUSH = "random-push"
PRIORITY_PUSH = "priority-push"
INTERLEAVE = "interleave"
ADVOCATE = "advocate"
PROTOCOLS = (
    RANDOM_PULL,
    SEQUENTIAL_PULL,
    RANDOM_PUSH,
    PRIORITY_PUSH,
    INTERLEAVE,
    ADVOCATE,
)

# Protocols whose source pushes pieces on a fixed schedule.
SOURCE_SCHEDULED = (PRIORITY_PUSH, INTERLEAVE)

HARD = "hard"
SOFT = "soft"
CONSTRAINTS = (HARD, SOFT)

UNIFORM = "uniform"
FIXED_LISTS = "fixed-lists"
CONTACT_MODELS = (UNIFORM, FIXED_LISTS)

SINGLE_SOURCE = "single-source"
ETA_SEEDED = "eta-seeded"
ONE_UNIQUE = "one-unique-per-user"
INITIAL_STATES = (SINGLE_SOURCE, ETA_SEEDED, ONE_UNIQUE)

_MAX_SEED = 2**64


class ConfigError(ValueError):
    """A configuration value is missing, malformed, or inconsistent."""


@dataclass
class SimulationConfig:
    """Complete description of one simulation run."""

    n: int
    k: int
    protocol: str
    constraint: str = HARD
    contact_model: str = UNIFORM
    contact_list_size: int | None = None
    initial_state: str = SINGLE_SOURCE
    eta: float | None = None
    spacing: int = 1
    epsilon: float = 0.1
    seed: int = 0
    max_slots: int | None = None
    record_trace: bool = False

    def validate(self) -> None:
        """Raise :class:`ConfigError` on the first inconsistent field."""
        if not isinstance(self.n, int) or self.n < 2:
            raise ConfigError(f"n: need an integer >= 2, got {self.n!r}")
        if not isinstance(self.k, int) or self.k < 1:
            raise ConfigError(f"k: need an integer >= 1, got {self.k!r}")
        if self.protocol not in PROTOCOLS:
            raise ConfigError(
                f"protocol: {self.protocol!r} is not one of {PROTOCOLS}"
            )
        if self.constraint not in CONSTRAINTS:
            raise ConfigError(
                f"constraint: {self.constraint!r} is not one of {CONSTRAINTS}"
            )
        if self.contact_model not in CONTACT_MODELS:
            raise ConfigError(
                f"contact_model: {self.contact_model!r} is not one of "
                f"{CONTACT_MODELS}"
            )
        if self.contact_model == FIXED_LISTS:
            m = self.contact_list_size
            if not isinstance(m, int) or not 1 <= m <= self.n - 1:
                raise ConfigError(
                    "contact_list_size: fixed-lists needs an integer in "
                    f"[1, n-1] = [1, {self.n - 1}], got {m!r}"
                )
        elif self.contact_list_size is not None:
            raise ConfigError(
                "contact_list_size: only meaningful with the fixed-lists "
                "contact model"
            )
        if self.initial_state not in INITIAL_STATES:
            raise ConfigError(
                f"initial_state: {self.initial_state!r} is not one of "
                f"{INITIAL_STATES}"
            )
        if self.initial_state == ETA_SEEDED:
            if not isinstance(self.eta, (int, float)) or not 0 < self.eta <= 1:
                raise ConfigError(
                    f"eta: eta-seeded needs a value in (0, 1], got {self.eta!r}"
                )
        elif self.eta is not None:
            raise ConfigError("eta: only meaningful with the eta-seeded start")
        if self.initial_state == ONE_UNIQUE and self.k != self.n:
            raise ConfigError(
                "initial_state: one-unique-per-user requires k == n, got "
                f"k={self.k}, n={self.n}"
            )
        if not isinstance(self.spacing, int) or self.spacing < 1:
            raise ConfigError(
                f"spacing: need an integer >= 1, got {self.spacing!r}"
            )
        if self.spacing != 1 and self.protocol != PRIORITY_PUSH:
            raise ConfigError(
                "spacing: only the priority-push protocol takes a release "
                "spacing other than 1"
            )
        if not 0 < self.epsilon < 1:
            raise ConfigError(
                f"epsilon: need a value in (0, 1), got {self.epsilon!r}"
            )
        if self.protocol == ADVOCATE and self.initial_state != ONE_UNIQUE:
            raise ConfigError(
                "protocol: advocate requires the one-unique-per-user start"
            )
        if self.protocol in SOURCE_SCHEDULED and self.initial_state != SINGLE_SOURCE:
            raise ConfigError(
                f"protocol: {self.protocol} requires the single-source start"
            )
        if not isinstance(self.seed, int) or not 0 <= self.seed < _MAX_SEED:
            raise ConfigError(
                f"seed: need an integer in [0, 2**64), got {self.seed!r}"
            )
        if self.max_slots is not None and (
            not isinstance(self.max_slots, int) or self.max_slots < 1
        ):
            raise ConfigError(
                f"max_slots: need an integer >= 1 or null, got {self.max_slots!r}"
            )

    def effective_max_slots(self) -> int:
        """Slot cap for this run.

        The default is generous: the protocols studied here complete in
        O(k + log n) to O(k log n) slots, so a cap of ``50 (k + log2 n) + 10 n``
        sits far above every completion time and analytic bound of interest
        while still terminating runs that genuinely stall.
        """
        if self.max_slots is not None:
            return self.max_slots
        return 50 * (self.k + math.ceil(math.log2(self.n))) + 10 * self.n

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_mapping(cls, data: Mapping[str, Any], where: str = "config") -> "SimulationConfig":
        """Build and validate a config from a plain mapping.

        Unknown keys are rejected so that typos fail loudly instead of
        silently running the defaults.
        """
        if not isinstance(data, Mapping):
            raise ConfigError(f"{where}: expected a mapping, got {type(data).__name__}")
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"{where}: unknown keys {unknown}")
        missing = [name for name in ("n", "k", "protocol") if name not in data]
        if missing:
            raise ConfigError(f"{where}: missing required keys {missing}")
        config = cls(**dict(data))
        config.validate()
        return config


def load_config(path: str | Path) -> SimulationConfig:
    """Load one run configuration from a YAML file.

    The file must carry ``schema_version`` matching :data:`SCHEMA_VERSION`;
    the remaining keys are :class:`SimulationConfig` fields.
    """
    path = Path(path)
    try:
        raw = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: invalid YAML: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: expected a mapping at top level")
    version = raw.pop("schema_version", None)
    if version != SCHEMA_VERSION:
        raise ConfigError(
            f"{path}: schema_version must be {SCHEMA_VERSION}, got {version!r}"
        )
    return SimulationConfig.from_mapping(raw, where=str(path))
