"""
Shared domain types for measurement campaigns: schedule actions, samples, campaigns and the error hierarchy
"""

import enum

from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

VariantId = str


class ValidationError(ValueError):
    """Bad input handed to the harness."""


class ConfigurationError(ValidationError):
    pass


class UnknownVariantError(ValidationError):

    def __init__(self, variant):
        super().__init__(f"Unknown variant: {variant!r}")
        self.variant = variant


class FormatError(ValidationError):

    def __init__(self, message, line=None, column=None):
        where = f"line {line}: " if line is not None else ''
        super().__init__(where + message)
        self.line = line
        self.column = column


class StructureMismatchError(ValidationError):
    pass


class BackendError(RuntimeError):
    """A measurement backend could not produce a reading."""


class DischargedError(BackendError):
    pass


class ExhaustedError(BackendError):
    pass


class CommandSpawnError(BackendError):
    pass


class CommandTimeoutError(BackendError):
    pass


class CommandFailedError(BackendError):

    def __init__(self, message, output=''):
        super().__init__(message)
        self.output = output


class ParseError(BackendError):

    def __init__(self, pattern, output=''):
        super().__init__(f"Pattern {pattern!r} not found in command output")
        self.pattern = pattern
        self.output = output


class BatteryFloorError(RuntimeError):

    def __init__(self, slot_index, battery_level, battery_floor):
        super().__init__(
            f"Battery at {battery_level:.2f}% is below the {battery_floor:g}% floor before slot {slot_index}"
        )
        self.slot_index = slot_index
        self.battery_level = battery_level
        self.battery_floor = battery_floor


class CampaignAborted(RuntimeError):

    def __init__(self, campaign, cause):
        super().__init__(f"Campaign aborted after {len(campaign.samples)} samples: {cause}")
        self.campaign = campaign
        self.cause = cause


class Approach(enum.Enum):
    A1 = 'a1'
    A2 = 'a2'
    A3 = 'a3'
    A4 = 'a4'
    R3 = 'r3'

    @classmethod
    def parse(cls, name):
        try:
            return cls(str(name).strip().lower())
        except ValueError:
            choices = ', '.join(a.value for a in cls)
            raise ConfigurationError(f"Unknown approach {name!r}, expected one of {choices}") from None


class ActionKind(enum.Enum):
    SETUP = 'SETUP'
    RUN = 'RUN'


@dataclass(frozen=True)
class ScheduleAction:
    kind: ActionKind
    variant: Optional[VariantId] = None

    def __post_init__(self):
        if self.kind is ActionKind.SETUP and self.variant is not None:
            raise ValidationError("Setup actions carry no variant")
        if self.kind is ActionKind.RUN and not self.variant:
            raise ValidationError("Run actions need a variant")

    @classmethod
    def setup(cls):
        return cls(ActionKind.SETUP)

    @classmethod
    def run(cls, variant):
        return cls(ActionKind.RUN, variant)

    def __str__(self):
        return 'SETUP' if self.kind is ActionKind.SETUP else f"RUN {self.variant}"


@dataclass(frozen=True)
class Schedule:
    actions: Tuple[ScheduleAction, ...]
    approach: Approach
    variants: Tuple[VariantId, ...]
    n_samples: int
    pi: int = 1

    def __post_init__(self):
        if not self.actions or self.actions[0].kind is not ActionKind.SETUP:
            raise ValidationError("A schedule must start with a setup action")
        counts = {v: 0 for v in self.variants}
        for action in self.actions:
            if action.kind is ActionKind.RUN:
                if action.variant not in counts:
                    raise UnknownVariantError(action.variant)
                counts[action.variant] += 1
        unbalanced = {v: c for v, c in counts.items() if c != self.n_samples}
        if unbalanced:
            raise ValidationError(f"Variants not run exactly {self.n_samples} times: {unbalanced}")

    @property
    def runs(self) -> List[ScheduleAction]:
        return [a for a in self.actions if a.kind is ActionKind.RUN]


@dataclass(frozen=True)
class Reading:
    """What a backend returns for one run: energy plus whatever metadata it can observe."""
    energy: float
    runtime: Optional[float] = None
    battery_level: Optional[float] = None
    voltage: Optional[float] = None
    active_processes: Optional[int] = None
    memory_use: Optional[float] = None
    cpu_utilisation: Optional[float] = None
    timestamp: Optional[float] = None


@dataclass(frozen=True)
class MeasurementSample:
    variant: VariantId
    reboot_index: int
    round_index: int
    slot_index: int
    energy: float
    runtime: Optional[float] = None
    battery_level: Optional[float] = None
    voltage: Optional[float] = None
    active_processes: Optional[int] = None
    memory_use: Optional[float] = None
    cpu_utilisation: Optional[float] = None
    timestamp: Optional[float] = None

    def __post_init__(self):
        if self.energy < 0:
            raise ValidationError(f"Negative energy {self.energy} for {self.variant}")
        if self.battery_level is not None and not 0 <= self.battery_level <= 100:
            raise ValidationError(f"Battery level {self.battery_level} outside [0, 100]")


@dataclass(frozen=True)
class Campaign:
    schedule: Schedule
    samples: Tuple[MeasurementSample, ...] = ()
    backend_descriptor: str = ''
    seed: Optional[int] = None
    created_at: str = ''
    error: Optional[str] = None

    @property
    def complete(self) -> bool:
        return self.error is None and len(self.samples) == len(self.schedule.runs)

    def energies(self, variant) -> List[float]:
        return [s.energy for s in samples_of(self, variant)]


def samples_of(campaign: Campaign, variant: VariantId) -> List[MeasurementSample]:
    """Samples of one variant in execution order."""
    if variant not in campaign.schedule.variants:
        raise UnknownVariantError(variant)
    return [s for s in campaign.samples if s.variant == variant]


def group_samples(campaign: Campaign) -> Dict[VariantId, List[MeasurementSample]]:
    groups = {v: [] for v in campaign.schedule.variants}
    for sample in campaign.samples:
        groups[sample.variant].append(sample)
    return groups


def check_variants(variants) -> Tuple[VariantId, ...]:
    variants = tuple(variants)
    if not variants:
        raise ConfigurationError("At least one variant is required")
    bad = [v for v in variants if not isinstance(v, str) or not v or ',' in v or any(c.isspace() for c in v)]
    if bad:
        raise ConfigurationError(f"Variant names must be non-empty labels without commas or spaces: {bad}")
    seen = set()
    dupes = sorted({v for v in variants if v in seen or seen.add(v)})
    if dupes:
        raise ConfigurationError(f"Duplicate variants: {dupes}")
    return variants
