"""
Executes schedules against measurement backends

Backends expose setup(), run(variant) -> Reading and descriptor(); `battery_level` is optional and
feeds the floor guard. Execution is strictly sequential, in schedule order.
"""

import re
import time
import shlex
import logging
import subprocess

from abc import ABC, abstractmethod
from dataclasses import dataclass, replace
from datetime import datetime, timezone
from typing import Optional, Tuple

from helper.model import (
    ActionKind,
    BackendError,
    BatteryFloorError,
    Campaign,
    CampaignAborted,
    CommandFailedError,
    CommandSpawnError,
    CommandTimeoutError,
    ConfigurationError,
    ExhaustedError,
    MeasurementSample,
    ParseError,
    StructureMismatchError,
    Reading,
    Schedule,
    ValidationError,
    VariantId,
)
from helper.scheduler import iter_blocks
from helper.simulator import DeviceParams, SimulatedDevice

logger = logging.getLogger(__name__)

FLOAT_PATTERN = r'([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)'


class MeasurementBackend(ABC):

    @abstractmethod
    def setup(self):
        ...

    @abstractmethod
    def run(self, variant: VariantId) -> Reading:
        ...

    @abstractmethod
    def descriptor(self) -> str:
        ...

    @property
    def battery_level(self) -> Optional[float]:
        return None


class SimulatorBackend(MeasurementBackend):

    def __init__(self, params: DeviceParams, seed: int):
        self.device = SimulatedDevice(params, seed)

    def setup(self):
        self.device.setup()

    def run(self, variant):
        return self.device.run(variant)

    def descriptor(self):
        return self.device.descriptor()

    @property
    def battery_level(self):
        return self.device.battery_level


@dataclass(frozen=True)
class Corpus:
    """Repeated readings of one true variant, split by the reboot that preceded them."""
    platform_label: str
    reboots: Tuple[Tuple[float, ...], ...]

    def __post_init__(self):
        if not self.reboots:
            raise ValidationError(f"Corpus {self.platform_label!r} has no reboot blocks")
        empty = [i for i, block in enumerate(self.reboots) if not block]
        if empty:
            raise ValidationError(f"Corpus {self.platform_label!r} has empty reboot blocks {empty}")

    @property
    def readings(self) -> Tuple[float, ...]:
        return tuple(e for block in self.reboots for e in block)

    @property
    def shape(self) -> Tuple[int, ...]:
        return tuple(len(block) for block in self.reboots)


class ReplayBackend(MeasurementBackend):
    """Replays a corpus: setup moves to the next reboot block, run returns its next reading."""

    def __init__(self, corpus: Corpus):
        self.corpus = corpus
        self.block = -1
        self.position = 0

    def setup(self):
        if self.block + 1 >= len(self.corpus.reboots):
            raise ExhaustedError(
                f"Corpus {self.corpus.platform_label!r} has only {len(self.corpus.reboots)} reboot blocks"
            )
        self.block += 1
        self.position = 0

    def run(self, variant):
        if self.block < 0:
            raise BackendError("Replay run requested before the first setup")
        readings = self.corpus.reboots[self.block]
        if self.position >= len(readings):
            raise ExhaustedError(
                f"Reboot block {self.block} of {self.corpus.platform_label!r} has only {len(readings)} readings"
            )
        energy = readings[self.position]
        self.position += 1
        return Reading(energy=energy)

    def descriptor(self):
        return f"replay:{self.corpus.platform_label}"


class ExternalCommandBackend(MeasurementBackend):
    """
    Runs shell commands against a real meter. `run_cmd_template` holds a `{variant}` placeholder and
    `parse_pattern` is a regex whose first group is the energy in joules; the shorthand `(float)`
    stands for a floating point number.
    """

    def __init__(self, setup_cmd, run_cmd_template, parse_pattern, timeout=600.0):
        if not setup_cmd or not run_cmd_template or not parse_pattern:
            raise ConfigurationError("External backend needs setup, run and parse settings")
        self.setup_cmd = setup_cmd
        self.run_cmd_template = run_cmd_template
        self.parse_pattern = parse_pattern
        self.regex = re.compile(parse_pattern.replace('(float)', FLOAT_PATTERN))
        self.timeout = timeout
        self.ready = False

    def _execute(self, command):
        try:
            proc = subprocess.run(shlex.split(command), capture_output=True, text=True, timeout=self.timeout)
        except subprocess.TimeoutExpired:
            raise CommandTimeoutError(f"Command timed out after {self.timeout}s: {command}") from None
        except OSError as err:
            raise CommandSpawnError(f"Could not start {command!r}: {err}") from err
        output = proc.stdout + proc.stderr
        if proc.returncode != 0:
            raise CommandFailedError(f"Command exited with {proc.returncode}: {command}", output=output)
        return output

    def setup(self):
        self._execute(self.setup_cmd)
        self.ready = True

    def run(self, variant):
        if not self.ready:
            raise BackendError("External command run requested before the first setup")
        start = time.perf_counter()
        output = self._execute(self.run_cmd_template.replace('{variant}', variant))
        runtime = time.perf_counter() - start
        match = self.regex.search(output)
        if match is None:
            raise ParseError(self.parse_pattern, output)
        return Reading(energy=float(match.group(1)), runtime=runtime)

    def descriptor(self):
        return f"exec:{self.run_cmd_template}"


def replay_backend(corpus: Corpus) -> ReplayBackend:
    return ReplayBackend(corpus)


def check_replay_structure(schedule: Schedule, corpus: Corpus):
    """Fail before running when the corpus cannot cover the schedule's setups and runs."""
    blocks = iter_blocks(schedule)
    if len(blocks) > len(corpus.reboots):
        raise StructureMismatchError(
            f"Schedule has {len(blocks)} setups, corpus {corpus.platform_label!r} has {len(corpus.reboots)} reboot blocks"
        )
    short = [(i, len(b), len(corpus.reboots[i])) for i, b in enumerate(blocks) if len(b) > len(corpus.reboots[i])]
    if short:
        i, wanted, have = short[0]
        raise StructureMismatchError(f"Setup {i} needs {wanted} readings, reboot block {i} has {have}")


def external_command_backend(setup_cmd, run_cmd_template, parse_pattern, timeout=600.0):
    return ExternalCommandBackend(setup_cmd, run_cmd_template, parse_pattern, timeout=timeout)


def _now():
    return datetime.now(timezone.utc).isoformat(timespec='seconds')


def execute_campaign(schedule: Schedule,
                     backend: MeasurementBackend,
                     battery_floor: Optional[float] = 20.0,
                     seed: Optional[int] = None,
                     created_at: Optional[str] = None) -> Campaign:
    """
    Run every schedule action in order. On failure raises CampaignAborted carrying the samples
    collected so far; a battery below `battery_floor` before a run is a BatteryFloorError cause.
    `battery_floor=None` disables the guard.
    """
    campaign = Campaign(
        schedule=schedule,
        backend_descriptor=backend.descriptor(),
        seed=seed,
        created_at=created_at if created_at is not None else _now(),
    )
    samples = []
    reboot_index = -1
    repeats = {}
    slot = 0
    elapsed = 0.0

    logger.info(f"Executing {schedule.approach.value} campaign: {len(schedule.runs)} runs on {campaign.backend_descriptor}")
    if battery_floor is None:
        logger.warning("Running without the battery floor guard")
    try:
        for action in schedule.actions:
            if action.kind is ActionKind.SETUP:
                backend.setup()
                reboot_index += 1
                repeats = {}
                logger.debug(f"Setup {reboot_index}")
                continue

            level = backend.battery_level
            if battery_floor is not None and level is not None and level < battery_floor:
                raise BatteryFloorError(slot, level, battery_floor)

            reading = backend.run(action.variant)
            timestamp = reading.timestamp if reading.timestamp is not None else elapsed
            elapsed += reading.runtime or 0.0
            samples.append(MeasurementSample(
                variant=action.variant,
                reboot_index=reboot_index,
                round_index=repeats.get(action.variant, 0),
                slot_index=slot,
                energy=reading.energy,
                runtime=reading.runtime,
                battery_level=reading.battery_level,
                voltage=reading.voltage,
                active_processes=reading.active_processes,
                memory_use=reading.memory_use,
                cpu_utilisation=reading.cpu_utilisation,
                timestamp=timestamp,
            ))
            repeats[action.variant] = repeats.get(action.variant, 0) + 1
            slot += 1
    except (BackendError, BatteryFloorError, ValidationError) as err:
        partial = replace(campaign, samples=tuple(samples), error=f"{type(err).__name__}: {err}")
        logger.error(f"Campaign aborted at slot {slot}: {err}")
        raise CampaignAborted(partial, err) from err

    logger.info(f"Campaign finished with {len(samples)} samples")
    return replace(campaign, samples=tuple(samples))
