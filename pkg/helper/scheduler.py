"""
Measurement schedules for the five validation approaches

A1  setup, AAAA, BBBB, ...            every variant back to back on one charge
A2  setup, AAAA, setup, BBBB, ...     one charge per variant
A3  setup, ABCD, setup, ABCD, ...     one round per charge
A4  setup, ABCD, ABCD, ...            every round on one charge
R3  setup, ABCD x pi, setup, BCDA x pi, ...   round robin, rotated left after every setup
"""

import logging

from collections import Counter
from dataclasses import dataclass
from typing import Dict, List, Sequence, Tuple

from helper.model import (
    ActionKind,
    Approach,
    ConfigurationError,
    FormatError,
    Schedule,
    ScheduleAction,
    VariantId,
    check_variants,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ScheduleConfig:
    variants: Tuple[VariantId, ...]
    n_samples: int
    pi: int = 1
    battery_floor: float = 20.0

    def __post_init__(self):
        object.__setattr__(self, 'variants', check_variants(self.variants))
        if int(self.n_samples) != self.n_samples or self.n_samples < 1:
            raise ConfigurationError(f"n_samples must be a positive integer, got {self.n_samples}")
        if int(self.pi) != self.pi or self.pi < 1:
            raise ConfigurationError(f"pi must be a positive integer, got {self.pi}")
        if not 0 <= self.battery_floor < 100:
            raise ConfigurationError(f"battery_floor must be in [0, 100), got {self.battery_floor}")

    def check_r3(self):
        # one rotation per reboot, so n_samples is pinned to pi * N
        expected = self.pi * len(self.variants)
        if self.n_samples != expected:
            raise ConfigurationError(
                f"R3 needs n_samples = pi x number of variants = {self.pi} x {len(self.variants)} = {expected}, "
                f"got {self.n_samples}"
            )


@dataclass(frozen=True)
class ScheduleSummary:
    setup_count: int
    runs_per_variant: Dict[VariantId, int]
    rounds_per_setup: Tuple[int, ...]
    total_runs: int
    position_coverage: Dict[VariantId, Dict[int, int]]


def rotate_left(sequence: Sequence, k: int) -> list:
    if k < 0:
        raise ValueError(f"Rotation must be non-negative, got {k}")
    items = list(sequence)
    if not items:
        return items
    k %= len(items)
    return items[k:] + items[:k]


def _setup():
    return ScheduleAction.setup()


def _runs(variants):
    return [ScheduleAction.run(v) for v in variants]


def generate_schedule(config: ScheduleConfig, approach) -> Schedule:
    approach = Approach.parse(approach.value if isinstance(approach, Approach) else approach)
    variants = list(config.variants)
    n = config.n_samples
    actions = []

    if approach is Approach.A1:
        actions.append(_setup())
        for v in variants:
            actions.extend(_runs([v] * n))
    elif approach is Approach.A2:
        for v in variants:
            actions.append(_setup())
            actions.extend(_runs([v] * n))
    elif approach is Approach.A3:
        for _ in range(n):
            actions.append(_setup())
            actions.extend(_runs(variants))
    elif approach is Approach.A4:
        actions.append(_setup())
        for _ in range(n):
            actions.extend(_runs(variants))
    else:
        config.check_r3()
        for r in range(len(variants)):
            actions.append(_setup())
            order = rotate_left(variants, r)
            for _ in range(config.pi):
                actions.extend(_runs(order))

    schedule = Schedule(
        actions=tuple(actions),
        approach=approach,
        variants=tuple(variants),
        n_samples=n,
        pi=config.pi,
    )
    logger.debug(f"Generated {approach.value} schedule with {len(actions)} actions")
    return schedule


def iter_blocks(schedule: Schedule) -> List[List[VariantId]]:
    """Run variants grouped by the setup that precedes them."""
    blocks = []
    for action in schedule.actions:
        if action.kind is ActionKind.SETUP:
            blocks.append([])
        else:
            blocks[-1].append(action.variant)
    return blocks


def schedule_summary(schedule: Schedule) -> ScheduleSummary:
    blocks = iter_blocks(schedule)
    runs = Counter(a.variant for a in schedule.runs)
    coverage = {v: {} for v in schedule.variants}
    rounds = []
    width = len(schedule.variants)

    for block in blocks:
        per_block = Counter(block)
        rounds.append(max(per_block.values()) if per_block else 0)
        for position, variant in enumerate(block):
            within = position % width
            coverage[variant][within] = coverage[variant].get(within, 0) + 1

    return ScheduleSummary(
        setup_count=len(blocks),
        runs_per_variant={v: runs.get(v, 0) for v in schedule.variants},
        rounds_per_setup=tuple(rounds),
        total_runs=sum(runs.values()),
        position_coverage=coverage,
    )


def format_schedule(schedule: Schedule) -> str:
    lines = [
        f"# approach: {schedule.approach.value}",
        f"# variants: {','.join(schedule.variants)}",
        f"# n_samples: {schedule.n_samples}",
        f"# pi: {schedule.pi}",
    ]
    lines.extend(str(action) for action in schedule.actions)
    return '\n'.join(lines) + '\n'


def parse_schedule(text: str) -> Schedule:
    header = {}
    actions = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith('#'):
            key, sep, value = line[1:].partition(':')
            if not sep:
                raise FormatError(f"Malformed header {raw!r}", line=lineno)
            header[key.strip()] = value.strip()
        elif line == 'SETUP':
            actions.append(ScheduleAction.setup())
        elif line.startswith('RUN '):
            actions.append(ScheduleAction.run(line[4:].strip()))
        else:
            raise FormatError(f"Expected 'SETUP' or 'RUN <variant>', got {raw!r}", line=lineno)

    missing = [k for k in ('approach', 'variants', 'n_samples', 'pi') if k not in header]
    if missing:
        raise FormatError(f"Missing schedule header(s): {', '.join(missing)}")
    try:
        n_samples = int(header['n_samples'])
        pi = int(header['pi'])
    except ValueError as err:
        raise FormatError(f"Bad numeric header: {err}") from None

    return Schedule(
        actions=tuple(actions),
        approach=Approach.parse(header['approach']),
        variants=check_variants(header['variants'].split(',')),
        n_samples=n_samples,
        pi=pi,
    )
