"""
Protocol quality measurements

Specificity: a corpus of one true variant is split into pseudo-variants the way each approach would
have sampled it; every significant pairwise difference is a false positive.
Sensitivity: each variant is tested against a baseline with a right-tailed rank-sum test and A12.
"""

import logging

import numpy as np

from dataclasses import dataclass
from typing import Dict, List, Sequence, Tuple

from helper.model import (
    Approach,
    Campaign,
    StructureMismatchError,
    UnknownVariantError,
    ValidationError,
    VariantId,
)
from helper.runner import Corpus
from helper.scheduler import ScheduleConfig, generate_schedule, iter_blocks
from helper.stats import MEDIUM_EFFECT, Alternative, Method, a12, wilcoxon_rank_sum

logger = logging.getLogger(__name__)

DEFAULT_ALPHA = 0.05
# approaches whose setups line up with corpus reboots
REBOOT_ALIGNED = (Approach.A2, Approach.A3, Approach.R3)


@dataclass(frozen=True)
class GroupingResult:
    approach: Approach
    groups: Dict[str, Tuple[float, ...]]
    provenance: Dict[str, Tuple[Tuple[int, int], ...]]

    @property
    def labels(self) -> List[str]:
        return list(self.groups)


@dataclass(frozen=True)
class SpecificityMatrix:
    labels: Tuple[str, ...]
    p_values: np.ndarray
    fp_mask: np.ndarray
    alpha: float

    @property
    def false_positives(self) -> int:
        return int(np.triu(self.fp_mask, k=1).sum())

    @property
    def pair_count(self) -> int:
        n = len(self.labels)
        return n * (n - 1) // 2


@dataclass(frozen=True)
class CountMatrix:
    labels: Tuple[str, ...]
    counts: np.ndarray

    @property
    def total(self) -> int:
        return int(np.triu(self.counts, k=1).sum())


@dataclass(frozen=True)
class SensitivityRow:
    approach: Approach
    median_es: float
    count_es_ge_064: int
    count_p_le_005: int
    per_variant: Tuple[Tuple[VariantId, float, float], ...]


def pseudo_labels(n_variants: int) -> List[str]:
    return [f"v{i + 1}" for i in range(n_variants)]


def group_corpus(corpus: Corpus, approach, n_variants: int, samples_per_variant: int) -> GroupingResult:
    """
    Split a single-variant corpus into pseudo-variants following an approach's schedule.

    For A2, A3 and R3 every setup maps onto the next reboot block and block sizes must match. A1 and
    A4 have a single setup, so their runs consume the readings linearly across block boundaries.
    """
    approach = Approach.parse(approach.value if isinstance(approach, Approach) else approach)
    labels = pseudo_labels(n_variants)
    pi = 1
    if approach is Approach.R3:
        if samples_per_variant % n_variants:
            raise StructureMismatchError(
                f"R3 grouping needs samples_per_variant divisible by {n_variants}, got {samples_per_variant}"
            )
        pi = samples_per_variant // n_variants
    schedule = generate_schedule(ScheduleConfig(tuple(labels), samples_per_variant, pi), approach)
    blocks = iter_blocks(schedule)

    slots = []
    if approach in REBOOT_ALIGNED:
        expected = tuple(len(b) for b in blocks)
        if expected != corpus.shape:
            raise StructureMismatchError(
                f"{approach.value} needs {len(expected)} reboot blocks of sizes {list(expected)}, "
                f"corpus {corpus.platform_label!r} has {len(corpus.shape)} of sizes {list(corpus.shape)}"
            )
        for r, block in enumerate(blocks):
            slots.extend((variant, (r, position)) for position, variant in enumerate(block))
    else:
        needed = sum(len(b) for b in blocks)
        available = sum(corpus.shape)
        if needed != available:
            raise StructureMismatchError(
                f"{approach.value} needs {needed} readings, corpus {corpus.platform_label!r} has {available}"
            )
        positions = [(r, p) for r, size in enumerate(corpus.shape) for p in range(size)]
        runs = [v for block in blocks for v in block]
        slots.extend(zip(runs, positions))

    groups = {label: [] for label in labels}
    provenance = {label: [] for label in labels}
    for variant, (r, p) in slots:
        groups[variant].append(corpus.reboots[r][p])
        provenance[variant].append((r, p))

    return GroupingResult(
        approach=approach,
        groups={k: tuple(v) for k, v in groups.items()},
        provenance={k: tuple(v) for k, v in provenance.items()},
    )


def specificity_matrix(grouping: GroupingResult, alpha: float = DEFAULT_ALPHA,
                       method: Method = Method.AUTO) -> SpecificityMatrix:
    labels = grouping.labels
    if len(labels) < 2:
        raise ValidationError("Specificity needs at least two groups")
    n = len(labels)
    p_values = np.full((n, n), np.nan)
    fp_mask = np.zeros((n, n), dtype=bool)
    for i in range(n):
        for j in range(i + 1, n):
            result = wilcoxon_rank_sum(grouping.groups[labels[i]], grouping.groups[labels[j]],
                                       Alternative.TWO_SIDED, method)
            p_values[i, j] = p_values[j, i] = result.p_value
            fp_mask[i, j] = fp_mask[j, i] = result.p_value <= alpha
    matrix = SpecificityMatrix(labels=tuple(labels), p_values=p_values, fp_mask=fp_mask, alpha=alpha)
    logger.debug(f"{grouping.approach.value}: {matrix.false_positives}/{matrix.pair_count} false positives")
    return matrix


def aggregate_specificity(matrices: Sequence[SpecificityMatrix]) -> CountMatrix:
    if not matrices:
        raise ValidationError("Nothing to aggregate")
    labels = matrices[0].labels
    counts = np.zeros((len(labels), len(labels)), dtype=int)
    for matrix in matrices:
        if matrix.labels != labels:
            raise ValidationError(f"Label mismatch: {list(matrix.labels)} vs {list(labels)}")
        counts += matrix.fp_mask.astype(int)
    return CountMatrix(labels=labels, counts=counts)


def sensitivity_row(campaign: Campaign, baseline: VariantId, alpha: float = DEFAULT_ALPHA) -> SensitivityRow:
    schedule = campaign.schedule
    if baseline not in schedule.variants:
        raise UnknownVariantError(baseline)
    others = [v for v in schedule.variants if v != baseline]
    if not others:
        raise ValidationError("Sensitivity needs at least one variant besides the baseline")

    base = campaign.energies(baseline)
    per_variant = []
    for v in others:
        energies = campaign.energies(v)
        es = a12(energies, base)
        # H1: the baseline consumes more than v
        p = wilcoxon_rank_sum(base, energies, Alternative.GREATER).p_value
        per_variant.append((v, es, p))

    effects = [es for _, es, _ in per_variant]
    return SensitivityRow(
        approach=schedule.approach,
        median_es=float(np.median(effects)),
        count_es_ge_064=sum(es >= MEDIUM_EFFECT for es in effects),
        count_p_le_005=sum(p <= alpha for _, _, p in per_variant),
        per_variant=tuple(per_variant),
    )


def sensitivity_table(campaigns: Dict[Approach, Campaign], baseline: VariantId,
                      alpha: float = DEFAULT_ALPHA) -> List[SensitivityRow]:
    return [sensitivity_row(campaign, baseline, alpha) for campaign in campaigns.values()]
