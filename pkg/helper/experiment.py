"""
Desk-scale replication on the simulated device: specificity over simulated platforms, sensitivity of the
five approaches against a baseline, and the spectrum of a long run of the baseline
"""

import logging

import numpy as np
import pandas as pd
import wandb

from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

from data.data_module import write_corpora, write_samples, write_spectrum
from helper.evaluation import (
    DEFAULT_ALPHA,
    CountMatrix,
    SensitivityRow,
    SpecificityMatrix,
    aggregate_specificity,
    group_corpus,
    sensitivity_table,
    specificity_matrix,
)
from helper.model import Approach, Campaign, ConfigurationError, VariantId
from helper.report import render_report, sensitivity_frame
from helper.runner import Corpus, SimulatorBackend, execute_campaign
from helper.scheduler import ScheduleConfig, generate_schedule
from helper.simulator import DeviceParams, SimulatedDevice
from helper.spectral import Spectrum, periodogram

logger = logging.getLogger(__name__)

ALL_APPROACHES = tuple(Approach)
# placeholder creation time so replicated bundles stay byte-identical
REPLICATE_CREATED_AT = 'replicate'


@dataclass
class ReplicateConfig:
    seed: int = 2022
    variants: Tuple[VariantId, ...] = tuple(f"raw{i}" for i in range(1, 11)) + ('original',)
    baseline: VariantId = 'original'
    effect_factors: Tuple[float, ...] = (0.88, 0.89, 0.90, 0.91, 0.92, 1.0, 1.0, 1.0, 1.0, 1.0)
    n_samples: int = 33
    pi: int = 3
    alpha: float = DEFAULT_ALPHA
    approaches: Tuple[Approach, ...] = ALL_APPROACHES
    platforms: int = 7
    corpus_blocks: int = 7
    corpus_block_size: int = 7
    spectrum_runs: int = 200
    params: DeviceParams = field(default_factory=DeviceParams)
    wandb_project: str = 'r3-validation'
    wandb_exp: Optional[str] = None
    wandb_mode: str = 'disabled'

    @classmethod
    def from_args(cls, args) -> 'ReplicateConfig':
        params = DeviceParams.from_yaml(args.device_params) if args.device_params else DeviceParams()
        return cls(
            seed=args.seed,
            variants=tuple(args.variants),
            baseline=args.baseline,
            effect_factors=tuple(args.effect_factors),
            n_samples=args.n_samples,
            pi=args.pi,
            alpha=args.alpha,
            approaches=tuple(Approach.parse(a) for a in args.approaches),
            platforms=args.platforms,
            corpus_blocks=args.corpus_blocks,
            corpus_block_size=args.corpus_block_size,
            spectrum_runs=args.spectrum_runs,
            params=params,
            wandb_project=args.project,
            wandb_exp=args.exp,
            wandb_mode=args.wandb_mode,
        )


def derive_seeds(seed: int, count: int) -> List[int]:
    children = np.random.SeedSequence(seed).spawn(count)
    return [int(child.generate_state(1)[0]) for child in children]


def variant_params(params: DeviceParams, variants: Sequence[VariantId], baseline: VariantId,
                   effect_factors: Sequence[float]) -> DeviceParams:
    """Give each non-baseline variant the baseline cost scaled by its factor."""
    others = [v for v in variants if v != baseline]
    if baseline not in variants:
        raise ConfigurationError(f"Baseline {baseline!r} is not among the variants")
    if len(effect_factors) != len(others):
        raise ConfigurationError(f"Need {len(others)} effect factors, got {len(effect_factors)}")
    base = params.base_energy.get(baseline, next(iter(params.base_energy.values())))
    runtime = params.run_time.get(baseline, next(iter(params.run_time.values())))
    energy = {v: base * f for v, f in zip(others, effect_factors)}
    energy[baseline] = base
    run_time = {v: runtime * f for v, f in zip(others, effect_factors)}
    run_time[baseline] = runtime
    return params.with_variants({v: energy[v] for v in variants}, {v: run_time[v] for v in variants})


def simulate_corpus(params: DeviceParams, seed: int, n_blocks: int, block_size: int,
                    platform_label: str, variant: Optional[VariantId] = None) -> Corpus:
    device = SimulatedDevice(params, seed)
    variant = variant or next(iter(params.base_energy))
    blocks = []
    for _ in range(n_blocks):
        device.setup()
        blocks.append(tuple(device.run(variant).energy for _ in range(block_size)))
    return Corpus(platform_label=platform_label, reboots=tuple(blocks))


def specificity_study(corpora: Sequence[Corpus], approaches: Sequence[Approach], n_variants: int,
                      samples_per_variant: int, alpha: float = DEFAULT_ALPHA) -> Dict[Approach, List[SpecificityMatrix]]:
    study = {}
    for approach in approaches:
        study[approach] = [
            specificity_matrix(group_corpus(corpus, approach, n_variants, samples_per_variant), alpha)
            for corpus in corpora
        ]
    return study


def run_campaigns(params: DeviceParams, variants: Sequence[VariantId], n_samples: int, pi: int, seed: int,
                  approaches: Sequence[Approach] = ALL_APPROACHES,
                  created_at: Optional[str] = None) -> Dict[Approach, Campaign]:
    """
    One campaign per approach, each on its own simulated device. The battery floor is guarded for R3,
    whose pi bounds every discharge. The single-charge protocols run unguarded through one long session,
    where noise grows with every run since setup and a small battery can reach the low-battery regime.
    """
    seeds = derive_seeds(seed, len(ALL_APPROACHES))
    campaigns = {}
    for approach in approaches:
        device_seed = seeds[ALL_APPROACHES.index(approach)]
        config = ScheduleConfig(tuple(variants), n_samples, pi, battery_floor=params.battery_floor)
        schedule = generate_schedule(config, approach)
        floor = params.battery_floor if approach is Approach.R3 else None
        campaigns[approach] = execute_campaign(
            schedule, SimulatorBackend(params, device_seed), battery_floor=floor,
            seed=device_seed, created_at=created_at,
        )
    return campaigns


def energy_series(params: DeviceParams, seed: int, n_runs: int, variant: Optional[VariantId] = None):
    """Energies and timestamps of consecutive runs of one variant on a single charge."""
    device = SimulatedDevice(params, seed)
    variant = variant or next(iter(params.base_energy))
    device.setup()
    readings = [device.run(variant) for _ in range(n_runs)]
    return [r.energy for r in readings], [r.timestamp for r in readings]


def series_spectrum(energies, timestamps=None, window=None) -> Spectrum:
    spacing = None
    if timestamps is not None and len(timestamps) > 1 and None not in timestamps:
        spacing = float(np.mean(np.diff(timestamps)))
    return periodogram(energies, sample_spacing=spacing, window=window)


def state_summary(campaign: Campaign) -> pd.DataFrame:
    frame = pd.DataFrame([
        {
            'variant': s.variant,
            'energy_j': s.energy,
            'active_processes': s.active_processes,
            'memory_pct': s.memory_use,
            'voltage_mv': s.voltage,
            'cpu_pct': s.cpu_utilisation,
            'battery_pct': s.battery_level,
        }
        for s in campaign.samples
    ])
    summary = frame.groupby('variant', sort=False).mean(numeric_only=True)
    return summary.reindex(list(campaign.schedule.variants))


@dataclass
class ReplicateResult:
    specificity: Dict[str, CountMatrix]
    sensitivity: List[SensitivityRow]
    spectrum: Spectrum
    campaigns: Dict[Approach, Campaign]
    corpora: List[Corpus]


def replicate(config: ReplicateConfig, out_dir) -> ReplicateResult:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    corpus_seeds = derive_seeds(config.seed, config.platforms + 2)
    campaign_seed, spectrum_seed = corpus_seeds[-2:]

    run = wandb.init(project=config.wandb_project, name=config.wandb_exp, mode=config.wandb_mode,
                     config={'seed': config.seed, 'n_samples': config.n_samples, 'pi': config.pi})

    # Specificity over simulated platforms, all running the baseline only
    logger.info(f"Simulating {config.platforms} corpora of {config.corpus_blocks}x{config.corpus_block_size} readings")
    single = config.params.with_variants({config.baseline: config.params.base_energy.get(
        config.baseline, next(iter(config.params.base_energy.values())))})
    corpora = [
        simulate_corpus(single, s, config.corpus_blocks, config.corpus_block_size, f"sim-{i + 1}")
        for i, s in enumerate(corpus_seeds[:config.platforms])
    ]
    study = specificity_study(corpora, config.approaches, config.corpus_blocks,
                              config.corpus_block_size, config.alpha)
    specificity = {a.value: aggregate_specificity(ms) for a, ms in study.items()}
    write_corpora(corpora, out_dir / 'corpora.csv')

    # Sensitivity of every approach against the baseline
    logger.info(f"Running {len(config.approaches)} campaigns of {len(config.variants)} variants")
    params = variant_params(config.params, config.variants, config.baseline, config.effect_factors)
    campaigns = run_campaigns(params, config.variants, config.n_samples, config.pi, campaign_seed,
                              config.approaches, created_at=REPLICATE_CREATED_AT)
    rows = sensitivity_table(campaigns, config.baseline, config.alpha)
    for approach, campaign in campaigns.items():
        write_samples(campaign.samples, out_dir / f"samples_{approach.value}.csv")

    # Spectrum of a long single-charge run of the baseline
    energies, timestamps = energy_series(single, spectrum_seed, config.spectrum_runs)
    spectrum = series_spectrum(energies, timestamps)
    write_spectrum(spectrum, out_dir / f"spectrum_{config.baseline}.csv")

    summary = state_summary(campaigns[Approach.R3]) if Approach.R3 in campaigns else None
    render_report(out_dir, specificity, rows, spectra={config.baseline: spectrum}, state_summary=summary,
                  title=f"Validation approaches on the simulated device (seed {config.seed})")

    run.log({f"fp/{name}": m.total for name, m in specificity.items()})
    for record in sensitivity_frame(rows).to_dict('records'):
        run.log({f"sensitivity/{record['approach']}/{k}": v for k, v in record.items() if k != 'approach'})
    run.finish()

    return ReplicateResult(specificity=specificity, sensitivity=rows, spectrum=spectrum,
                           campaigns=campaigns, corpora=corpora)
