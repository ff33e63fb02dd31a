"""
A seeded model of a battery-powered device whose system state drifts within and between discharge cycles

Energy of one run is the variant's true cost plus
  * a long-period sinusoidal drift over the global run index,
  * a random walk,
  * a level offset redrawn at every setup (reboot),
  * a campaign warm-up decaying linearly over the first runs of the device's life,
  * a startup transient decaying linearly over the first runs after a setup,
  * an occasional background burst (sync storm) that also lifts process count and CPU load and frees memory,
  * measurement noise, inflated while the battery is below the floor and growing once a session
    has run past the onset without a reboot.
CPU, memory, process count and voltage are recorded as metadata only; they do not feed back into energy.
"""

import math
import logging

import numpy as np
import yaml

from dataclasses import dataclass, field, fields, replace
from typing import Dict, List, Tuple

from helper.model import (
    BackendError,
    ConfigurationError,
    DischargedError,
    Reading,
    UnknownVariantError,
    VariantId,
)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class StartupTransient:
    extra_joules: float = 4.0
    decay_runs: int = 6


@dataclass(frozen=True)
class WarmUp:
    extra_joules: float = 10.0
    decay_runs: int = 363


@dataclass(frozen=True)
class NoiseGrowth:
    """Noise sd scales by 1 + per_run * (runs since setup - onset_runs) past the onset."""
    onset_runs: int = 160
    per_run: float = 0.05


@dataclass(frozen=True)
class VoltageModel:
    start_mv: float = 4300.0
    start_sd_mv: float = 8.0
    drop_mv_per_cycle: float = 24.0
    nonmonotone_prob: float = 0.05
    step_mv: float = 3.0


# flat config key -> (nested attribute, field)
_NESTED_KEYS = {
    'startup_extra_joules': ('startup_transient', 'extra_joules'),
    'startup_decay_runs': ('startup_transient', 'decay_runs'),
    'warmup_extra_joules': ('warm_up', 'extra_joules'),
    'warmup_decay_runs': ('warm_up', 'decay_runs'),
    'noise_growth_onset_runs': ('noise_growth', 'onset_runs'),
    'noise_growth_per_run': ('noise_growth', 'per_run'),
    'voltage_start_mv': ('voltage_model', 'start_mv'),
    'voltage_start_sd_mv': ('voltage_model', 'start_sd_mv'),
    'voltage_drop_mv_per_cycle': ('voltage_model', 'drop_mv_per_cycle'),
    'voltage_nonmonotone_prob': ('voltage_model', 'nonmonotone_prob'),
    'voltage_step_mv': ('voltage_model', 'step_mv'),
}


@dataclass(frozen=True)
class DeviceParams:
    base_energy: Dict[VariantId, float] = field(default_factory=lambda: {'original': 47.0})
    run_time: Dict[VariantId, float] = field(default_factory=lambda: {'original': 17.0})
    runtime_jitter_s: float = 0.6
    drift_amplitude: float = 4.5
    drift_period: float = 100.0
    walk_step: float = 0.05
    reboot_offset_sd: float = 0.5
    warm_up: WarmUp = WarmUp()
    startup_transient: StartupTransient = StartupTransient()
    burst_rate: float = 0.004
    burst_energy: float = 50.0
    burst_process_jump: int = 250
    base_processes: Tuple[int, int] = (140, 250)
    base_memory: float = 50.0
    memory_growth: float = 0.01
    burst_memory_drop: float = 5.0
    cpu_range: Tuple[float, float] = (48.0, 54.0)
    burst_cpu_load: float = 40.5
    battery_capacity: float = 30000.0
    battery_floor: float = 20.0
    voltage_model: VoltageModel = VoltageModel()
    low_battery_noise_multiplier: float = 4.0
    measurement_noise_sd: float = 1.5
    noise_growth: NoiseGrowth = NoiseGrowth()
    setup_duration_s: float = 3600.0

    @classmethod
    def from_dict(cls, config: dict) -> 'DeviceParams':
        known = {f.name for f in fields(cls)}
        flat = {}
        nested = {'warm_up': {}, 'startup_transient': {}, 'voltage_model': {}, 'noise_growth': {}}
        unknown = []
        for key, value in config.items():
            if key in _NESTED_KEYS:
                group, attr = _NESTED_KEYS[key]
                nested[group][attr] = value
            elif key in known and key not in nested:
                flat[key] = value
            else:
                unknown.append(key)
        if unknown:
            raise ConfigurationError(f"Unknown device parameter(s): {', '.join(sorted(map(str, unknown)))}")

        for key in ('base_processes', 'cpu_range'):
            if key in flat:
                flat[key] = tuple(flat[key])
        for key in ('base_energy', 'run_time'):
            if key in flat:
                flat[key] = {str(k): float(v) for k, v in flat[key].items()}

        params = cls(
            warm_up=WarmUp(**nested['warm_up']),
            startup_transient=StartupTransient(**nested['startup_transient']),
            voltage_model=VoltageModel(**nested['voltage_model']),
            noise_growth=NoiseGrowth(**nested['noise_growth']),
            **flat,
        )
        params.check()
        return params

    @classmethod
    def from_yaml(cls, path) -> 'DeviceParams':
        with open(path) as f:
            config = yaml.safe_load(f) or {}
        return cls.from_dict(config)

    def with_variants(self, base_energy: Dict[VariantId, float], run_time: Dict[VariantId, float] = None):
        if run_time is None:
            default = next(iter(self.run_time.values()), 17.0)
            run_time = {v: self.run_time.get(v, default) for v in base_energy}
        return replace(self, base_energy=dict(base_energy), run_time=dict(run_time))

    def without_state_variation(self) -> 'DeviceParams':
        """Keep only i.i.d. measurement noise."""
        return replace(
            self,
            drift_amplitude=0.0,
            walk_step=0.0,
            reboot_offset_sd=0.0,
            warm_up=WarmUp(0.0, 0),
            startup_transient=StartupTransient(0.0, 0),
            burst_rate=0.0,
            low_battery_noise_multiplier=1.0,
            noise_growth=NoiseGrowth(0, 0.0),
        )

    def noiseless(self) -> 'DeviceParams':
        return replace(self.without_state_variation(), measurement_noise_sd=0.0, runtime_jitter_s=0.0)

    def violations(self) -> List[str]:
        problems = []
        if not self.base_energy:
            problems.append("base_energy must name at least one variant")
        for v, e in self.base_energy.items():
            if e < 0:
                problems.append(f"base_energy[{v}] is negative")
        missing = sorted(set(self.base_energy) - set(self.run_time))
        if missing:
            problems.append(f"run_time missing for {missing}")
        for name in ('runtime_jitter_s', 'drift_amplitude', 'drift_period', 'walk_step', 'reboot_offset_sd',
                     'burst_energy', 'burst_process_jump', 'base_memory', 'memory_growth', 'burst_memory_drop',
                     'burst_cpu_load', 'measurement_noise_sd', 'setup_duration_s'):
            if getattr(self, name) < 0:
                problems.append(f"{name} must be >= 0")
        if self.startup_transient.extra_joules < 0 or self.startup_transient.decay_runs < 0:
            problems.append("startup transient must be >= 0")
        if self.warm_up.extra_joules < 0 or self.warm_up.decay_runs < 0:
            problems.append("warm-up must be >= 0")
        if self.noise_growth.onset_runs < 0 or self.noise_growth.per_run < 0:
            problems.append("noise growth must be >= 0")
        if not 0 <= self.burst_rate <= 1:
            problems.append("burst_rate must lie in [0, 1]")
        low, high = self.base_processes
        if not 0 <= low <= high:
            problems.append("base_processes must be an ordered non-negative range")
        low, high = self.cpu_range
        if not 0 <= low <= high <= 100:
            problems.append("cpu_range must be an ordered range within [0, 100]")
        if not 0 <= self.battery_floor < 100:
            problems.append("battery_floor must lie in [0, 100)")
        if self.low_battery_noise_multiplier < 1:
            problems.append("low_battery_noise_multiplier must be >= 1")
        vm = self.voltage_model
        if vm.start_sd_mv < 0 or vm.drop_mv_per_cycle < 0 or vm.step_mv < 0:
            problems.append("voltage model magnitudes must be >= 0")
        if not 0 <= vm.nonmonotone_prob <= 1:
            problems.append("voltage_nonmonotone_prob must lie in [0, 1]")
        max_cost = (max(self.base_energy.values(), default=0.0) + self.burst_energy
                    + self.warm_up.extra_joules + self.startup_transient.extra_joules)
        if self.battery_capacity <= max_cost:
            problems.append(f"battery_capacity must exceed the largest run cost ({max_cost:g} J)")
        return problems

    def check(self):
        problems = self.violations()
        if problems:
            raise ConfigurationError("Invalid device parameters: " + '; '.join(problems))


@dataclass
class DeviceState:
    battery_level: float = 100.0
    voltage: float = 0.0
    walk_position: float = 0.0
    runs_since_setup: int = 0
    total_runs: int = 0
    reboot_count: int = 0
    current_offset: float = 0.0
    active_processes: int = 0
    memory_use: float = 0.0
    cycle_voltage: float = 0.0
    voltage_bump: float = 0.0
    clock: float = 0.0


class SimulatedDevice:
    """Mutable device handle; calls on one handle must be serialised."""

    def __init__(self, params: DeviceParams, seed: int):
        params.check()
        self.params = params
        self.seed = seed
        self.rng = np.random.default_rng(seed)
        self.drift_phase = float(self.rng.uniform(0.0, 2 * math.pi))
        self.state = DeviceState(memory_use=params.base_memory, voltage=params.voltage_model.start_mv)

    def descriptor(self) -> str:
        return f"sim:seed={self.seed}"

    @property
    def battery_level(self) -> float:
        return self.state.battery_level

    def setup(self):
        p, s = self.params, self.state
        s.battery_level = 100.0
        s.runs_since_setup = 0
        s.reboot_count += 1
        s.current_offset = float(self.rng.normal(0.0, p.reboot_offset_sd))
        s.cycle_voltage = p.voltage_model.start_mv + float(self.rng.normal(0.0, p.voltage_model.start_sd_mv))
        s.voltage_bump = 0.0
        s.voltage = s.cycle_voltage
        s.memory_use = p.base_memory
        s.clock += p.setup_duration_s
        logger.debug(f"Device setup #{s.reboot_count}: offset {s.current_offset:+.3f} J")

    def _transient(self) -> float:
        t = self.params.startup_transient
        if t.decay_runs <= 0 or self.state.runs_since_setup >= t.decay_runs:
            return 0.0
        return t.extra_joules * (1.0 - self.state.runs_since_setup / t.decay_runs)

    def _warm_up(self) -> float:
        w = self.params.warm_up
        if w.decay_runs <= 0 or self.state.total_runs >= w.decay_runs:
            return 0.0
        return w.extra_joules * (1.0 - self.state.total_runs / w.decay_runs)

    def _noise_scale(self) -> float:
        g = self.params.noise_growth
        return 1.0 + g.per_run * max(0, self.state.runs_since_setup - g.onset_runs)

    def run(self, variant: VariantId) -> Reading:
        p, s = self.params, self.state
        if s.reboot_count == 0:
            raise BackendError("Device must be set up before the first run")
        if variant not in p.base_energy:
            raise UnknownVariantError(variant)
        if s.battery_level <= 0:
            raise DischargedError(f"Device discharged after {s.runs_since_setup} runs since setup")

        battery_before = s.battery_level
        drift = 0.0
        if p.drift_period > 0:
            drift = p.drift_amplitude * math.sin(2 * math.pi * s.total_runs / p.drift_period + self.drift_phase)
        s.walk_position += float(self.rng.normal(0.0, p.walk_step))
        burst = bool(self.rng.random() < p.burst_rate)
        multiplier = p.low_battery_noise_multiplier if battery_before < p.battery_floor else 1.0
        noise = float(self.rng.normal(0.0, p.measurement_noise_sd * multiplier * self._noise_scale()))

        energy = (p.base_energy[variant] + drift + s.walk_position + s.current_offset + self._warm_up()
                  + self._transient() + (p.burst_energy if burst else 0.0) + noise)
        energy = max(0.0, energy)

        runtime = max(0.0, p.run_time[variant] + float(self.rng.normal(0.0, p.runtime_jitter_s)))
        low, high = p.base_processes
        processes = int(self.rng.integers(low, high + 1)) + (p.burst_process_jump if burst else 0)
        cpu = float(self.rng.uniform(*p.cpu_range))
        background = float(self.rng.uniform(0.0, p.burst_cpu_load))
        if burst:
            cpu = min(100.0, cpu + background)
        bump = bool(self.rng.random() < p.voltage_model.nonmonotone_prob)

        s.memory_use += p.memory_growth
        if burst:
            s.memory_use -= p.burst_memory_drop
        s.memory_use = min(100.0, max(0.0, s.memory_use))
        s.active_processes = processes

        s.battery_level = max(0.0, battery_before - energy / p.battery_capacity * 100.0)
        if bump:
            s.voltage_bump += p.voltage_model.step_mv
        discharged = (100.0 - s.battery_level) / 100.0
        s.voltage = s.cycle_voltage - p.voltage_model.drop_mv_per_cycle * discharged + s.voltage_bump

        reading = Reading(
            energy=energy,
            runtime=runtime,
            battery_level=battery_before,
            voltage=s.voltage,
            active_processes=processes,
            memory_use=s.memory_use,
            cpu_utilisation=cpu,
            timestamp=s.clock,
        )
        s.clock += runtime
        s.runs_since_setup += 1
        s.total_runs += 1
        return reading


def new_device(params: DeviceParams, seed: int) -> SimulatedDevice:
    return SimulatedDevice(params, seed)


def setup_device(device: SimulatedDevice):
    device.setup()


def run_variant(device: SimulatedDevice, variant: VariantId) -> Reading:
    return device.run(variant)
