'''
Data module for measurement artifacts: schedules, campaigns (samples CSV + YAML manifest), corpora and spectra
'''

import csv
import logging

import pandas as pd
import yaml

from pathlib import Path
from typing import Dict, List, Union

from helper.model import (
    Approach,
    Campaign,
    FormatError,
    MeasurementSample,
    Schedule,
    check_variants,
)
from helper.runner import Corpus
from helper.scheduler import format_schedule, parse_schedule
from helper.spectral import Spectrum

logger = logging.getLogger(__name__)

SAMPLE_COLUMNS = [
    'variant', 'reboot_index', 'round_index', 'slot_index', 'energy_j', 'runtime_s', 'battery_pct',
    'voltage_mv', 'active_processes', 'memory_pct', 'cpu_pct', 'timestamp_s',
]
# CSV column -> (sample attribute, parser)
_FIELDS = {
    'variant': ('variant', str),
    'reboot_index': ('reboot_index', int),
    'round_index': ('round_index', int),
    'slot_index': ('slot_index', int),
    'energy_j': ('energy', float),
    'runtime_s': ('runtime', float),
    'battery_pct': ('battery_level', float),
    'voltage_mv': ('voltage', float),
    'active_processes': ('active_processes', int),
    'memory_pct': ('memory_use', float),
    'cpu_pct': ('cpu_utilisation', float),
    'timestamp_s': ('timestamp', float),
}
_REQUIRED = {'variant', 'reboot_index', 'round_index', 'slot_index', 'energy_j'}
CORPUS_COLUMNS = ['platform', 'reboot_index', 'position', 'energy_j']
SAMPLES_FILE = 'samples.csv'
MANIFEST_FILE = 'manifest.yaml'

PathLike = Union[str, Path]


def write_schedule(schedule: Schedule, path: PathLike):
    Path(path).write_text(format_schedule(schedule))


def read_schedule(path: PathLike) -> Schedule:
    return parse_schedule(Path(path).read_text())


def _cell(value):
    # repr keeps floats lossless
    if value is None:
        return ''
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_samples(samples, path: PathLike):
    with open(path, 'w', newline='') as f:
        writer = csv.writer(f, lineterminator='\n')
        writer.writerow(SAMPLE_COLUMNS)
        for s in samples:
            writer.writerow([_cell(getattr(s, _FIELDS[c][0])) for c in SAMPLE_COLUMNS])


def read_samples(path: PathLike) -> List[MeasurementSample]:
    samples = []
    with open(path, newline='') as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header is None:
            raise FormatError("Empty samples file", line=1)
        missing = [c for c in SAMPLE_COLUMNS if c not in header]
        if missing:
            raise FormatError(f"Missing column(s): {', '.join(missing)}", line=1, column=missing[0])
        index = {c: header.index(c) for c in SAMPLE_COLUMNS}

        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise FormatError(f"Expected {len(header)} fields, got {len(row)}", line=lineno)
            values = {}
            for column in SAMPLE_COLUMNS:
                attr, parse = _FIELDS[column]
                cell = row[index[column]]
                if cell == '':
                    if column in _REQUIRED:
                        raise FormatError(f"Empty value in required column {column!r}", line=lineno, column=column)
                    values[attr] = None
                    continue
                try:
                    values[attr] = parse(cell)
                except ValueError:
                    raise FormatError(f"Bad value {cell!r} in column {column!r}", line=lineno, column=column) from None
            try:
                samples.append(MeasurementSample(**values))
            except ValueError as err:
                raise FormatError(str(err), line=lineno) from None
    return samples


def write_campaign(campaign: Campaign, directory: PathLike) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    schedule = campaign.schedule
    manifest = {
        'approach': schedule.approach.value,
        'variants': list(schedule.variants),
        'n_samples': schedule.n_samples,
        'pi': schedule.pi,
        'seed': campaign.seed,
        'backend': campaign.backend_descriptor,
        'created_at': campaign.created_at,
        'error': campaign.error,
        'actions': [str(a) for a in schedule.actions],
    }
    with open(directory / MANIFEST_FILE, 'w') as f:
        yaml.safe_dump(manifest, f, sort_keys=False)
    write_samples(campaign.samples, directory / SAMPLES_FILE)
    logger.info(f"Campaign written to {directory}")
    return directory


def read_campaign(directory: PathLike) -> Campaign:
    directory = Path(directory)
    try:
        with open(directory / MANIFEST_FILE) as f:
            manifest = yaml.safe_load(f)
    except yaml.YAMLError as err:
        line = getattr(getattr(err, 'problem_mark', None), 'line', None)
        raise FormatError(f"Malformed manifest: {err}", line=None if line is None else line + 1) from None
    if not isinstance(manifest, dict):
        raise FormatError("Manifest must be a mapping")
    missing = [k for k in ('approach', 'variants', 'n_samples', 'pi', 'actions') if k not in manifest]
    if missing:
        raise FormatError(f"Manifest missing key(s): {', '.join(missing)}", column=missing[0])

    text = '\n'.join(manifest['actions'])
    actions = parse_schedule(
        f"# approach: {manifest['approach']}\n# variants: {','.join(manifest['variants'])}\n"
        f"# n_samples: {manifest['n_samples']}\n# pi: {manifest['pi']}\n{text}\n"
    ).actions
    schedule = Schedule(
        actions=actions,
        approach=Approach.parse(manifest['approach']),
        variants=check_variants(manifest['variants']),
        n_samples=int(manifest['n_samples']),
        pi=int(manifest['pi']),
    )
    return Campaign(
        schedule=schedule,
        samples=tuple(read_samples(directory / SAMPLES_FILE)),
        backend_descriptor=manifest.get('backend') or '',
        seed=manifest.get('seed'),
        created_at=manifest.get('created_at') or '',
        error=manifest.get('error'),
    )


def corpus_frame(corpora) -> pd.DataFrame:
    rows = []
    for corpus in corpora:
        for r, block in enumerate(corpus.reboots):
            for position, energy in enumerate(block):
                rows.append((corpus.platform_label, r, position, float(energy)))
    return pd.DataFrame(rows, columns=CORPUS_COLUMNS)


def write_corpora(corpora, path: PathLike):
    corpus_frame(corpora).to_csv(path, index=False)


def read_corpora(path: PathLike) -> Dict[str, Corpus]:
    df = pd.read_csv(path, dtype={'platform': str}, float_precision='round_trip')
    missing = [c for c in CORPUS_COLUMNS if c not in df.columns]
    if missing:
        raise FormatError(f"Corpus missing column(s): {', '.join(missing)}", line=1, column=missing[0])
    if df.empty:
        raise FormatError("Corpus file has no readings")
    if df[CORPUS_COLUMNS].isna().any().any():
        bad = int(df[CORPUS_COLUMNS].isna().any(axis=1).to_numpy().nonzero()[0][0])
        raise FormatError("Empty corpus field", line=bad + 2)

    corpora = {}
    for platform, frame in df.groupby('platform', sort=False):
        blocks = []
        for r, block in frame.groupby('reboot_index', sort=True):
            block = block.sort_values('position')
            if list(block['position']) != list(range(len(block))):
                raise FormatError(f"Positions of {platform!r} reboot {r} are not 0..{len(block) - 1}")
            blocks.append(tuple(float(e) for e in block['energy_j']))
        if sorted(frame['reboot_index'].unique()) != list(range(len(blocks))):
            raise FormatError(f"Reboot indices of {platform!r} are not contiguous from 0")
        corpora[str(platform)] = Corpus(platform_label=str(platform), reboots=tuple(blocks))
    return corpora


def write_spectrum(spectrum: Spectrum, path: PathLike):
    frame = pd.DataFrame(spectrum.rows(), columns=['frequency', 'period_samples', 'period_seconds',
                                                   'power', 'period_minutes'])
    frame.to_csv(path, index=False)
