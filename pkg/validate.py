"""
Command line entry point: schedule generation, campaign execution and protocol evaluation

    python validate.py schedule --approach r3 --variants A,B,C,D --samples 8 --pi 2 --out r3.txt
    python validate.py run --schedule r3.txt --backend sim --seed 1 --out campaigns/r3
    python validate.py spectrum --campaign campaigns/r3 --variant A --out spectrum.csv
    python validate.py specificity --corpus corpora.csv --out report/
    python validate.py sensitivity --campaigns campaigns/a1 campaigns/r3 --baseline original --out report/
    python validate.py replicate --seed 2022 --out-dir replication/
"""

import sys
import logging

from pathlib import Path
from argparse import ArgumentParser

from data.data_module import (
    read_campaign,
    read_corpora,
    read_schedule,
    write_campaign,
    write_schedule,
    write_spectrum,
)
from helper.evaluation import DEFAULT_ALPHA, aggregate_specificity, sensitivity_table
from helper.experiment import ReplicateConfig, replicate, series_spectrum, specificity_study
from helper.model import (
    Approach,
    BackendError,
    CampaignAborted,
    ConfigurationError,
    ValidationError,
    samples_of,
)
from helper.report import render_report
from helper.runner import (
    SimulatorBackend,
    check_replay_structure,
    execute_campaign,
    external_command_backend,
    replay_backend,
)
from helper.scheduler import ScheduleConfig, generate_schedule, schedule_summary
from helper.simulator import DeviceParams
from utils import SEED_ENV, env_seed, get_replicate_args

logger = logging.getLogger('validate')

DEFAULT_DEVICE = Path(__file__).parent / 'configs' / 'device.yaml'
DEFAULT_REPLICATE = Path(__file__).parent / 'configs' / 'replicate.yaml'


def split_list(value):
    return [v.strip() for v in value.split(',') if v.strip()]


def parse_effects(value):
    effects = {}
    for item in split_list(value or ''):
        name, sep, factor = item.partition('=')
        if not sep:
            raise ConfigurationError(f"Effects are variant=factor pairs, got {item!r}")
        effects[name] = float(factor)
    return effects


def cmd_schedule(args):
    config = ScheduleConfig(tuple(split_list(args.variants)), args.samples, args.pi)
    schedule = generate_schedule(config, args.approach)
    write_schedule(schedule, args.out)
    summary = schedule_summary(schedule)
    print(f"{schedule.approach.value}: {summary.setup_count} setups, {summary.total_runs} runs, "
          f"{schedule.n_samples} per variant -> {args.out}")


def make_backend(args, schedule):
    if args.backend == 'sim':
        params = DeviceParams.from_yaml(args.device_params)
        base = next(iter(params.base_energy.values()))
        effects = parse_effects(args.effects)
        energy = {v: params.base_energy.get(v, base) * effects.get(v, 1.0) for v in schedule.variants}
        return SimulatorBackend(params.with_variants(energy), args.seed)
    if args.backend == 'replay':
        corpora = read_corpora(args.corpus)
        label = args.platform or next(iter(corpora))
        if label not in corpora:
            raise ConfigurationError(f"Platform {label!r} not in corpus file, found {list(corpora)}")
        check_replay_structure(schedule, corpora[label])
        return replay_backend(corpora[label])
    return external_command_backend(args.setup_cmd, args.run_cmd, args.pattern, timeout=args.timeout)


def cmd_run(args):
    schedule = read_schedule(args.schedule)
    backend = make_backend(args, schedule)
    floor = None if args.no_floor else args.battery_floor
    try:
        campaign = execute_campaign(schedule, backend, battery_floor=floor, seed=args.seed)
    except CampaignAborted as aborted:
        write_campaign(aborted.campaign, args.out)
        raise
    write_campaign(campaign, args.out)
    print(f"{len(campaign.samples)} samples -> {args.out}")


def cmd_spectrum(args):
    campaign = read_campaign(args.campaign)
    samples = samples_of(campaign, args.variant)
    timestamps = [s.timestamp for s in samples]
    spectrum = series_spectrum([s.energy for s in samples], timestamps, window=args.window)
    write_spectrum(spectrum, args.out)
    print(f"{len(spectrum.power)} bins -> {args.out}")


def cmd_specificity(args):
    corpora = list(read_corpora(args.corpus).values())
    n_variants = args.n_variants or len(corpora[0].reboots)
    samples = args.samples or len(corpora[0].reboots[0])
    approaches = [Approach.parse(a) for a in split_list(args.approaches)]
    study = specificity_study(corpora, approaches, n_variants, samples, args.alpha)
    counts = {a.value: aggregate_specificity(ms) for a, ms in study.items()}
    render_report(args.out, counts, [], title='Specificity report')
    for name, matrix in counts.items():
        print(f"{name}: {matrix.total} false positives")


def cmd_sensitivity(args):
    campaigns = {}
    for directory in args.campaigns:
        campaign = read_campaign(directory)
        approach = campaign.schedule.approach
        if approach in campaigns:
            raise ConfigurationError(f"Two campaigns for approach {approach.value}")
        campaigns[approach] = campaign
    rows = sensitivity_table(campaigns, args.baseline, args.alpha)
    render_report(args.out, {}, rows, title='Sensitivity report')
    for row in rows:
        print(f"{row.approach.value}: median(es)={row.median_es:.3f} es>=0.64={row.count_es_ge_064} "
              f"p<=alpha={row.count_p_le_005}")


def cmd_replicate(args):
    overrides = []
    if args.seed is not None:
        overrides += ['--seed', str(args.seed)]
    config = ReplicateConfig.from_args(get_replicate_args(args.config, overrides))
    result = replicate(config, args.out_dir)
    print(f"Report bundle for seed {config.seed} -> {args.out_dir} "
          f"({len(result.campaigns)} campaigns, {len(result.corpora)} corpora)")


def build_parser():
    parser = ArgumentParser(description='Schedule, run and evaluate energy measurement validation protocols')
    parser.add_argument('--verbose', action='store_true')
    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('schedule', help='write a measurement schedule')
    p.add_argument('--approach', required=True, choices=[a.value for a in Approach])
    p.add_argument('--variants', required=True, help='comma separated variant names')
    p.add_argument('--samples', type=int, required=True, help='samples per variant')
    p.add_argument('--pi', type=int, default=1, help='rounds per discharge cycle (r3)')
    p.add_argument('--out', required=True)
    p.set_defaults(func=cmd_schedule)

    p = sub.add_parser('run', help='execute a schedule on a backend')
    p.add_argument('--schedule', required=True)
    p.add_argument('--backend', choices=['sim', 'replay', 'exec'], default='sim')
    p.add_argument('--seed', type=int, default=None, help=f'defaults to ${SEED_ENV}, then 0')
    p.add_argument('--out', required=True, help='campaign directory')
    p.add_argument('--battery-floor', type=float, default=20.0)
    p.add_argument('--no-floor', action='store_true', help='disable the battery floor guard')
    p.add_argument('--device-params', default=str(DEFAULT_DEVICE))
    p.add_argument('--effects', default='', help='variant=factor pairs scaling the simulated energy')
    p.add_argument('--corpus', help='corpus CSV for the replay backend')
    p.add_argument('--platform', help='corpus platform to replay')
    p.add_argument('--setup-cmd')
    p.add_argument('--run-cmd', help='command with a {variant} placeholder')
    p.add_argument('--pattern', default=r'energy_j=(float)')
    p.add_argument('--timeout', type=float, default=600.0)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser('spectrum', help='periodogram of one variant in a campaign')
    p.add_argument('--campaign', required=True)
    p.add_argument('--variant', required=True)
    p.add_argument('--window', choices=['hann'], default=None)
    p.add_argument('--out', required=True)
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser('specificity', help='false positives of each approach on a corpus')
    p.add_argument('--corpus', required=True)
    p.add_argument('--approaches', default='a1,a2,a3,a4,r3')
    p.add_argument('--n-variants', type=int, default=None)
    p.add_argument('--samples', type=int, default=None)
    p.add_argument('--alpha', type=float, default=DEFAULT_ALPHA)
    p.add_argument('--out', required=True)
    p.set_defaults(func=cmd_specificity)

    p = sub.add_parser('sensitivity', help='compare campaigns against a baseline variant')
    p.add_argument('--campaigns', nargs='+', required=True)
    p.add_argument('--baseline', required=True)
    p.add_argument('--alpha', type=float, default=DEFAULT_ALPHA)
    p.add_argument('--out', required=True)
    p.set_defaults(func=cmd_sensitivity)

    p = sub.add_parser('replicate', help='end-to-end replication on the simulated device')
    p.add_argument('--config', default=str(DEFAULT_REPLICATE))
    p.add_argument('--seed', type=int, default=None)
    p.add_argument('--out-dir', required=True)
    p.set_defaults(func=cmd_replicate)

    return parser


def check_paths(args):
    for name in ('schedule', 'campaign', 'corpus', 'config', 'device_params'):
        path = getattr(args, name, None)
        if path and not Path(path).exists():
            raise ConfigurationError(f"--{name.replace('_', '-')}: {path} does not exist")
    for directory in getattr(args, 'campaigns', None) or []:
        if not Path(directory).is_dir():
            raise ConfigurationError(f"--campaigns: {directory} is not a directory")
    if getattr(args, 'backend', None) == 'replay' and not args.corpus:
        raise ConfigurationError("--backend replay needs --corpus")
    if getattr(args, 'backend', None) == 'exec' and not (args.setup_cmd and args.run_cmd):
        raise ConfigurationError("--backend exec needs --setup-cmd and --run-cmd")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format='%(asctime)s %(levelname)s %(name)s: %(message)s',
    )
    if args.command == 'run' and args.seed is None:
        args.seed = env_seed(0)

    try:
        check_paths(args)
        args.func(args)
    except CampaignAborted as aborted:
        logger.error(f"{aborted} (partial campaign saved)")
        return 1
    except (ValidationError, BackendError) as err:
        logger.error(str(err))
        return 1
    return 0


if __name__ == '__main__':
    sys.exit(main())
