import os
import yaml

from typing import List, Dict, Optional
from argparse import ArgumentParser

SEED_ENV = 'R3VAL_SEED'


def serialize_config(config: Dict) -> List[str]:
    """Flatten a (one level nested) yaml config into command line flags."""

    def parse_value(value):
        if isinstance(value, (int, float, str)):
            return [str(value)]
        elif isinstance(value, list):
            return [str(val) for val in value]
        else:
            raise ValueError(f"Invalid value in config file: {value}")

    serialized_config = []

    for key, value in config.items():
        if value is None:
            continue
        if isinstance(value, dict):
            serialized_config.extend(serialize_config(value))
        elif isinstance(value, bool):
            # Booleans are bare flags
            if value:
                serialized_config.append("--" + key)
        else:
            serialized_config.append("--" + key)
            serialized_config.extend(parse_value(value))

    return serialized_config


def env_seed(default: Optional[int]) -> Optional[int]:
    value = os.environ.get(SEED_ENV)
    return int(value) if value not in (None, '') else default


def get_replicate_args(yaml_path, overrides: Optional[List[str]] = None):
    parser = ArgumentParser()

    # Wandb
    parser.add_argument('--project', type=str, default='r3-validation',
                        help='wandb project name')
    parser.add_argument('--exp', type=str, default=None,
                        help='wandb experiment name')
    parser.add_argument('--wandb_mode', type=str, default='disabled',
                        choices=['online', 'offline', 'disabled'])

    # Experiment
    parser.add_argument('--seed', type=int, default=2022)
    parser.add_argument('--variants', nargs='+', type=str,
                        default=[f"raw{i}" for i in range(1, 11)] + ['original'])
    parser.add_argument('--baseline', type=str, default='original')
    parser.add_argument('--effect_factors', nargs='+', type=float,
                        default=[0.88, 0.89, 0.90, 0.91, 0.92, 1.0, 1.0, 1.0, 1.0, 1.0],
                        help='energy of each non-baseline variant relative to the baseline')
    parser.add_argument('--approaches', nargs='+', type=str, default=['a1', 'a2', 'a3', 'a4', 'r3'])
    parser.add_argument('--n_samples', type=int, default=33)
    parser.add_argument('--pi', type=int, default=3,
                        help='rounds per discharge cycle')
    parser.add_argument('--alpha', type=float, default=0.05)

    # Specificity corpora
    parser.add_argument('--platforms', type=int, default=7)
    parser.add_argument('--corpus_blocks', type=int, default=7)
    parser.add_argument('--corpus_block_size', type=int, default=7)

    # Spectrum
    parser.add_argument('--spectrum_runs', type=int, default=200)

    # Device
    parser.add_argument('--device_params', type=str, default=None,
                        help='yaml file with simulator parameters')

    with open(yaml_path) as f:
        config = yaml.load(f, Loader=yaml.FullLoader) or {}
    # explicit flags win over $R3VAL_SEED, which wins over the yaml file
    seed = env_seed(None)
    env = ['--seed', str(seed)] if seed is not None else []
    args = parser.parse_args(serialize_config(config) + env + list(overrides or []))

    if args.device_params and not os.path.isabs(args.device_params):
        relative = os.path.join(os.path.dirname(os.path.abspath(yaml_path)), args.device_params)
        if os.path.exists(relative):
            args.device_params = relative

    return args
