import pytest

from helper.model import Approach, ConfigurationError, FormatError
from helper.scheduler import (
    ScheduleConfig,
    format_schedule,
    generate_schedule,
    iter_blocks,
    parse_schedule,
    rotate_left,
    schedule_summary,
)


def _tokens(schedule):
    return ['SETUP' if a.variant is None else a.variant for a in schedule.actions]


def _compact(schedule):
    return [''.join(block) for block in iter_blocks(schedule)]


@pytest.mark.parametrize('k, expected', [(0, 'ABCD'), (1, 'BCDA'), (3, 'DABC'), (4, 'ABCD'), (9, 'BCDA')])
def test_rotate_left(k, expected):
    assert ''.join(rotate_left('ABCD', k)) == expected


def test_rotate_left_rejects_negative():
    with pytest.raises(ValueError):
        rotate_left('ABCD', -1)


def test_a1(variants):
    schedule = generate_schedule(ScheduleConfig(variants, 4), Approach.A1)
    assert _tokens(schedule) == ['SETUP'] + list('AAAABBBBCCCCDDDD')


def test_a2(variants):
    schedule = generate_schedule(ScheduleConfig(variants, 4), 'a2')
    assert _compact(schedule) == ['AAAA', 'BBBB', 'CCCC', 'DDDD']


def test_a3(variants):
    schedule = generate_schedule(ScheduleConfig(variants, 4), 'a3')
    assert _compact(schedule) == ['ABCD'] * 4


def test_a4(variants):
    schedule = generate_schedule(ScheduleConfig(variants, 4), 'a4')
    assert _compact(schedule) == ['ABCD' * 4]


def test_r3_rotates_after_every_setup(r3_schedule):
    assert _compact(r3_schedule) == ['ABCDABCD', 'BCDABCDA', 'CDABCDAB', 'DABCDABC']


def test_r3_case_study_shape():
    variants = [f"raw{i}" for i in range(1, 11)] + ['original']
    schedule = generate_schedule(ScheduleConfig(variants, 33, pi=3), 'r3')
    summary = schedule_summary(schedule)
    assert summary.setup_count == 11
    assert set(summary.runs_per_variant.values()) == {33}
    assert summary.total_runs == 363


def test_r3_needs_pi_times_variants(variants):
    with pytest.raises(ConfigurationError, match='2 x 4 = 8'):
        generate_schedule(ScheduleConfig(variants, 6, pi=2), 'r3')


@pytest.mark.parametrize('kwargs', [
    dict(variants=(), n_samples=4),
    dict(variants=('A',), n_samples=0),
    dict(variants=('A',), n_samples=2, pi=0),
    dict(variants=('A',), n_samples=2, battery_floor=100.0),
])
def test_bad_config(kwargs):
    with pytest.raises(ConfigurationError):
        ScheduleConfig(**kwargs)


@pytest.mark.parametrize('approach, setups', [('a1', 1), ('a2', 4), ('a3', 4), ('a4', 1)])
def test_setup_counts(variants, approach, setups):
    summary = schedule_summary(generate_schedule(ScheduleConfig(variants, 4), approach))
    assert summary.setup_count == setups
    assert summary.runs_per_variant == {v: 4 for v in variants}


def test_r3_summary(r3_schedule):
    summary = schedule_summary(r3_schedule)
    assert summary.setup_count == 4
    assert summary.runs_per_variant == {v: 8 for v in 'ABCD'}
    assert summary.rounds_per_setup == (2, 2, 2, 2)


def test_r3_covers_every_position_equally(r3_schedule):
    coverage = schedule_summary(r3_schedule).position_coverage
    for variant in 'ABCD':
        assert coverage[variant] == {0: 2, 1: 2, 2: 2, 3: 2}


def test_a3_pins_positions(variants):
    coverage = schedule_summary(generate_schedule(ScheduleConfig(variants, 4), 'a3')).position_coverage
    assert coverage['A'] == {0: 4}
    assert coverage['D'] == {3: 4}


def test_generation_is_deterministic(variants):
    config = ScheduleConfig(variants, 8, pi=2)
    assert generate_schedule(config, 'r3') == generate_schedule(config, 'r3')


def test_text_format_round_trip(r3_schedule):
    text = format_schedule(r3_schedule)
    assert text.startswith('# approach: r3\n# variants: A,B,C,D\n# n_samples: 8\n# pi: 2\nSETUP\nRUN A\n')
    assert parse_schedule(text) == r3_schedule


def test_parse_reports_line_number():
    text = '# approach: a1\n# variants: A\n# n_samples: 1\n# pi: 1\nSETUP\nWALK A\n'
    with pytest.raises(FormatError, match='line 6') as info:
        parse_schedule(text)
    assert info.value.line == 6


def test_parse_missing_header():
    with pytest.raises(FormatError, match='n_samples'):
        parse_schedule('# approach: a1\n# variants: A\n# pi: 1\nSETUP\nRUN A\n')
