import pytest

from helper.model import (
    Approach,
    Campaign,
    ConfigurationError,
    MeasurementSample,
    Schedule,
    ScheduleAction,
    UnknownVariantError,
    ValidationError,
    check_variants,
    group_samples,
    samples_of,
)
from helper.runner import SimulatorBackend, execute_campaign


def _campaign(actions, variants, n):
    schedule = Schedule(tuple(actions), Approach.A4, tuple(variants), n)
    samples = []
    reboot = -1
    for action in actions:
        if action.variant is None:
            reboot += 1
            continue
        samples.append(MeasurementSample(action.variant, reboot, 0, len(samples), float(len(samples))))
    return Campaign(schedule, tuple(samples))


def test_action_carries_variant_only_for_runs():
    assert str(ScheduleAction.setup()) == 'SETUP'
    assert str(ScheduleAction.run('raw1')) == 'RUN raw1'
    with pytest.raises(ValidationError):
        ScheduleAction(ScheduleAction.setup().kind, 'A')
    with pytest.raises(ValidationError):
        ScheduleAction(ScheduleAction.run('A').kind, None)


def test_schedule_must_start_with_setup():
    with pytest.raises(ValidationError, match='start with a setup'):
        Schedule((ScheduleAction.run('A'),), Approach.A1, ('A',), 1)


def test_schedule_must_be_balanced():
    actions = (ScheduleAction.setup(), ScheduleAction.run('A'), ScheduleAction.run('A'), ScheduleAction.run('B'))
    with pytest.raises(ValidationError, match='exactly 2'):
        Schedule(actions, Approach.A1, ('A', 'B'), 2)


def test_schedule_rejects_unknown_run_variant():
    actions = (ScheduleAction.setup(), ScheduleAction.run('Z'))
    with pytest.raises(UnknownVariantError):
        Schedule(actions, Approach.A1, ('A',), 1)


def test_samples_of_filters_in_order():
    actions = [ScheduleAction.setup()] + [ScheduleAction.run(v) for v in 'ABAB']
    campaign = _campaign(actions, 'AB', 2)
    assert [s.slot_index for s in samples_of(campaign, 'A')] == [0, 2]
    assert campaign.energies('B') == [1.0, 3.0]


def test_samples_of_unknown_variant():
    actions = [ScheduleAction.setup(), ScheduleAction.run('A')]
    campaign = _campaign(actions, 'A', 1)
    with pytest.raises(UnknownVariantError, match="'Q'"):
        samples_of(campaign, 'Q')


def test_r3_samples_follow_reboots(r3_schedule, default_params):
    campaign = execute_campaign(r3_schedule, SimulatorBackend(default_params, 1))
    samples = samples_of(campaign, 'A')
    assert len(samples) == 8
    assert [s.reboot_index for s in samples] == [0, 0, 1, 1, 2, 2, 3, 3]
    assert [s.round_index for s in samples] == [0, 1] * 4


def test_groups_partition_the_campaign(r3_schedule, default_params):
    campaign = execute_campaign(r3_schedule, SimulatorBackend(default_params, 3))
    groups = group_samples(campaign)
    union = sorted(s.slot_index for group in groups.values() for s in group)
    assert union == list(range(len(campaign.samples)))
    assert campaign.complete


def test_sample_bounds():
    with pytest.raises(ValidationError):
        MeasurementSample('A', 0, 0, 0, -1.0)
    with pytest.raises(ValidationError):
        MeasurementSample('A', 0, 0, 0, 1.0, battery_level=101.0)


@pytest.mark.parametrize('variants', [(), ('A', 'A'), ('A,B',), ('has space',), ('',)])
def test_check_variants_rejects(variants):
    with pytest.raises(ConfigurationError):
        check_variants(variants)


def test_approach_parse():
    assert Approach.parse('R3') is Approach.R3
    with pytest.raises(ConfigurationError, match='a1'):
        Approach.parse('a5')
