import pytest

from helper.scheduler import ScheduleConfig, generate_schedule
from helper.simulator import DeviceParams

VARIANTS = ('A', 'B', 'C', 'D')


@pytest.fixture
def variants():
    return VARIANTS


@pytest.fixture
def r3_schedule():
    return generate_schedule(ScheduleConfig(VARIANTS, 8, pi=2), 'r3')


@pytest.fixture
def quiet_params():
    """Noiseless device with four equal-cost variants."""
    return DeviceParams().with_variants({v: 47.0 for v in VARIANTS}).noiseless()


@pytest.fixture
def default_params():
    return DeviceParams().with_variants({v: 47.0 for v in VARIANTS})
