import pytest
from hypothesis import HealthCheck, settings

from app.core.config import preset_config
from app.models.models import Provenance
from app.schemas.experiment import DisagreementConfig
from app.schemas.market import DisagreementPoint, MarketParams

settings.register_profile("default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def make_params(delta: float = 0.0, **values) -> MarketParams:
    fields = dict(gamma=0.5, c=1.0, s_market=1.0, delta_part1=0.01, l0=0.5, w=0.2, v_f=2.0, alpha=1.0, k=1.0, b=2.0)
    fields.update(values)
    fields["v_l"] = fields["v_f"] + delta
    return MarketParams(**fields)


def user_point(d_l: float = 0.0, d_f: float = 0.0) -> DisagreementPoint:
    return DisagreementPoint(d_l=d_l, d_f=d_f, provenance=Provenance.USER_SUPPLIED)


@pytest.fixture
def base_params() -> MarketParams:
    return preset_config("base_case").params


@pytest.fixture
def outside_params() -> MarketParams:
    return preset_config("outside_option").params


@pytest.fixture
def zero_d() -> DisagreementPoint:
    return user_point()


@pytest.fixture
def small_cfg() -> DisagreementConfig:
    return DisagreementConfig(i_l_points=1001, i_f_points=101)
