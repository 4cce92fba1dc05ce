import math
from typing import Optional

from pydantic import BaseModel, ConfigDict, Field, computed_field, field_validator, model_validator

from app.core.exceptions import DegenerateAllocationError, InfeasibleAllocationError
from app.models.models import Provenance

IDENTITY_TOLERANCE = 1e-12


class FrozenModel(BaseModel):
    model_config = ConfigDict(frozen=True)


class MarketParams(FrozenModel):
    """
    Exogenous constants of the two-provider game.
    m_cap = None means SP_L may lease an unbounded amount.
    """
    gamma: float = Field(gt=0)
    c: float = Field(ge=0)
    s_market: float = Field(gt=0)
    delta_part1: float = Field(gt=0)
    l0: float = Field(gt=0)
    m_cap: Optional[float] = None
    w: float = Field(gt=0, lt=1)
    v_l: float
    v_f: float
    alpha: float = Field(gt=0)
    k: float
    b: float = Field(ge=0)

    @field_validator("gamma", "c", "s_market", "delta_part1", "l0", "w", "v_l", "v_f", "alpha", "k", "b")
    @classmethod
    def finite(cls, v: float) -> float:
        if not math.isfinite(v):
            raise ValueError("must be finite")
        return v

    @field_validator("m_cap")
    @classmethod
    def normalize_cap(cls, v: Optional[float]) -> Optional[float]:
        if v is not None and math.isinf(v) and v > 0:
            return None
        return v

    @model_validator(mode="after")
    def cap_above_minimum(self) -> "MarketParams":
        if self.m_cap is not None and self.m_cap < self.l0:
            raise ValueError(f"m_cap ({self.m_cap}) must be at least l0 ({self.l0})")
        return self

    def delta(self) -> float:
        return self.v_l - self.v_f

    @property
    def bounded(self) -> bool:
        return self.m_cap is not None

    def with_delta(self, delta: float) -> "MarketParams":
        """Same market with v_l moved so that v_l - v_f = delta."""
        return self.model_copy(update={"v_l": self.v_f + delta})


class Allocation(FrozenModel):
    i_l: float = Field(ge=0)
    i_f: float = Field(ge=0)

    @model_validator(mode="after")
    def follower_within_leader(self) -> "Allocation":
        if self.i_f > self.i_l:
            raise ValueError(f"i_f ({self.i_f}) cannot exceed i_l ({self.i_l})")
        return self

    @property
    def ratio(self) -> float:
        return self.i_f / self.i_l

    def check_feasible(self, params: MarketParams) -> "Allocation":
        """
        Check l0 <= i_l <= m_cap. Returns self so calls can be chained.
        """
        if self.i_l <= 0:
            raise DegenerateAllocationError("i_l must be positive")
        if self.i_l < params.l0:
            raise InfeasibleAllocationError(f"i_l ({self.i_l}) is below the mandated minimum l0 ({params.l0})")
        if params.m_cap is not None and self.i_l > params.m_cap:
            raise InfeasibleAllocationError(f"i_l ({self.i_l}) exceeds the cap m_cap ({params.m_cap})")
        return self


class TransportCosts(FrozenModel):
    t_l: float = Field(ge=0, le=1)
    t_f: float = Field(ge=0, le=1)

    @model_validator(mode="after")
    def complementary(self) -> "TransportCosts":
        if abs(self.t_l + self.t_f - 1.0) > IDENTITY_TOLERANCE:
            raise ValueError("t_l + t_f must equal 1")
        return self


class PriceProfile(FrozenModel):
    p_l: float
    p_f: float

    @field_validator("p_l", "p_f")
    @classmethod
    def finite(cls, v: float) -> float:
        if not math.isfinite(v):
            raise ValueError("prices must be finite")
        return v


class SubscriptionSplit(FrozenModel):
    n_l: float = Field(ge=0, le=1)
    n_f: float = Field(ge=0, le=1)
    x0: float

    @model_validator(mode="after")
    def whole_pool(self) -> "SubscriptionSplit":
        if abs(self.n_l + self.n_f - 1.0) > IDENTITY_TOLERANCE:
            raise ValueError("n_l + n_f must equal 1")
        return self


class OutsideSubscriptions(FrozenModel):
    n_tilde_l: float
    n_tilde_f: float

    @computed_field
    @property
    def feasible(self) -> bool:
        return self.n_tilde_l >= 0 and self.n_tilde_f >= 0


class MoneyFlows(FrozenModel):
    """
    s_tilde = None marks the reservation fee as not significant (i_f = 0).
    theta is signed; positive means SP_L pays SP_F.
    """
    s_tilde: Optional[float] = None
    theta: float = 0.0

    @property
    def significant(self) -> bool:
        return self.s_tilde is not None


class PayoffPair(FrozenModel):
    pi_l: float
    pi_f: float

    @computed_field
    @property
    def total(self) -> float:
        return self.pi_l + self.pi_f


class DisagreementPoint(FrozenModel):
    d_l: float
    d_f: float
    provenance: Provenance
    allocation: Optional[Allocation] = None

    @field_validator("d_l", "d_f")
    @classmethod
    def finite(cls, v: float) -> float:
        if not math.isfinite(v):
            raise ValueError("disagreement payoffs must be finite")
        return v

    @computed_field
    @property
    def d(self) -> float:
        return self.d_l + self.d_f
