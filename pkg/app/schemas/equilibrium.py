from typing import Any, Dict, List, Optional

from pydantic import model_validator

from app.models.models import PricingRegime, SolutionRegime
from app.schemas.market import (
    Allocation,
    DisagreementPoint,
    FrozenModel,
    MoneyFlows,
    OutsideSubscriptions,
    PayoffPair,
    PriceProfile,
    SubscriptionSplit,
)

SPLIT_TOLERANCE = 1e-9
SURPLUS_TOLERANCE = 1e-12


class PricingOutcome(FrozenModel):
    prices: PriceProfile
    split: SubscriptionSplit
    regime: PricingRegime
    outside_subscriptions: Optional[OutsideSubscriptions] = None

    @model_validator(mode="after")
    def corner_split_is_pure(self) -> "PricingOutcome":
        if self.regime in (PricingRegime.CORNER_L_WINS, PricingRegime.CORNER_F_WINS):
            if self.split.n_l not in (0.0, 1.0):
                raise ValueError("corner regimes must serve the whole pool from one provider")
        return self


class EquilibriumSolution(FrozenModel):
    """
    One equilibrium-type solution: the bargained allocation and money flows,
    the stage-2 prices and subscriptions they induce, and the NBS payoffs.
    """
    alloc: Allocation
    flows: MoneyFlows
    prices: PriceProfile
    split: SubscriptionSplit
    outside_subscriptions: Optional[OutsideSubscriptions] = None
    payoffs: PayoffPair
    u_excess_star: float
    regime: SolutionRegime
    disagreement: DisagreementPoint
    bargaining_power: float

    @model_validator(mode="after")
    def nbs_consistent(self) -> "EquilibriumSolution":
        if self.u_excess_star < -SURPLUS_TOLERANCE:
            raise ValueError(f"u_excess_star must be non-negative, got {self.u_excess_star}")

        w = self.bargaining_power
        d = self.disagreement
        expected_l = (1 - w) * self.u_excess_star + d.d_l
        expected_f = w * self.u_excess_star + d.d_f
        if abs(self.payoffs.pi_l - expected_l) > SPLIT_TOLERANCE or abs(self.payoffs.pi_f - expected_f) > SPLIT_TOLERANCE:
            raise ValueError("payoffs do not follow the NBS split of u_excess_star")

        if self.alloc.i_f > 0:
            if self.flows.s_tilde is None or self.flows.theta != 0.0:
                raise ValueError("a positive lease needs a significant s_tilde and theta = 0")
        elif self.flows.s_tilde is not None:
            raise ValueError("s_tilde has no significance when i_f = 0")
        return self

    @property
    def degree_of_cooperation(self) -> float:
        return self.alloc.i_f / self.alloc.i_l

    def to_row(self) -> Dict[str, Any]:
        """
        Flat mapping used for CSV output. A not-significant s_tilde maps to None
        so it lands as an empty cell.
        """
        outside = self.outside_subscriptions
        return {
            "regime": self.regime.value,
            "i_l": self.alloc.i_l,
            "i_f": self.alloc.i_f,
            "degree_of_cooperation": self.degree_of_cooperation,
            "p_l": self.prices.p_l,
            "p_f": self.prices.p_f,
            "n_l": self.split.n_l,
            "n_f": self.split.n_f,
            "x0": self.split.x0,
            "n_tilde_l": outside.n_tilde_l if outside else None,
            "n_tilde_f": outside.n_tilde_f if outside else None,
            "s_tilde": self.flows.s_tilde,
            "theta": self.flows.theta,
            "pi_l": self.payoffs.pi_l,
            "pi_f": self.payoffs.pi_f,
            "pi_total": self.payoffs.total,
            "u_excess_star": self.u_excess_star,
            "d_l": self.disagreement.d_l,
            "d_f": self.disagreement.d_f,
            "provenance": self.disagreement.provenance.value,
        }


class ExistenceReport(FrozenModel):
    """
    Existence verdict for a bargaining stage.
    pi_star is None when the objective is unbounded.
    """
    pi_star: Optional[float] = None
    d: float
    margin: Optional[float] = None
    exists: bool
    interior: bool = True
    bounded: bool = True
    detail: str = ""

    @model_validator(mode="after")
    def verdict_matches_margin(self) -> "ExistenceReport":
        expected = self.margin is not None and self.margin >= -SURPLUS_TOLERANCE and self.interior and self.bounded
        if self.exists != expected:
            raise ValueError("exists must hold exactly when margin >= 0 on a bounded, interior problem")
        return self

    @classmethod
    def from_totals(
        cls,
        pi_star: Optional[float],
        d: float,
        interior: bool = True,
        bounded: bool = True,
        detail: str = "",
    ) -> "ExistenceReport":
        margin = None if pi_star is None else pi_star - d
        exists = margin is not None and margin >= -SURPLUS_TOLERANCE and interior and bounded
        return cls(
            pi_star=pi_star,
            d=d,
            margin=margin,
            exists=exists,
            interior=interior,
            bounded=bounded,
            detail=detail,
        )


class BargainingResult(FrozenModel):
    solutions: List[EquilibriumSolution]
    existence: ExistenceReport

    @model_validator(mode="after")
    def solutions_only_when_existing(self) -> "BargainingResult":
        if self.solutions and not self.existence.exists:
            raise ValueError("solutions returned for a stage that has none")
        return self

    @property
    def empty(self) -> bool:
        return not self.solutions


class OutsideAux(FrozenModel):
    f_val: float
    g_val: float

    @model_validator(mode="after")
    def f_positive(self) -> "OutsideAux":
        if self.f_val <= 0:
            raise ValueError("f(i_l) must be positive")
        return self


class OutsideOptimum(FrozenModel):
    """
    Maximum of h over [l0, m_cap]. h(i) = quad_a*i^2 + quad_b*i + quad_c.
    i_l_star and h_star are None for an unbounded problem.
    """
    i_l_star: Optional[float] = None
    h_star: Optional[float] = None
    bounded: bool
    quad_a: float
    quad_b: float
    quad_c: float

    @property
    def stationary_point(self) -> Optional[float]:
        if self.quad_a == 0:
            return None
        return -self.quad_b / (2 * self.quad_a)
