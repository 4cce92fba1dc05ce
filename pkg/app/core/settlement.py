import logging

from app.core.exceptions import PreconditionError
from app.models.models import Provenance
from app.schemas.market import DisagreementPoint, MoneyFlows, PayoffPair

logger = logging.getLogger(__name__)


class NashSettlement:
    """
    Splits the bargaining surplus between SP_L and SP_F and works out the
    money flows that implement the split.
    """

    def __init__(self, u_star: float, disagreement: DisagreementPoint, w: float):
        if not 0 < w < 1:
            raise PreconditionError(f"bargaining power w must lie in (0, 1), got {w}")
        self.u_star = u_star
        self.disagreement = disagreement
        self.w = w

    def payoffs(self) -> PayoffPair:
        """
        NBS payoffs: each provider gets its disagreement payoff plus its
        share of the surplus.
        """
        return PayoffPair(
            pi_l=(1 - self.w) * self.u_star + self.disagreement.d_l,
            pi_f=self.w * self.u_star + self.disagreement.d_f,
        )

    def flows(self, i_f: float, n_f: float, p_f: float, c: float) -> MoneyFlows:
        """
        Money flows that hand SP_F exactly its NBS payoff.
        With a positive lease the reservation fee does the work and theta = 0;
        without one the fee has no meaning and theta carries the transfer.
        """
        target_f = self.w * self.u_star + self.disagreement.d_f
        revenue_f = n_f * (p_f - c)

        if i_f > 0:
            s_tilde = (revenue_f - target_f) / i_f ** 2
            logger.debug(f"Reservation fee {s_tilde} for lease {i_f}")
            return MoneyFlows(s_tilde=s_tilde, theta=0.0)

        theta = target_f - revenue_f
        logger.debug(f"No lease; remuneration theta = {theta}")
        return MoneyFlows(s_tilde=None, theta=theta)


def nbs_split(u_star: float, d: DisagreementPoint, w: float) -> PayoffPair:
    return NashSettlement(u_star, d, w).payoffs()


def money_flows(i_f: float, n_f: float, p_f: float, d_f: float, w: float, u_star: float, c: float) -> MoneyFlows:
    """
    Money flows for a solution given SP_F's stage-2 quantities. Only d_f
    matters here, so d_l is left at zero.
    """
    point = DisagreementPoint(d_l=0.0, d_f=d_f, provenance=Provenance.USER_SUPPLIED)
    return NashSettlement(u_star, point, w).flows(i_f, n_f, p_f, c)
