import enum


class Provenance(str, enum.Enum):
    CORNER_CLOSED_FORM = "corner-closed-form"
    NUMERICAL_PART1 = "numerical-part1"
    USER_SUPPLIED = "user-supplied"


class PriceSelection(str, enum.Enum):
    LOWER = "lower"
    UPPER = "upper"
    MIDPOINT = "midpoint"


class PricingRegime(str, enum.Enum):
    INTERIOR = "interior"
    CORNER_L_WINS = "corner_L_wins"
    CORNER_F_WINS = "corner_F_wins"
    INTERIOR_AT_DELTA_1 = "interior_at_delta_1"
    OUTSIDE_INTERIOR = "outside_interior"


class SolutionRegime(str, enum.Enum):
    BASE_INTERIOR = "base_interior"
    BASE_CORNER = "base_corner"
    OUTSIDE_INTERIOR = "outside_interior"


class SolveMode(str, enum.Enum):
    BASE = "base"
    OUTSIDE = "outside"


class FigureDataset(str, enum.Enum):
    DEGREE_COOP_VS_DELTA = "degree_coop_vs_delta"
    TOTAL_PAYOFF_VS_L0 = "total_payoff_vs_L0"
    SP_PAYOFFS_VS_L0 = "sp_payoffs_vs_L0"
    PAYOFFS_VS_S = "payoffs_vs_s"
    SUBSCRIPTIONS_VS_DELTA = "subscriptions_vs_delta"
    RESOURCE_COST = "resource_cost"
    OUTSIDE_INVEST_VS_GAMMA = "outside_invest_vs_gamma"
    OUTSIDE_INVEST_VS_L0 = "outside_invest_vs_L0"
    OUTSIDE_PAYOFFS_VS_L0 = "outside_payoffs_vs_L0"
    OUTSIDE_METRIC_VS_S = "outside_metric_vs_s"
