from typing import Any, Dict, List, Optional, Tuple

from pydantic import Field, field_validator, model_validator

from app.core.config import PARAM_KEYS, settings
from app.core.exceptions import PreconditionError
from app.models.models import PriceSelection
from app.schemas.market import Allocation, FrozenModel, MarketParams

SWEEPABLE = PARAM_KEYS + ("delta",)


class DisagreementConfig(FrozenModel):
    """
    Search settings for the non-cooperative stage-1 reconstruction.
    i_l_min = None starts the leader grid at the market's delta_part1.
    """
    i_l_min: Optional[float] = None
    i_l_max: float = Field(default_factory=lambda: settings.DISAGREEMENT_I_L_MAX, gt=0)
    i_l_points: int = Field(default_factory=lambda: settings.DISAGREEMENT_GRID_POINTS, ge=2)
    i_f_points: int = Field(default_factory=lambda: settings.DISAGREEMENT_INNER_POINTS, ge=2)
    refinement: int = Field(default_factory=lambda: settings.REFINEMENT_PASSES, ge=0)
    tolerance: float = Field(default_factory=lambda: settings.DISAGREEMENT_TOLERANCE, gt=0)
    price_selection: PriceSelection = PriceSelection.UPPER

    @model_validator(mode="after")
    def range_ordered(self) -> "DisagreementConfig":
        if self.i_l_min is not None and self.i_l_min >= self.i_l_max:
            raise ValueError("i_l_min must be below i_l_max")
        return self

    def leader_range(self, params: MarketParams) -> Tuple[float, float]:
        lo = params.delta_part1 if self.i_l_min is None else self.i_l_min
        if lo < params.delta_part1:
            raise PreconditionError(f"grid lower bound {lo} is below delta_part1 ({params.delta_part1})")
        if lo >= self.i_l_max:
            raise PreconditionError(f"grid lower bound {lo} is not below i_l_max ({self.i_l_max})")
        return lo, self.i_l_max


class GridSpec(FrozenModel):
    """
    Boxed oracle grid. i_f is scanned as a fraction of i_l on [0, 1] so
    every point satisfies 0 <= i_f <= i_l.
    """
    i_l_lo: float = Field(gt=0)
    i_l_hi: float
    i_l_points: int = Field(default_factory=lambda: settings.ORACLE_GRID_POINTS, ge=2)
    i_f_points: int = Field(default_factory=lambda: settings.ORACLE_GRID_POINTS, ge=2)

    @model_validator(mode="after")
    def range_ordered(self) -> "GridSpec":
        if self.i_l_hi <= self.i_l_lo:
            raise ValueError("i_l_hi must exceed i_l_lo")
        return self

    @classmethod
    def around(cls, params: MarketParams, upper: Optional[float] = None, points: Optional[int] = None) -> "GridSpec":
        """Grid over [l0, upper], upper defaulting to 3*l0 (capped by m_cap when m_cap > l0)."""
        hi = upper if upper is not None else 3 * params.l0
        if params.m_cap is not None and params.m_cap > params.l0:
            hi = min(hi, params.m_cap)
        n = points or settings.ORACLE_GRID_POINTS
        return cls(i_l_lo=params.l0, i_l_hi=hi, i_l_points=n, i_f_points=n)

    @property
    def i_l_step(self) -> float:
        return (self.i_l_hi - self.i_l_lo) / (self.i_l_points - 1)


class GridResult(FrozenModel):
    alloc: Allocation
    value: float
    tolerance: float
    i_l_step: float
    i_f_step: float


class IdentityRanges(FrozenModel):
    """
    Sampling box for the randomized identity checks.
    """
    draws: int = Field(default_factory=lambda: settings.IDENTITY_DRAWS, ge=1)
    seed: int = Field(default_factory=lambda: settings.RANDOM_SEED)
    delta: Tuple[float, float] = (-0.99, 0.99)
    gamma: Tuple[float, float] = (0.05, 2.0)
    l0: Tuple[float, float] = (0.05, 2.0)
    c: Tuple[float, float] = (0.0, 2.0)
    d: Tuple[float, float] = (-0.5, 0.5)
    i_l: Tuple[float, float] = (0.2, 2.0)
    alpha: Tuple[float, float] = (0.5, 2.0)
    b: Tuple[float, float] = (0.5, 3.0)
    k: Tuple[float, float] = (0.0, 2.0)
    fd_step: float = Field(default=1e-3, gt=0)

    @field_validator("delta", "gamma", "l0", "c", "d", "i_l", "alpha", "b", "k")
    @classmethod
    def ordered(cls, v: Tuple[float, float]) -> Tuple[float, float]:
        if v[0] > v[1]:
            raise ValueError(f"range {v} is reversed")
        return v


class CheckResult(FrozenModel):
    name: str
    residual: float
    tolerance: float
    passed: bool
    flagged: bool = False
    detail: str = ""

    @classmethod
    def within(cls, name: str, residual: float, tolerance: float, detail: str = "") -> "CheckResult":
        return cls(name=name, residual=residual, tolerance=tolerance, passed=bool(residual <= tolerance), detail=detail)

    @classmethod
    def flag(cls, name: str, ok: bool, detail: str = "") -> "CheckResult":
        return cls(name=name, residual=0.0 if ok else 1.0, tolerance=0.0, passed=ok, detail=detail)

    @classmethod
    def notice(cls, name: str, detail: str) -> "CheckResult":
        """A reported condition that is not a failure, e.g. an unbounded objective."""
        return cls(name=name, residual=0.0, tolerance=0.0, passed=True, flagged=True, detail=detail)

    @property
    def status(self) -> str:
        if not self.passed:
            return "FAIL"
        return "FLAG" if self.flagged else "PASS"


class VerificationReport(FrozenModel):
    checks: List[CheckResult] = []

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    @property
    def failures(self) -> List[CheckResult]:
        return [check for check in self.checks if not check.passed]

    def extend(self, other: "VerificationReport") -> "VerificationReport":
        return VerificationReport(checks=self.checks + other.checks)

    @property
    def flags(self) -> List[CheckResult]:
        return [check for check in self.checks if check.flagged]

    def to_rows(self) -> List[Dict[str, Any]]:
        return [{**check.model_dump(), "status": check.status} for check in self.checks]


class SweepSpec(FrozenModel):
    """
    One-parameter sweep. `delta` moves v_l with v_f fixed.
    """
    param: str
    lo: float
    hi: float
    steps: int = Field(ge=2)
    overrides: Dict[str, float] = {}

    @field_validator("param")
    @classmethod
    def known_param(cls, v: str) -> str:
        if v not in SWEEPABLE:
            raise ValueError(f"Unknown sweep parameter {v}; expected one of {', '.join(SWEEPABLE)}")
        return v

    @field_validator("overrides")
    @classmethod
    def known_overrides(cls, v: Dict[str, float]) -> Dict[str, float]:
        unknown = set(v) - set(SWEEPABLE)
        if unknown:
            raise ValueError(f"Unknown override keys: {', '.join(sorted(unknown))}")
        return v

    @model_validator(mode="after")
    def range_ordered(self) -> "SweepSpec":
        if not self.lo < self.hi:
            raise ValueError(f"invalid range [{self.lo}, {self.hi}]")
        return self
