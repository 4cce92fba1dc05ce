import logging
from pathlib import Path
from typing import Dict, Optional, Union

from dotenv import dotenv_values
from pydantic import ValidationError, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from app.core.exceptions import ConfigError
from app.models.models import PriceSelection, Provenance
from app.schemas.market import DisagreementPoint, FrozenModel, MarketParams

logger = logging.getLogger(__name__)


class Settings(BaseSettings):
    PROJECT_NAME: str = "SpectrumBargain"
    VERSION: str = "1.0.0"

    # Logging
    LOG_LEVEL: str = "INFO"
    LOG_FORMAT: str = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"

    # Oracle configuration
    ORACLE_GRID_POINTS: int = 400
    DEVIATION_GRID_POINTS: int = 2001
    IDENTITY_DRAWS: int = 1000
    RANDOM_SEED: int = 20240611

    # Disagreement (Part-I game) reconstruction
    DISAGREEMENT_I_L_MAX: float = 5.0
    DISAGREEMENT_GRID_POINTS: int = 10_000
    DISAGREEMENT_INNER_POINTS: int = 201
    REFINEMENT_PASSES: int = 40
    DISAGREEMENT_TOLERANCE: float = 1e-9

    # Tolerances
    CLOSED_FORM_TOLERANCE: float = 1e-12
    NASH_TOLERANCE: float = 1e-4

    # Output
    CSV_SIGNIFICANT_DIGITS: int = 12

    @field_validator("LOG_LEVEL")
    @classmethod
    def normalize_log_level(cls, v: str) -> str:
        v = v.upper()
        if v not in logging._nameToLevel:
            raise ValueError(f"Unknown log level {v}")
        return v

    model_config = SettingsConfigDict(case_sensitive=True, env_file=".env", extra="ignore")


settings = Settings()


PARAM_KEYS = (
    "gamma", "c", "s_market", "delta_part1", "l0", "m_cap",
    "w", "v_l", "v_f", "alpha", "k", "b",
)
OPTIONAL_PARAM_KEYS = ("m_cap",)
EXTRA_KEYS = ("d_l", "d_f", "price_selection")


class RunConfig(FrozenModel):
    """
    Parsed parameter file: the market parameters plus the optional
    disagreement override and corner price selection.
    """
    params: MarketParams
    disagreement: Optional[DisagreementPoint] = None
    price_selection: PriceSelection = PriceSelection.UPPER


def parse_run_config(values: Dict[str, Optional[str]]) -> RunConfig:
    """
    Build a RunConfig from flat key/value pairs; pydantic coerces the
    decimal strings. m_cap omitted (or empty) means unbounded.
    """
    unknown = set(values) - set(PARAM_KEYS) - set(EXTRA_KEYS)
    if unknown:
        raise ConfigError(f"Unknown config keys: {', '.join(sorted(unknown))}")

    missing = [key for key in PARAM_KEYS if key not in values and key not in OPTIONAL_PARAM_KEYS]
    if missing:
        raise ConfigError(f"Missing config keys: {', '.join(missing)}")

    fields = {key: values.get(key) for key in PARAM_KEYS}
    for key in OPTIONAL_PARAM_KEYS:
        if not (fields[key] or "").strip():
            fields[key] = None

    try:
        params = MarketParams(**fields)
    except ValidationError as e:
        raise ConfigError(f"Invalid market parameters: {e}")

    disagreement = None
    has_d_l, has_d_f = "d_l" in values, "d_f" in values
    if has_d_l != has_d_f:
        raise ConfigError("d_l and d_f must be supplied together")
    if has_d_l:
        try:
            disagreement = DisagreementPoint(d_l=values["d_l"], d_f=values["d_f"], provenance=Provenance.USER_SUPPLIED)
        except ValidationError as e:
            raise ConfigError(f"Invalid disagreement point: {e}")

    selection = PriceSelection.UPPER
    if values.get("price_selection"):
        try:
            selection = PriceSelection(values["price_selection"].strip().lower())
        except ValueError:
            raise ConfigError(f"Unknown price_selection {values['price_selection']!r}")

    return RunConfig(params=params, disagreement=disagreement, price_selection=selection)


def load_run_config(path: Union[str, Path]) -> RunConfig:
    """
    Load a flat key=value parameter file.
    """
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"Config file {path} is not readable")
    values = dotenv_values(path)
    logger.debug(f"Loaded {len(values)} keys from {path}")
    return parse_run_config(values)


def load_market_params(path: Union[str, Path]) -> MarketParams:
    return load_run_config(path).params


# Same values as configs/base_case.env and configs/outside_option.env
PRESETS: Dict[str, Dict[str, Optional[str]]] = {
    "base_case": {
        "gamma": "0.5", "c": "1", "s_market": "1", "delta_part1": "0.01", "l0": "0.5",
        "w": "0.2", "v_l": "1.5", "v_f": "2", "alpha": "1", "k": "1", "b": "2",
    },
    "outside_option": {
        "gamma": "0.8", "c": "1", "s_market": "2", "delta_part1": "0.01", "l0": "0.3",
        "w": "0.2", "v_l": "2", "v_f": "2", "alpha": "1", "k": "1", "b": "2",
    },
}


def preset_config(name: str) -> RunConfig:
    if name not in PRESETS:
        raise ConfigError(f"Unknown preset {name}")
    return parse_run_config(PRESETS[name])
