from pydantic_settings import BaseSettings, SettingsConfigDict
from typing import Optional

class Settings(BaseSettings):
    # Reproducibility
    SEED: int = 20240521

    LOG_LEVEL: str = "INFO"

    # Series numerics
    QUADRATURE_ORDER: int = 20
    SERIES_T_MAX: int = 30
    NORM_TOL: float = 1e-3
    SERIES_FORM: str = "conditional"
    PHASE_RULE: str = "midpoint"
    PHASE_ORDER: int = 16

    # Monte Carlo
    MC_SAMPLES: int = 1_000_000
    QUICK_MC_SAMPLES: int = 100_000

    # Scenario presets (TOML, one table per scenario)
    PRESET_FILE: Optional[str] = None

    # Back-substitute the printed Lambert-W forms after every solve
    CLOSED_FORM_CHECK: bool = True

    WORKERS: int = 1

    model_config = SettingsConfigDict(env_file=".env", env_prefix="JFTS_", extra="ignore")


settings = Settings()
