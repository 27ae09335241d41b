from dotenv import load_dotenv
from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict

load_dotenv()


class Settings(BaseSettings):
    model_config = SettingsConfigDict(case_sensitive=True, env_file=".env", extra="ignore")

    PROJECT_NAME: str = "von Neumann Inequality Lab"
    PROJECT_VERSION: str = "0.1.0"
    LOG_LEVEL: str = "INFO"

    # Parallelism cap for grids and random suites
    VNI_THREADS: int = Field(default=1, ge=1)

    # Torus grids
    GRID_OVERSAMPLING: int = Field(default=16, ge=1)
    GRID_MIN_POINTS: int = Field(default=64, ge=4)

    # Quadrature
    L1_QUAD_POINTS: int = Field(default=2 ** 14, ge=8)
    BESOV_QUAD_NODES: int = Field(default=4096, ge=256)
    CIRCLE_GRID_POINTS: int = Field(default=1024, ge=16)

    # Tolerances
    CONTRACTION_TOL: float = 1e-12
    COMMUTE_TOL: float = 1e-12
    MAX_MATRIX_DIM: int = 4096


settings = Settings()
