"""
Runtime settings, read from the environment (and an optional .env file)
"""
import logging
import os
from functools import lru_cache

from dotenv import load_dotenv
from pydantic import BaseModel

# Load environment variables
load_dotenv()


class Settings(BaseModel):
    """Defaults for quadrature, the lambda rule, seeding, logging and the HTTP server"""

    tol_bounded: float = 1e-10
    tol_unbounded: float = 1e-8
    quad_limit: int = 200
    lambda_fraction: float = 0.5
    seed: int = 20240601
    log_level: str = "INFO"
    host: str = "0.0.0.0"
    port: int = 8000

    @classmethod
    def from_env(cls) -> "Settings":
        return cls(
            tol_bounded=float(os.getenv("EGS_TOL_BOUNDED", "1e-10")),
            tol_unbounded=float(os.getenv("EGS_TOL_UNBOUNDED", "1e-8")),
            quad_limit=int(os.getenv("EGS_QUAD_LIMIT", "200")),
            lambda_fraction=float(os.getenv("EGS_LAMBDA_FRACTION", "0.5")),
            seed=int(os.getenv("EGS_SEED", "20240601")),
            log_level=os.getenv("EGS_LOG_LEVEL", "INFO").upper(),
            host=os.getenv("HOST", "0.0.0.0"),
            port=int(os.getenv("PORT", "8000")),
        )


@lru_cache(maxsize=1)
def get_settings() -> Settings:
    return Settings.from_env()


def configure_logging(level: str = "") -> None:
    """Configure the root logger once for an entry point"""
    logging.basicConfig(
        level=(level or get_settings().log_level).upper(),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
