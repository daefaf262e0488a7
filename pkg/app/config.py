from pydantic_settings import BaseSettings
import psutil


class Settings(BaseSettings):
    # Project
    APP_NAME: str = "qjump"
    APP_VERSION: str = "1.0.0"
    DEBUG: bool = False

    # Logging
    LOG_LEVEL: str = "INFO"
    LOG_FILE: str = ""

    # Performance
    MAX_WORKERS: int = 0
    TRAJECTORY_BATCH_SIZE: int = 256

    # Numerical defaults
    DEFAULT_DT: float = 1e-3
    DEFAULT_THETA_POINTS: int = 64
    DEFAULT_PHI_POINTS: int = 128
    DEFAULT_SNAPSHOT_POINTS: int = 200
    DEFAULT_HISTOGRAM_BINS: str = "32,64"

    # Presets for the published figures
    PRESETS_FILE: str = "data/presets/figures.json"

    @property
    def worker_count(self) -> int:
        if self.MAX_WORKERS > 0:
            return self.MAX_WORKERS
        return psutil.cpu_count(logical=True) or 1

    @property
    def histogram_bins(self) -> tuple:
        theta_bins, phi_bins = self.DEFAULT_HISTOGRAM_BINS.split(",")
        return int(theta_bins), int(phi_bins)

    class Config:
        env_file = ".env"
        case_sensitive = True


settings = Settings()
