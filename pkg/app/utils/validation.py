import json
import math
from pathlib import Path
from typing import Any, Dict, Optional, Tuple

from pydantic import BaseModel, ConfigDict, field_validator

from app.config import settings
from app.models.physics import BASIS_LABELS, DICKE_LABELS, PhysicalParams, PureState
from app.services.dynamics_service import MIN_SEPARATION
from app.utils.errors import ConfigError
from app.utils.hashing import hash_config

PROJECT_ROOT = Path(__file__).resolve().parents[2]


class RunConfig(BaseModel):
    """Fully resolved parameters of one CLI run"""

    model_config = ConfigDict(extra="forbid", frozen=True)

    # Physical system, rates in units of A and lengths in wavelengths
    omega_over_A: float = 0.3
    omega_2_over_A: Optional[float] = None
    r_over_lambda0: float = 10.0
    dipole_axis: Tuple[float, float, float] = (0.0, 0.0, 1.0)
    include_coupling: bool = True

    # Angular grids
    n_theta: int = settings.DEFAULT_THETA_POINTS
    n_phi: int = settings.DEFAULT_PHI_POINTS
    theta: float = math.pi / 2

    # Trajectories
    n_trajectories: Optional[int] = None
    seed: int = 0
    dt: float = settings.DEFAULT_DT
    t_final: float = 5.0
    initial_state: str = "g"
    window_start: float = 0.0

    # Output
    analytic: bool = True
    closed_form: bool = False
    output: Optional[str] = None

    @field_validator("omega_over_A", "omega_2_over_A")
    @classmethod
    def validate_rabi(cls, v):
        if v is not None and (not math.isfinite(v) or v < 0):
            raise ValueError("Rabi frequency must be a finite non-negative number")
        return v

    @field_validator("dt")
    @classmethod
    def validate_positive(cls, v):
        if not math.isfinite(v) or v <= 0:
            raise ValueError("must be a finite positive number")
        return v

    @field_validator("r_over_lambda0")
    @classmethod
    def validate_separation(cls, v):
        if not math.isfinite(v) or v <= MIN_SEPARATION:
            raise ValueError(f"separation must be a finite number above {MIN_SEPARATION} wavelengths")
        return v

    @field_validator("t_final", "window_start")
    @classmethod
    def validate_time(cls, v):
        if not math.isfinite(v) or v < 0:
            raise ValueError("must be a finite non-negative time")
        return v

    @field_validator("dipole_axis")
    @classmethod
    def validate_dipole_axis(cls, v):
        if not any(v):
            raise ValueError("dipole_axis must be a non-zero vector")
        return v

    @field_validator("n_theta", "n_phi", "n_trajectories")
    @classmethod
    def validate_count(cls, v):
        if v is not None and v < 1:
            raise ValueError("must be at least 1")
        return v

    @field_validator("theta")
    @classmethod
    def validate_theta(cls, v):
        if not 0.0 <= v <= math.pi:
            raise ValueError("theta must lie in [0, pi]")
        return v

    @field_validator("seed")
    @classmethod
    def validate_seed(cls, v):
        if not 0 <= v < 2 ** 64:
            raise ValueError("seed must be a non-negative 64-bit integer")
        return v

    @field_validator("initial_state")
    @classmethod
    def validate_initial_state(cls, v):
        valid = BASIS_LABELS + DICKE_LABELS
        if v not in valid:
            raise ValueError(f"initial_state must be one of {list(valid)}")
        return v

    def physical_params(self) -> PhysicalParams:
        omega_2 = self.omega_over_A if self.omega_2_over_A is None else self.omega_2_over_A
        return PhysicalParams(
            rabi_1=self.omega_over_A,
            rabi_2=omega_2,
            separation_r=self.r_over_lambda0,
            dipole_orientation=self.dipole_axis,
            include_coupling=self.include_coupling,
        )

    def initial(self) -> PureState:
        if self.initial_state in DICKE_LABELS:
            return PureState.dicke(self.initial_state)
        return PureState.basis(self.initial_state)

    def trajectories(self, default: int) -> int:
        return self.n_trajectories if self.n_trajectories is not None else default

    def metadata(self, command: str) -> Dict[str, Any]:
        """Provenance block written at the top of every output file

        The output path is left out so that a seeded rerun into another file
        reproduces it byte for byte.
        """
        resolved = self.model_dump(mode="json", exclude={"output"})
        canonical = json.dumps(resolved, sort_keys=True, separators=(",", ":"))
        return {
            "project": settings.APP_NAME,
            "version": settings.APP_VERSION,
            "command": command,
            "config": resolved,
            "config_hash": hash_config(canonical)[:16],
        }


def _resolve(path: str) -> Path:
    candidate = Path(path)
    if candidate.is_absolute() or candidate.exists():
        return candidate
    return PROJECT_ROOT / candidate


def _read_json_object(path: Path, what: str) -> Dict[str, Any]:
    try:
        payload = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigError(f"{what} not found: {path}")
    except json.JSONDecodeError as e:
        raise ConfigError(f"{what} {path} is not valid JSON: {e}")
    if not isinstance(payload, dict):
        raise ConfigError(f"{what} {path} must contain a JSON object")
    return payload


def load_presets() -> Dict[str, Dict[str, Any]]:
    return _read_json_object(_resolve(settings.PRESETS_FILE), "preset file")


def build_run_config(
    preset: Optional[str] = None,
    config_file: Optional[str] = None,
    overrides: Optional[Dict[str, Any]] = None,
) -> RunConfig:
    """Merge preset, then JSON manifest, then flag overrides; later layers win

    Raises ConfigError for unknown presets or unreadable files and pydantic's
    ValidationError for invalid values.
    """
    merged: Dict[str, Any] = {}
    if preset:
        presets = load_presets()
        if preset not in presets:
            raise ConfigError(f"unknown preset '{preset}', choose from {sorted(presets)}")
        merged.update(presets[preset])
    if config_file:
        merged.update(_read_json_object(Path(config_file), "config file"))
    if overrides:
        merged.update({key: value for key, value in overrides.items() if value is not None})
    return RunConfig(**merged)
