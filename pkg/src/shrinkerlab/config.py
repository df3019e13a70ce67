"""Run configuration: pydantic schema, defaults, JSON loading and echo.

One JSON object configures everything; unknown keys are rejected and all
numeric fields are range-checked.  Only the OUTPUT_DIR environment variable
may override a field (the output directory); everything else lives in the
file for reproducibility.
"""

import os

from pydantic import BaseModel, ConfigDict, Field, field_validator

from .errors import ConfigError

__all__ = ["RunConfig", "SpecConfig", "ConeConfig", "SolverConfig",
           "FlowConfig", "CarlemanConfig", "load_config", "effective_config"]

_SPEC_NAMES = ("E1", "E1_plus_ratio", "E1_minus_ratio")


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class SpecConfig(_Strict):
    name: str = "E1"
    params: dict = Field(default_factory=dict)

    @field_validator("name")
    @classmethod
    def _known(cls, v):
        if v not in _SPEC_NAMES:
            raise ValueError(f"unknown curvature spec '{v}'; one of {_SPEC_NAMES}")
        return v

    @field_validator("params")
    @classmethod
    def _ranges(cls, v):
        allowed = {"eps", "domain_eps"}
        unknown = set(v) - allowed
        if unknown:
            raise ValueError(f"unknown spec params {sorted(unknown)}")
        if "eps" in v and not (0 <= float(v["eps"]) < 10):
            raise ValueError("eps must lie in [0, 10)")
        if "domain_eps" in v and not (0 < float(v["domain_eps"]) < 1):
            raise ValueError("domain_eps must lie in (0, 1)")
        return v


class ConeConfig(_Strict):
    n: int = Field(default=2, ge=2, le=8)
    sigma: float = Field(default=0.8, gt=0, lt=100)
    orientation: int = 1

    @field_validator("orientation")
    @classmethod
    def _sign(cls, v):
        if v not in (1, -1):
            raise ValueError("orientation must be +1 or -1")
        return v


class SolverConfig(_Strict):
    tol: float = Field(default=1e-11, gt=0, le=1e-3)
    z_far: float = Field(default=40.0, ge=20, le=200)
    grid_bracket: tuple[float, float] | None = None
    grid_count: int = Field(default=48, ge=2, le=5000)
    refine_tol: float = Field(default=1e-12, gt=0, le=1e-3)
    slope_tol: float = Field(default=1e-4, gt=0, le=0.1)
    eq_tol: float = Field(default=1e-8, gt=0, le=1e-2)


class FlowConfig(_Strict):
    dx: float = Field(default=0.03, gt=1e-4, le=0.5)
    cfl_max: float = Field(default=0.2, gt=0, le=0.5)
    t_min: float = Field(default=-0.05, gt=-1.0, lt=0.0)
    snapshots: int = Field(default=17, ge=5, le=500)


class CarlemanConfig(_Strict):
    M_values: tuple[float, ...] = (1.0, 4.0, 16.0)
    tau_values: tuple[float, ...] = (0.25, 1.0)
    R: float = Field(default=10.0, ge=1.0, le=100.0)
    quadrature_nodes: int = Field(default=8, ge=2, le=64)
    margin_tol: float = Field(default=1e-6, gt=0, le=1e-2)
    bump_count: int = Field(default=100, ge=1, le=10000)
    time_slices: int = Field(default=40, ge=8, le=400)
    samples: int = Field(default=221, ge=32, le=4096)

    @field_validator("M_values")
    @classmethod
    def _m_range(cls, v):
        if not all(m >= 1 for m in v):
            raise ValueError("all M values must be >= 1")
        return v

    @field_validator("tau_values")
    @classmethod
    def _tau_range(cls, v):
        if not all(0 < t <= 1 for t in v):
            raise ValueError("all tau values must lie in (0, 1]")
        return v


class RunConfig(_Strict):
    spec: SpecConfig = Field(default_factory=SpecConfig)
    cone: ConeConfig = Field(default_factory=ConeConfig)
    solver: SolverConfig = Field(default_factory=SolverConfig)
    flow: FlowConfig = Field(default_factory=FlowConfig)
    carleman: CarlemanConfig = Field(default_factory=CarlemanConfig)
    output_dir: str = "out"
    seed: int = Field(default=0, ge=0, le=2**63 - 1)

    def curvature_spec(self):
        from .curvature import make_spec
        return make_spec(self.spec.name, self.cone.n, self.spec.params)

    def cone_spec(self):
        from .cone import ConeSpec
        return ConeSpec(self.cone.n, self.cone.sigma, self.cone.orientation)


def load_config(path=None, overrides=None):
    """RunConfig from a JSON file plus optional field overrides.

    The OUTPUT_DIR environment variable overrides output_dir; no other
    environment configuration exists.
    """
    import json

    data = {}
    if path is not None:
        try:
            with open(path) as fh:
                data = json.load(fh)
        except FileNotFoundError as exc:
            raise ConfigError(f"config file not found: {path}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file is not valid JSON: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config file must contain a JSON object")
    for key, value in (overrides or {}).items():
        if value is not None:
            data[key] = value
    env_out = os.environ.get("OUTPUT_DIR")
    if env_out:
        data["output_dir"] = env_out
    try:
        return RunConfig(**data)
    except Exception as exc:   # pydantic ValidationError
        raise ConfigError(f"invalid configuration: {exc}") from exc


def effective_config(cfg):
    """Plain-dict echo of the validated configuration (for report embedding)."""
    out = cfg.model_dump()
    # tuples serialize as lists
    return out
