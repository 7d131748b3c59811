"""Case configuration: defaults, validation, and the INI file format.

Every field has a case-appropriate default (the rod defaults reproduce the
reference heat-conduction setup: 20 m x 1 m, unit diffusivity, comparison
at 1 s over the first 2 m), so ``slabfem run`` works with no config file.
"""

from __future__ import annotations

import configparser
import io
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, model_validator

Scheme = Literal["spacetime", "implicit_euler", "crank_nicolson"]
JumpModeName = Literal["classical", "flipped"]

_CASE_DEFAULTS = {
    "rod": dict(length=20.0, width=1.0, nx=1000, ny=1, dt=0.1, reference_time=1.0),
    "manufactured": dict(length=2.0, width=1.0, nx=200, ny=1, dt=0.1, reference_time=1.0),
    "moving": dict(length=1.0, width=1.0, nx=8, ny=8, dt=10.0, reference_time=10.0),
}

DESK_MAX_NX = 2000


class CaseConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    case: Literal["rod", "moving", "manufactured"] = "rod"
    scheme: Scheme = "spacetime"
    jump_mode: JumpModeName = "flipped"

    length: float | None = None
    width: float | None = None
    alpha: float = 1.0

    nx: int | None = None
    ny: int | None = None
    time_layers: int = Field(default=1, ge=1)
    quad_order: int = Field(default=2, ge=1, le=4)

    dt: float | None = None
    n_steps: int | None = None
    reference_time: float | None = None
    total_time: float = 10.0

    velocity: tuple[float, float] = (0.1, 0.1)
    mode_number: int = Field(default=1, ge=1)

    error_window: tuple[float, float] = (0.0, 2.0)
    norm_variant: Literal["rms", "sum_by_n"] = "rms"
    solver_tol: float = Field(default=1e-12, gt=0.0)

    output_dir: str = "out"
    write_vtk: bool = False
    desk: bool = False

    @model_validator(mode="after")
    def _resolve(self):
        defaults = _CASE_DEFAULTS[self.case]
        for name, value in defaults.items():
            if getattr(self, name) is None:
                setattr(self, name, value)
        if self.case == "moving":
            self.reference_time = self.total_time
            if self.scheme != "spacetime":
                raise ValueError("the moving case requires the spacetime scheme")
        if self.desk and self.case == "rod" and self.nx > DESK_MAX_NX:
            self.nx = DESK_MAX_NX

        if self.length <= 0 or self.width <= 0:
            raise ValueError("geometry sizes must be positive")
        if self.nx < 1 or self.ny < 1:
            raise ValueError("element counts must be >= 1")
        if self.alpha < 0:
            raise ValueError("alpha must be >= 0")
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.error_window[0] >= self.error_window[1]:
            raise ValueError(f"empty error window {self.error_window}")

        horizon = self.total_time if self.case == "moving" else self.reference_time
        if self.n_steps is None:
            self.n_steps = max(round(horizon / self.dt), 1)
        if self.n_steps < 1:
            raise ValueError("n_steps must be >= 1")
        if abs(self.n_steps * self.dt - horizon) > 1e-9 * max(horizon, 1.0):
            raise ValueError(
                f"n_steps * dt = {self.n_steps * self.dt} does not reach the "
                f"comparison time {horizon}; pick dt dividing it"
            )
        return self

    def with_overrides(self, **kwargs) -> "CaseConfig":
        """New config with the given fields replaced and everything re-validated.

        Changing case/dt/nx resets the derived fields that were only filled
        in by defaulting, so overrides behave as if given up front.
        """
        data = {k: v for k, v in self.model_dump().items() if k in self.model_fields_set}
        data.update({k: v for k, v in kwargs.items() if v is not None})
        if "dt" in kwargs and kwargs["dt"] is not None and "n_steps" not in kwargs:
            data.pop("n_steps", None)
        if "case" in kwargs and kwargs["case"] is not None and kwargs["case"] != self.case:
            for name in _CASE_DEFAULTS[self.case]:
                if name not in kwargs:
                    data.pop(name, None)
        return CaseConfig(**data)


_SECTIONS = {
    "case": ("case", "scheme", "jump_mode"),
    "geometry": ("length", "width"),
    "material": ("alpha",),
    "mesh": ("nx", "ny", "time_layers", "quad_order"),
    "time": ("dt", "n_steps", "reference_time", "total_time"),
    "moving": ("velocity",),
    "manufactured": ("mode_number",),
    "error": ("error_window", "norm_variant"),
    "solver": ("solver_tol",),
    "output": ("output_dir", "write_vtk", "desk"),
}

_TUPLE_FIELDS = ("velocity", "error_window")
_INT_FIELDS = ("nx", "ny", "time_layers", "quad_order", "n_steps", "mode_number")
_FLOAT_FIELDS = ("length", "width", "alpha", "dt", "reference_time", "total_time", "solver_tol")
_BOOL_FIELDS = ("write_vtk", "desk")


def parse_config(text: str) -> CaseConfig:
    """Parse the sectioned key-value format into a validated CaseConfig."""
    cp = configparser.ConfigParser()
    cp.read_string(text)
    known = {f for fields in _SECTIONS.values() for f in fields}
    data = {}
    for section in cp.sections():
        for key, raw in cp[section].items():
            if key not in known:
                raise ValueError(f"unknown config key {key!r} in section [{section}]")
            data[key] = _convert(key, raw)
    return CaseConfig(**data)


def _convert(key: str, raw: str):
    raw = raw.strip()
    if key in _TUPLE_FIELDS:
        return tuple(float(p) for p in raw.split(","))
    if key in _INT_FIELDS:
        return int(raw)
    if key in _FLOAT_FIELDS:
        return float(raw)
    if key in _BOOL_FIELDS:
        return raw.lower() in ("1", "true", "yes", "on")
    return raw


def serialize_config(config: CaseConfig) -> str:
    """Write the resolved config back to the INI format (round-trips)."""
    cp = configparser.ConfigParser()
    for section, fields in _SECTIONS.items():
        cp[section] = {}
        for name in fields:
            value = getattr(config, name)
            if value is None:
                continue
            if name in _TUPLE_FIELDS:
                cp[section][name] = ", ".join(repr(v) for v in value)
            else:
                cp[section][name] = repr(value) if isinstance(value, float) else str(value)
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()
