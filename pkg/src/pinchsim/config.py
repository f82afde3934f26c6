"""Campaign configuration file: parsing, validation, serialization and
conversion to a :class:`~pinchsim.experiments.Campaign`.

Power values are dBm.  Numbers are taken as dBm; strings may carry an
explicit unit suffix (``"-80 dBm"``, ``"0.1 W"``, ``"10 mW"``).
"""

from __future__ import annotations

import math
import re
from pathlib import Path
from typing import Literal, Optional, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from .channel import ChannelConstants
from .experiments import Campaign, Kind, Lattice
from .geometry import Room
from .positioning_mwmp import GridSearchConfig

__all__ = ["ConfigError", "ConfigFile", "load_config", "parse_config", "dump_config", "parse_power_dbm"]

_POWER = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*(dBm|W|mW|uW)\s*$")
_TO_WATT = {"W": 1.0, "mW": 1e-3, "uW": 1e-6}


class ConfigError(ValueError):
    """Raised for unreadable or invalid configuration documents."""


def parse_power_dbm(value: Union[float, int, str]) -> float:
    """Convert a power given as dBm number or unit-suffixed string to dBm."""
    if isinstance(value, bool):
        raise ValueError("power must be a number or a unit-suffixed string")
    if isinstance(value, (int, float)):
        out = float(value)
    elif isinstance(value, str):
        m = _POWER.match(value)
        if not m:
            raise ValueError(f"cannot parse power {value!r}; use e.g. '-80 dBm' or '0.1 W'")
        number, unit = float(m.group(1)), m.group(2)
        if unit == "dBm":
            out = number
        else:
            watts = number * _TO_WATT[unit]
            if not watts > 0:
                raise ValueError(f"power {value!r} must be positive")
            out = 10.0 * math.log10(watts) + 30.0
    else:
        raise ValueError("power must be a number or a unit-suffixed string")
    if not math.isfinite(out):
        raise ValueError("power must be finite")
    return out


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class RoomSection(_Section):
    d1: float = Field(6.0, gt=0)
    d2: float = Field(10.0, gt=0)
    h: float = Field(3.0, gt=0)


class ChannelSection(_Section):
    f_c: float = Field(2.4e9, gt=0)
    eps_r: float = Field(2.08, gt=0)
    tan_delta: float = Field(4e-4, ge=0)


class PowerSection(_Section):
    p_s_dbm: float = 20.0
    p_t_dbm: float = 20.0
    sigma2_dbm: float = -80.0

    @field_validator("p_s_dbm", "p_t_dbm", "sigma2_dbm", mode="before")
    @classmethod
    def _dbm(cls, v):
        return parse_power_dbm(v)


class LayoutSection(_Section):
    waveguides: Literal["nonparallel", "parallel_y", "single_x", "single_y", "single_diagonal", "radial"] = "nonparallel"
    N: int = Field(1, ge=1)
    spacing_mode: Literal["guided", "fixed"] = "guided"
    spacing: Optional[float] = Field(None, gt=0)
    pa_positions: Optional[list[tuple[float, float]]] = None
    fixed_pa: Optional[tuple[float, float, float]] = None

    @model_validator(mode="after")
    def _check(self):
        if self.N % 2 == 0:
            raise ValueError("N must be odd")
        if self.spacing_mode == "fixed" and self.spacing is None:
            raise ValueError("spacing_mode 'fixed' needs a spacing value")
        if self.spacing_mode == "guided" and self.spacing is not None:
            raise ValueError("spacing is only allowed with spacing_mode 'fixed'")
        if self.waveguides == "radial":
            if not self.pa_positions or len(self.pa_positions) != 3:
                raise ValueError("radial layout needs exactly three pa_positions")
            if self.N != 1:
                raise ValueError("radial layout supports single PAs only")
        elif self.pa_positions is not None:
            raise ValueError("pa_positions is only allowed with the radial layout")
        return self


class GridSearchSection(_Section):
    coarse_resolution: float = Field(0.5, gt=0)
    refine_factor: int = Field(5, ge=2)
    max_iterations: int = Field(4, ge=0)
    stop_threshold: float = Field(1e-15, gt=0)


class LatticeSection(_Section):
    nx: int = Field(30, ge=1)
    ny: int = Field(50, ge=1)


class SweepSection(_Section):
    n_elements: list[int] = Field(default_factory=list)
    sigma2_dbm: list[float] = Field(default_factory=list)
    p_t_dbm: list[float] = Field(default_factory=list)
    layouts: list[Literal["nonparallel", "parallel_y"]] = Field(default_factory=lambda: ["nonparallel", "parallel_y"])

    @field_validator("sigma2_dbm", "p_t_dbm", mode="before")
    @classmethod
    def _dbm_list(cls, v):
        if not isinstance(v, list):
            raise ValueError("expected a list of powers")
        return [parse_power_dbm(x) for x in v]

    @field_validator("n_elements")
    @classmethod
    def _odd(cls, v):
        if any(n < 1 or n % 2 == 0 for n in v):
            raise ValueError("array sizes must be positive odd integers")
        return v


class CampaignSection(_Section):
    kind: Kind = Kind.MWMP_MAP
    lattice: LatticeSection = LatticeSection()
    trials: int = Field(100, ge=1)
    users: int = Field(1000, ge=1)
    seed: int = Field(0, ge=0, lt=2**64)
    uplink_model: Literal["exact", "farfield"] = "exact"
    sweeps: SweepSection = SweepSection()


class ConfigFile(_Section):
    room: RoomSection = RoomSection()
    channel: ChannelSection = ChannelSection()
    power: PowerSection = PowerSection()
    layout: LayoutSection = LayoutSection()
    grid_search: GridSearchSection = GridSearchSection()
    campaign: CampaignSection = CampaignSection()

    @model_validator(mode="after")
    def _fits(self):
        if self.layout.fixed_pa is not None:
            x, y, z = self.layout.fixed_pa
            if not (0 <= x <= self.room.d1 and 0 <= y <= self.room.d2 and 0 < z <= self.room.h):
                raise ValueError("fixed_pa must lie inside the room")
        for p in self.layout.pa_positions or ():
            if not (0 <= p[0] <= self.room.d1 and 0 <= p[1] <= self.room.d2):
                raise ValueError(f"PA position {p} lies outside the room")
        return self

    # --- conversions ---

    def room_obj(self) -> Room:
        return Room(self.room.d1, self.room.d2, self.room.h)

    def channel_obj(self) -> ChannelConstants:
        return ChannelConstants(f_c=self.channel.f_c, eps_r=self.channel.eps_r, tan_delta=self.channel.tan_delta)

    def grid_obj(self) -> GridSearchConfig:
        g = self.grid_search
        return GridSearchConfig(g.coarse_resolution, g.refine_factor, g.max_iterations, g.stop_threshold)

    def to_campaign(self, seed: Optional[int] = None) -> Campaign:
        c, s, lay = self.campaign, self.campaign.sweeps, self.layout
        return Campaign(
            kind=c.kind,
            room=self.room_obj(),
            channel=self.channel_obj(),
            p_s=10.0 ** ((self.power.p_s_dbm - 30.0) / 10.0),
            layout=lay.waveguides,
            layouts=tuple(s.layouts),
            n_elements=tuple(s.n_elements) or (lay.N,),
            noise_dbm=tuple(s.sigma2_dbm) or (self.power.sigma2_dbm,),
            power_dbm=tuple(s.p_t_dbm) or (self.power.p_t_dbm,),
            lattice=Lattice(c.lattice.nx, c.lattice.ny),
            trials=c.trials,
            users=c.users,
            seed=c.seed if seed is None else seed,
            grid=self.grid_obj(),
            uplink_model=c.uplink_model,
            spacing=lay.spacing,
            pa_positions=tuple(tuple(p) for p in lay.pa_positions) if lay.pa_positions else None,
            fixed_pa=lay.fixed_pa,
        )


def _format_errors(err: ValidationError) -> str:
    lines = []
    for e in err.errors():
        path = ".".join(str(p) for p in e["loc"]) or "<root>"
        lines.append(f"{path}: {e['msg']}")
    return "\n".join(lines)


def parse_config(data) -> ConfigFile:
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError("<root>: configuration must be a mapping")
    try:
        return ConfigFile.model_validate(data)
    except ValidationError as exc:
        raise ConfigError(_format_errors(exc)) from None


def load_config(path: Union[str, Path]) -> ConfigFile:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: invalid YAML ({exc})") from None
    return parse_config(data)


def config_dict(cfg: ConfigFile) -> dict:
    return cfg.model_dump(mode="json")


def dump_config(cfg: ConfigFile) -> str:
    return yaml.safe_dump(config_dict(cfg), sort_keys=False)
