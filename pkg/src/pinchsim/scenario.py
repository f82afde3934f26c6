"""Scenario description (room, channel, PA layout) and uplink measurement synthesis."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np

from .channel import (
    ChannelConstants,
    Measurement,
    NoiseModel,
    add_power_noise,
    mwmp_received_signal_exact,
)
from .geometry import PAPlacement, Room, UserPosition, Waveguide
from .positioning_mwmp import PowerModel, theoretical_power

LAYOUTS = ("nonparallel", "parallel_y", "single_x", "single_y", "single_diagonal")
UPLINK_MODELS = ("exact", "farfield")


@dataclass(frozen=True)
class Scenario:
    room: Room
    channel: ChannelConstants
    placements: tuple[PAPlacement, ...]
    p_s: float = 0.1
    fixed_pa: Optional[tuple[float, float, float]] = None

    def __post_init__(self):
        if not self.p_s > 0:
            raise ValueError("transmit power p_s must be positive")
        if not self.placements:
            raise ValueError("scenario needs at least one waveguide")

    @property
    def n_elements(self) -> int:
        return self.placements[0].n_elements

    @property
    def fixed_antenna(self) -> np.ndarray:
        if self.fixed_pa is not None:
            return np.asarray(self.fixed_pa, dtype=float)
        return np.array([self.room.d1 / 2, self.room.d2 / 2, self.room.h])

    def pa_coords(self) -> np.ndarray:
        return np.array([pl.center for pl in self.placements], dtype=float)

    def pa_arcs(self) -> np.ndarray:
        return np.array([pl.center_arc for pl in self.placements])

    def power_model(self) -> PowerModel:
        return PowerModel(self.placements, self.p_s, self.channel, self.room)

    def to_dict(self) -> dict:
        return {
            "room": {"d1": self.room.d1, "d2": self.room.d2, "h": self.room.h},
            "channel": {
                "f_c": self.channel.f_c,
                "eps_r": self.channel.eps_r,
                "tan_delta": self.channel.tan_delta,
                "c": self.channel.c,
            },
            "p_s": self.p_s,
            "fixed_pa": [float(v) for v in self.fixed_antenna],
            "placements": [
                {
                    "axis": pl.waveguide.axis.value,
                    "start": list(pl.waveguide.start),
                    "end": list(pl.waveguide.end),
                    "feed_offset": pl.waveguide.feed_offset,
                    "center": [float(v) for v in pl.center],
                    "n_elements": int(pl.n_elements),
                    "spacing": float(pl.spacing),
                }
                for pl in self.placements
            ],
        }

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _placement(wg: Waveguide, position: float, room: Room, n: int, spacing: float) -> PAPlacement:
    center = tuple(float(v) for v in wg.point_at(position, room.h))
    return PAPlacement(wg, center, n, spacing if n > 1 else 0.0)


def build_layout(
    name: str,
    room: Room,
    k: ChannelConstants,
    n_elements: int = 1,
    spacing: Optional[float] = None,
) -> tuple[PAPlacement, ...]:
    """Named waveguide layouts with arrays centered mid-segment.

    ``nonparallel``: x-axis, y-axis and diagonal guides from the AP corner.
    ``parallel_y``: three guides parallel to y at x = 0, D1/2, D1 with array
    centers at a quarter, half and three quarters of the room length (equal
    centers would make the y-mirror ambiguity exact).
    ``single_*``: one guide only, for the ambiguity diagnostics.
    """
    d = k.default_spacing if spacing is None else spacing
    if name == "nonparallel":
        guides = [Waveguide.x_axis(room), Waveguide.y_axis(room), Waveguide.diagonal(room)]
        return tuple(_placement(wg, wg.length / 2, room, n_elements, d) for wg in guides)
    if name == "parallel_y":
        xs = (0.0, room.d1 / 2, room.d1)
        fractions = (0.25, 0.5, 0.75)
        return tuple(
            _placement(Waveguide.parallel_y(room, x0), f * room.d2, room, n_elements, d)
            for x0, f in zip(xs, fractions)
        )
    singles = {
        "single_x": Waveguide.x_axis,
        "single_y": Waveguide.y_axis,
        "single_diagonal": Waveguide.diagonal,
    }
    if name in singles:
        wg = singles[name](room)
        return (_placement(wg, wg.length / 2, room, n_elements, d),)
    raise ValueError(f"unknown layout {name!r}; expected one of {LAYOUTS}")


def radial_layout(room: Room, pa_xy: Sequence[Sequence[float]]) -> tuple[PAPlacement, ...]:
    """Single PAs at arbitrary ceiling points, each fed by a straight guide from the AP."""
    return tuple(
        PAPlacement(Waveguide.radial((x, y)), (float(x), float(y), room.h), 1, 0.0) for x, y in pa_xy
    )


def make_scenario(
    layout: str = "nonparallel",
    n_elements: int = 1,
    room: Optional[Room] = None,
    k: Optional[ChannelConstants] = None,
    p_s: float = 0.1,
    spacing: Optional[float] = None,
) -> Scenario:
    room = room or Room()
    k = k or ChannelConstants()
    return Scenario(room, k, build_layout(layout, room, k, n_elements, spacing), p_s)


def with_elements(scenario: Scenario, n_elements: int) -> Scenario:
    """Same waveguides and centers with a different array size."""
    k = scenario.channel
    placements = tuple(
        PAPlacement(pl.waveguide, pl.center, n_elements, (pl.spacing or k.default_spacing) if n_elements > 1 else 0.0)
        for pl in scenario.placements
    )
    return replace(scenario, placements=placements)


def noiseless_powers(scenario: Scenario, user, model: str = "exact") -> np.ndarray:
    """Noiseless received power for each waveguide, stacked on the last axis.

    ``exact`` sums element contributions with exact distances and per-element
    guided loss; ``farfield`` evaluates the closed-form superposition.
    """
    if model == "exact":
        sigs = [mwmp_received_signal_exact(user, pl, scenario.p_s, scenario.channel) for pl in scenario.placements]
        return np.stack([np.abs(s) ** 2 for s in sigs], axis=-1)
    if model == "farfield":
        return np.stack(
            [theoretical_power(user, pl, scenario.p_s, scenario.channel) for pl in scenario.placements], axis=-1
        )
    raise ValueError(f"unknown uplink model {model!r}; expected one of {UPLINK_MODELS}")


def synthesize(
    scenario: Scenario,
    user,
    noise: NoiseModel,
    rng: Optional[np.random.Generator] = None,
    model: str = "exact",
) -> Measurement:
    """Noisy power measurement of a user at ``user`` on every waveguide."""
    p0 = noiseless_powers(scenario, user, model)
    received, draw = add_power_noise(p0, noise, rng)
    arr = np.asarray(user, dtype=float)
    pos = UserPosition(float(arr[0]), float(arr[1])) if arr.shape == (2,) else None
    return Measurement(received=received, noiseless=p0, draw=draw, true_position=pos, model=model)
