"""Room, waveguide and pinching-antenna placement geometry.

Points on the floor are handled as arrays whose last axis holds ``(x, y)``;
every function broadcasts over leading axes so that whole candidate grids
can be evaluated in one call.  Ceiling points carry an explicit ``z = h``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple

import numpy as np

SEGMENT_TOL = 1e-9  # meters


class OutOfSegment(ValueError):
    """An antenna element would fall outside its waveguide segment."""


@dataclass(frozen=True)
class Room:
    d1: float = 6.0
    d2: float = 10.0
    h: float = 3.0

    def __post_init__(self):
        for name in ("d1", "d2", "h"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"room.{name} must be positive, got {value!r}")

    @property
    def diagonal_length(self) -> float:
        return math.hypot(self.d1, self.d2)

    def contains(self, xy, tol: float = SEGMENT_TOL) -> np.ndarray:
        xy = np.asarray(xy, dtype=float)
        x, y = xy[..., 0], xy[..., 1]
        return (x >= -tol) & (x <= self.d1 + tol) & (y >= -tol) & (y <= self.d2 + tol)

    def clamp(self, xy) -> np.ndarray:
        xy = np.asarray(xy, dtype=float)
        return np.stack(
            [np.clip(xy[..., 0], 0.0, self.d1), np.clip(xy[..., 1], 0.0, self.d2)], axis=-1
        )


class UserPosition(NamedTuple):
    """User location on the floor (z = 0)."""

    x: float
    y: float


class Axis(str, Enum):
    X = "x"
    Y = "y"
    DIAGONAL = "diagonal"
    PARALLEL_Y = "parallel_y"
    SEGMENT = "segment"


@dataclass(frozen=True)
class Waveguide:
    """Straight dielectric waveguide on the ceiling.

    The waveguide runs from ``start`` to ``end``.  ``feed_offset`` is the
    guided length between the access point and ``start``; for the three
    corner-anchored waveguides it is zero, so the guided length to a point
    equals its distance from the AP corner.
    """

    axis: Axis
    start: tuple[float, float]
    end: tuple[float, float]
    feed_offset: float = 0.0

    def __post_init__(self):
        if self.length <= 0:
            raise ValueError("waveguide has zero length")
        if self.feed_offset < 0:
            raise ValueError("feed_offset must be non-negative")

    @classmethod
    def x_axis(cls, room: Room) -> "Waveguide":
        return cls(Axis.X, (0.0, 0.0), (room.d1, 0.0))

    @classmethod
    def y_axis(cls, room: Room) -> "Waveguide":
        return cls(Axis.Y, (0.0, 0.0), (0.0, room.d2))

    @classmethod
    def diagonal(cls, room: Room) -> "Waveguide":
        return cls(Axis.DIAGONAL, (0.0, 0.0), (room.d1, room.d2))

    @classmethod
    def parallel_y(cls, room: Room, x0: float) -> "Waveguide":
        # fed along the x-axis ceiling edge up to x0
        if not 0.0 <= x0 <= room.d1:
            raise ValueError(f"parallel_y waveguide at x0={x0} lies outside the room")
        return cls(Axis.PARALLEL_Y, (x0, 0.0), (x0, room.d2), feed_offset=x0)

    @classmethod
    def radial(cls, end: tuple[float, float]) -> "Waveguide":
        """Straight waveguide from the AP corner to ``end``."""
        return cls(Axis.SEGMENT, (0.0, 0.0), (float(end[0]), float(end[1])))

    @property
    def length(self) -> float:
        return math.hypot(self.end[0] - self.start[0], self.end[1] - self.start[1])

    @property
    def direction(self) -> np.ndarray:
        """Unit vector pointing away from the feed."""
        return (np.asarray(self.end, dtype=float) - np.asarray(self.start, dtype=float)) / self.length

    def position_of(self, xy) -> np.ndarray:
        """Signed distance along the waveguide from ``start`` of the foot of ``xy``."""
        xy = np.asarray(xy, dtype=float)
        u = self.direction
        return (xy[..., 0] - self.start[0]) * u[0] + (xy[..., 1] - self.start[1]) * u[1]

    def point_at(self, s, h: float) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        u = self.direction
        return np.stack(
            [self.start[0] + s * u[0], self.start[1] + s * u[1], np.full_like(s, h)], axis=-1
        )

    def arc_length(self, point) -> np.ndarray:
        """Guided length from the AP to a point lying on the waveguide."""
        return self.feed_offset + self.position_of(np.asarray(point, dtype=float)[..., :2])

    def contains(self, point, tol: float = SEGMENT_TOL) -> bool:
        p = np.asarray(point, dtype=float)[..., :2]
        s = self.position_of(p)
        foot = self.point_at(s, 0.0)[..., :2]
        off_line = np.hypot(p[..., 0] - foot[..., 0], p[..., 1] - foot[..., 1])
        return bool(np.all((off_line <= tol) & (s >= -tol) & (s <= self.length + tol)))


def standard_waveguides(room: Room) -> tuple[Waveguide, Waveguide, Waveguide]:
    """The x-axis, y-axis and diagonal waveguides, in tie-break order."""
    return Waveguide.x_axis(room), Waveguide.y_axis(room), Waveguide.diagonal(room)


@dataclass(frozen=True)
class PAPlacement:
    """A uniform linear PA array (or a single PA when ``n_elements == 1``).

    ``center`` is the 3-D location of the middle element; elements sit at
    ``center + n * spacing * direction`` for ``n = -(N-1)/2 .. (N-1)/2``.
    """

    waveguide: Waveguide
    center: tuple[float, float, float]
    n_elements: int = 1
    spacing: float = 0.0

    def __post_init__(self):
        n = self.n_elements
        if not isinstance(n, (int, np.integer)) or n < 1 or n % 2 == 0:
            raise ValueError(f"n_elements must be a positive odd integer, got {n!r}")
        if n > 1 and not self.spacing > 0:
            raise ValueError("spacing must be positive for an array")
        if not self.waveguide.contains(self.center):
            raise OutOfSegment(f"array center {self.center} is not on the {self.waveguide.axis.value} waveguide")
        array_element_coords(self.waveguide, self.center, self.uniform_offsets())

    @property
    def h(self) -> float:
        return float(self.center[2])

    @property
    def indices(self) -> np.ndarray:
        half = (self.n_elements - 1) // 2
        return np.arange(-half, half + 1)

    def uniform_offsets(self) -> np.ndarray:
        return self.indices * self.spacing

    def element_coords(self) -> np.ndarray:
        return array_element_coords(self.waveguide, self.center, self.uniform_offsets())

    @property
    def center_arc(self) -> float:
        return float(self.waveguide.arc_length(self.center))


def user_pa_distance(user, pa) -> np.ndarray:
    """Euclidean distance from floor point(s) ``user`` to ceiling point(s) ``pa``."""
    user = np.asarray(user, dtype=float)
    pa = np.asarray(pa, dtype=float)
    dx = pa[..., 0] - user[..., 0]
    dy = pa[..., 1] - user[..., 1]
    return np.sqrt(dx * dx + dy * dy + pa[..., 2] ** 2)


class PerpendicularDistances(NamedTuple):
    d_x: np.ndarray
    d_y: np.ndarray
    d_m: np.ndarray


def perpendicular_distances(user_est, room: Room) -> PerpendicularDistances:
    """Spatial distances from a floor point to the x-axis, y-axis and diagonal waveguides."""
    xy = np.asarray(user_est, dtype=float)
    x, y = xy[..., 0], xy[..., 1]
    h2 = room.h**2
    d_x = np.sqrt(y * y + h2)
    d_y = np.sqrt(x * x + h2)
    d_m = np.sqrt((room.d2 * x - room.d1 * y) ** 2 / (room.d1**2 + room.d2**2) + h2)
    return PerpendicularDistances(d_x, d_y, d_m)


def project_to_waveguide(user_est, wg: Waveguide, room: Room) -> np.ndarray:
    """Orthogonal projection of a floor point onto ``wg``, clamped to the segment."""
    s = np.clip(wg.position_of(user_est), 0.0, wg.length)
    return wg.point_at(s, room.h)


def array_element_coords(wg: Waveguide, center, offsets) -> np.ndarray:
    """Ceiling coordinates of elements displaced by ``offsets`` (meters) along ``wg``.

    Raises OutOfSegment if any element leaves the waveguide.
    """
    center = np.asarray(center, dtype=float)
    offsets = np.asarray(offsets, dtype=float)
    s = wg.position_of(center[:2]) + offsets
    if np.any(s < -SEGMENT_TOL) or np.any(s > wg.length + SEGMENT_TOL):
        raise OutOfSegment(
            f"elements span [{s.min():.4f}, {s.max():.4f}] m on a {wg.length:.4f} m waveguide"
        )
    return wg.point_at(s, float(center[2]))


def signal_cosine(user, wg: Waveguide, center) -> np.ndarray:
    """Cosine of the angle between the waveguide direction and the center-to-user ray.

    Equals ``(x_u - x_c) / d`` for the x-axis guide, ``(y_u - y_c) / d`` for
    the y-axis guide and ``(D1 (x_u - x_c) + D2 (y_u - y_c)) / (d |D|)`` for
    the diagonal.
    """
    user = np.asarray(user, dtype=float)
    center = np.asarray(center, dtype=float)
    u = wg.direction
    d = user_pa_distance(user, center)
    proj = (user[..., 0] - center[0]) * u[0] + (user[..., 1] - center[1]) * u[1]
    return np.clip(proj / d, -1.0, 1.0)
