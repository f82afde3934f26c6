"""RSSI ranging and linearized least-squares trilateration for one PA per waveguide."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .channel import ChannelConstants
from .geometry import Room, user_pa_distance

DEGENERATE_DET = 1e-9  # m^2


class DegenerateGeometry(ValueError):
    """The three PAs are (nearly) collinear."""


def rssi_range(measured_power, pa_arc_length, p_s: float, k: ChannelConstants):
    """Invert the free-space plus guided-loss power law into a distance estimate."""
    p_r = np.asarray(measured_power, dtype=float)
    arc = np.asarray(pa_arc_length, dtype=float)
    return k.c * np.exp(-k.alpha * arc) / (np.sqrt(p_r / p_s) * 4.0 * math.pi * k.f_c)


@dataclass
class RangeEstimate:
    distances: np.ndarray
    measured_power: np.ndarray

    def __post_init__(self):
        if np.any(~(np.asarray(self.distances) > 0)):
            raise ValueError("range estimates must be positive")


@dataclass
class LinearSystem:
    """``A X = b`` obtained by subtracting the first range equation from the others.

    ``b`` (and ``e1``, ``e2``) may carry leading batch axes; ``A`` depends on
    the PA layout only.
    """

    A: np.ndarray
    b: np.ndarray
    pas: np.ndarray
    ranges: Optional[np.ndarray] = None

    @property
    def e1(self):
        return self.b[..., 0]

    @property
    def e2(self):
        return self.b[..., 1]

    @property
    def det(self) -> float:
        return float(np.linalg.det(self.A))


def design_matrix(pas) -> np.ndarray:
    """Rows ``2 (p_i - p_1)`` for i = 2, 3; ``pas`` may carry leading batch axes."""
    pas = np.asarray(pas, dtype=float)[..., :2]
    return 2.0 * (pas[..., 1:, :] - pas[..., :1, :])


def triangle_area(pas):
    """Signed area of the PA triangle (counter-clockwise positive)."""
    pas = np.asarray(pas, dtype=float)[..., :2]
    u = pas[..., 1, :] - pas[..., 0, :]
    v = pas[..., 2, :] - pas[..., 0, :]
    area = 0.5 * (u[..., 0] * v[..., 1] - v[..., 0] * u[..., 1])
    return float(area) if area.ndim == 0 else area


def build_linear_system(ranges, pas) -> LinearSystem:
    """Assemble the linearized trilateration system from three range estimates.

    ``ranges`` has shape ``(..., 3)``; ``pas`` holds the three PA coordinates
    in the order used for the subtraction (the first PA is the pivot).
    """
    pas = np.asarray(pas, dtype=float)
    if pas.shape[0] != 3:
        raise ValueError("exactly three PAs are required")
    A = design_matrix(pas)
    if abs(A[0, 0] * A[1, 1] - A[0, 1] * A[1, 0]) < DEGENERATE_DET:
        raise DegenerateGeometry(f"PA triangle is degenerate (det(A) = {np.linalg.det(A):.3e} m^2)")
    d = np.asarray(ranges, dtype=float)
    x, y = pas[:, 0], pas[:, 1]
    d2 = d * d
    e1 = d2[..., 0] - d2[..., 1] + (x[1] ** 2 - x[0] ** 2) + (y[1] ** 2 - y[0] ** 2)
    e2 = d2[..., 0] - d2[..., 2] + (x[2] ** 2 - x[0] ** 2) + (y[2] ** 2 - y[0] ** 2)
    return LinearSystem(A=A, b=np.stack([e1, e2], axis=-1), pas=pas, ranges=d)


@dataclass
class PositionEstimate:
    x: np.ndarray
    y: np.ndarray
    raw: np.ndarray
    det_a: float
    triangle_area: float
    residual_norm: np.ndarray
    condition_estimate: float

    @property
    def xy(self) -> np.ndarray:
        return np.stack([self.x, self.y], axis=-1)

    @property
    def clamped(self) -> np.ndarray:
        """Whether the reported estimate differs from the raw solution."""
        return np.any(self.xy != self.raw, axis=-1)


def solve_ls(sys: LinearSystem, room: Optional[Room] = None) -> PositionEstimate:
    """Least-squares solution of ``A X = b``.

    ``A`` is square and non-singular, so the normal-equation solution
    coincides with ``A^-1 b``; it is computed with an LU solve.  When a room
    is given the reported estimate is clamped to its footprint.
    """
    A = sys.A
    det = A[0, 0] * A[1, 1] - A[0, 1] * A[1, 0]
    if abs(det) < DEGENERATE_DET:
        raise DegenerateGeometry(f"det(A) = {det:.3e} m^2")
    b = np.asarray(sys.b, dtype=float)
    raw = np.linalg.solve(A, b.reshape(-1, 2).T).T.reshape(b.shape)
    residual = np.linalg.norm(b - raw @ A.T, axis=-1)
    xy = room.clamp(raw) if room is not None else raw.copy()
    return PositionEstimate(
        x=xy[..., 0],
        y=xy[..., 1],
        raw=raw,
        det_a=float(det),
        triangle_area=triangle_area(sys.pas),
        residual_norm=residual,
        condition_estimate=float(np.linalg.cond(A)),
    )


def locate(measured_power, pas, arcs, p_s: float, k: ChannelConstants, room: Optional[Room] = None) -> PositionEstimate:
    """Ranging followed by the least-squares solve, for one or many measurements."""
    ranges = rssi_range(measured_power, arcs, p_s, k)
    return solve_ls(build_linear_system(ranges, pas), room)


@dataclass
class ErrorDiagnostics:
    det_a: float
    eight_area: float
    g_exact: np.ndarray
    g_first_order: np.ndarray
    amplified: np.ndarray
    amplification: float
    realized_error: float


def error_diagnostics(
    sys: LinearSystem, true_pos, estimate: PositionEstimate, h: Optional[float] = None
) -> ErrorDiagnostics:
    """Decompose the estimation error into the observation error vector and
    its amplification by ``A^-1``.

    ``h`` defaults to the z coordinate of the PAs.  Single-measurement
    systems only.
    """
    true_pos = np.asarray(true_pos, dtype=float)
    pas = sys.pas
    if h is None:
        if pas.shape[1] < 3:
            raise ValueError("ceiling height unknown: pass h or 3-D PA coordinates")
        h = float(pas[0, 2])
    ceiling = np.column_stack([pas[:, :2], np.full(3, h)])
    d_true = user_pa_distance(true_pos, ceiling)
    g_exact = sys.b - sys.A @ true_pos
    delta = np.asarray(sys.ranges, dtype=float) - d_true
    g1 = 2.0 * np.array(
        [d_true[0] * delta[0] - d_true[1] * delta[1], d_true[0] * delta[0] - d_true[2] * delta[2]]
    )
    amplified = np.linalg.solve(sys.A, g_exact)
    realized = float(np.hypot(*(np.asarray(estimate.raw) - true_pos)))
    return ErrorDiagnostics(
        det_a=float(np.linalg.det(sys.A)),
        eight_area=8.0 * triangle_area(pas),
        g_exact=g_exact,
        g_first_order=g1,
        amplified=amplified,
        amplification=float(np.linalg.norm(np.linalg.inv(sys.A))),
        realized_error=realized,
    )

