"""Closed-form superposed power of a PA array and coarse-to-fine grid-search
localization from the three waveguide powers."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .channel import ChannelConstants
from .geometry import PAPlacement, Room, UserPosition, signal_cosine, user_pa_distance

_SINGULAR = 1e-12


def dirichlet_factor(psi, n: int):
    """Array factor ``sin(n psi / 2) / sin(psi / 2)``, the sum of ``exp(j m psi)``
    over ``m = -(n-1)/2 .. (n-1)/2``.

    The phase is first reduced to ``[-pi, pi)``; the factor picks up
    ``(-1)^((n-1) k)`` per ``2 pi k`` shift, which is 1 for odd ``n``.  At the
    removable singularity the limit ``n`` is returned.
    """
    psi = np.asarray(psi, dtype=float)
    k = np.floor((psi + math.pi) / (2.0 * math.pi))
    r = psi - 2.0 * math.pi * k
    sign = np.where(((n - 1) * k) % 2 == 0, 1.0, -1.0)
    half = 0.5 * r
    den = np.sin(half)
    small = np.abs(den) < _SINGULAR
    safe = np.where(small, 1.0, den)
    value = np.where(small, float(n), np.sin(n * half) / safe)
    return sign * value


def theoretical_power(points, placement: PAPlacement, p_s: float, k: ChannelConstants):
    """Far-field superposed power received from one waveguide, for candidate user points.

    Costs the same for any number of elements.
    """
    points = np.asarray(points, dtype=float)
    center = np.asarray(placement.center, dtype=float)
    d = user_pa_distance(points, center)
    cos = signal_cosine(points, placement.waveguide, center)
    psi = 2.0 * math.pi * placement.spacing * cos / k.wavelength
    amp = k.c * math.exp(-k.alpha * placement.center_arc) / (4.0 * math.pi * k.f_c * d)
    if placement.n_elements > 1:
        amp = amp * dirichlet_factor(psi, placement.n_elements)
    return p_s * amp * amp


@dataclass
class PowerModel:
    """The noiseless power map a grid search compares measurements against."""

    placements: Sequence[PAPlacement]
    p_s: float
    k: ChannelConstants
    room: Room
    _cache: dict = field(default_factory=dict, repr=False)

    def power(self, points) -> np.ndarray:
        """Powers for every waveguide, stacked on the last axis."""
        return np.stack([theoretical_power(points, pl, self.p_s, self.k) for pl in self.placements], axis=-1)

    def coarse(self, resolution: float):
        """Coarse lattice points and their powers (cached per resolution)."""
        if resolution not in self._cache:
            pts = coarse_grid(self.room, resolution)
            self._cache[resolution] = (pts, self.power(pts))
        return self._cache[resolution]


@dataclass(frozen=True)
class GridSearchConfig:
    coarse_resolution: float = 0.5
    refine_factor: int = 5
    max_iterations: int = 4
    stop_threshold: float = 1e-15

    def __post_init__(self):
        if not self.coarse_resolution > 0:
            raise ValueError("coarse_resolution must be positive")
        if int(self.refine_factor) != self.refine_factor or self.refine_factor < 2:
            raise ValueError("refine_factor must be an integer >= 2")
        if int(self.max_iterations) != self.max_iterations or self.max_iterations < 0:
            raise ValueError("max_iterations must be a non-negative integer")
        if not self.stop_threshold > 0:
            raise ValueError("stop_threshold must be positive")

    @property
    def final_pitch(self) -> float:
        return self.coarse_resolution / self.refine_factor**self.max_iterations

    @property
    def refine_points(self) -> int:
        return (2 * self.refine_factor + 1) ** 2


def _axis(extent: float, step: float) -> np.ndarray:
    count = int(math.floor(extent / step + 1e-9)) + 1
    return step * np.arange(count)


def coarse_grid(room: Room, resolution: float) -> np.ndarray:
    """Lattice points ordered by x, then y (so argmin breaks ties that way)."""
    xs = _axis(room.d1, resolution)
    ys = _axis(room.d2, resolution)
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    return np.stack([gx.ravel(), gy.ravel()], axis=-1)


@dataclass
class GridSearchResult:
    estimate: UserPosition
    final_error_value: float
    iterations_used: int
    points_evaluated: int
    n_waveguides: int = 3

    @property
    def power_evaluations(self) -> int:
        return self.points_evaluated * self.n_waveguides


@dataclass
class BatchResult:
    xy: np.ndarray
    error_value: np.ndarray
    iterations: np.ndarray
    points_evaluated: np.ndarray


def _error(measured, powers):
    return np.abs(measured[:, None, :] - powers).sum(axis=-1)


def grid_search_batch(measured, model: PowerModel, config: GridSearchConfig = GridSearchConfig()) -> BatchResult:
    """Run the grid search independently for each row of ``measured``.

    The coarse lattice is searched exhaustively; each refinement samples the
    neighbourhood of +-1 previous-pitch cell around the incumbent at pitch
    ``previous / refine_factor``.  A row stops refining once the error
    improvement falls below ``stop_threshold`` or after ``max_iterations``.
    """
    measured = np.atleast_2d(np.asarray(measured, dtype=float))
    batch = measured.shape[0]
    room = model.room
    pts, p_coarse = model.coarse(config.coarse_resolution)
    err = _error(measured, p_coarse[None])
    best = np.argmin(err, axis=1)
    xy = pts[best].copy()
    best_err = err[np.arange(batch), best]
    iterations = np.zeros(batch, dtype=int)
    evaluated = np.full(batch, pts.shape[0], dtype=int)
    active = np.ones(batch, dtype=bool)

    rf = int(config.refine_factor)
    steps = np.arange(-rf, rf + 1, dtype=float)
    pitch = config.coarse_resolution
    for _ in range(int(config.max_iterations)):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        pitch = pitch / rf
        offs = pitch * steps
        cx = xy[idx, 0, None] + offs
        cy = xy[idx, 1, None] + offs
        gx = np.repeat(cx, offs.size, axis=1)
        gy = np.tile(cy, (1, offs.size))
        cand = np.stack([gx, gy], axis=-1)
        valid = (gx >= 0.0) & (gx <= room.d1) & (gy >= 0.0) & (gy <= room.d2)
        e = _error(measured[idx], model.power(cand))
        e = np.where(valid, e, np.inf)
        j = np.argmin(e, axis=1)
        new_err = e[np.arange(idx.size), j]
        improved = new_err < best_err[idx]
        gain = np.where(improved, best_err[idx] - new_err, 0.0)
        upd = idx[improved]
        xy[upd] = cand[np.flatnonzero(improved), j[improved]]
        best_err[upd] = new_err[improved]
        iterations[idx] += 1
        evaluated[idx] += valid.sum(axis=1)
        active[idx] = gain >= config.stop_threshold
    return BatchResult(xy=xy, error_value=best_err, iterations=iterations, points_evaluated=evaluated)


def grid_search_locate(measured, model: PowerModel, config: GridSearchConfig = GridSearchConfig()) -> GridSearchResult:
    """Locate a single user from the powers measured on each waveguide."""
    measured = np.asarray(measured, dtype=float)
    if measured.shape != (len(model.placements),):
        raise ValueError(f"expected {len(model.placements)} powers, got shape {measured.shape}")
    res = grid_search_batch(measured[None], model, config)
    return GridSearchResult(
        estimate=UserPosition(float(res.xy[0, 0]), float(res.xy[0, 1])),
        final_error_value=float(res.error_value[0]),
        iterations_used=int(res.iterations[0]),
        points_evaluated=int(res.points_evaluated[0]),
        n_waveguides=len(model.placements),
    )


@dataclass
class ComplexityRecord:
    g_coarse: int
    g_refine: int
    max_iterations: int
    bound: int
    power_evaluations: int
    within_bound: bool


def complexity_audit(result: GridSearchResult, config: GridSearchConfig, room: Room) -> ComplexityRecord:
    """Compare per-waveguide power evaluations against ``K (G_coa + M G_ref)``."""
    g_coa = coarse_grid(room, config.coarse_resolution).shape[0]
    g_ref = config.refine_points
    bound = result.n_waveguides * (g_coa + config.max_iterations * g_ref)
    evals = result.power_evaluations
    return ComplexityRecord(
        g_coarse=g_coa,
        g_refine=g_ref,
        max_iterations=config.max_iterations,
        bound=bound,
        power_evaluations=evals,
        within_bound=evals <= bound,
    )
