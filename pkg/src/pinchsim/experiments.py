"""Monte Carlo campaigns: positioning-error maps, average-error curves and
downlink rate sweeps.

Randomness is organised in substreams keyed by ``(seed, purpose, cell,
trial)`` so that every statistic is independent of evaluation order, chunk
scheduling and worker count.  Noise draws are standard normals scaled by
the noise power, so sweeps over noise power reuse the same draws.
"""

from __future__ import annotations

import csv
import io
import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence

import numpy as np

from . import comms
from .channel import ChannelConstants, dbm_to_watt, perturb
from .geometry import Room
from .positioning_mwmp import GridSearchConfig, grid_search_batch
from .positioning_mwsp import locate as ls_locate
from .scenario import Scenario, build_layout, noiseless_powers, radial_layout

log = logging.getLogger(__name__)

CHUNK = 2048  # localizations per work unit; fixed so results never depend on workers

_NOISE = 1
_USERS = 2


class Kind(str, Enum):
    MWSP_MAP = "MwspMap"
    MWMP_MAP = "MwmpMap"
    SWMP_MAP = "SwmpMap"
    AVG_ERROR = "AvgErrorCurve"
    RATE_VS_POWER = "RateVsPower"
    RATE_VS_NOISE = "RateVsNoise"


@dataclass(frozen=True)
class Lattice:
    """Cell-centred grid of true user positions."""

    nx: int = 30
    ny: int = 50

    def __post_init__(self):
        if self.nx < 1 or self.ny < 1:
            raise ValueError("lattice dimensions must be positive")

    def points(self, room: Room) -> np.ndarray:
        xs = (np.arange(self.nx) + 0.5) * room.d1 / self.nx
        ys = (np.arange(self.ny) + 0.5) * room.d2 / self.ny
        gx, gy = np.meshgrid(xs, ys, indexing="ij")
        return np.stack([gx.ravel(), gy.ravel()], axis=-1)


@dataclass(frozen=True)
class Campaign:
    kind: Kind
    room: Room = Room()
    channel: ChannelConstants = ChannelConstants()
    p_s: float = 0.1
    layout: str = "nonparallel"
    layouts: tuple[str, ...] = ("nonparallel", "parallel_y")
    n_elements: tuple[int, ...] = (3,)
    noise_dbm: tuple[float, ...] = (-80.0,)
    power_dbm: tuple[float, ...] = (20.0,)
    lattice: Lattice = Lattice()
    trials: int = 100
    users: int = 1000
    seed: int = 0
    grid: GridSearchConfig = GridSearchConfig()
    uplink_model: str = "exact"
    spacing: Optional[float] = None
    pa_positions: Optional[tuple[tuple[float, float], ...]] = None
    fixed_pa: Optional[tuple[float, float, float]] = None

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.users < 1:
            raise ValueError("users must be >= 1")
        if not (0 <= self.seed < 2**64):
            raise ValueError("seed must be an unsigned 64-bit integer")

    def scenario(self, layout: Optional[str] = None, n_elements: int = 1) -> Scenario:
        layout = layout or self.layout
        if layout == "radial":
            if self.pa_positions is None:
                raise ValueError("radial layout needs pa_positions")
            placements = radial_layout(self.room, self.pa_positions)
        else:
            placements = build_layout(layout, self.room, self.channel, n_elements, self.spacing)
        return Scenario(self.room, self.channel, placements, self.p_s, self.fixed_pa)


def standard_normals(seed: int, purpose: int, cell: int, trial: int, size: int) -> np.ndarray:
    return np.random.default_rng(np.random.SeedSequence([seed, purpose, cell, trial])).standard_normal(size)


def noise_block(seed: int, cells: int, trials: int, k: int) -> np.ndarray:
    """Standard normals of shape ``(cells, trials, k)``, one substream per (cell, trial)."""
    out = np.empty((cells, trials, k))
    for c in range(cells):
        for t in range(trials):
            out[c, t] = standard_normals(seed, _NOISE, c, t, k)
    return out


def uniform_users(seed: int, count: int, room: Room) -> np.ndarray:
    u = np.random.default_rng(np.random.SeedSequence([seed, _USERS])).random((count, 2))
    return u * np.array([room.d1, room.d2])


# --- localization back ends ------------------------------------------------


def _locate_chunk(args):
    method, scenario, grid, measured = args
    if method == "ls":
        return ls_locate(measured, scenario.pa_coords(), scenario.pa_arcs(), scenario.p_s, scenario.channel, scenario.room).xy
    return grid_search_batch(measured, scenario.power_model(), grid).xy


def localize(method: str, scenario: Scenario, measured: np.ndarray, grid: GridSearchConfig, workers: int = 1) -> np.ndarray:
    """Estimate positions for every row of ``measured`` (shape ``(M, K)``)."""
    chunks = [(method, scenario, grid, measured[i : i + CHUNK]) for i in range(0, len(measured), CHUNK)]
    if workers > 1 and len(chunks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_locate_chunk, chunks))
    else:
        parts = [_locate_chunk(c) for c in chunks]
    return np.concatenate(parts) if parts else np.empty((0, 2))


def _method(scenario: Scenario) -> str:
    if scenario.n_elements == 1 and len(scenario.placements) == 3:
        return "ls"
    return "grid"


# --- error maps ------------------------------------------------------------


@dataclass
class ErrorMap:
    points: np.ndarray
    mean_err: np.ndarray
    median_err: np.ndarray
    mean_abs_dx: np.ndarray
    mean_abs_dy: np.ndarray
    errors: np.ndarray
    trials: int
    seed: int
    scenario_hash: str
    sigma2_dbm: float
    n_elements: int
    layout: str

    HEADER = ("x", "y", "mean_err_m", "median_err_m", "trials")

    @property
    def overall_median(self) -> float:
        return float(np.median(self.errors))

    @property
    def overall_mean(self) -> float:
        return float(np.mean(self.mean_err))

    def rows(self):
        for (x, y), m, md in zip(self.points, self.mean_err, self.median_err):
            yield (x, y, m, md, self.trials)

    def to_records(self) -> list[dict]:
        return [dict(zip(self.HEADER, r)) for r in self.rows()]


def error_map(campaign: Campaign, layout: str, n_elements: int, sigma2_dbm: float, workers: int = 1) -> ErrorMap:
    scenario = campaign.scenario(layout, n_elements)
    pts = campaign.lattice.points(campaign.room)
    cells, trials = len(pts), campaign.trials
    k = len(scenario.placements)
    p0 = noiseless_powers(scenario, pts, campaign.uplink_model)
    z = noise_block(campaign.seed, cells, trials, k)
    measured, _ = perturb(p0[:, None, :], float(dbm_to_watt(sigma2_dbm)), z)
    est = localize(_method(scenario), scenario, measured.reshape(-1, k), campaign.grid, workers)
    est = est.reshape(cells, trials, 2)
    delta = est - pts[:, None, :]
    err = np.hypot(delta[..., 0], delta[..., 1])
    log.info("map %s N=%d sigma2=%.1f dBm: mean %.3f m", layout, n_elements, sigma2_dbm, err.mean())
    return ErrorMap(
        points=pts,
        mean_err=err.mean(axis=1),
        median_err=np.median(err, axis=1),
        mean_abs_dx=np.abs(delta[..., 0]).mean(axis=1),
        mean_abs_dy=np.abs(delta[..., 1]).mean(axis=1),
        errors=err,
        trials=trials,
        seed=campaign.seed,
        scenario_hash=scenario.digest(),
        sigma2_dbm=sigma2_dbm,
        n_elements=n_elements,
        layout=layout,
    )


def run_mwsp_map(campaign: Campaign, workers: int = 1) -> ErrorMap:
    layout = campaign.layout if campaign.pa_positions is None else "radial"
    return error_map(campaign, layout, 1, campaign.noise_dbm[0], workers)


def run_mwmp_map(campaign: Campaign, workers: int = 1) -> ErrorMap:
    return error_map(campaign, campaign.layout, campaign.n_elements[0], campaign.noise_dbm[0], workers)


def run_swmp_map(campaign: Campaign, workers: int = 1) -> ErrorMap:
    layout = campaign.layout if campaign.layout.startswith("single_") else "single_x"
    return error_map(campaign, layout, campaign.n_elements[0], campaign.noise_dbm[0], workers)


# --- average error curves --------------------------------------------------


@dataclass(frozen=True)
class CurvePoint:
    layout: str
    n_elements: int
    sigma2_dbm: float
    mean_err: float
    median_err: float
    users: int
    seed: int
    scenario_hash: str

    HEADER = ("layout", "n_elements", "sigma2_dbm", "mean_err_m", "median_err_m", "users")

    def row(self):
        return (self.layout, self.n_elements, self.sigma2_dbm, self.mean_err, self.median_err, self.users)


def run_avg_error_curve(campaign: Campaign, workers: int = 1) -> list[CurvePoint]:
    """Mean error over room-uniform users against noise power, per layout and array size.

    Users and noise draws are shared by every layout, array size and noise level.
    """
    users = uniform_users(campaign.seed, campaign.users, campaign.room)
    out = []
    for layout in campaign.layouts:
        for n in campaign.n_elements:
            scenario = campaign.scenario(layout, n)
            k = len(scenario.placements)
            p0 = noiseless_powers(scenario, users, campaign.uplink_model)
            z = noise_block(campaign.seed, len(users), 1, k)[:, 0, :]
            for s in campaign.noise_dbm:
                measured, _ = perturb(p0, float(dbm_to_watt(s)), z)
                est = localize(_method(scenario), scenario, measured, campaign.grid, workers)
                err = np.hypot(*(est - users).T)
                out.append(
                    CurvePoint(layout, n, float(s), float(err.mean()), float(np.median(err)), len(users),
                               campaign.seed, scenario.digest())
                )
    return out


# --- rate sweeps -----------------------------------------------------------


@dataclass(frozen=True)
class RatePoint:
    sweep: str
    value: float
    tag: str
    n_elements: int
    rate_theory: float
    rate_sim: float
    seed: int
    scenario_hash: str

    def row(self):
        return (self.value, self.tag, self.n_elements, self.rate_theory, self.rate_sim)


@dataclass
class RateCurve:
    sweep: str
    points: list[RatePoint] = field(default_factory=list)

    @property
    def header(self) -> tuple[str, ...]:
        return (self.sweep, "tag", "n_elements", "rate_theory", "rate_sim")

    def select(self, tag: str, n_elements: int) -> list[RatePoint]:
        return [p for p in self.points if p.tag == tag and p.n_elements == n_elements]

    def at(self, value: float, tag: str, n_elements: int) -> RatePoint:
        for p in self.points:
            if p.value == value and p.tag == tag and p.n_elements == n_elements:
                return p
        raise KeyError((value, tag, n_elements))


def _estimates(campaign: Campaign, scenario: Scenario, users: np.ndarray, sigma2_dbm: float, workers: int) -> np.ndarray:
    k = len(scenario.placements)
    p0 = noiseless_powers(scenario, users, campaign.uplink_model)
    z = noise_block(campaign.seed, len(users), campaign.trials, k)
    measured, _ = perturb(p0[:, None, :], float(dbm_to_watt(sigma2_dbm)), z)
    est = localize(_method(scenario), scenario, measured.reshape(-1, k), campaign.grid, workers)
    return est.reshape(len(users), campaign.trials, 2)


def _configs(campaign: Campaign):
    yield comms.Tag.MWSP.value, 1
    for n in campaign.n_elements:
        if n > 1:
            yield comms.Tag.MWMP.value, n
    yield comms.Tag.FIXED.value, 1


def run_rate_sweeps(campaign: Campaign, workers: int = 1) -> RateCurve:
    """Theoretical (perfect-position) and realized downlink rates.

    ``RateVsPower`` sweeps the downlink power at the first noise level;
    ``RateVsNoise`` sweeps the noise level at the first downlink power.  The
    uplink noise equals the downlink noise, so positioning is re-run per
    noise level.
    """
    if campaign.kind == Kind.RATE_VS_POWER:
        sweep, grid_points = "p_t_dbm", [(float(p), campaign.noise_dbm[0]) for p in campaign.power_dbm]
    elif campaign.kind == Kind.RATE_VS_NOISE:
        sweep, grid_points = "sigma2_dbm", [(campaign.power_dbm[0], float(s)) for s in campaign.noise_dbm]
    else:
        raise ValueError(f"{campaign.kind} is not a rate sweep")

    room, k = campaign.room, campaign.channel
    users = campaign.lattice.points(room)
    base = campaign.scenario(campaign.layout, 1)
    fixed = base.fixed_antenna
    cache: dict = {}
    curve = RateCurve(sweep)
    for p_t_dbm, s_dbm in grid_points:
        p_t, sigma2 = float(dbm_to_watt(p_t_dbm)), float(dbm_to_watt(s_dbm))
        value = p_t_dbm if sweep == "p_t_dbm" else s_dbm
        for tag, n in _configs(campaign):
            if tag == comms.Tag.FIXED.value:
                r = [comms.fixed_baseline_rate(u, fixed, p_t, sigma2, k).rate for u in users]
                curve.points.append(RatePoint(sweep, value, tag, 1, float(np.mean(r)), float(np.mean(r)),
                                              campaign.seed, base.digest()))
                continue
            scenario = campaign.scenario(campaign.layout, n)
            key = (n, s_dbm)
            if key not in cache:
                cache[key] = _estimates(campaign, scenario, users, s_dbm, workers)
            est = cache[key]
            theory = [comms.theoretical(u, n, room, k, p_t, sigma2).rate for u in users]
            sim = [comms.serve(u, e, n, room, k, p_t, sigma2).rate for u, row in zip(users, est) for e in row]
            curve.points.append(RatePoint(sweep, value, tag, n, float(np.mean(theory)), float(np.mean(sim)),
                                          campaign.seed, scenario.digest()))
    return curve


# --- dispatch and serialization -------------------------------------------


def run(campaign: Campaign, workers: int = 1):
    return {
        Kind.MWSP_MAP: run_mwsp_map,
        Kind.MWMP_MAP: run_mwmp_map,
        Kind.SWMP_MAP: run_swmp_map,
        Kind.AVG_ERROR: run_avg_error_curve,
        Kind.RATE_VS_POWER: run_rate_sweeps,
        Kind.RATE_VS_NOISE: run_rate_sweeps,
    }[campaign.kind](campaign, workers)


def fmt(value) -> str:
    """Locale-independent number formatting with 9 significant digits."""
    if isinstance(value, (str, Enum)):
        return value.value if isinstance(value, Enum) else value
    if isinstance(value, (int, np.integer)) and not isinstance(value, bool):
        return str(int(value))
    return format(float(value), ".9g")


def table(result) -> tuple[tuple[str, ...], list[tuple]]:
    if isinstance(result, ErrorMap):
        return ErrorMap.HEADER, list(result.rows())
    if isinstance(result, RateCurve):
        return result.header, [p.row() for p in result.points]
    if isinstance(result, list) and (not result or isinstance(result[0], CurvePoint)):
        return CurvePoint.HEADER, [p.row() for p in result]
    raise TypeError(f"cannot tabulate {type(result).__name__}")


def to_csv(result) -> str:
    header, rows = table(result)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt(v) for v in row])
    return buf.getvalue()


def to_json(result) -> str:
    header, rows = table(result)
    records = [{h: fmt(v) if isinstance(v, str) else (int(v) if isinstance(v, (int, np.integer)) else float(v))
                for h, v in zip(header, row)} for row in rows]
    return json.dumps(records, indent=1, sort_keys=False) + "\n"
