"""Downlink service after positioning: waveguide selection, PA relocation and
achievable rates."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .channel import ChannelConstants, free_space_gain
from .geometry import (
    SEGMENT_TOL,
    OutOfSegment,
    Room,
    Waveguide,
    perpendicular_distances,
    project_to_waveguide,
    standard_waveguides,
    user_pa_distance,
)


class Tag(str, Enum):
    MWSP = "MWSP"
    MWMP = "MWMP"
    FIXED = "Fixed"


def select_waveguide(user_est, room: Room) -> tuple[Waveguide, float]:
    """Waveguide with the smallest perpendicular distance; ties go to x, then y, then diagonal."""
    dists = [float(v) for v in perpendicular_distances(user_est, room)]
    best = min(range(3), key=lambda i: (dists[i], i))
    return standard_waveguides(room)[best], dists[best]


def relocate_single(user_est, wg: Waveguide, room: Room) -> np.ndarray:
    return project_to_waveguide(user_est, wg, room)


def in_phase_offsets(d0: float, n_elements: int, lam: float, first_index: int | None = None) -> np.ndarray:
    """Element offsets from the foot point that align every downlink phase.

    Element ``m`` sits at ``m lam (2 d0 + m lam) / (2 (d0 + m lam))`` so that
    offset plus slant distance equals ``d0 + m lam``.  By default ``m`` runs
    over ``-(N-1)/2 .. (N-1)/2``; ``first_index`` selects another window of
    N consecutive indices.
    """
    if n_elements < 1 or n_elements % 2 == 0:
        raise ValueError("n_elements must be a positive odd integer")
    if not d0 > 0:
        raise ValueError("d0 must be positive")
    if first_index is None:
        first_index = -(n_elements - 1) // 2
    m = np.arange(first_index, first_index + n_elements, dtype=float)
    return m * lam * (2.0 * d0 + m * lam) / (2.0 * (d0 + m * lam))


@dataclass
class RelocationPlan:
    waveguide: Waveguide
    foot: np.ndarray
    d0: float
    offsets: np.ndarray
    coords: np.ndarray
    first_index: int

    @property
    def n_elements(self) -> int:
        return len(self.offsets)

    @property
    def shifted(self) -> bool:
        """True when the index window had to move off-center to fit the segment."""
        return self.first_index != -(self.n_elements - 1) // 2


def relocate_array(user_est, wg: Waveguide, room: Room, n_elements: int, lam: float) -> RelocationPlan:
    """Place an in-phase array around the projection of ``user_est`` onto ``wg``.

    If the centered array would overhang the segment end, the index window
    slides inward (the smallest shift that fits); every element still
    satisfies the in-phase condition.
    """
    est = np.asarray(user_est, dtype=float)
    foot = project_to_waveguide(est, wg, room)
    d0 = float(user_pa_distance(est, foot))
    s_foot = float(wg.position_of(foot[:2]))
    centered = -(n_elements - 1) // 2
    for step in range(0, 4 * n_elements + 1):
        for first in ((centered,) if step == 0 else (centered + step, centered - step)):
            offsets = in_phase_offsets(d0, n_elements, lam, first)
            s = s_foot + offsets
            if s.min() >= -SEGMENT_TOL and s.max() <= wg.length + SEGMENT_TOL:
                coords = wg.point_at(s, room.h)
                return RelocationPlan(wg, foot, d0, offsets, coords, first)
    raise OutOfSegment(f"a {n_elements}-element array does not fit on the {wg.axis.value} waveguide")


@dataclass(frozen=True)
class RateReport:
    snr: float
    rate: float
    tag: Tag
    n_elements: int = 1

    @property
    def snr_db(self) -> float:
        return 10.0 * math.log10(self.snr) if self.snr > 0 else -math.inf


def _report(snr: float, tag: Tag, n: int) -> RateReport:
    return RateReport(snr=float(snr), rate=float(np.log2(1.0 + snr)), tag=tag, n_elements=n)


def downlink_snr_single(user_true, pa, p_t: float, sigma2: float, k: ChannelConstants) -> float:
    if not (p_t > 0 and sigma2 > 0):
        raise ValueError("p_t and sigma2 must be positive")
    g = free_space_gain(user_pa_distance(user_true, pa), k)
    return float(g * g * p_t / sigma2)


def downlink_rate_mwsp(user_true, relocated_pa, p_t: float, sigma2: float, k: ChannelConstants) -> RateReport:
    return _report(downlink_snr_single(user_true, relocated_pa, p_t, sigma2, k), Tag.MWSP, 1)


def fixed_baseline_rate(user_true, fixed_pa, p_t: float, sigma2: float, k: ChannelConstants) -> RateReport:
    return _report(downlink_snr_single(user_true, fixed_pa, p_t, sigma2, k), Tag.FIXED, 1)


def downlink_rate_mwmp(
    user_true, plan: RelocationPlan, p_t: float, sigma2: float, k: ChannelConstants, coherent: bool = False
) -> RateReport:
    """Rate of the relocated array seen by the user at ``user_true``.

    The realized field sums complex element contributions with the feed
    phase of each offset.  ``coherent=True`` adds amplitudes directly, which
    is exact only when the plan was built from the true position.
    """
    if not (p_t > 0 and sigma2 > 0):
        raise ValueError("p_t and sigma2 must be positive")
    d = user_pa_distance(np.asarray(user_true, dtype=float), plan.coords)
    amp = free_space_gain(d, k)
    if coherent:
        field = float(amp.sum())
    else:
        phase = (2.0 * math.pi / k.wavelength) * (plan.offsets + d)
        field = abs(np.sum(amp * np.exp(-1j * phase)))
    snr = field * field * p_t / sigma2
    return _report(snr, Tag.MWMP if plan.n_elements > 1 else Tag.MWSP, plan.n_elements)


def serve(user_true, user_est, n_elements: int, room: Room, k: ChannelConstants, p_t: float, sigma2: float) -> RateReport:
    """Realized rate when the PA (array) is relocated using ``user_est``."""
    wg, _ = select_waveguide(user_est, room)
    if n_elements == 1:
        return downlink_rate_mwsp(user_true, relocate_single(user_est, wg, room), p_t, sigma2, k)
    plan = relocate_array(user_est, wg, room, n_elements, k.wavelength)
    return downlink_rate_mwmp(user_true, plan, p_t, sigma2, k)


def theoretical(user_true, n_elements: int, room: Room, k: ChannelConstants, p_t: float, sigma2: float) -> RateReport:
    """Rate with perfect positioning, using the in-phase amplitude sum."""
    wg, _ = select_waveguide(user_true, room)
    if n_elements == 1:
        return downlink_rate_mwsp(user_true, relocate_single(user_true, wg, room), p_t, sigma2, k)
    plan = relocate_array(user_true, wg, room, n_elements, k.wavelength)
    return downlink_rate_mwmp(user_true, plan, p_t, sigma2, k, coherent=True)
