"""Uplink channel synthesis: free-space and waveguide propagation, received
signals for single PAs and PA arrays, and power-domain noise."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .geometry import PAPlacement, UserPosition, signal_cosine, user_pa_distance

SPEED_OF_LIGHT = 299_792_458.0  # m/s
POWER_FLOOR_W = 1e-18


def dbm_to_watt(p_dbm):
    return 10.0 ** ((np.asarray(p_dbm, dtype=float) - 30.0) / 10.0)


def watt_to_dbm(p_w):
    return 10.0 * np.log10(np.asarray(p_w, dtype=float)) + 30.0


@dataclass(frozen=True)
class ChannelConstants:
    """Carrier and dielectric constants; derived quantities are properties."""

    f_c: float = 2.4e9
    eps_r: float = 2.08
    tan_delta: float = 4e-4
    c: float = SPEED_OF_LIGHT

    def __post_init__(self):
        for name in ("f_c", "eps_r", "tan_delta", "c"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"channel.{name} must be positive, got {value!r}")

    @property
    def wavelength(self) -> float:
        return self.c / self.f_c

    @property
    def alpha(self) -> float:
        """Attenuation constant, Np/m."""
        return math.pi * math.sqrt(self.eps_r) * self.tan_delta / self.wavelength

    @property
    def beta(self) -> float:
        """Phase constant, rad/m."""
        return 2.0 * math.pi * math.sqrt(self.eps_r) / self.wavelength

    @property
    def gamma(self) -> complex:
        return complex(self.alpha, self.beta)

    @property
    def default_spacing(self) -> float:
        """Element spacing that makes the guided phase step exactly one cycle."""
        return self.wavelength / math.sqrt(self.eps_r)

    def fraunhofer_distance(self, n_elements: int, spacing: Optional[float] = None) -> float:
        d = self.default_spacing if spacing is None else spacing
        return 2.0 * (n_elements * d) ** 2 / self.wavelength


@dataclass(frozen=True)
class CouplingModel:
    """Coupled-mode transfer between a pinched element and the waveguide."""

    kappa: float
    length: float
    f_max: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.f_max <= 1.0:
            raise ValueError("f_max must lie in (0, 1]")

    @property
    def p_pin(self) -> float:
        return math.sin(self.kappa * self.length)

    @property
    def p_wav(self) -> float:
        return 1.0 - self.f_max * math.sin(self.kappa * self.length)

    @classmethod
    def full_transfer(cls, kappa: float) -> "CouplingModel":
        return cls(kappa=kappa, length=math.pi / (2.0 * kappa), f_max=1.0)


@dataclass(frozen=True)
class NoiseModel:
    """Additive power-domain noise.

    ``sigma2`` is the noise power in watts.  Each measurement is perturbed
    by ``sigma2 * z`` with ``z`` standard normal, i.e. the perturbation has
    an RMS equal to the noise power.
    """

    sigma2: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not self.sigma2 >= 0:
            raise ValueError("sigma2 must be non-negative")
        if self.seed < 0 or self.seed >= 2**64:
            raise ValueError("seed must fit in an unsigned 64-bit integer")

    @classmethod
    def from_dbm(cls, sigma2_dbm: float, seed: int = 0) -> "NoiseModel":
        return cls(float(dbm_to_watt(sigma2_dbm)), seed)

    def generator(self, *key: int) -> np.random.Generator:
        """Independent stream for the substream identified by ``key``."""
        return np.random.default_rng(np.random.SeedSequence([self.seed, *key]))


@dataclass
class Measurement:
    """Received powers at the AP, one entry per waveguide (last axis)."""

    received: np.ndarray
    noiseless: np.ndarray
    draw: np.ndarray
    true_position: Optional[UserPosition] = None
    model: str = "exact"
    extra: dict = field(default_factory=dict)


def free_space_gain(d, k: ChannelConstants):
    """Large-scale amplitude gain c / (4 pi f_c d)."""
    return k.c / (4.0 * math.pi * k.f_c * np.asarray(d, dtype=float))


def waveguide_channel(arc_length, k: ChannelConstants):
    """Complex guided-propagation factor exp(-(alpha + j beta) * arc_length)."""
    arc = np.asarray(arc_length, dtype=float)
    return np.exp(-k.alpha * arc) * np.exp(-1j * k.beta * arc)


def _array_sum(user, placement: PAPlacement, k: ChannelConstants, far_field: bool, uniform_loss: bool):
    user = np.asarray(user, dtype=float)
    center = np.asarray(placement.center, dtype=float)
    n = placement.indices.astype(float)
    d_center = user_pa_distance(user, center)
    if far_field:
        cos = signal_cosine(user, placement.waveguide, center)
        d_n = d_center[..., None] - n * placement.spacing * cos[..., None]
    else:
        elements = placement.element_coords()
        d_n = user_pa_distance(user[..., None, :], elements)
    arc_n = placement.center_arc + n * placement.spacing
    loss_arc = placement.center_arc if uniform_loss else arc_n
    phase = (2.0 * math.pi / k.wavelength) * (d_n + math.sqrt(k.eps_r) * arc_n)
    terms = np.exp(-k.alpha * loss_arc) * np.exp(-1j * phase)
    return d_center, terms.sum(axis=-1)


def mwmp_received_signal_exact(
    user,
    placement: PAPlacement,
    p_s: float,
    k: ChannelConstants,
    *,
    far_field: bool = False,
    uniform_loss: bool = False,
):
    """Noiseless complex sample from one waveguide carrying an N-element array.

    The large-scale gain uses the user-to-center distance.  Element phases
    use exact element distances unless ``far_field`` substitutes the
    first-order expansion ``d - n d_s cos(theta)``; ``uniform_loss`` charges
    every element the guided attenuation of the array center.
    """
    d_center, total = _array_sum(user, placement, k, far_field, uniform_loss)
    return math.sqrt(p_s) * free_space_gain(d_center, k) * total


def mwsp_received_signal(user, placement: PAPlacement, p_s: float, k: ChannelConstants):
    """Noiseless complex sample from a waveguide carrying a single PA."""
    if placement.n_elements != 1:
        raise ValueError("single-PA signal requested for an array placement")
    return mwmp_received_signal_exact(user, placement, p_s, k)


def add_power_noise(p_true, noise: NoiseModel, rng: Optional[np.random.Generator] = None):
    """Return ``(received, draw)`` with the floor applied to ``received``."""
    p_true = np.asarray(p_true, dtype=float)
    if rng is None:
        rng = noise.generator()
    draw = noise.sigma2 * rng.standard_normal(p_true.shape)
    return np.maximum(p_true + draw, POWER_FLOOR_W), draw


def perturb(p_true, sigma2: float, z):
    """Apply pre-drawn standard normals ``z`` at noise power ``sigma2``."""
    draw = sigma2 * np.asarray(z, dtype=float)
    return np.maximum(np.asarray(p_true, dtype=float) + draw, POWER_FLOOR_W), draw
