"""Domain types, unit conversions and elementary fibre-physics primitives.

All quantities are strict SI internally (Hz, W, m, s).  Frequencies of
channels are stored relative to the spectral centre of the transmitted band;
``ChannelPlan.absolute_ref_freq`` maps relative 0 Hz back to an optical
frequency.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

# engineering -> SI
PS2_PER_KM = 1e-24 / 1e3
PS3_PER_KM = 1e-36 / 1e3
PER_W_KM = 1e-3
PER_W_KM_THZ = 1e-3 / 1e12
THZ = 1e12
GHZ = 1e9


def db_to_linear(x_db):
    return np.power(10.0, np.asarray(x_db, dtype=float) / 10.0)[()]


def linear_to_db(x):
    return 10.0 * np.log10(x)


def dbm_to_watt(p_dbm):
    return 1e-3 * db_to_linear(p_dbm)


def watt_to_dbm(p_w):
    return linear_to_db(np.asarray(p_w, dtype=float) / 1e-3)[()]


def attenuation_from_db_per_km(a):
    """Power attenuation coefficient in 1/m from a loss in dB/km."""
    if a < 0:
        raise ValueError(f"attenuation must be non-negative, got {a} dB/km")
    return a * math.log(10.0) / (10.0 * 1000.0)


def attenuation_to_db_per_km(alpha):
    return alpha * 10.0 * 1000.0 / math.log(10.0)


def effective_length(alpha, z):
    """(1 - exp(-alpha z)) / alpha, evaluated without cancellation for small alpha*z."""
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    return (-np.expm1(-alpha * np.asarray(z, dtype=float)) / alpha)[()]


@dataclass(frozen=True)
class FiberParams:
    """Per-span fibre physics in SI units.

    alpha, alpha_bar in 1/m, beta2 in s^2/m, beta3 in s^3/m, gamma in 1/(W m),
    cr (Raman gain slope) in 1/(W m Hz), length in m.
    """

    alpha: float
    alpha_bar: float
    beta2: float
    beta3: float
    gamma: float
    cr: float
    length: float

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError(f"alpha must be > 0, got {self.alpha}")
        if not self.alpha_bar > 0:
            raise ValueError(f"alpha_bar must be > 0, got {self.alpha_bar}")
        if self.gamma < 0:
            raise ValueError(f"gamma must be >= 0, got {self.gamma}")
        if not math.isfinite(self.cr):
            # a negative slope reverses the tilt direction; used for mirror-symmetry checks
            raise ValueError(f"cr must be finite, got {self.cr}")
        if not self.length > 0:
            raise ValueError(f"length must be > 0, got {self.length}")

    @classmethod
    def from_engineering(cls, alpha_db_km=0.2, beta2_ps2_km=-21.7, beta3_ps3_km=0.14,
                         gamma_per_w_km=1.3, cr_per_w_km_thz=0.028, length_km=100.0,
                         alpha_bar_db_km=None):
        """Build from the usual datasheet units; defaults are a standard SSMF."""
        alpha = attenuation_from_db_per_km(alpha_db_km)
        alpha_bar = alpha if alpha_bar_db_km is None else attenuation_from_db_per_km(alpha_bar_db_km)
        return cls(
            alpha=alpha,
            alpha_bar=alpha_bar,
            beta2=beta2_ps2_km * PS2_PER_KM,
            beta3=beta3_ps3_km * PS3_PER_KM,
            gamma=gamma_per_w_km * PER_W_KM,
            cr=cr_per_w_km_thz * PER_W_KM_THZ,
            length=length_km * 1e3,
        )

    def with_(self, **changes) -> "FiberParams":
        return replace(self, **changes)


@dataclass(frozen=True)
class Channel:
    index: int
    center_freq: float  # Hz, relative to the band centre
    bandwidth: float  # Hz
    launch_power: float  # W

    def __post_init__(self):
        if not self.bandwidth > 0:
            raise ValueError(f"channel {self.index}: bandwidth must be > 0")
        if not self.launch_power > 0:
            raise ValueError(f"channel {self.index}: launch power must be > 0")


@dataclass(frozen=True)
class ChannelPlan:
    """Immutable, validated WDM occupancy.

    Channels are kept sorted by centre frequency and must not overlap.
    ``total_power`` and ``total_bandwidth`` are derived on construction.
    """

    channels: tuple[Channel, ...]
    absolute_ref_freq: float = 193.5e12
    total_power: float = field(init=False)
    total_bandwidth: float = field(init=False)

    def __post_init__(self):
        chans = tuple(sorted(self.channels, key=lambda c: c.center_freq))
        if not chans:
            raise ValueError("a channel plan needs at least one channel")
        if len({c.index for c in chans}) != len(chans):
            raise ValueError("channel indices must be unique")
        for a, b in zip(chans, chans[1:]):
            # relative slack absorbs rounding of grid-generated centre frequencies
            gap = (b.center_freq - a.center_freq) - 0.5 * (a.bandwidth + b.bandwidth)
            if gap < -1e-9 * max(a.bandwidth, b.bandwidth):
                raise ValueError(f"channels {a.index} and {b.index} overlap")
        object.__setattr__(self, "channels", chans)
        object.__setattr__(self, "total_power", math.fsum(c.launch_power for c in chans))
        lo = chans[0].center_freq - chans[0].bandwidth / 2
        hi = chans[-1].center_freq + chans[-1].bandwidth / 2
        object.__setattr__(self, "total_bandwidth", hi - lo)

    @classmethod
    def from_absolute(cls, freqs_hz: Sequence[float], bandwidths, powers_w, indices=None):
        """Build a plan from absolute optical frequencies, centring on the occupied band."""
        freqs = np.asarray(freqs_hz, dtype=float)
        bws = np.broadcast_to(np.asarray(bandwidths, dtype=float), freqs.shape)
        pws = np.broadcast_to(np.asarray(powers_w, dtype=float), freqs.shape)
        if indices is None:
            indices = range(len(freqs))
        lo = np.min(freqs - bws / 2)
        hi = np.max(freqs + bws / 2)
        ref = 0.5 * (lo + hi)
        chans = [Channel(int(i), float(f - ref), float(b), float(p))
                 for i, f, b, p in zip(indices, freqs, bws, pws)]
        return cls(tuple(chans), absolute_ref_freq=float(ref))

    def __len__(self):
        return len(self.channels)

    def __iter__(self):
        return iter(self.channels)

    @property
    def freqs(self) -> np.ndarray:
        return np.array([c.center_freq for c in self.channels])

    @property
    def bandwidths(self) -> np.ndarray:
        return np.array([c.bandwidth for c in self.channels])

    @property
    def powers(self) -> np.ndarray:
        return np.array([c.launch_power for c in self.channels])

    @property
    def indices(self) -> list[int]:
        return [c.index for c in self.channels]

    def position(self, channel: Channel) -> int:
        for pos, c in enumerate(self.channels):
            if c.index == channel.index:
                if c != channel:
                    raise ValueError(f"channel {channel.index} differs from the plan's copy")
                return pos
        raise ValueError(f"channel {channel.index} is not part of the plan")

    def with_powers(self, powers_w) -> "ChannelPlan":
        """Return a new plan with per-channel launch powers replaced (order = plan order)."""
        powers_w = np.broadcast_to(np.asarray(powers_w, dtype=float), (len(self.channels),))
        chans = tuple(replace(c, launch_power=float(p)) for c, p in zip(self.channels, powers_w))
        return ChannelPlan(chans, absolute_ref_freq=self.absolute_ref_freq)

    def absolute_freqs(self) -> np.ndarray:
        return self.freqs + self.absolute_ref_freq


@dataclass(frozen=True)
class SpanConfig:
    fiber: FiberParams
    amp_gain_db: float = 20.5
    amp_nf_db: float = 4.5
    lumped_loss_db: float = 0.5
    wss: bool = False
    wss_loss_db: float = 0.0
    noiseless: bool = False  # amplifier adds no ASE

    def __post_init__(self):
        if self.amp_gain_db < 0:
            raise ValueError("amplifier gain must be >= 0 dB")
        if self.lumped_loss_db < 0:
            raise ValueError("lumped loss must be >= 0 dB")
        if self.wss_loss_db < 0:
            raise ValueError("WSS loss must be >= 0 dB")


@dataclass(frozen=True)
class LinkConfig:
    spans: tuple[SpanConfig, ...]
    coherence_epsilon: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "spans", tuple(self.spans))
        if not self.spans:
            raise ValueError("a link needs at least one span")
        if self.coherence_epsilon < 0:
            raise ValueError("coherence_epsilon must be >= 0")


def phase_mismatch_spm(f_i, fiber: FiberParams):
    """SPM phase-mismatch factor 3/2 pi^2 (beta2 + 2 pi beta3 f_i)."""
    return 1.5 * math.pi ** 2 * (fiber.beta2 + 2.0 * math.pi * fiber.beta3 * f_i)


def phase_mismatch_xpm(f_i, f_k, fiber: FiberParams):
    """XPM phase-mismatch factor 2 pi^2 (f_k - f_i)(beta2 + pi beta3 (f_i + f_k))."""
    if f_k == f_i:
        raise ValueError("f_k == f_i is a self pairing; use phase_mismatch_spm")
    return 2.0 * math.pi ** 2 * (f_k - f_i) * (fiber.beta2 + math.pi * fiber.beta3 * (f_i + f_k))


MODEL_TAGS = ("integral", "closed_form")


class ValidityWarning(UserWarning):
    """A closed-form approximation is used outside the regime it was derived for."""


@dataclass(frozen=True)
class NliResult:
    """Per-channel NLI coefficients in 1/W^2, normalised so P_NLI = eta_total * P_i^3."""

    channel_index: int
    eta_spm: float
    eta_xpm_by_interferer: tuple[tuple[int, float], ...]
    eta_total: float
    model_tag: str

    @classmethod
    def build(cls, channel_index, eta_spm, xpm_pairs, model_tag):
        xpm_pairs = tuple((int(k), float(v)) for k, v in xpm_pairs)
        total = float(eta_spm)
        for _, v in xpm_pairs:
            total += v
        return cls(int(channel_index), float(eta_spm), xpm_pairs, total, model_tag)

    def __post_init__(self):
        if not self.model_tag:
            raise ValueError("model_tag must be a non-empty name")
        values = [self.eta_spm] + [v for _, v in self.eta_xpm_by_interferer]
        if any(not (v >= 0 and math.isfinite(v)) for v in values):
            raise ValueError("NLI coefficients must be finite and non-negative")

    @property
    def eta_xpm(self) -> float:
        total = 0.0
        for _, v in self.eta_xpm_by_interferer:
            total += v
        return total
