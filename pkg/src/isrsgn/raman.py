"""ISRS-tilted signal power evolution under a triangular Raman gain.

The tilt coordinate is ``x(z) = P_tot * C_r * L_eff(z)``; a spectral component
at relative frequency ``f`` then carries ``exp(-alpha z) exp(-x f) / N(x)``
times its launch share, where ``N`` keeps the total power equal to the
lossy-fibre value.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import ChannelPlan, FiberParams, effective_length

# below this value of x*B the sinh ratio is replaced by its two-term series
_SERIES_CUTOFF = 1e-6


@dataclass(frozen=True)
class RamanState:
    x: float
    z: float
    total_bandwidth: float


def _check_z(z, fiber: FiberParams):
    z_arr = np.asarray(z, dtype=float)
    if np.any(z_arr < 0) or np.any(z_arr > fiber.length):
        raise ValueError(f"z must lie in [0, {fiber.length}] m")


def tilt_coordinate(plan: ChannelPlan, fiber: FiberParams, z):
    _check_z(z, fiber)
    return plan.total_power * fiber.cr * effective_length(fiber.alpha, z)


def raman_state(plan: ChannelPlan, fiber: FiberParams, z: float) -> RamanState:
    return RamanState(float(tilt_coordinate(plan, fiber, z)), float(z), plan.total_bandwidth)


def sinhc(u):
    """sinh(u)/u with the removable singularity at 0 handled by a series."""
    u = np.asarray(u, dtype=float)
    small = np.abs(u) < _SERIES_CUTOFF
    safe = np.where(small, 1.0, u)
    out = np.where(small, 1.0 + u * u / 6.0, np.sinh(safe) / safe)
    return out[()]


def uniform_spectrum_normalizer(x, b_tot):
    """Band average of exp(-x nu) for a flat spectrum of width ``b_tot``.

    Equals ``2/(x b) sinh(x b / 2)``; the x -> 0 limit is 1.
    """
    if np.any(np.asarray(b_tot) <= 0):
        raise ValueError("b_tot must be positive")
    if not np.all(np.isfinite(np.asarray(x, dtype=float))):
        raise ValueError("x must be finite")
    return sinhc(0.5 * np.asarray(x, dtype=float) * b_tot)


def exact_normalizer(x, plan: ChannelPlan):
    """Occupancy-aware normalizer: sum_k P_k/P_tot exp(-x f_k) sinhc(x B_k / 2).

    Each channel is a flat block of width B_k, so integrating exp(-x nu) over it
    gives the sinh factor.  ``x`` may be an array; the result has its shape.
    """
    x = np.asarray(x, dtype=float)
    share = plan.powers / plan.total_power
    f = plan.freqs
    b = plan.bandwidths
    xs = x[..., None]
    terms = share * np.exp(-xs * f) * sinhc(0.5 * xs * b)
    return terms.sum(axis=-1)[()]


def normalized_power_profile(plan: ChannelPlan, fiber: FiberParams, z, f):
    """Power ratio rho(z, f) relative to launch, uniform-spectrum approximation."""
    f_arr = np.asarray(f, dtype=float)
    half = plan.total_bandwidth / 2
    if np.any(np.abs(f_arr) > half * (1 + 1e-12)):
        raise ValueError("f lies outside the transmitted band")
    x = tilt_coordinate(plan, fiber, z)
    return (np.exp(-fiber.alpha * np.asarray(z, dtype=float))
            * isrs_gain_factor(x, f_arr, plan.total_bandwidth))[()]


def isrs_gain_factor(x, f, b_tot):
    """Loss-stripped tilt exp(-x f) / sinhc(x b_tot / 2); identically 1 at x = 0."""
    if np.any(np.asarray(b_tot) <= 0):
        raise ValueError("b_tot must be positive")
    x = np.asarray(x, dtype=float)
    return (np.exp(-x * np.asarray(f, dtype=float)) / sinhc(0.5 * x * b_tot))[()]
