"""Numerical evaluation of the ISRS GN model for SPM and XPM.

The single-span NLI coefficient of a channel of interest (COI) ``i`` is split
into its self-channel part and one term per interferer ``k``::

    eta_spm  = 16/27 gamma^2 / B_i^2 * I_spm
    eta_xpm  = 32/27 gamma^2 / B_k^2 (P_k/P_i)^2 * I_xpm

where each ``I`` is a 2D frequency integral of the link function
|int_0^L rho(z) exp(j phi z) dz|^2 over the region in which the mixing
products land back on the COI.  The power profile uses the exact,
occupancy-aware ISRS normaliser, not the flat-spectrum approximation.

The span integral is evaluated by a Filon rule (exact in the phase and
loss); the frequency integrals use Gauss-Legendre rules graded towards the
phase-matching ridge.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import kernels
from .core import Channel, ChannelPlan, FiberParams, NliResult, effective_length
from .quadrature import (QuadratureError, QuadratureSpec, gauss_legendre, plain_rule,
                         split_rule)
from .raman import exact_normalizer

DEFAULT_QUAD = QuadratureSpec()
_FOUR_PI2 = 4.0 * math.pi ** 2


@dataclass(frozen=True)
class SpanProfile:
    """Tilt coordinate and inverse normaliser sampled on the span nodes."""

    z: np.ndarray
    x: np.ndarray
    inv_norm: np.ndarray
    dz: float


@lru_cache(maxsize=32)
def span_profile(plan: ChannelPlan, fiber: FiberParams, zeta_points: int) -> SpanProfile:
    dz = fiber.length / zeta_points
    z = dz * np.arange(zeta_points + 1)
    x = plan.total_power * fiber.cr * effective_length(fiber.alpha, z)
    inv_norm = 1.0 / exact_normalizer(x, plan)
    for arr in (z, x, inv_norm):
        arr.flags.writeable = False
    return SpanProfile(z, x, inv_norm, dz)


def phase_coefficient(f1, f2, f_i, fiber: FiberParams):
    """Accumulated phase per metre, -4 pi^2 (f1-f_i)(f2-f_i)(beta2 + pi beta3 (f1+f2))."""
    f1 = np.asarray(f1, dtype=float)
    f2 = np.asarray(f2, dtype=float)
    return -_FOUR_PI2 * (f1 - f_i) * (f2 - f_i) * (fiber.beta2 + math.pi * fiber.beta3 * (f1 + f2))


def _link_from_phase(omega, s, plan, fiber, quad: QuadratureSpec, backend=None):
    omega = np.asarray(omega, dtype=float)
    s = np.asarray(s, dtype=float)
    shape = np.broadcast(omega, s).shape
    omega, s = (np.broadcast_to(a, shape).ravel() for a in (omega, s))
    if quad.zeta_rule == "filon":
        prof = span_profile(plan, fiber, quad.zeta_points)
        out = kernels.get_backend(backend)(omega, s, prof.x, prof.inv_norm, fiber.alpha, prof.dz)
    else:
        out = _link_gauss_legendre(omega, s, plan, fiber, quad.zeta_points)
    return out.reshape(shape)


def _link_gauss_legendre(omega, s, plan, fiber, n):
    """Plain Gauss-Legendre over the span; accurate only while omega*L/2 << n."""
    t, w = gauss_legendre(n)
    z = fiber.length * t
    w = fiber.length * w
    x = plan.total_power * fiber.cr * effective_length(fiber.alpha, z)
    base = np.exp(-fiber.alpha * z) / exact_normalizer(x, plan) * w
    out = np.empty(omega.size)
    for start in range(0, omega.size, 256):
        sl = slice(start, start + 256)
        integrand = base * np.exp(-s[sl, None] * x + 1j * omega[sl, None] * z)
        val = integrand.sum(axis=1)
        out[sl] = val.real ** 2 + val.imag ** 2
    return out


def link_function(f1, f2, f_i, plan: ChannelPlan, fiber: FiberParams,
                  quad: QuadratureSpec = DEFAULT_QUAD, backend=None):
    """|int_0^L rho(z, f1+f2-f_i) exp(j phi(f1, f2, f_i) z) dz|^2.

    ``rho`` is the ISRS power ratio (launch-normalised, exact occupancy
    normaliser).  Frequencies are relative to the band centre and must lie
    in the transmitted band.  Accepts arrays (broadcast).
    """
    half = 0.5 * plan.total_bandwidth * (1 + 1e-9)
    for name, val in (("f1", f1), ("f2", f2), ("f_i", f_i)):
        if np.any(np.abs(np.asarray(val)) > half):
            raise ValueError(f"{name} lies outside the transmitted band")
    f1 = np.asarray(f1, dtype=float)
    f2 = np.asarray(f2, dtype=float)
    omega = phase_coefficient(f1, f2, f_i, fiber)
    s = f1 + f2 - f_i
    return _link_from_phase(omega, s, plan, fiber, quad, backend)[()]


# -- frequency integrals -----------------------------------------------------

def _spm_integral(f_i, b_i, plan, fiber, quad, n, backend):
    """int int link over |u1|, |u2|, |u1+u2| <= B_i/2 (u = f - f_i)."""
    half = 0.5 * b_i
    curv = _FOUR_PI2 * abs(fiber.beta2 + 2.0 * math.pi * fiber.beta3 * f_i)
    graded = quad.grid_strategy == "hyperbolic" and curv > 0
    outer_w = fiber.alpha / (curv * half) if graded else math.inf
    u1, w1 = split_rule(-half, half, outer_w, n, "sinh" if graded else "uniform")
    u1_all, u2_all, w_all = [], [], []
    for a, wa in zip(u1, w1):
        lo = max(-half, -half - a)
        hi = min(half, half - a)
        inner_w = fiber.alpha / (curv * abs(a)) if graded and a != 0 else math.inf
        u2, w2 = split_rule(lo, hi, inner_w, n, "tan" if graded else "uniform")
        u1_all.append(np.full(u2.size, a))
        u2_all.append(u2)
        w_all.append(wa * w2)
    u1 = np.concatenate(u1_all)
    u2 = np.concatenate(u2_all)
    w = np.concatenate(w_all)
    omega = -_FOUR_PI2 * u1 * u2 * (fiber.beta2 + math.pi * fiber.beta3 * (2.0 * f_i + u1 + u2))
    s = f_i + u1 + u2
    vals = _link_from_phase(omega, s, plan, fiber, quad, backend)
    return float(np.dot(w, vals))


def _xpm_integral(f_i, b_i, f_k, b_k, plan, fiber, quad, n, backend):
    """int du1 int dv link, u1 = f1 - f_i in COI, v = f2 - f_k in INT, |u1+v| <= B_k/2."""
    half_i = 0.5 * b_i
    half_k = 0.5 * b_k
    df = f_k - f_i
    curv = _FOUR_PI2 * abs(fiber.beta2 + math.pi * fiber.beta3 * (f_i + f_k)) * abs(df)
    graded = quad.grid_strategy == "hyperbolic" and curv > 0
    outer_w = fiber.alpha / curv if graded else math.inf
    u1, w1 = split_rule(-half_i, half_i, outer_w, n, "tan" if graded else "uniform")
    lo = np.maximum(-half_k, -half_k - u1)
    hi = np.minimum(half_k, half_k - u1)
    t, wt = gauss_legendre(n)
    v = lo[:, None] + (hi - lo)[:, None] * t
    w = (w1 * (hi - lo))[:, None] * wt
    uu = np.broadcast_to(u1[:, None], v.shape)
    omega = -_FOUR_PI2 * uu * (v + df) * (fiber.beta2 + math.pi * fiber.beta3 * (f_i + f_k + uu + v))
    s = f_k + uu + v
    vals = _link_from_phase(omega, s, plan, fiber, quad, backend)
    return float(np.sum(w * vals))


def _adaptive(evaluate, quad: QuadratureSpec, what: str):
    n = quad.f_grid_points
    value = evaluate(n)
    if not quad.adaptive:
        return value
    while True:
        n2 = 2 * n
        if n2 > quad.max_f_grid_points:
            raise QuadratureError(
                f"{what}: no convergence to rel_tol={quad.rel_tol} within "
                f"{quad.max_f_grid_points} nodes per axis")
        refined = evaluate(n2)
        if abs(refined - value) <= quad.rel_tol * abs(refined):
            return refined
        n, value = n2, refined


def eta_spm_integral(coi: Channel, plan: ChannelPlan, fiber: FiberParams,
                     quad: QuadratureSpec = DEFAULT_QUAD, backend=None) -> float:
    plan.position(coi)
    if fiber.gamma == 0:
        return 0.0
    integral = _adaptive(
        lambda n: _spm_integral(coi.center_freq, coi.bandwidth, plan, fiber, quad, n, backend),
        quad, f"SPM of channel {coi.index}")
    return 16.0 / 27.0 * fiber.gamma ** 2 / coi.bandwidth ** 2 * integral


def eta_xpm_integral(coi: Channel, interferer: Channel, plan: ChannelPlan, fiber: FiberParams,
                     quad: QuadratureSpec = DEFAULT_QUAD, backend=None) -> float:
    plan.position(coi)
    plan.position(interferer)
    if interferer.index == coi.index:
        raise ValueError("an interferer must differ from the channel of interest")
    if fiber.gamma == 0:
        return 0.0
    integral = _adaptive(
        lambda n: _xpm_integral(coi.center_freq, coi.bandwidth, interferer.center_freq,
                                interferer.bandwidth, plan, fiber, quad, n, backend),
        quad, f"XPM of channel {interferer.index} on {coi.index}")
    ratio = interferer.launch_power / coi.launch_power
    return 32.0 / 27.0 * fiber.gamma ** 2 / interferer.bandwidth ** 2 * ratio ** 2 * integral


def eta_total_integral(coi: Channel, plan: ChannelPlan, fiber: FiberParams,
                       quad: QuadratureSpec = DEFAULT_QUAD, backend=None) -> NliResult:
    spm = eta_spm_integral(coi, plan, fiber, quad, backend)
    xpm = [(k.index, eta_xpm_integral(coi, k, plan, fiber, quad, backend))
           for k in plan.channels if k.index != coi.index]
    return NliResult.build(coi.index, spm, xpm, "integral")


def evaluate_plan(plan: ChannelPlan, fiber: FiberParams, quad: QuadratureSpec = DEFAULT_QUAD,
                  workers: int = 1, backend=None) -> list[NliResult]:
    """NLI coefficients for every channel of ``plan`` (plan order).

    Each channel is an independent task and every task reduces in a fixed
    order, so results do not depend on ``workers``.
    """
    def task(ch):
        return eta_total_integral(ch, plan, fiber, quad, backend)

    if workers <= 1:
        return [task(ch) for ch in plan.channels]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(task, plan.channels))
