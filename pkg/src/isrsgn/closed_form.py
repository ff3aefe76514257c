"""Closed-form SPM and XPM coefficients of the ISRS GN model.

Both contributions share the structure

    prefactor / (phi * alpha_bar * (2 alpha + alpha_bar))
        * [ (T - alpha^2)/alpha * g(phi B / alpha) + (A^2 - T)/A * g(phi B / A) ]

with ``A = alpha + alpha_bar``, ``T = (A - P_tot C_r f)^2`` and ``g`` either
asinh (SPM) or atan (XPM).  Both ``g`` are odd, so the sign of ``phi`` cancels
against the prefactor; everything below is evaluated with ``|phi|``.

The module also exposes the intermediate integrand reached before the final
frequency integration, and its analytic frequency integrals, so that each
approximation step can be checked against quadrature on its own.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .core import (Channel, ChannelPlan, FiberParams, NliResult, ValidityWarning,
                   phase_mismatch_spm, phase_mismatch_xpm)

# regime guards
LOSS_GUARD = 0.05  # exp(-alpha L) above this: the span is too short for the L -> inf limit
_SMALL_ARG = 1e-8


def t_factor(f, plan: ChannelPlan, fiber: FiberParams):
    """(alpha + alpha_bar - P_tot C_r f)^2, in 1/m^2."""
    return (fiber.alpha + fiber.alpha_bar - plan.total_power * fiber.cr * np.asarray(f, dtype=float)) ** 2


def bracket_coefficients(T, A, alpha):
    """Weights ((T - alpha^2)/alpha, (A^2 - T)/A) of the two bracket terms."""
    return (T - alpha * alpha) / alpha, (A * A - T) / A


@dataclass(frozen=True)
class ClosedFormConstants:
    """Constants of one SPM or XPM term.

    ``phi`` is the ridge coefficient of the accumulated phase, i.e. the span
    integrand rotates as ``exp(j phi f1 f2 z)`` with ``f1, f2`` measured from
    the channel of interest.  ``T`` and ``A`` as in :func:`t_factor`.
    """

    T: float
    A: float
    alpha: float
    phi: float

    def __post_init__(self):
        if self.T < 0:
            raise ValueError("T must be >= 0")
        if not self.A > 0 or not self.alpha > 0:
            raise ValueError("A and alpha must be > 0")

    @classmethod
    def for_spm(cls, coi: Channel, plan: ChannelPlan, fiber: FiberParams):
        phi = 4 * math.pi ** 2 * (fiber.beta2 + 2 * math.pi * fiber.beta3 * coi.center_freq)
        return cls(float(t_factor(coi.center_freq, plan, fiber)),
                   fiber.alpha + fiber.alpha_bar, fiber.alpha, phi)

    @classmethod
    def for_xpm(cls, coi: Channel, interferer: Channel, plan: ChannelPlan, fiber: FiberParams):
        phi = 4 * math.pi ** 2 * (fiber.beta2 + math.pi * fiber.beta3
                                  * (coi.center_freq + interferer.center_freq))
        return cls(float(t_factor(interferer.center_freq, plan, fiber)),
                   fiber.alpha + fiber.alpha_bar, fiber.alpha, phi)


def step4_xpm_integrand(f1, f2, constants: ClosedFormConstants, fiber: FiberParams | None = None):
    """Span integral in the L -> inf limit with the ISRS term linearised.

    (T + u) / ((alpha^2 + u)(A^2 + u)) with u = (phi f1 f2)^2.  ``fiber`` is
    accepted for symmetry with the other operations; only ``constants`` is
    used.
    """
    c = constants
    u = (c.phi * np.asarray(f1, dtype=float) * np.asarray(f2, dtype=float)) ** 2
    return ((c.T + u) / ((c.alpha ** 2 + u) * (c.A ** 2 + u)))[()]


def step4_quartic_denominator(f1, f2, constants: ClosedFormConstants):
    """Expanded quartic alpha^2 A^2 + (alpha^2 + A^2) u + u^2, u = (phi f1 f2)^2."""
    c = constants
    u = (c.phi * np.asarray(f1, dtype=float) * np.asarray(f2, dtype=float)) ** 2
    return (c.alpha ** 2 * c.A ** 2 + (c.alpha ** 2 + c.A ** 2) * u + u * u)[()]


def step5_frequency_integral_check(constants: ClosedFormConstants, b_i: float, mode: str,
                                   delta_f: float | None = None):
    """Analytic frequency integral of :func:`step4_xpm_integrand`.

    ``spm_asinh``: integral over the SPM hexagon |f1|, |f2|, |f1+f2| <= b_i/2,
    with the hexagon replaced by a disc of equal area.
    ``xpm_atan``: integral over f1 in [-b_i/2, b_i/2] with f2 frozen at
    ``delta_f`` (interferer spacing).
    """
    if not b_i > 0:
        raise ValueError("b_i must be positive")
    c = constants
    w_lo, w_hi = bracket_coefficients(c.T, c.A, c.alpha)
    scale = c.A ** 2 - c.alpha ** 2
    if mode == "spm_asinh":
        phi_i = abs(3.0 / 8.0 * c.phi)
        return 0.75 * b_i ** 2 * (w_lo * _asinhc(phi_i * b_i ** 2 / (math.pi * c.alpha)) / c.alpha
                                  + w_hi * _asinhc(phi_i * b_i ** 2 / (math.pi * c.A)) / c.A) / scale
    if mode == "xpm_atan":
        if delta_f is None or delta_f == 0:
            raise ValueError("xpm_atan needs a non-zero delta_f")
        phi_ik = abs(0.5 * c.phi * delta_f)
        return b_i * (w_lo * _atanc(phi_ik * b_i / c.alpha) / c.alpha
                      + w_hi * _atanc(phi_ik * b_i / c.A) / c.A) / scale
    raise ValueError(f"unknown mode {mode!r}")


def _asinhc(u):
    u = np.asarray(u, dtype=float)
    small = np.abs(u) < _SMALL_ARG
    safe = np.where(small, 1.0, u)
    return np.where(small, 1.0 - u * u / 6.0, np.arcsinh(safe) / safe)[()]


def _atanc(u):
    u = np.asarray(u, dtype=float)
    small = np.abs(u) < _SMALL_ARG
    safe = np.where(small, 1.0, u)
    return np.where(small, 1.0 - u * u / 3.0, np.arctan(safe) / safe)[()]


def _check_span_regime(fiber: FiberParams):
    decay = math.exp(-fiber.alpha * fiber.length)
    if decay > LOSS_GUARD:
        warnings.warn(f"closed_form: exp(-alpha L) = {decay:.3g} > {LOSS_GUARD}; "
                      "span too short for the asymptotic span integral",
                      ValidityWarning, stacklevel=3)


def eta_spm_closed(coi: Channel, plan: ChannelPlan, fiber: FiberParams) -> float:
    plan.position(coi)
    phi_i = phase_mismatch_spm(coi.center_freq, fiber)
    if phi_i == 0:
        raise ValueError(f"channel {coi.index}: zero dispersion, the closed form does not apply")
    _check_span_regime(fiber)
    a, ab = fiber.alpha, fiber.alpha_bar
    A = a + ab
    T = float(t_factor(coi.center_freq, plan, fiber))
    w_lo, w_hi = bracket_coefficients(T, A, a)
    phi = abs(phi_i)
    b2 = coi.bandwidth ** 2
    bracket = w_lo * math.asinh(phi * b2 / (math.pi * a)) + w_hi * math.asinh(phi * b2 / (math.pi * A))
    eta = 4.0 / 9.0 * fiber.gamma ** 2 / b2 * math.pi / (phi * ab * (2 * a + ab)) * bracket
    if eta < 0:
        raise ValueError(f"channel {coi.index}: ISRS tilt too strong for the closed form (eta < 0)")
    return eta


def eta_xpm_closed_single(coi: Channel, interferer: Channel, plan: ChannelPlan,
                          fiber: FiberParams) -> float:
    plan.position(coi)
    plan.position(interferer)
    if interferer.index == coi.index:
        raise ValueError("an interferer must differ from the channel of interest")
    df = interferer.center_freq - coi.center_freq
    if abs(df) < interferer.bandwidth:
        warnings.warn(f"closed_form: |f_k - f_i| = {abs(df):.4g} Hz < B_k for pair "
                      f"({coi.index}, {interferer.index}); interferer too close for the XPM "
                      "approximation", ValidityWarning, stacklevel=2)
    a, ab = fiber.alpha, fiber.alpha_bar
    A = a + ab
    T = float(t_factor(interferer.center_freq, plan, fiber))
    w_lo, w_hi = bracket_coefficients(T, A, a)
    phi = abs(phase_mismatch_xpm(coi.center_freq, interferer.center_freq, fiber))
    b_i = coi.bandwidth
    # atan(phi B/a)/phi -> B/a as phi -> 0; the sinc form keeps that limit finite
    bracket = b_i * (w_lo * _atanc(phi * b_i / a) / a + w_hi * _atanc(phi * b_i / A) / A)
    ratio = interferer.launch_power / coi.launch_power
    eta = 32.0 / 27.0 * ratio ** 2 * fiber.gamma ** 2 / (interferer.bandwidth * ab * (2 * a + ab)) * bracket
    if eta < 0:
        raise ValueError(f"pair ({coi.index}, {interferer.index}): ISRS tilt too strong for the "
                         "closed form (eta < 0)")
    return float(eta)


def eta_total_closed(coi: Channel, plan: ChannelPlan, fiber: FiberParams) -> NliResult:
    spm = eta_spm_closed(coi, plan, fiber)
    xpm = [(k.index, eta_xpm_closed_single(coi, k, plan, fiber))
           for k in plan.channels if k.index != coi.index]
    return NliResult.build(coi.index, spm, xpm, "closed_form")


def closed_form_matrix(plan: ChannelPlan, fiber: FiberParams):
    """Vectorised SPM vector and XPM matrix ``xpm[i, k]`` (zero diagonal), plan order."""
    f = plan.freqs
    b = plan.bandwidths
    p = plan.powers
    a, ab = fiber.alpha, fiber.alpha_bar
    A = a + ab
    T = t_factor(f, plan, fiber)
    w_lo, w_hi = bracket_coefficients(T, A, a)
    phi_i = np.abs(1.5 * math.pi ** 2 * (fiber.beta2 + 2 * math.pi * fiber.beta3 * f))
    if np.any(phi_i == 0):
        raise ValueError("zero dispersion at a channel, the closed form does not apply")
    spm = (4.0 / 9.0 * fiber.gamma ** 2 / b ** 2 * math.pi / (phi_i * ab * (2 * a + ab))
           * (w_lo * np.arcsinh(phi_i * b ** 2 / (math.pi * a))
              + w_hi * np.arcsinh(phi_i * b ** 2 / (math.pi * A))))
    fi = f[:, None]
    fk = f[None, :]
    phi_ik = np.abs(2 * math.pi ** 2 * (fk - fi) * (fiber.beta2 + math.pi * fiber.beta3 * (fi + fk)))
    bi = b[:, None]
    bracket = bi * (w_lo[None, :] * _atanc(phi_ik * bi / a) / a
                    + w_hi[None, :] * _atanc(phi_ik * bi / A) / A)
    ratio = p[None, :] / p[:, None]
    xpm = 32.0 / 27.0 * ratio ** 2 * fiber.gamma ** 2 / (b[None, :] * ab * (2 * a + ab)) * bracket
    np.fill_diagonal(xpm, 0.0)
    if np.any(spm < 0) or np.any(xpm < 0):
        raise ValueError("ISRS tilt too strong for the closed form (negative eta)")
    return spm, xpm


def evaluate_plan_closed(plan: ChannelPlan, fiber: FiberParams) -> list[NliResult]:
    _check_span_regime(fiber)
    spm, xpm = closed_form_matrix(plan, fiber)
    idx = plan.indices
    out = []
    for i, ch in enumerate(plan.channels):
        pairs = [(idx[k], xpm[i, k]) for k in range(len(idx)) if k != i]
        out.append(NliResult.build(ch.index, spm[i], pairs, "closed_form"))
    return out
