"""Gauss-Legendre rules and ridge-graded variants for the frequency integrals."""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

GRID_STRATEGIES = ("uniform", "hyperbolic")
ZETA_RULES = ("filon", "gauss-legendre")


class QuadratureError(RuntimeError):
    """Adaptive refinement did not reach the requested tolerance within budget."""


@dataclass(frozen=True)
class QuadratureSpec:
    """Discretisation controls for the integral model.

    zeta_points
        Number of panels along the span (even).  With the default Filon rule
        the phase is integrated exactly, so this only has to resolve the slow
        ISRS envelope.
    f_grid_points
        Nodes per frequency axis (outer and inner).
    grid_strategy
        ``"hyperbolic"`` grades the nodes towards the phase-matching ridge,
        ``"uniform"`` uses plain Gauss-Legendre on each sub-interval.
    rel_tol
        Target relative change between successive grid doublings.
    adaptive
        Double ``f_grid_points`` until two successive estimates agree to
        ``rel_tol``; at most ``max_f_grid_points`` per axis.
    """

    zeta_points: int = 128
    f_grid_points: int = 32
    grid_strategy: str = "hyperbolic"
    rel_tol: float = 1e-3
    adaptive: bool = True
    max_f_grid_points: int = 256
    zeta_rule: str = "filon"

    def __post_init__(self):
        if self.zeta_points < 16 or self.zeta_points % 2:
            raise ValueError("zeta_points must be an even number >= 16")
        if self.f_grid_points < 32 or self.f_grid_points % 2:
            raise ValueError("f_grid_points must be an even number >= 32")
        if self.grid_strategy not in GRID_STRATEGIES:
            raise ValueError(f"grid_strategy must be one of {GRID_STRATEGIES}")
        if not 0 < self.rel_tol < 0.1:
            raise ValueError("rel_tol must lie in (0, 0.1)")
        if self.max_f_grid_points < self.f_grid_points:
            raise ValueError("max_f_grid_points must be >= f_grid_points")
        if self.zeta_rule not in ZETA_RULES:
            raise ValueError(f"zeta_rule must be one of {ZETA_RULES}")


@lru_cache(maxsize=64)
def gauss_legendre(n: int):
    """Nodes and weights on [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(n)
    x = 0.5 * (x + 1.0)
    w = 0.5 * w
    x.flags.writeable = False
    w.flags.writeable = False
    return x, w


def graded_half(h: float, width: float, n: int, kind: str):
    """Rule on [0, h] whose nodes cluster near 0 on the scale ``width``.

    ``kind`` is ``"tan"`` (Lorentzian ridge, f = w tan t), ``"sinh"``
    (1/f tails, f = w sinh t) or ``"uniform"``.
    """
    t, wt = gauss_legendre(n)
    if h <= 0:
        return np.empty(0), np.empty(0)
    if kind == "uniform" or not (width > 0 and math.isfinite(width)) or width > 1e3 * h:
        return h * t, h * wt
    if kind == "tan":
        top = math.atan(h / width)
        theta = top * t
        f = width * np.tan(theta)
        jac = width * top / np.cos(theta) ** 2
    elif kind == "sinh":
        top = math.asinh(h / width)
        u = top * t
        f = width * np.sinh(u)
        jac = width * top * np.cosh(u)
    else:
        raise ValueError(f"unknown grading {kind!r}")
    return f, jac * wt


def _mapped_length(h: float, width: float, kind: str) -> float:
    if h <= 0:
        return 0.0
    if kind == "uniform" or not (width > 0 and math.isfinite(width)) or width > 1e3 * h:
        return h / width if width > 0 and math.isfinite(width) else h
    return math.atan(h / width) if kind == "tan" else math.asinh(h / width)


def split_rule(lo: float, hi: float, width: float, n: int, kind: str):
    """Rule on [lo, hi] (lo <= 0 <= hi) built from two graded halves meeting at 0.

    ``n`` nodes are shared between the halves in proportion to their lengths
    in the mapped variable, i.e. roughly to the share of the integral each
    side carries; a non-empty side always gets at least four nodes.
    """
    if lo > 0 or hi < 0:
        raise ValueError("interval must contain 0")
    m_left = _mapped_length(-lo, width, kind)
    m_right = _mapped_length(hi, width, kind)
    if m_left + m_right == 0:
        return np.empty(0), np.empty(0)
    n_right = int(round(n * m_right / (m_left + m_right)))
    if m_left > 0:
        n_right = min(n_right, n - 4)
    if m_right > 0:
        n_right = max(n_right, 4)
    n_left = n - n_right if m_left > 0 else 0
    parts_x, parts_w = [], []
    if n_left:
        x, w = graded_half(-lo, width, n_left, kind)
        parts_x.append(-x[::-1])
        parts_w.append(w[::-1])
    if n_right:
        x, w = graded_half(hi, width, n_right, kind)
        parts_x.append(x)
        parts_w.append(w)
    return np.concatenate(parts_x), np.concatenate(parts_w)


def plain_rule(lo: float, hi: float, n: int):
    t, w = gauss_legendre(n)
    return lo + (hi - lo) * t, (hi - lo) * w
