"""Pure-numpy implementation of the span link-function kernel.

Used when the compiled ``_kernels`` extension is unavailable and as the
reference the compiled version is tested against.
"""
import numpy as np

_SERIES_RADIUS = 1.0
_SERIES_TERMS = 30
_BLOCK = 512


def unit_moments(p):
    """M_j(p) = int_0^1 t^j e^{p t} dt for j = 0, 1, 2 and complex p."""
    p = np.asarray(p, dtype=complex)
    out = np.empty((3,) + p.shape, dtype=complex)
    small = np.abs(p) < _SERIES_RADIUS
    if np.any(small):
        ps = p[small]
        term = np.ones_like(ps)
        acc = np.zeros((3,) + ps.shape, dtype=complex)
        for n in range(_SERIES_TERMS):
            for j in range(3):
                acc[j] += term / (n + j + 1)
            term = term * ps / (n + 1)
        out[:, small] = acc
    big = ~small
    if np.any(big):
        pb = p[big]
        ep = np.exp(pb)
        m0 = (ep - 1.0) / pb
        m1 = (ep - m0) / pb
        m2 = (ep - 2.0 * m1) / pb
        out[0, big] = m0
        out[1, big] = m1
        out[2, big] = m2
    return out


def filon_weights(q):
    """Weights of the quadratic Filon rule on one panel pair [0, 2 dz].

    ``q = z dz`` with ``z = -alpha + j omega``.  The rule integrates
    ``exp(z t) P(t)`` exactly for any quadratic ``P`` through the three nodes,
    in units of ``dz``.
    """
    p = 2.0 * np.asarray(q, dtype=complex)
    m0, m1, m2 = unit_moments(p)
    mu0, mu1, mu2 = 2.0 * m0, 4.0 * m1, 8.0 * m2
    w0 = 0.5 * (mu2 - 3.0 * mu1 + 2.0 * mu0)
    w1 = 2.0 * mu1 - mu2
    w2 = 0.5 * (mu2 - mu1)
    return w0, w1, w2


def link_values(omega, s, x_nodes, inv_norm, alpha, dz):
    """|int_0^L exp(-alpha z) F(z; s) exp(j omega z) dz|^2 for each (omega, s) pair.

    ``F(z_m; s) = exp(-x_m s) * inv_norm_m`` is known on the uniform nodes
    ``z_m = m dz`` (an odd number of them) and interpolated piecewise
    quadratically; the exponential factor is integrated exactly, so the rule
    stays accurate however fast the phase rotates.
    """
    omega = np.ascontiguousarray(omega, dtype=float).ravel()
    s = np.ascontiguousarray(s, dtype=float).ravel()
    x_nodes = np.asarray(x_nodes, dtype=float)
    inv_norm = np.asarray(inv_norm, dtype=float)
    if omega.shape != s.shape:
        raise ValueError("omega and s must have the same length")
    n_nodes = x_nodes.size
    if n_nodes != inv_norm.size or n_nodes < 3 or n_nodes % 2 == 0:
        raise ValueError("node arrays must match and hold an odd number (>= 3) of nodes")
    k = np.arange((n_nodes - 1) // 2)
    tilted = bool(np.any(x_nodes != 0.0))
    out = np.empty(omega.size)
    for start in range(0, omega.size, _BLOCK):
        sl = slice(start, start + _BLOCK)
        q = (-alpha + 1j * omega[sl]) * dz
        w0, w1, w2 = filon_weights(q)
        geo = np.exp(2.0 * q[:, None] * k)
        if tilted:
            f_nodes = np.exp(-s[sl, None] * x_nodes) * inv_norm
        else:
            f_nodes = np.broadcast_to(inv_norm, (q.size, n_nodes))
        s0 = np.einsum("ij,ij->i", geo, f_nodes[:, 0:-2:2])
        s1 = np.einsum("ij,ij->i", geo, f_nodes[:, 1:-1:2])
        s2 = np.einsum("ij,ij->i", geo, f_nodes[:, 2::2])
        val = dz * (w0 * s0 + w1 * s1 + w2 * s2)
        out[sl] = val.real ** 2 + val.imag ** 2
    return out
