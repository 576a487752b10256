"""Smooth radial bump and annulus functions shared by the dyadic machinery.

psi equals 1 on |x| <= 3/4 and vanishes for |x| >= 4/3; phi(x) = psi(x/2) - psi(x)
lives on the annulus 3/4 <= |x| <= 8/3, so the dyadic sums telescope exactly.
"""

import numpy as np

INNER = 0.75
OUTER = 4.0 / 3.0


def _theta(t):
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    pos = t > 0
    out[pos] = np.exp(-1.0 / t[pos])
    return out


def smooth_step(t):
    """C-infinity step: 0 for t <= 0, 1 for t >= 1."""
    t = np.clip(np.asarray(t, dtype=float), 0.0, 1.0)
    a = _theta(t)
    b = _theta(1.0 - t)
    return a / (a + b)


def psi_radial(r):
    r = np.abs(np.asarray(r, dtype=float))
    return np.clip(1.0 - smooth_step((r - INNER) / (OUTER - INNER)), 0.0, 1.0)


def phi_radial(r):
    r = np.abs(np.asarray(r, dtype=float))
    return psi_radial(0.5 * r) - psi_radial(r)
