"""Cubic B-spline interpolation of grid samples at off-grid velocities.

The collision quadratures need f(v') at arbitrary points and rely on the
interpolant being twice continuously differentiable: small-angle cancellation
in (f' - f) only works if the second-order Taylor term is captured.  Trilinear
interpolation has a piecewise-constant gradient and breaks that.

Samples are first extended past the box by cubic extrapolation (so polynomials
up to degree three are reproduced), then prefiltered with scipy.
"""

from dataclasses import dataclass

import numba as nb
import numpy as np
from scipy import ndimage

PAD = 8


@dataclass(frozen=True)
class SplineTable:
    """B-spline coefficients over the padded grid.

    ``coef`` has shape (m, N, N, N) for m stacked fields; ``origin`` is the
    velocity of padded index 0 along each axis and ``h`` the spacing.
    """

    coef: np.ndarray
    origin: float
    h: float

    @property
    def count(self) -> int:
        return self.coef.shape[0]


def _extend_axis(a: np.ndarray, axis: int, pad: int) -> np.ndarray:
    a = np.moveaxis(a, axis, 0)
    k = np.arange(1, pad + 1, dtype=float)[:, None, None]
    # Lagrange weights through nodes 0, -1, -2, -3 evaluated at k
    l0 = (k + 1) * (k + 2) * (k + 3) / 6.0
    l1 = -k * (k + 2) * (k + 3) / 2.0
    l2 = k * (k + 1) * (k + 3) / 2.0
    l3 = -k * (k + 1) * (k + 2) / 6.0
    hi = l0 * a[-1] + l1 * a[-2] + l2 * a[-3] + l3 * a[-4]
    lo = l0 * a[0] + l1 * a[1] + l2 * a[2] + l3 * a[3]
    out = np.concatenate([lo[::-1], a, hi], axis=0)
    return np.moveaxis(out, 0, axis)


def build_table(fields, origin: float, h: float, pad: int = PAD) -> SplineTable:
    """Prefilter one or more (n, n, n) sample arrays sharing a grid.

    ``origin`` is the velocity of the first cell center of the unpadded grid.
    """
    arrays = [np.asarray(f, dtype=float) for f in fields]
    coefs = []
    for a in arrays:
        ext = a
        for ax in range(3):
            ext = _extend_axis(ext, ax, pad)
        coefs.append(ndimage.spline_filter(ext, order=3, mode="mirror"))
    return SplineTable(np.ascontiguousarray(np.stack(coefs)), origin - pad * h, h)


@nb.njit(cache=True, inline="always")
def _weights(t):
    t2 = t * t
    t3 = t2 * t
    w0 = (1.0 - t) ** 3 / 6.0
    w3 = t3 / 6.0
    w1 = (3.0 * t3 - 6.0 * t2 + 4.0) / 6.0
    w2 = 1.0 - w0 - w1 - w3
    return w0, w1, w2, w3


@nb.njit(cache=True, inline="always")
def _locate(x, origin, h, size):
    q = (x - origin) / h
    if q < 1.0:
        q = 1.0
    hi = size - 2.0 - 1e-9
    if q > hi:
        q = hi
    i = int(np.floor(q))
    return i, q - i


@nb.njit(cache=True)
def eval_many(coef, origin, h, x, y, z, out):
    """Evaluate every stacked field at one point, writing into ``out``."""
    m, n0, n1, n2 = coef.shape
    i, tx = _locate(x, origin, h, n0)
    j, ty = _locate(y, origin, h, n1)
    k, tz = _locate(z, origin, h, n2)
    wx = _weights(tx)
    wy = _weights(ty)
    wz = _weights(tz)
    for f in range(m):
        acc = 0.0
        for a in range(4):
            sa = 0.0
            for b in range(4):
                c0 = coef[f, i - 1 + a, j - 1 + b, k - 1]
                c1 = coef[f, i - 1 + a, j - 1 + b, k]
                c2 = coef[f, i - 1 + a, j - 1 + b, k + 1]
                c3 = coef[f, i - 1 + a, j - 1 + b, k + 2]
                sa += wy[b] * (c0 * wz[0] + c1 * wz[1] + c2 * wz[2] + c3 * wz[3])
            acc += wx[a] * sa
        out[f] = acc


@nb.njit(cache=True)
def eval_one(coef, origin, h, x, y, z):
    _, n0, n1, n2 = coef.shape
    i, tx = _locate(x, origin, h, n0)
    j, ty = _locate(y, origin, h, n1)
    k, tz = _locate(z, origin, h, n2)
    wx = _weights(tx)
    wy = _weights(ty)
    wz = _weights(tz)
    acc = 0.0
    for a in range(4):
        sa = 0.0
        for b in range(4):
            c0 = coef[0, i - 1 + a, j - 1 + b, k - 1]
            c1 = coef[0, i - 1 + a, j - 1 + b, k]
            c2 = coef[0, i - 1 + a, j - 1 + b, k + 1]
            c3 = coef[0, i - 1 + a, j - 1 + b, k + 2]
            sa += wy[b] * (c0 * wz[0] + c1 * wz[1] + c2 * wz[2] + c3 * wz[3])
        acc += wx[a] * sa
    return acc


def evaluate(table: SplineTable, points: np.ndarray) -> np.ndarray:
    """Vectorised helper: values of every field at points of shape (p, 3)."""
    pts = np.ascontiguousarray(np.asarray(points, dtype=float).reshape(-1, 3))
    out = np.empty((pts.shape[0], table.count))
    _eval_points(table.coef, table.origin, table.h, pts, out)
    return out


@nb.njit(cache=True)
def _eval_points(coef, origin, h, pts, out):
    buf = np.empty(coef.shape[0])
    for p in range(pts.shape[0]):
        eval_many(coef, origin, h, pts[p, 0], pts[p, 1], pts[p, 2], buf)
        out[p, :] = buf


# node-centered stencils of the cubic B-spline: value, first and second derivative
_S0 = np.array([1.0, 4.0, 1.0]) / 6.0
_S1 = np.array([-0.5, 0.0, 0.5])
_S2 = np.array([1.0, -2.0, 1.0])


def node_derivatives(table: SplineTable, field: int = 0, pad: int = PAD):
    """Exact spline value, gradient and Hessian at the original grid nodes.

    Returns (value, grad[3], hess[3, 3]) arrays over the unpadded grid.
    """
    c = table.coef[field]
    h = table.h

    def apply(orders):
        out = c
        for ax, o in enumerate(orders):
            st = (_S0, _S1, _S2)[o]
            out = ndimage.correlate1d(out, st, axis=ax, mode="nearest")
        sl = slice(pad, c.shape[0] - pad)
        return out[sl, sl, sl] / h ** sum(orders)

    value = apply((0, 0, 0))
    grad = np.stack([apply(tuple(1 if a == i else 0 for a in range(3))) for i in range(3)])
    hess = np.empty((3, 3) + value.shape)
    for i in range(3):
        for j in range(i, 3):
            orders = [0, 0, 0]
            orders[i] += 1
            orders[j] += 1
            hess[i, j] = apply(tuple(orders))
            hess[j, i] = hess[i, j]
    return value, grad, hess


def half_shift(values: np.ndarray) -> np.ndarray:
    """Samples at x + h/2 along every axis by Fourier phase shift.

    Wraps periodically, so it is only meaningful for fields that decay at the box edge.
    """
    n = values.shape[0]
    out = np.fft.fftn(values)
    k = np.fft.fftfreq(n) * 2.0 * np.pi
    ph = np.exp(0.5j * k)
    ph[n // 2] = 0.0
    return np.fft.ifftn(out * ph[:, None, None] * ph[None, :, None] * ph[None, None, :]).real


@nb.njit(cache=True, inline="always")
def _dweights(t):
    u = 1.0 - t
    d = (-0.5 * u * u, 1.5 * t * t - 2.0 * t, 0.5 * u * u - 1.5 * t * t + 2.0 * t - 0.5 * t * t, 0.5 * t * t)
    dd = (u, 3.0 * t - 2.0, 1.0 - 3.0 * t, t)
    return d, dd


@nb.njit(cache=True)
def _point_derivs(coef, origin, h, pts, out):
    m, n0, n1, n2 = coef.shape
    for p in range(pts.shape[0]):
        i, tx = _locate(pts[p, 0], origin, h, n0)
        j, ty = _locate(pts[p, 1], origin, h, n1)
        k, tz = _locate(pts[p, 2], origin, h, n2)
        W = np.empty((3, 3, 4))
        for ax, t in enumerate((tx, ty, tz)):
            w = _weights(t)
            d, dd = _dweights(t)
            for q in range(4):
                W[ax, 0, q] = w[q]
                W[ax, 1, q] = d[q] / h
                W[ax, 2, q] = dd[q] / h ** 2
        for f in range(m):
            acc = np.zeros(10)
            for a in range(4):
                for b in range(4):
                    for c in range(4):
                        cv = coef[f, i - 1 + a, j - 1 + b, k - 1 + c]
                        x0, x1, x2 = W[0, 0, a], W[0, 1, a], W[0, 2, a]
                        y0, y1, y2 = W[1, 0, b], W[1, 1, b], W[1, 2, b]
                        z0, z1, z2 = W[2, 0, c], W[2, 1, c], W[2, 2, c]
                        acc[0] += cv * x0 * y0 * z0
                        acc[1] += cv * x1 * y0 * z0
                        acc[2] += cv * x0 * y1 * z0
                        acc[3] += cv * x0 * y0 * z1
                        acc[4] += cv * x2 * y0 * z0
                        acc[5] += cv * x1 * y1 * z0
                        acc[6] += cv * x1 * y0 * z1
                        acc[7] += cv * x0 * y2 * z0
                        acc[8] += cv * x0 * y1 * z1
                        acc[9] += cv * x0 * y0 * z2
            out[p, f, :] = acc


def point_derivatives(table: SplineTable, points: np.ndarray) -> np.ndarray:
    """Value, gradient and Hessian upper triangle (xx, xy, xz, yy, yz, zz).

    Returns shape (p, m, 10) for p points and m stacked fields.
    """
    pts = np.ascontiguousarray(np.asarray(points, dtype=float).reshape(-1, 3))
    out = np.empty((pts.shape[0], table.count, 10))
    _point_derivs(table.coef, table.origin, table.h, pts, out)
    return out
