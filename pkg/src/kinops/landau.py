"""Weak forms of the Landau operator and the grazing comparison against Q^eps."""

from dataclasses import dataclass

import numpy as np
from scipy.signal import fftconvolve

from . import _collide, _spline
from .boltzmann import CollisionQuadConfig, _pair_sets, _table, qform_direct_multi
from .field import VelocityField, gradient
from .kernels import KernelSpec, lambda_constant

_UPPER = ((0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2))


@dataclass(frozen=True)
class GradField:
    components: tuple

    @classmethod
    def of(cls, f: VelocityField, method: str = "centered") -> "GradField":
        g = gradient(f, method)
        return cls(tuple(f.with_values(c) for c in g))

    def array(self) -> np.ndarray:
        return np.stack([c.values for c in self.components])


def _matrix_kernel(grid, gamma: float, lam: float) -> dict:
    """a_ij sampled on every lattice offset (2n-1 per axis); a(0) is set to 0."""
    n = grid.n
    off = grid.spacing * np.arange(-(n - 1), n)
    x, y, z = np.meshgrid(off, off, off, indexing="ij")
    u = (x, y, z)
    r2 = x * x + y * y + z * z
    zero = r2 == 0
    r2s = np.where(zero, 1.0, r2)
    r2f = np.maximum(r2s, grid.spacing ** 2) if gamma + 2 <= 0 else r2s
    scale = lam * r2f ** (gamma / 2.0)
    out = {}
    for i, j in _UPPER:
        k = scale * ((r2s if i == j else 0.0) - u[i] * u[j])
        k[zero] = 0.0
        out[(i, j)] = out[(j, i)] = k
    return out


def _conv(kernel: np.ndarray, field: np.ndarray) -> np.ndarray:
    n = field.shape[0]
    full = fftconvolve(field, kernel, mode="full")
    return full[n - 1:2 * n - 1, n - 1:2 * n - 1, n - 1:2 * n - 1]


def _check(*fields):
    grid = fields[0].spec
    if any(f.spec != grid for f in fields):
        raise ValueError("fields must share a GridSpec")
    return grid


def qlform_weak(g: VelocityField, h: VelocityField, f: VelocityField, gamma: float, lam: float,
                cfg: CollisionQuadConfig | None = None, form: str = "gradient",
                order: str = "v") -> float:
    """<Q_L(g, h), f>.

    ``gradient``: -sum [g_* grad h - (grad g)_* h] . a(v - v_*) grad f with centered
    differences, summed over the full lattice by FFT convolution.  ``order="star"``
    contracts the same double sum over v first (an algebra check).
    ``hessian``: integrated by parts twice, sum g_* h [a : Hess f + 2 div a . grad f]
    with spline derivatives of f and the pair set of the Boltzmann quadrature.
    """
    grid = _check(g, h, f)
    if not -3 <= gamma <= 1:
        raise ValueError("gamma must lie in [-3, 1]")
    if form == "hessian":
        return float(qlform_hessian_multi(g, h, [f], gamma, lam, cfg or CollisionQuadConfig())[0])
    if form != "gradient":
        raise ValueError("form must be 'gradient' or 'hessian'")
    a = _matrix_kernel(grid, gamma, lam)
    gg = gradient(g)
    gh = gradient(h)
    gf = gradient(f)
    hv, gv = h.values, g.values
    total = 0.0
    if order == "v":
        for i in range(3):
            for j in range(3):
                A = _conv(a[(i, j)], gv)
                Bj = _conv(a[(i, j)], gg[j])
                total += np.sum(gf[i] * (A * gh[j] - Bj * hv))
    elif order == "star":
        for i in range(3):
            for j in range(3):
                P = _conv(a[(i, j)], gf[i] * gh[j])
                Q = _conv(a[(i, j)], gf[i] * hv)
                total += np.sum(gv * P - gg[j] * Q)
    else:
        raise ValueError("order must be 'v' or 'star'")
    return float(-total * grid.cell ** 2)


def qlform_hessian_multi(g: VelocityField, h: VelocityField, tests, gamma: float, lam: float,
                         cfg: CollisionQuadConfig) -> np.ndarray:
    tests = list(tests)
    grid = _check(g, h, *tests)
    table = _table([t.values for t in tests], grid, cfg.stagger)
    r_floor = grid.spacing if gamma < 0 else 0.0
    total = np.zeros(len(tests))
    sets = _pair_sets(grid, h.values, g.values, cfg)
    for pairs in sets:
        vi = tuple(pairs.vidx.T)
        d = _spline.point_derivatives(table, pairs.vc)
        out = _collide.landau_hessian_pairs(pairs.vc, h.values[vi], np.ascontiguousarray(d[:, :, 1:4]),
                                            np.ascontiguousarray(d[:, :, 4:]), pairs.sc,
                                            g.values[tuple(pairs.sidx.T)], pairs.thr,
                                            float(gamma), r_floor)
        total += out * pairs.cell
    return lam * total / len(sets)


def entropy_dissipation_landau(f: VelocityField, gamma: float, lam: float,
                               cfg: CollisionQuadConfig = CollisionQuadConfig(),
                               floor: bool = False) -> float:
    """1/2 sum f f_* (G - G_*) . a(v - v_*) (G - G_*) with G the gradient of log f."""
    vals = f.values
    if np.any(vals <= 0):
        if not floor:
            raise ValueError("entropy dissipation needs f > 0 (pass floor=True to clamp at 1e-300)")
        vals = np.maximum(vals, 1e-300)
    grid = f.spec
    logs = f.with_values(np.log(vals))
    G = gradient(logs)
    r_floor = grid.spacing if gamma < 0 else 0.0
    total = 0.0
    sets = _pair_sets(grid, vals, vals, cfg)
    for pairs in sets:
        vi, si = tuple(pairs.vidx.T), tuple(pairs.sidx.T)
        gv = np.ascontiguousarray(G[(slice(None),) + vi].T)
        gs = np.ascontiguousarray(G[(slice(None),) + si].T)
        t = _collide.landau_entropy_pairs(pairs.vc, vals[vi], gv, pairs.sc, vals[si], gs,
                                          pairs.thr, float(gamma), r_floor)
        total += t * pairs.cell
    return 0.5 * lam * total / len(sets)


@dataclass(frozen=True)
class GrazingRow:
    eps: float
    q_eps: float
    q_landau: float
    gap: float


@dataclass(frozen=True)
class GrazingTable:
    rows: tuple
    slope: float | None
    lam: float

    def gaps(self) -> np.ndarray:
        return np.array([r.gap for r in self.rows])

    def monotone(self) -> bool:
        """Gap nonincreasing as eps decreases."""
        order = np.argsort([-r.eps for r in self.rows])
        g = self.gaps()[order]
        return bool(np.all(np.diff(g) <= 0))


def loglog_slope(eps, gaps) -> float | None:
    eps = np.asarray(eps, dtype=float)
    gaps = np.asarray(gaps, dtype=float)
    if eps.size < 3 or np.any(gaps <= 0):
        return None
    return float(np.polyfit(np.log(eps), np.log(gaps), 1)[0])


def grazing_comparison_multi(g: VelocityField, h: VelocityField, tests, s: float, k_prime: float,
                             eps_list, gamma: float = 0.0,
                             cfg: CollisionQuadConfig = CollisionQuadConfig(n_sigma_theta=12, n_sigma_phi=12,
                                                                            symmetric=False, stagger=True)):
    """Grazing tables for several test functions that share (g, h)."""
    eps_list = [float(e) for e in eps_list]
    if any(e <= 0 for e in eps_list):
        raise ValueError("eps values must be positive")
    lam = lambda_constant(k_prime, s)
    ql = qlform_hessian_multi(g, h, tests, gamma, lam, cfg)
    qe = []
    for e in eps_list:
        spec = KernelSpec(gamma, s, k_prime, "grazing", e)
        qe.append(qform_direct_multi(g, h, tests, spec, cfg))
    tables = []
    for k in range(len(tests)):
        rows = tuple(GrazingRow(e, float(q[k]), float(ql[k]), float(abs(q[k] - ql[k])))
                     for e, q in zip(eps_list, qe))
        slope = loglog_slope([r.eps for r in rows], [r.gap for r in rows])
        tables.append(GrazingTable(rows, slope, lam))
    return tables


def grazing_comparison(g, h, f, s, k_prime, eps_list, gamma=0.0, cfg=None) -> GrazingTable:
    kw = {} if cfg is None else {"cfg": cfg}
    if len(list(eps_list)) < 3:
        raise ValueError("need at least three eps values for a slope")
    return grazing_comparison_multi(g, h, [f], s, k_prime, eps_list, gamma, **kw)[0]
