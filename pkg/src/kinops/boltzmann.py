"""Weak forms of the Boltzmann collision operator.

All quantities are quadratures of the form
    sum_{v} sum_{v_*} sum_{sigma} B(|v - v_*|, sigma) (...)
with v on the full grid, v_* on a strided sublattice and sigma on a deflection
rule aligned with v - v_*.  Off-grid values f(v') come from a cubic B-spline.
"""

import logging
from dataclasses import dataclass

import finufft
import numpy as np

from . import _collide, _spline
from .field import VelocityField, dft, maxwellian
from .kernels import KernelSpec, angular_rule

log = logging.getLogger(__name__)


class CostGuardError(RuntimeError):
    pass


@dataclass(frozen=True)
class CollisionQuadConfig:
    """Quadrature controls for the collision sums.

    ``symmetric`` averages the sum over (full grid) x (strided grid) with the
    swapped ordering, which keeps the quadrature invariant under v <-> v_* so
    collision invariants cancel exactly.  ``prune`` drops pairs whose weight is
    below that fraction of the largest pair weight.  ``stagger`` builds the
    spline of the test functions on knots offset by half a cell, so every v sits
    inside a single polynomial piece; odd Taylor terms in the deflection then
    cancel exactly, which matters for the grazing limit.  Test functions must
    decay at the box edge when it is on.
    """

    n_sigma_theta: int = 6
    n_sigma_phi: int = 8
    stride: int = 2
    prune: float = 1e-8
    symmetric: bool = True
    stagger: bool = False
    max_evals: float = 4e9
    report_above: float = 2e8

    def __post_init__(self):
        if self.stride < 1:
            raise ValueError("stride must be >= 1")
        if self.n_sigma_theta < 2 or self.n_sigma_phi < 3:
            raise ValueError("need at least 2 x 3 deflection nodes")

    def with_(self, **kw) -> "CollisionQuadConfig":
        d = dict(self.__dict__)
        d.update(kw)
        return CollisionQuadConfig(**d)

    def refined(self) -> "CollisionQuadConfig":
        return self.with_(n_sigma_theta=2 * self.n_sigma_theta, n_sigma_phi=2 * self.n_sigma_phi)


@dataclass
class _Pairs:
    vc: np.ndarray
    vidx: np.ndarray
    sc: np.ndarray
    sidx: np.ndarray
    cell: float
    count: int
    thr: float


def _points(spec, stride=1):
    x = spec.axis()
    idx = np.arange(spec.n)[::stride]
    g = np.stack(np.meshgrid(idx, idx, idx, indexing="ij"), axis=-1).reshape(-1, 3)
    return g, x[g]


def _pairs(spec, vw: np.ndarray, sw: np.ndarray, v_stride: int, s_stride: int, rel_tol: float,
           thr: float | None = None) -> _Pairs:
    """Pair lists ordered for early exit; ``vw`` and ``sw`` are weight arrays on the grid."""
    vgrid, vcoord = _points(spec, v_stride)
    sgrid, scoord = _points(spec, s_stride)
    vmag = np.abs(vw[tuple(vgrid.T)])
    smag = np.abs(sw[tuple(sgrid.T)])
    if thr is None:
        thr = rel_tol * max(np.abs(vw).max(), 1e-300) * max(np.abs(sw).max(), 1e-300)
    order = np.argsort(-smag, kind="stable")
    sgrid, scoord, smag = sgrid[order], scoord[order], smag[order]
    keep_v = vmag * smag[0] >= thr
    vgrid, vcoord, vmag = vgrid[keep_v], vcoord[keep_v], vmag[keep_v]
    # number of star partners per v, for the cost estimate
    asc = smag[::-1]
    partners = asc.size - np.searchsorted(asc, thr / np.maximum(vmag, 1e-300), side="left")
    cell = (v_stride * spec.spacing) ** 3 * (s_stride * spec.spacing) ** 3
    return _Pairs(np.ascontiguousarray(vcoord), vgrid, np.ascontiguousarray(scoord), sgrid,
                  cell, int(partners.sum()), float(thr))


def _pair_sets(spec, vw, sw, cfg):
    """One pair set, or two swapped ones when the quadrature is symmetrized."""
    first = _pairs(spec, vw, sw, 1, cfg.stride, cfg.prune)
    if not cfg.symmetric or cfg.stride == 1:
        return [first]
    return [first, _pairs(spec, vw, sw, cfg.stride, 1, cfg.prune, thr=first.thr)]


def _rule(spec: KernelSpec, cfg: CollisionQuadConfig):
    rule = angular_rule(spec, cfg.n_sigma_theta, cfg.n_sigma_phi)
    phi = rule.phi
    return rule.theta, rule.weights * (2.0 * np.pi / cfg.n_sigma_phi), np.cos(phi), np.sin(phi)


def _guard(cfg: CollisionQuadConfig, pairs: int, nodes: int, per_eval: int = 1, what: str = "qform"):
    evals = float(pairs) * nodes * per_eval
    if evals > cfg.max_evals:
        raise CostGuardError(f"{what}: estimated {evals:.3g} interpolations exceed the budget {cfg.max_evals:.3g}")
    if evals > cfg.report_above:
        log.info("%s: %d pairs x %d deflections = %.3g interpolations", what, pairs, nodes, evals)
    return evals


def _table(fields, spec, stagger: bool = False):
    if stagger:
        shifted = [_spline.half_shift(np.asarray(f)) for f in fields]
        return _spline.build_table(shifted, spec.axis()[0] + 0.5 * spec.spacing, spec.spacing)
    return _spline.build_table(fields, spec.axis()[0], spec.spacing)


def _check_grid(*fields):
    spec = fields[0].spec
    for f in fields[1:]:
        if f.spec != spec:
            raise ValueError("fields must share a GridSpec")
    return spec


def _r_floor(spec_k: KernelSpec, grid):
    return grid.spacing if spec_k.gamma < 0 else 0.0


def qform_direct_multi(g: VelocityField, h: VelocityField, tests, spec: KernelSpec,
                       cfg: CollisionQuadConfig = CollisionQuadConfig()) -> np.ndarray:
    """<Q(g, h), f> for several test functions f sharing one pair traversal."""
    tests = list(tests)
    grid = _check_grid(g, h, *tests)
    sets = _pair_sets(grid, h.values, g.values, cfg)
    theta, wt, cp, sp = _rule(spec, cfg)
    _guard(cfg, sum(p.count for p in sets), theta.size * cp.size, len(tests), "qform_direct")
    table = _table([f.values for f in tests], grid, cfg.stagger)
    total = np.zeros(len(tests))
    for pairs in sets:
        vi = tuple(pairs.vidx.T)
        if cfg.stagger:
            fv = _spline.evaluate(table, pairs.vc)
        else:
            fv = np.stack([f.values[vi] for f in tests], axis=1)
        out = _collide.qform_pairs(pairs.vc, h.values[vi], np.ascontiguousarray(fv), pairs.sc,
                                   g.values[tuple(pairs.sidx.T)], pairs.thr,
                                   float(spec.gamma), _r_floor(spec, grid),
                                   theta, wt, cp, sp, table.coef, table.origin, table.h)
        total += out * pairs.cell
    return total / len(sets)


def qform_direct(g: VelocityField, h: VelocityField, f: VelocityField, spec: KernelSpec,
                 cfg: CollisionQuadConfig = CollisionQuadConfig()) -> float:
    """int int int B g_* h (f' - f) d(sigma) dv_* dv."""
    return float(qform_direct_multi(g, h, [f], spec, cfg)[0])


def qform_split(g: VelocityField, f: VelocityField, spec: KernelSpec,
                cfg: CollisionQuadConfig = CollisionQuadConfig()):
    """(dissipative, cancellation) with <Q(g,f),f> = -diss/2 + canc/2.

    dissipative = int B g_* (f'-f)^2, cancellation = int B g_* (f'^2 - f^2).
    Pairs are not pruned on the f side: both pieces live wherever f(v') does.
    """
    grid = _check_grid(g, f)
    ones = np.ones_like(f.values)
    sets = _pair_sets(grid, ones, g.values, cfg)
    theta, wt, cp, sp = _rule(spec, cfg)
    _guard(cfg, sum(p.count for p in sets), theta.size * cp.size, 1, "qform_split")
    table = _table([f.values], grid)
    diss = canc = 0.0
    for pairs in sets:
        d, c = _collide.split_pairs(pairs.vc, f.values[tuple(pairs.vidx.T)], pairs.sc,
                                    g.values[tuple(pairs.sidx.T)], pairs.thr, float(spec.gamma),
                                    _r_floor(spec, grid), theta, wt, cp, sp,
                                    table.coef, table.origin, table.h)
        diss += d * pairs.cell
        canc += c * pairs.cell
    k = len(sets)
    return diss / k, canc / k


def linearized_form(f: VelocityField, spec: KernelSpec,
                    cfg: CollisionQuadConfig = CollisionQuadConfig()) -> float:
    """<L f, f> with L f = -mu^(-1/2) (Q(mu, mu^(1/2) f) + Q(mu^(1/2) f, mu))."""
    grid = f.spec
    mu = maxwellian(grid)
    root = np.sqrt(mu.values)
    test = f.values / root
    if not np.all(np.isfinite(test)) or np.abs(test).max() > 1e150:
        raise FloatingPointError("mu^(-1/2) f overflows on the box")
    sqm_f = f.with_values(root * f.values)
    t = f.with_values(test)
    a = qform_direct(mu, sqm_f, t, spec, cfg)
    b = qform_direct(sqm_f, mu, t, spec, cfg)
    return -(a + b)


def entropy_dissipation_boltzmann(f: VelocityField, spec: KernelSpec,
                                  cfg: CollisionQuadConfig = CollisionQuadConfig(),
                                  floor: bool = False) -> float:
    """1/4 int B (f'f'_* - f f_*) log(f'f'_* / (f f_*)), log f interpolated by spline."""
    vals = f.values
    if np.any(vals <= 0):
        if not floor:
            raise ValueError("entropy dissipation needs f > 0 (pass floor=True to clamp at 1e-300)")
        log.warning("clamping %d non-positive samples to 1e-300", int(np.sum(vals <= 0)))
        vals = np.maximum(vals, 1e-300)
    grid = f.spec
    sets = _pair_sets(grid, vals, vals, cfg)
    theta, wt, cp, sp = _rule(spec, cfg)
    _guard(cfg, sum(p.count for p in sets), theta.size * cp.size, 2, "entropy_dissipation")
    logs = np.log(vals)
    table = _table([logs], grid)
    total = 0.0
    for pairs in sets:
        vi, si = tuple(pairs.vidx.T), tuple(pairs.sidx.T)
        t = _collide.entropy_pairs(pairs.vc, logs[vi], vals[vi], pairs.sc, logs[si], vals[si],
                                   pairs.thr, float(spec.gamma), _r_floor(spec, grid),
                                   theta, wt, cp, sp, table.coef, table.origin, table.h)
        total += t * pairs.cell
    return 0.25 * total / len(sets)


def entropy_scale(f: VelocityField, spec: KernelSpec, n_theta: int = 64) -> float:
    """Natural size of the dissipation: ||f||_L1^2 times the angular second moment."""
    rule = angular_rule(spec, n_theta)
    mass = np.abs(f.values).sum() * f.spec.cell
    return float(mass ** 2 * 2.0 * np.pi * np.sum(rule.weights * rule.theta ** 2))


def _dtft(values: np.ndarray, grid, pts: np.ndarray) -> np.ndarray:
    """h^3 sum_v f(v) exp(-i xi . v) at arbitrary frequencies, shape (p, 3)."""
    h = grid.spacing
    n = grid.n
    # cell center index j sits at (j - n/2 + 1/2) h, i.e. mode m = j - n/2 shifted by h/2
    modes = np.ascontiguousarray(values.astype(np.complex128))
    x = np.ascontiguousarray(pts[:, 0] * h)
    y = np.ascontiguousarray(pts[:, 1] * h)
    z = np.ascontiguousarray(pts[:, 2] * h)
    c = finufft.nufft3d2(x, y, z, modes, isign=-1, eps=1e-13, modeord=0)
    shift = np.exp(-0.5j * h * pts.sum(axis=1))
    return c * shift * h ** 3


def bobylev_qform_maxwellian(g: VelocityField, f: VelocityField, spec: KernelSpec,
                             cfg: CollisionQuadConfig = CollisionQuadConfig()) -> float:
    """Dissipative part int B g_* (f'-f)^2 for Maxwellian molecules, in Fourier space.

    (2 pi)^-3 sum over the dual grid and the deflection rule of
    b * [g^(0)|f^(xi) - f^(xi+)|^2 + 2 Re((g^(0) - g^(xi-)) f^(xi+) conj f^(xi))].
    Off-grid transforms are evaluated exactly (to 1e-13) by a type-2 NUFFT.
    """
    if spec.gamma != 0:
        raise ValueError("the Fourier route requires gamma = 0")
    grid = _check_grid(g, f)
    F = dft(f)
    G0 = g.values.sum() * grid.cell
    kx, ky, kz = F.xi()
    xi = np.stack([kx.ravel(), ky.ravel(), kz.ravel()], axis=1)
    fxi = F.modes.ravel()
    r = np.linalg.norm(xi, axis=1)
    keep = r > 0
    xi, fxi, r = xi[keep], fxi[keep], r[keep]
    uh = xi / r[:, None]
    theta, wt, cp, sp = _rule(spec, cfg)
    helper = np.where(np.abs(uh[:, [0]]) < 0.9, np.array([[1.0, 0.0, 0.0]]), np.array([[0.0, 1.0, 0.0]]))
    e1 = np.cross(uh, helper)
    e1 /= np.linalg.norm(e1, axis=1, keepdims=True)
    e2 = np.cross(uh, e1)
    total = 0.0
    for ia in range(theta.size):
        ct, st = np.cos(theta[ia]), np.sin(theta[ia])
        sig = (ct * uh[None] + st * (cp[:, None, None] * e1[None] + sp[:, None, None] * e2[None])).reshape(-1, 3)
        xr = np.tile(xi, (cp.size, 1))
        plus = 0.5 * (xr + np.tile(r, cp.size)[:, None] * sig)
        fp = _dtft(f.values, grid, plus)
        gm = _dtft(g.values, grid, xr - plus)
        fx = np.tile(fxi, cp.size)
        acc = G0 * np.abs(fx - fp) ** 2 + 2.0 * np.real((G0 - gm) * fp * np.conj(fx))
        total += wt[ia] * acc.sum()
    dxi = (2.0 * np.pi / (2.0 * grid.extent)) ** 3
    return float(total * dxi / (2.0 * np.pi) ** 3)
