"""Weighted, anisotropic and dyadic norms of velocity fields, plus baseline storage.

Quadratic functionals (the anisotropic norms) return squared values; everything
else returns the norm itself.
"""

import json
import os
from dataclasses import dataclass, field as dc_field
from importlib import resources
from pathlib import Path

import numpy as np

from . import sphere
from .boltzmann import CollisionQuadConfig, qform_split
from .field import (GridSpec, VelocityField, dft, max_phase_block, maxwellian, phase_block,
                    to_shell_harmonics, translate, weight)
from ._cutoff import OUTER
from .kernels import KernelSpec


@dataclass(frozen=True)
class NormReport:
    name: str
    value: float
    params: dict = dc_field(default_factory=dict)
    meta: dict = dc_field(default_factory=dict)

    def __post_init__(self):
        if not self.value >= 0:
            raise ValueError(f"norm {self.name} is negative or undefined: {self.value}")


def _bracket(xi_sq: np.ndarray, m: float) -> np.ndarray:
    return (1.0 + xi_sq) ** (m / 2.0)


def sobolev_norm(f: VelocityField, m: float, l: float) -> float:
    """|| <D>^m <v>^l f ||_{L^2} on the grid (discrete Parseval for m != 0)."""
    g = f.values if l == 0 else f.values * weight(f.spec, l)
    if m == 0:
        return float(np.sqrt(np.sum(g * g) * f.spec.cell))
    modes = dft(f.with_values(g))
    kx, ky, kz = modes.xi()
    mult = _bracket(kx * kx + ky * ky + kz * kz, m)
    n3 = f.spec.n ** 3
    return float(np.sqrt(np.sum(np.abs(modes.modes * mult) ** 2) / (n3 * f.spec.cell)))


def lp_norm(f: VelocityField, p: float, l: float = 0.0) -> float:
    if p < 1:
        raise ValueError("need p >= 1")
    a = np.abs(f.values)
    if l != 0:
        a = a * weight(f.spec, l)
    if p == 1:
        return float(a.sum() * f.spec.cell)
    return float((np.sum(a ** p) * f.spec.cell) ** (1.0 / p))


def llogl_norm(f: VelocityField) -> float:
    a = np.abs(f.values)
    return float(np.sum(a * np.log1p(a)) * f.spec.cell)


def weighted_l2_sq(f: VelocityField, l: float) -> float:
    return sobolev_norm(f, 0, l) ** 2


def _offsets(spec: GridSpec, radius: float):
    k = int(np.floor(radius / spec.spacing))
    r = np.arange(-k, k + 1)
    d = np.stack(np.meshgrid(r, r, r, indexing="ij"), axis=-1).reshape(-1, 3)
    dist = spec.spacing * np.linalg.norm(d, axis=1)
    return d[(dist <= radius) & (np.any(d != 0, axis=1))]


def _shifted_pair(a: np.ndarray, off):
    """Views a[v] and a[v + off] over the overlap of the two index ranges."""
    n = a.shape[0]
    src, dst = [], []
    for o in off:
        src.append(slice(max(0, -o), n - max(0, o)))
        dst.append(slice(max(0, o), n - max(0, -o)))
    return a[tuple(src)], a[tuple(dst)]


def aniso_norm_ns(f: VelocityField, s: float, exclusion_cells: float = 1.0,
                  distance_power: float = 2.0) -> float:
    """||f||^2_{L^2_s} + double integral of <v>^(s+1/2) <v'>^(s+1/2) |f - f'|^2 / d^2 over d <= 1.

    d(v, v')^2 = |v - v'|^2 + (|v|^2 - |v'|^2)^2 / 4.  Pairs closer than
    ``exclusion_cells`` grid spacings are dropped.  Since d <= 1 forces
    |v - v'| <= 1, only lattice offsets inside the unit ball contribute.
    """
    if not 0 < s < 1:
        raise ValueError("need 0 < s < 1")
    spec = f.spec
    x, y, z = spec.coords()
    r2 = x * x + y * y + z * z
    w = (1.0 + r2) ** ((s + 0.5) / 2.0)
    vals = f.values
    total = 0.0
    min_sep = exclusion_cells * spec.spacing * (1.0 - 1e-9)
    for off in _offsets(spec, 1.0):
        sep2 = spec.spacing ** 2 * float(off @ off)
        if sep2 < min_sep ** 2:
            continue
        f0, f1 = _shifted_pair(vals, off)
        q0, q1 = _shifted_pair(r2, off)
        w0, w1 = _shifted_pair(w, off)
        d2 = sep2 + 0.25 * (q0 - q1) ** 2
        inside = d2 <= 1.0
        total += np.sum(np.where(inside, w0 * w1 * (f0 - f1) ** 2 / d2 ** (distance_power / 2.0), 0.0))
    return weighted_l2_sq(f, s) + float(total) * spec.cell ** 2


def aniso_triple_norm(f: VelocityField, s: float, kernel: KernelSpec | None = None,
                      cfg: CollisionQuadConfig = CollisionQuadConfig()) -> float:
    """||f||^2_{L^2_s} + int b mu_* (f' - f)^2 with the Maxwellian-molecule kernel."""
    kernel = (kernel or KernelSpec(s=s)).with_(gamma=0.0)
    mu = maxwellian(f.spec)
    diss, _ = qform_split(mu, f, kernel, cfg)
    return weighted_l2_sq(f, s) + diss


@dataclass(frozen=True)
class DyadicProfile:
    profile: float
    reference: float
    ratio: float
    blocks: tuple
    truncated: bool

    def __iter__(self):
        return iter((self.profile, self.reference, self.ratio))


def dyadic_profile(f: VelocityField, m: float, l: float) -> DyadicProfile:
    """sum_k 2^(2kl) ||P_k f||^2_{H^m} against ||f||^2_{H^m_l}.

    Blocks run from k=-1 up to the last annulus meeting the box; ``truncated``
    says that annulus pokes out of the box's inscribed ball.
    """
    k_max = max_phase_block(f.spec)
    blocks = []
    total = 0.0
    for k in range(-1, k_max + 1):
        part = sobolev_norm(phase_block(f, k), m, 0) ** 2
        blocks.append(part)
        total += 2.0 ** (2 * k * l) * part
    ref = sobolev_norm(f, m, l) ** 2
    truncated = OUTER * 2.0 ** (k_max + 1) > f.spec.extent
    ratio = total / ref if ref > 0 else float("nan")
    return DyadicProfile(float(total), float(ref), float(ratio), tuple(blocks), bool(truncated))


def lb_weighted_norm(f: VelocityField, s: float, weight_index: float, radii, quad: sphere.SphereQuadrature,
                     l_max: int) -> float:
    """|| (-Lap_S2)^(s/2) f ||_{L^2_w}, shell by shell, with <r>^(2w) on squared shells."""
    shells = to_shell_harmonics(f, radii, quad, l_max)
    mult = sphere.lb_symbol(l_max, s)
    radial = (1.0 + shells.radii ** 2) ** weight_index
    return float(np.sqrt(shells.map_coeffs(mult).l2_norm_sq(radial)))


def translation_bound_check(f: VelocityField, shift, s: float, radii, quad: sphere.SphereQuadrature,
                            l_max: int):
    """(lhs, rhs, ratio) for ||LB^(s/2) T_h f|| against <h>^s (||LB^(s/2) f|| + ||f||_{H^s})."""
    shift = np.asarray(shift, dtype=float)
    lhs = lb_weighted_norm(translate(f, shift), s, 0.0, radii, quad, l_max)
    base = lb_weighted_norm(f, s, 0.0, radii, quad, l_max) + sobolev_norm(f, s, 0.0)
    rhs = (1.0 + shift @ shift) ** (s / 2.0) * base
    return lhs, rhs, (lhs / rhs if rhs > 0 else float("nan"))


def sphere_equivalence_ratio(samples, quad: sphere.SphereQuadrature, s: float, l_max: int):
    """(Gagliardo + ||f||^2) / (||LB^(s/2) f||^2 + ||f||^2) for one or more sample rows."""
    rows = np.atleast_2d(np.asarray(samples, dtype=float))
    gag = np.atleast_1d(sphere.gagliardo_seminorm(rows, quad, s))
    out = []
    for r, gv in zip(rows, gag):
        c = sphere.analyze(r, quad, l_max)
        l2 = c.norm_sq()
        out.append((gv + l2) / (sphere.frac_laplace_beltrami(c, s).norm_sq() + l2))
    out = np.array(out)
    return float(out[0]) if np.ndim(samples) == 1 else out


def grazing_sphere_ratio(samples, quad: sphere.SphereQuadrature, s: float, eps: float, l_max: int):
    """(||f||^2 + eps^(2s-2) Gagliardo restricted to |sigma - tau| <= eps) / ||W^eps f||^2."""
    rows = np.atleast_2d(np.asarray(samples, dtype=float))
    gag = np.atleast_1d(sphere.gagliardo_seminorm(rows, quad, s, cutoff=eps))
    out = []
    for r, gv in zip(rows, gag):
        c = sphere.analyze(r, quad, l_max)
        lhs = c.norm_sq() + eps ** (2 * s - 2) * gv
        out.append(lhs / sphere.wepsilon_sphere(c, s, eps).norm_sq())
    out = np.array(out)
    return float(out[0]) if np.ndim(samples) == 1 else out


# fit-then-freeze equivalence constants

REGRESSION_TOL = 0.10
BASELINE_ENV = "KINOPS_BASELINES"


def baseline_path() -> Path:
    env = os.environ.get(BASELINE_ENV)
    if env:
        return Path(env)
    return Path(str(resources.files("kinops"))) / "baselines.json"


def load_baselines(path=None) -> dict:
    p = Path(path) if path else baseline_path()
    if not p.exists():
        return {}
    return json.loads(p.read_text())


def freeze_baseline(test_id: str, ratios, grid: GridSpec | dict | None = None, path=None) -> dict:
    """Record sup/inf of ``ratios`` under ``test_id`` and rewrite the file."""
    r = np.asarray(list(ratios), dtype=float)
    r = r[np.isfinite(r)]
    if r.size == 0:
        raise ValueError(f"no finite ratios to freeze for {test_id}")
    if isinstance(grid, GridSpec):
        grid = {"n": grid.n, "extent": grid.extent}
    p = Path(path) if path else baseline_path()
    data = load_baselines(p)
    data[test_id] = {"ratio_sup": float(r.max()), "ratio_inf": float(r.min()), "grid": grid}
    p.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")
    return data[test_id]


@dataclass(frozen=True)
class BaselineCheck:
    test_id: str
    ok: bool
    frozen: dict | None
    observed_sup: float
    observed_inf: float
    reason: str = ""


def check_baseline(test_id: str, ratios, side: str = "both", tol: float = REGRESSION_TOL,
                   path=None) -> BaselineCheck:
    """Compare observed ratios with the frozen bracket.

    ``side="upper"`` allows sup to grow by at most ``tol``; ``"lower"`` allows inf
    to shrink by at most ``tol``; ``"both"`` checks both ends.
    """
    r = np.asarray(list(ratios), dtype=float)
    sup, inf = float(np.nanmax(r)), float(np.nanmin(r))
    frozen = load_baselines(path).get(test_id)
    if frozen is None:
        return BaselineCheck(test_id, False, None, sup, inf, "no frozen baseline")
    reasons = []
    if side in ("upper", "both") and sup > frozen["ratio_sup"] * (1 + tol):
        reasons.append(f"sup {sup:.6g} > {frozen['ratio_sup']:.6g} * {1 + tol}")
    if side in ("lower", "both") and inf < frozen["ratio_inf"] / (1 + tol):
        reasons.append(f"inf {inf:.6g} < {frozen['ratio_inf']:.6g} / {1 + tol}")
    return BaselineCheck(test_id, not reasons, frozen, sup, inf, "; ".join(reasons))
