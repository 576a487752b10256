"""Collision kernels, post-collision geometry and the Landau diffusion matrix.

The angular factor is stored through its theta-density sin(theta) b(cos theta),
which is what every quadrature actually integrates against d(theta) d(phi).
"""

import json
from dataclasses import asdict, dataclass

import numpy as np
from scipy.special import roots_legendre

from ._cutoff import INNER, OUTER, psi_radial

VARIANTS = ("standard", "cutoff", "grazing")


@dataclass(frozen=True)
class KernelSpec:
    gamma: float = 0.0
    s: float = 0.5
    k_const: float = 1.0
    variant: str = "standard"
    eps: float | None = None
    theta_min: float = 0.05

    def __post_init__(self):
        v = self.variant.lower()
        object.__setattr__(self, "variant", v)
        if v not in VARIANTS:
            raise ValueError(f"unknown kernel variant {self.variant!r}")
        if not 0 < self.s < 1:
            raise ValueError("angular exponent s must lie in (0, 1)")
        if not self.k_const > 0:
            raise ValueError("kernel constant must be positive")
        if not 0 < self.theta_min < np.pi / 4:
            raise ValueError("theta_min must lie in (0, pi/4)")
        if v == "grazing":
            if not -3 <= self.gamma <= 1:
                raise ValueError("grazing kernels need gamma in [-3, 1]")
        elif not (self.gamma + 2 * self.s > -1 and self.gamma <= 2):
            raise ValueError("need gamma + 2s > -1 and gamma <= 2")
        if v != "standard" and not (self.eps is not None and self.eps > 0):
            raise ValueError(f"{v} kernel needs eps > 0")

    def to_json(self) -> str:
        return json.dumps(asdict(self))

    @classmethod
    def from_json(cls, text) -> "KernelSpec":
        data = json.loads(text) if isinstance(text, str) else dict(text)
        return cls(**data)

    def with_(self, **kw) -> "KernelSpec":
        d = asdict(self)
        d.update(kw)
        return KernelSpec(**d)


def post_collision(v, v_star, sigma):
    v = np.asarray(v, dtype=float)
    v_star = np.asarray(v_star, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    mid = 0.5 * (v + v_star)
    half = 0.5 * np.linalg.norm(v - v_star, axis=-1)[..., None] * sigma
    return mid + half, mid - half


def angular_density(spec: KernelSpec, theta):
    """sin(theta) * b(cos theta) on the symmetrized support [0, pi/2]."""
    th = np.asarray(theta, dtype=float)
    out = np.zeros_like(th)
    inside = (th > 0) & (th <= np.pi / 2 + 1e-15)
    t = th[inside]
    s = spec.s
    if spec.variant == "grazing":
        cut = psi_radial(np.sin(t / 2) / spec.eps)
        out[inside] = spec.k_const * spec.eps ** (2 * s - 2) * cut * t ** (-1 - 2 * s)
    else:
        val = spec.k_const * t ** (-1 - 2 * s) * (t >= spec.theta_min)
        if spec.variant == "cutoff":
            val = val * (1.0 - psi_radial(np.sin(t / 2) / spec.eps))
        out[inside] = val
    return out


def angular_b(spec: KernelSpec, cos_theta):
    """b(cos theta); zero for cos theta < 0 (outside the symmetrized support)."""
    c = np.asarray(cos_theta, dtype=float)
    th = np.arccos(np.clip(c, -1.0, 1.0))
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(c >= 0, angular_density(spec, th) / np.sin(th), 0.0)
    if spec.variant == "grazing":
        out = np.where(th == 0, np.inf, out)
    else:
        out = np.where(th == 0, 0.0, out)
    return out if out.ndim else float(out)


def kinetic_factor(spec: KernelSpec, r, r_floor: float | None = None):
    r = np.asarray(r, dtype=float)
    if spec.gamma < 0:
        if r_floor is None:
            raise ValueError("gamma < 0 needs r_floor (one grid spacing)")
        r = np.maximum(r, r_floor)
    out = r ** spec.gamma
    return out if out.ndim else float(out)


def landau_matrix(gamma: float, lam: float, v):
    v = np.asarray(v, dtype=float)
    r2 = np.sum(v * v, axis=-1)
    zero = r2 == 0
    if np.any(zero) and gamma + 2 <= 0:
        raise ValueError("Landau matrix is singular at the origin for gamma <= -2; use an r_floor")
    safe = np.where(zero, 1.0, r2)
    proj = np.eye(3) - v[..., :, None] * v[..., None, :] / safe[..., None, None]
    scale = lam * np.where(zero, 0.0, safe ** ((gamma + 2) / 2))
    return proj * scale[..., None, None]


def _adaptive_simpson(f, a, b, tol, depth=50):
    def simpson(fa, fm, fb, a, b):
        return (b - a) / 6.0 * (fa + 4 * fm + fb)

    def rec(a, b, fa, fm, fb, whole, tol, depth):
        m = 0.5 * (a + b)
        lm, rm = 0.5 * (a + m), 0.5 * (m + b)
        flm, frm = f(lm), f(rm)
        left = simpson(fa, flm, fm, a, m)
        right = simpson(fm, frm, fb, m, b)
        if depth <= 0 or abs(left + right - whole) <= 15 * tol:
            return left + right + (left + right - whole) / 15.0
        return rec(a, m, fa, flm, fm, left, tol / 2, depth - 1) + rec(m, b, fm, frm, fb, right, tol / 2, depth - 1)

    fa, fb, fm = f(a), f(b), f(0.5 * (a + b))
    return rec(a, b, fa, fm, fb, simpson(fa, fm, fb, a, b), tol, depth)


def _gauss(f, a, b, panels=64, order=20):
    x, w = roots_legendre(order)
    edges = np.linspace(a, b, panels + 1)
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        t = 0.5 * (hi - lo) * x + 0.5 * (hi + lo)
        total += 0.5 * (hi - lo) * np.dot(w, f(t))
    return float(total)


def psi_moment(s: float, method: str = "gauss") -> float:
    """int_0^inf psi(t) t^(1-2s) dt; psi = 1 below 3/4, so that piece is closed form."""
    if not 0 < s < 1:
        raise ValueError("need 0 < s < 1")
    p = 2.0 - 2.0 * s
    flat = INNER ** p / p
    g = lambda t: psi_radial(t) * np.asarray(t, dtype=float) ** (1 - 2 * s)
    if method == "gauss":
        smooth = _gauss(g, INNER, OUTER)
    elif method == "simpson":
        smooth = _adaptive_simpson(lambda t: float(g(np.array(t))), INNER, OUTER, 1e-13)
    else:
        raise ValueError(f"unknown quadrature {method!r}")
    return flat + smooth


def lambda_constant(k_prime: float, s: float, form: str = "kernel", method: str = "gauss") -> float:
    """Landau constant matched to the grazing kernel built from the same psi.

    ``kernel``: (pi/8) lim int b^eps sin(theta) theta^2 d(theta), which for the
    cutoff psi(sin(theta/2)/eps) equals (pi/8) K' 2^(2-2s) int psi(t) t^(1-2s) dt.
    ``literal``: (pi/8) K' int_0^(pi/2) psi(theta) theta^(1-2s) d(theta), i.e. the
    same expression without the 2^(2-2s) rescaling.
    """
    base = np.pi / 8.0 * k_prime * psi_moment(s, method)
    if form == "literal":
        return base
    if form == "kernel":
        return base * 2.0 ** (2.0 - 2.0 * s)
    raise ValueError("form must be 'kernel' or 'literal'")


def second_moment(spec: KernelSpec, n: int = 400) -> float:
    """int_0^(pi/2) sin(theta) b(cos theta) theta^2 d(theta)."""
    rule = angular_rule(spec, n)
    return float(np.sum(rule.weights * rule.theta ** 2))


@dataclass(frozen=True)
class AngularRule:
    """Deflection nodes in the frame of the relative velocity.

    ``weights`` already include the theta-density; the azimuth is the uniform
    rule on ``n_phi`` points, weight 2 pi / n_phi each.
    """

    theta: np.ndarray
    weights: np.ndarray
    n_phi: int = 1

    @property
    def phi(self) -> np.ndarray:
        return 2.0 * np.pi * (np.arange(self.n_phi) + 0.5) / self.n_phi


def _support_panels(spec: KernelSpec):
    half_pi = np.pi / 2
    if spec.variant == "standard":
        return [(spec.theta_min, half_pi)]
    a = 2 * np.arcsin(min(1.0, INNER * spec.eps))
    b = 2 * np.arcsin(min(1.0, OUTER * spec.eps))
    if spec.variant == "grazing":
        panels = [(0.0, min(a, half_pi))]
        if a < half_pi:
            panels.append((a, min(b, half_pi)))
        return panels
    lo = max(spec.theta_min, a)
    panels = []
    if lo < min(b, half_pi):
        panels.append((lo, min(b, half_pi)))
    if b < half_pi:
        panels.append((max(b, spec.theta_min), half_pi))
    return panels


def angular_rule(spec: KernelSpec, n_theta: int, n_phi: int = 1) -> AngularRule:
    """Gauss-Legendre in y = theta^(2-2s) on each support panel.

    In that variable theta^(-1-2s) d(theta) becomes theta^(-2) dy / (2-2s), so an
    integrand vanishing like theta^2 (the cancellation in f' - f) is smooth.
    """
    p = 2.0 - 2.0 * spec.s
    panels = _support_panels(spec)
    per = max(2, int(np.ceil(n_theta / len(panels))))
    x, w = roots_legendre(per)
    thetas, weights = [], []
    for lo, hi in panels:
        ylo, yhi = lo ** p, hi ** p
        y = 0.5 * (yhi - ylo) * x + 0.5 * (yhi + ylo)
        wy = 0.5 * (yhi - ylo) * w
        th = y ** (1.0 / p)
        dtheta = th ** (1.0 - p) / p
        thetas.append(th)
        weights.append(wy * dtheta * angular_density(spec, th))
    return AngularRule(np.concatenate(thetas), np.concatenate(weights), n_phi)
