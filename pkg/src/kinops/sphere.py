"""Real spherical harmonics, product quadrature on S^2 and spectral operators.

Harmonics are orthonormal on the unit sphere.  Index layout for coefficient
vectors is ``l*l + l + m``.  Associated Legendre functions carry no
Condon-Shortley phase.
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import roots_legendre

from ._cutoff import psi_radial


def legendre_p(l: int, x):
    """Legendre polynomial P_l(x) by the three-term recurrence."""
    if l < 0:
        raise ValueError("degree must be non-negative")
    x = np.asarray(x, dtype=float)
    if np.any(np.abs(x) > 1.0 + 1e-14):
        raise ValueError("legendre_p: |x| > 1")
    p0 = np.ones_like(x)
    if l == 0:
        return p0 if p0.ndim else float(p0)
    p1 = x.copy()
    for k in range(2, l + 1):
        p0, p1 = p1, ((2 * k - 1) * x * p1 - (k - 1) * p0) / k
    return p1 if p1.ndim else float(p1)


def _normalized_alf(l_max: int, x: np.ndarray) -> np.ndarray:
    """Fully normalized associated Legendre values, shape (l_max+1, l_max+1, npts).

    Entry [l, m] equals sqrt((2l+1)/(4 pi) (l-m)!/(l+m)!) P_l^m(x) for m <= l.
    """
    x = np.asarray(x, dtype=float)
    sin_t = np.sqrt(np.clip(1.0 - x * x, 0.0, None))
    out = np.zeros((l_max + 1, l_max + 1, x.size))
    out[0, 0] = 1.0 / np.sqrt(4.0 * np.pi)
    for m in range(1, l_max + 1):
        out[m, m] = out[m - 1, m - 1] * np.sqrt((2.0 * m + 1.0) / (2.0 * m)) * sin_t
    for m in range(0, l_max):
        out[m + 1, m] = x * np.sqrt(2.0 * m + 3.0) * out[m, m]
    for m in range(0, l_max + 1):
        for l in range(m + 2, l_max + 1):
            a = np.sqrt((4.0 * l * l - 1.0) / (l * l - m * m))
            b = np.sqrt(((l - 1.0) ** 2 - m * m) / (4.0 * (l - 1.0) ** 2 - 1.0))
            out[l, m] = a * (x * out[l - 1, m] - b * out[l - 2, m])
    return out


def _angles(sigma: np.ndarray):
    sigma = np.asarray(sigma, dtype=float).reshape(-1, 3)
    norms = np.linalg.norm(sigma, axis=1)
    if np.any(np.abs(norms - 1.0) > 1e-10):
        raise ValueError("directions must be unit vectors")
    cos_t = np.clip(sigma[:, 2], -1.0, 1.0)
    phi = np.arctan2(sigma[:, 1], sigma[:, 0])
    return cos_t, phi


def sph_harm_matrix(l_max: int, sigma) -> np.ndarray:
    """All real harmonics up to l_max at the given directions, shape (npts, (l_max+1)^2)."""
    cos_t, phi = _angles(sigma)
    alf = _normalized_alf(l_max, cos_t)
    out = np.empty((cos_t.size, (l_max + 1) ** 2))
    root2 = np.sqrt(2.0)
    for l in range(l_max + 1):
        base = l * l + l
        out[:, base] = alf[l, 0]
        for m in range(1, l + 1):
            out[:, base + m] = root2 * alf[l, m] * np.cos(m * phi)
            out[:, base - m] = root2 * alf[l, m] * np.sin(m * phi)
    return out


def real_sph_harm(l: int, m: int, sigma):
    if l < 0 or abs(m) > l:
        raise ValueError(f"invalid degree/order pair (l={l}, m={m})")
    vals = sph_harm_matrix(l, sigma)[:, l * l + l + m]
    return float(vals[0]) if np.ndim(sigma) == 1 else vals


@dataclass(frozen=True)
class SphereQuadrature:
    nodes: np.ndarray
    weights: np.ndarray
    n_theta: int
    n_phi: int

    @property
    def l_max(self) -> int:
        """Largest degree for which analyze is exact."""
        return min(self.n_theta - 1, self.n_phi // 2 - 1)

    @property
    def degree_exact(self) -> int:
        """Largest harmonic degree integrated exactly on its own."""
        return min(2 * self.n_theta - 1, self.n_phi - 1)

    def integrate(self, samples) -> float:
        return float(np.dot(self.weights, np.asarray(samples, dtype=float)))


def build_quadrature(n_theta: int, n_phi: int) -> SphereQuadrature:
    """Gauss-Legendre in cos(theta) times the uniform rule in phi."""
    if n_theta < 2 or n_phi < 4:
        raise ValueError("need n_theta >= 2 and n_phi >= 4")
    x, wx = roots_legendre(n_theta)
    phi = 2.0 * np.pi * np.arange(n_phi) / n_phi
    st = np.sqrt(1.0 - x * x)
    nodes = np.stack(
        [
            np.outer(st, np.cos(phi)).ravel(),
            np.outer(st, np.sin(phi)).ravel(),
            np.repeat(x, n_phi),
        ],
        axis=1,
    )
    nodes /= np.linalg.norm(nodes, axis=1, keepdims=True)
    weights = np.repeat(wx, n_phi) * (2.0 * np.pi / n_phi)
    return SphereQuadrature(nodes, weights, n_theta, n_phi)


@dataclass(frozen=True)
class HarmonicCoeffs:
    l_max: int
    coeffs: np.ndarray

    def __post_init__(self):
        if self.coeffs.shape[-1] != (self.l_max + 1) ** 2:
            raise ValueError("coefficient vector does not match l_max")

    def get(self, l: int, m: int) -> float:
        return float(self.coeffs[..., l * l + l + m])

    def degrees(self) -> np.ndarray:
        return degree_index(self.l_max)

    def norm_sq(self) -> float:
        return float(np.sum(self.coeffs ** 2))

    def scaled(self, mult: np.ndarray) -> "HarmonicCoeffs":
        return HarmonicCoeffs(self.l_max, self.coeffs * mult)


def degree_index(l_max: int) -> np.ndarray:
    return np.concatenate([np.full(2 * l + 1, l) for l in range(l_max + 1)])


def analyze(samples, quad: SphereQuadrature, l_max: int) -> HarmonicCoeffs:
    if l_max > quad.l_max:
        raise ValueError(
            f"l_max={l_max} exceeds the exactness band l<={quad.l_max} of "
            f"the ({quad.n_theta}, {quad.n_phi}) rule"
        )
    y = sph_harm_matrix(l_max, quad.nodes)
    vals = np.asarray(samples, dtype=float)
    # trailing axis runs over nodes so several shells can be analyzed at once
    return HarmonicCoeffs(l_max, (vals * quad.weights) @ y)


def synthesize(coeffs: HarmonicCoeffs, nodes) -> np.ndarray:
    return coeffs.coeffs @ sph_harm_matrix(coeffs.l_max, nodes).T


def lb_symbol(l_max: int, s: float, shifted: bool = False) -> np.ndarray:
    lam = degree_index(l_max).astype(float)
    lam = lam * (lam + 1.0)
    if shifted:
        lam = lam + 1.0
    if s == 0:
        return np.ones_like(lam)
    return lam ** (s / 2.0)


def frac_laplace_beltrami(coeffs: HarmonicCoeffs, s: float, shifted: bool = False) -> HarmonicCoeffs:
    return coeffs.scaled(lb_symbol(coeffs.l_max, s, shifted))


def project_band(coeffs: HarmonicCoeffs, eps: float, side: str = "low") -> HarmonicCoeffs:
    if eps <= 0:
        raise ValueError("eps must be positive")
    l = degree_index(coeffs.l_max).astype(float)
    low = np.sqrt(l * (l + 1.0)) <= 1.0 / eps
    if side == "low":
        keep = low
    elif side == "high":
        keep = ~low
    else:
        raise ValueError("side must be 'low' or 'high'")
    return coeffs.scaled(keep.astype(float))


def wepsilon_symbol(x, s: float, eps: float):
    x = np.asarray(x, dtype=float)
    bracket = np.sqrt(1.0 + x * x)
    cut = psi_radial(eps * x)
    return cut * bracket + eps ** (s - 1.0) * (1.0 - cut) * bracket ** s


def wepsilon_sphere(coeffs: HarmonicCoeffs, s: float, eps: float) -> HarmonicCoeffs:
    if not 0 < s < 1 or eps <= 0:
        raise ValueError("need 0 < s < 1 and eps > 0")
    l = degree_index(coeffs.l_max).astype(float)
    return coeffs.scaled(wepsilon_symbol(np.sqrt(l * (l + 1.0)), s, eps))


def sharp_band_norm_sq(coeffs: HarmonicCoeffs, s: float, eps: float) -> float:
    """||f||^2 + ||((-Lap)^(1/2) P_low + eps^(s-1) (-Lap)^(s/2) P_high) f||^2 with sharp band projectors."""
    low = frac_laplace_beltrami(project_band(coeffs, eps, "low"), 1.0)
    high = frac_laplace_beltrami(project_band(coeffs, eps, "high"), s)
    return coeffs.norm_sq() + float(np.sum((low.coeffs + eps ** (s - 1.0) * high.coeffs) ** 2))


def exclusion_radius(quad: SphereQuadrature) -> float:
    """Half the smallest distance between two distinct nodes."""
    d = _pair_distances(quad.nodes)
    np.fill_diagonal(d, np.inf)
    return 0.5 * float(d.min())


def _pair_distances(nodes):
    g = np.clip(nodes @ nodes.T, -1.0, 1.0)
    return np.sqrt(np.clip(2.0 - 2.0 * g, 0.0, None))


def gagliardo_seminorm(samples, quad: SphereQuadrature, s: float, cutoff: float | None = None):
    """Double quadrature of |f(sigma)-f(tau)|^2 / |sigma-tau|^(2+2s).

    ``samples`` of shape (N,) gives a float; shape (k, N) gives one value per row
    with the kernel matrix built once.
    """
    if not 0 < s < 1:
        raise ValueError("need 0 < s < 1")
    f = np.asarray(samples, dtype=float)
    d = _pair_distances(quad.nodes)
    h_min = exclusion_radius(quad)
    keep = d >= h_min
    if cutoff is not None:
        keep &= d <= cutoff
    with np.errstate(divide="ignore", invalid="ignore"):
        kern = np.where(keep, 1.0 / np.where(keep, d, 1.0) ** (2.0 + 2.0 * s), 0.0)
    kern *= quad.weights[:, None] * quad.weights[None, :]
    rows = np.atleast_2d(f)
    out = np.array([np.sum(kern * (r[:, None] - r[None, :]) ** 2) for r in rows])
    return float(out[0]) if f.ndim == 1 else out


def rotation_field_apply(field, i: int, j: int, method: str = "centered"):
    """Apply the rotation field (v_i d_j - v_j d_i) to a VelocityField.

    ``centered`` uses second-order differences (one-sided on the boundary
    layer, recorded in the output metadata); ``spectral`` differentiates with
    the FFT and suits fields that vanish at the box edge.
    """
    from .field import gradient

    if i == j or not (0 <= i < 3 and 0 <= j < 3):
        raise ValueError("need two distinct axes in 0..2")
    grad = gradient(field, method=method)
    coords = field.spec.coords()
    vals = coords[i] * grad[j] - coords[j] * grad[i]
    meta = {"stencil": method, "one_sided_boundary": method == "centered"}
    return field.with_values(vals, meta=meta)
