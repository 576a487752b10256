"""Frozen test-function families on a velocity grid."""

import numpy as np

from ..field import GridSpec, VelocityField

_NORM = (2.0 * np.pi) ** -1.5


def _gauss(center=(0.0, 0.0, 0.0), var=(1.0, 1.0, 1.0)):
    c = np.asarray(center, dtype=float)
    v = np.asarray(var, dtype=float)
    scale = _NORM / np.sqrt(np.prod(v))

    def fn(x, y, z):
        q = (x - c[0]) ** 2 / v[0] + (y - c[1]) ** 2 / v[1] + (z - c[2]) ** 2 / v[2]
        return scale * np.exp(-0.5 * q)

    return fn


def _times(poly, base):
    return lambda x, y, z: poly(x, y, z) * base(x, y, z)


def _mix(*parts):
    return lambda x, y, z: sum(w * p(x, y, z) for w, p in parts)


_MU = _gauss()

# id -> (builder, positive)
STANDARD = {
    "mu": (_MU, True),
    "mu_e1": (_gauss((1.0, 0.0, 0.0)), True),
    "mu_2e3": (_gauss((0.0, 0.0, 2.0)), True),
    "aniso_112": (_gauss(var=(0.6, 0.6, 1.2)), True),
    "aniso_124": (_gauss(var=(0.4, 0.8, 1.6)), True),
    "v1_mu": (_times(lambda x, y, z: x, _MU), False),
    "v2_mu": (_times(lambda x, y, z: y, _MU), False),
    "v3_mu": (_times(lambda x, y, z: z, _MU), False),
    "v1v2_mu": (_times(lambda x, y, z: x * y, _MU), False),
    "bimodal_sym": (_mix((0.5, _gauss((1.0, 0, 0))), (0.5, _gauss((-1.0, 0, 0)))), True),
    "bimodal_skew": (_mix((0.6, _gauss((1.0, 0, 0))), (0.4, _gauss((-0.5, 1.0, 0), (0.8, 0.8, 0.8)))), True),
    "bimodal_core": (_mix((0.5, _MU), (0.5, _gauss((0, 0, 1.5), (0.7, 0.7, 0.7)))), True),
}

FAMILIES = {"standard": STANDARD}


def family_ids(name: str = "standard") -> tuple:
    return tuple(_family(name))


def positive_ids(name: str = "standard") -> tuple:
    return tuple(k for k, (_, pos) in _family(name).items() if pos)


def _family(name):
    try:
        return FAMILIES[name]
    except KeyError:
        raise ValueError(f"unknown test family {name!r}") from None


def build_member(grid: GridSpec, member: str, family: str = "standard") -> VelocityField:
    fam = _family(family)
    if member not in fam:
        raise ValueError(f"{member!r} is not in family {family!r}")
    return VelocityField.from_function(grid, fam[member][0])


def build_family(grid: GridSpec, family: str = "standard", members=None) -> dict:
    ids = family_ids(family) if members is None else tuple(members)
    return {m: build_member(grid, m, family) for m in ids}


def pick_triples(ids, count: int, seed: int) -> list:
    """``count`` distinct (g, h, f) id triples drawn reproducibly."""
    rng = np.random.default_rng(seed)
    ids = list(ids)
    seen, out = set(), []
    while len(out) < count:
        t = tuple(ids[i] for i in rng.choice(len(ids), size=3, replace=True))
        if t not in seen:
            seen.add(t)
            out.append(t)
    return out
