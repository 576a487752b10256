"""Experiment configuration, JSON loading and constraint validation."""

import json
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from ..boltzmann import CollisionQuadConfig
from ..field import GridSpec
from ..kernels import KernelSpec
from .families import family_ids, positive_ids

EXPERIMENTS = (
    "upper_bound_boltzmann",
    "upper_bound_aniso",
    "lower_bound",
    "entropy",
    "grazing",
    "refinement",
)

_TOL = 1e-9


class ConstraintError(ValueError):
    """A theorem's parameter constraint is violated; ``constraint`` names it."""

    def __init__(self, constraint: str, detail: str):
        super().__init__(f"{constraint}: {detail}")
        self.constraint = constraint


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    kernel: KernelSpec = KernelSpec()
    grid: GridSpec = GridSpec(24, 6.0)
    quad: CollisionQuadConfig = CollisionQuadConfig(symmetric=False)
    family: str = "standard"
    members: tuple | None = None
    triples: tuple | None = None
    gammas: tuple = (0.0,)
    ab: tuple | None = None
    weights: dict | None = None
    sub: tuple | None = None
    eps: tuple = (0.4, 0.2, 0.1, 0.05)
    eta: tuple = (0.1, 0.01)
    operator: str = "boltzmann"
    delta: float = 0.5
    lambda_bound: float = 10.0
    c_lower: float = 1.0
    sphere_nodes: tuple = (24, 48)
    l_max: int = 16
    seed: int = 0
    output: str | None = None
    extra: dict = field(default_factory=dict)

    @property
    def s(self) -> float:
        return self.kernel.s

    def with_(self, **kw) -> "ExperimentConfig":
        return replace(self, **kw)

    # exponent bookkeeping ------------------------------------------------

    def derivative_pairs(self) -> tuple:
        """(a, b) with a + b = 2s (Landau: a + b = 2)."""
        total = self._order_total()
        if self.ab is not None:
            return tuple(tuple(map(float, p)) for p in self.ab)
        return ((total / 2, total / 2), (total, 0.0), (0.0, total))

    def sub_pairs(self) -> tuple:
        if self.sub is not None:
            return tuple(tuple(map(float, p)) for p in self.sub)
        return ((self.s / 2, self.s / 2),)

    def weight_pairs(self, gamma: float) -> tuple:
        total = self._weight_total(gamma)
        if self.weights is not None:
            w = self.weights
            if isinstance(w, dict):
                key = _gamma_key(w, gamma)
                pairs = w[key]
            else:
                pairs = w
            return tuple(tuple(map(float, p)) for p in pairs)
        return ((total / 2, total / 2), (total, 0.0), (0.0, total))

    def _order_total(self) -> float:
        return 2.0 if self.operator == "landau" else 2.0 * self.s

    def _weight_total(self, gamma: float) -> float:
        if self.experiment == "upper_bound_aniso":
            return gamma + self.s
        if self.operator == "landau":
            return gamma + 2.0
        return gamma + 2.0 * self.s

    # validation ----------------------------------------------------------

    def validate(self) -> "ExperimentConfig":
        if self.experiment not in EXPERIMENTS:
            raise KeyError(self.experiment)
        s = self.s
        if not 0 < s < 1:
            raise ConstraintError("s-range", f"s={s} must lie in (0, 1)")
        if self.operator not in ("boltzmann", "landau"):
            raise ConstraintError("operator", f"unknown operator {self.operator!r}")
        for g in self.gammas:
            if self.operator == "landau":
                if not -3 < g <= 1:
                    raise ConstraintError("gamma-range", f"Landau needs gamma in (-3, 1], got {g}")
            elif not (g + 2 * s > -1 and g <= 2):
                raise ConstraintError("gamma-range", f"need gamma + 2s > -1 and gamma <= 2, got gamma={g}")
        total = self._order_total()
        for a, b in self.derivative_pairs():
            if abs(a + b - total) > _TOL:
                name = "a+b=2" if self.operator == "landau" else "a+b=2s"
                raise ConstraintError(name, f"a={a}, b={b}, a+b={a + b} but must equal {total}")
            if not (-_TOL <= a <= total + _TOL and -_TOL <= b <= total + _TOL):
                raise ConstraintError("a,b range", f"a={a}, b={b} must lie in [0, {total}]")
        if self.experiment == "upper_bound_aniso":
            for a1, b1 in self.sub_pairs():
                if abs(a1 + b1 - s) > _TOL:
                    raise ConstraintError("a1+b1=s", f"a1={a1}, b1={b1}, sum {a1 + b1} but must equal {s}")
        if self.experiment in ("upper_bound_boltzmann", "upper_bound_aniso"):
            for g in self.gammas:
                want = self._weight_total(g)
                label = "w1+w2=gamma+s" if self.experiment == "upper_bound_aniso" else "w1+w2=gamma+2s"
                for w1, w2 in self.weight_pairs(g):
                    if abs(w1 + w2 - want) > _TOL:
                        raise ConstraintError(label, f"gamma={g}: w1={w1}, w2={w2}, sum {w1 + w2} but must equal {want}")
        if any(e <= 0 for e in self.eps):
            raise ConstraintError("eps-range", "eps values must be positive")
        if self.experiment == "grazing" and len(self.eps) < 3:
            raise ConstraintError("eps-count", "need at least three eps values for a slope")
        if any(not 0 < e < 1 for e in self.eta):
            raise ConstraintError("eta-range", "eta must lie in (0, 1)")
        if self.delta <= 0 or self.lambda_bound <= 0:
            raise ConstraintError("lbc", "delta and lambda must be positive")
        known = set(family_ids(self.family))
        for m in self.members or ():
            if m not in known:
                raise ConstraintError("family", f"unknown member {m!r}")
        for t in self.triples or ():
            if len(t) != 3 or any(m not in known for m in t):
                raise ConstraintError("family", f"bad triple {t!r}")
        if self.experiment == "entropy":
            bad = [m for m in self.members or () if m not in positive_ids(self.family)]
            if bad:
                raise ConstraintError("positivity", f"entropy needs positive members, got {bad}")
        return self

    # serialization -------------------------------------------------------

    def to_dict(self) -> dict:
        d = asdict(self)
        d["kernel"] = asdict(self.kernel)
        d["grid"] = {"n": self.grid.n, "extent": self.grid.extent}
        d["quad"] = asdict(self.quad)
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, data: dict, experiment: str | None = None) -> "ExperimentConfig":
        d = dict(data)
        exp = experiment or d.pop("experiment", None)
        d.pop("experiment", None)
        if exp is None:
            raise ValueError("config needs an experiment id")
        base = default_config(exp) if exp in EXPERIMENTS else cls(exp)
        kw = {}
        if "kernel" in d:
            try:
                kw["kernel"] = KernelSpec.from_json(d.pop("kernel"))
            except ValueError as exc:
                raise ConstraintError("kernel", str(exc)) from exc
        if "grid" in d:
            kw["grid"] = GridSpec(**d.pop("grid"))
        for key in ("quad", "quadrature"):
            if key in d:
                kw["quad"] = base.quad.with_(**d.pop(key))
        for key in ("members", "gammas", "eps", "eta", "sphere_nodes"):
            if key in d and d[key] is not None:
                kw[key] = tuple(d.pop(key))
        for key in ("triples", "ab", "sub"):
            if key in d and d[key] is not None:
                kw[key] = tuple(tuple(x) for x in d.pop(key))
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown config keys {sorted(unknown)}")
        kw.update(d)
        return replace(base, experiment=exp, **kw)

    @classmethod
    def from_json(cls, text: str, experiment: str | None = None) -> "ExperimentConfig":
        return cls.from_dict(json.loads(text), experiment)


def _gamma_key(mapping: dict, gamma: float):
    for k in mapping:
        if np.isclose(float(k), gamma):
            return k
    raise ConstraintError("weights", f"no (w1, w2) list given for gamma={gamma}")


def default_config(experiment: str) -> ExperimentConfig:
    """Desk-scale defaults sized for a single core."""
    if experiment not in EXPERIMENTS:
        raise KeyError(experiment)
    base = ExperimentConfig(experiment)
    if experiment == "upper_bound_boltzmann":
        return base.with_(gammas=(0.0, 1.0), triples=(
            ("mu", "mu", "mu"), ("mu", "mu", "v1_mu"),
            ("mu", "mu_e1", "v1_mu"), ("mu", "mu_e1", "aniso_112"),
            ("aniso_112", "bimodal_sym", "v3_mu"), ("aniso_112", "bimodal_sym", "mu_2e3"),
            ("bimodal_skew", "v1_mu", "v2_mu"), ("bimodal_skew", "v1_mu", "bimodal_core"),
        ))
    if experiment == "upper_bound_aniso":
        return base.with_(gammas=(0.0,), triples=(
            ("mu", "mu", "mu"), ("mu", "mu_e1", "v1_mu"), ("mu", "mu_e1", "v1v2_mu"),
            ("aniso_112", "bimodal_sym", "v3_mu"), ("aniso_112", "bimodal_sym", "aniso_124"),
        ))
    if experiment == "lower_bound":
        return base.with_(members=("mu", "mu_e1", "aniso_112", "v1_mu", "v3_mu", "v1v2_mu", "bimodal_skew"))
    if experiment == "entropy":
        return base.with_(members=("mu", "mu_e1", "aniso_112", "bimodal_sym", "bimodal_skew"))
    if experiment == "grazing":
        return base.with_(
            quad=CollisionQuadConfig(n_sigma_theta=12, n_sigma_phi=12, symmetric=False, stagger=True),
            triples=(("mu", "mu_e1", "v1_mu"), ("mu", "mu_e1", "aniso_112"),
                     ("mu", "mu_e1", "bimodal_skew"), ("mu", "mu_e1", "mu_2e3")),
            sphere_nodes=(48, 96), l_max=12)
    return base.with_(members=("mu_e1", "v1_mu", "bimodal_skew"))
