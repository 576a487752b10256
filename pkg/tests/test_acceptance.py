"""The twelve acceptance criteria, each at its stated tolerance and time budget.

Every test records one line that is printed in the terminal summary.
"""

import time

import numpy as np
import pytest

from kinops import boltzmann, landau, norms, sphere
from kinops.boltzmann import CollisionQuadConfig
from kinops.field import GridSpec, maxwellian
from kinops.harness import default_config, run_experiment
from kinops.harness.experiments import dyadic_ratios, lbplim_ratios, sphere_equivalence_ratios
from kinops.harness.families import build_member
from kinops.kernels import KernelSpec, lambda_constant

from conftest import random_directions

G24 = GridSpec(24, 6.0)
SAMPLES = ("mu_e1", "aniso_112", "bimodal_sym", "bimodal_skew", "bimodal_core")
# four deflection angles by six azimuths keep ten conservation runs inside five minutes
CONSERVE_QUAD = CollisionQuadConfig(n_sigma_theta=4, n_sigma_phi=6, stride=2)


def _timed(fn):
    t = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - t


def _checks_ok(rep):
    return rep.checks and all(c["ok"] for c in rep.checks.values())


def test_criterion_01_spectral_exactness(criterion):
    def run():
        quad = sphere.build_quadrature(17, 36)
        y = sphere.sph_harm_matrix(16, quad.nodes)
        lam = sphere.lb_symbol(16, 1.0) ** 2
        worst = 0.0
        for s in (0.25, 0.5, 1.0):
            c = sphere.analyze(y.T, quad, 16)  # row k holds the coefficients of harmonic k
            out = sphere.frac_laplace_beltrami(c, s).coeffs
            want = np.diag(lam ** (s / 2))
            worst = max(worst, float(np.abs(out - want).max()))
        return worst

    worst, dt = _timed(run)
    ok = criterion(1, "spectral exactness", worst <= 1e-12 and dt < 1.0, f"max err {worst:.2e}, {dt:.2f}s")
    assert ok


def test_criterion_02_addition_theorem(criterion):
    def run():
        rng = np.random.default_rng(7)
        a, b = random_directions(rng, 100), random_directions(rng, 100)
        ya, yb = sphere.sph_harm_matrix(16, a), sphere.sph_harm_matrix(16, b)
        cos = np.clip(np.sum(a * b, axis=1), -1, 1)
        worst = 0.0
        for l in range(17):
            sl = slice(l * l, (l + 1) ** 2)
            lhs = np.sum(ya[:, sl] * yb[:, sl], axis=1)
            rhs = (2 * l + 1) / (4 * np.pi) * sphere.legendre_p(l, cos)
            worst = max(worst, float(np.abs(lhs - rhs).max()))
        return worst

    worst, dt = _timed(run)
    ok = criterion(2, "addition theorem", worst <= 1e-10 and dt < 1.0, f"max err {worst:.2e}, {dt:.2f}s")
    assert ok


def _invariants(grid):
    x, y, z = grid.coords()
    one = np.ones_like(x)
    return [one, x, y, z, x * x + y * y + z * z]


@pytest.mark.slow
def test_criterion_03_conservation(criterion):
    phis = _invariants(G24)
    fields = [build_member(G24, m) for m in SAMPLES]

    def boltz():
        worst = 0.0
        for gamma in (0.0, 1.0):
            k = KernelSpec(gamma=gamma, s=0.5)
            for f in fields:
                vals = boltzmann.qform_direct_multi(f, f, [f.with_values(p) for p in phis], k, CONSERVE_QUAD)
                scale = max(1.0, norms.lp_norm(f, 1) ** 2)
                worst = max(worst, float(np.abs(vals).max() / scale))
        return worst

    def land():
        worst = 0.0
        lam = lambda_constant(1.0, 0.5)
        for gamma in (0.0, 1.0):
            for f in fields:
                scale = max(1.0, norms.lp_norm(f, 1) ** 2)
                for p in phis:
                    worst = max(worst, abs(landau.qlform_weak(f, f, f.with_values(p), gamma, lam)) / scale)
        return worst

    wb, tb = _timed(boltz)
    wl, tl = _timed(land)
    ok = wb <= 1e-4 and wl <= 1e-4 and tb <= 300 and tl <= 300
    criterion(3, "conservation", ok, f"Boltzmann {wb:.1e} in {tb:.0f}s, Landau {wl:.1e} in {tl:.0f}s")
    assert ok


@pytest.mark.slow
def test_criterion_04_h_theorem(criterion):
    k = KernelSpec(s=0.5)
    lam = lambda_constant(1.0, 0.5)
    fields = {m: build_member(G24, m) for m in ("mu", "bimodal_sym", "aniso_112")}

    def run():
        out = {}
        for name, f in fields.items():
            out[name] = (boltzmann.entropy_dissipation_boltzmann(f, k),
                         landau.entropy_dissipation_landau(f, 0.0, lam))
        return out

    vals, dt = _timed(run)
    mu = fields["mu"]
    scale_b = boltzmann.entropy_scale(mu, k)
    scale_l = lam * norms.lp_norm(mu, 1) ** 2
    min_b = min(v[0] for v in vals.values())
    min_l = min(v[1] for v in vals.values())
    eq_b = abs(vals["mu"][0]) / scale_b
    eq_l = abs(vals["mu"][1]) / scale_l
    ok = min_b >= -1e-10 and min_l >= -1e-10 and eq_b <= 1e-6 and eq_l <= 1e-6 and dt <= 300
    criterion(4, "H-theorem", ok, f"min D_B {min_b:.2e}, min D_L {min_l:.2e}, "
                                  f"at mu {eq_b:.1e}/{eq_l:.1e} relative, {dt:.0f}s")
    assert ok


@pytest.mark.slow
def test_criterion_05_bobylev_cross_check(criterion):
    grid = GridSpec(32, 6.0)
    k = KernelSpec(gamma=0.0, s=0.5)
    cfg = CollisionQuadConfig(stride=4)
    mu = maxwellian(grid)

    def run():
        out = []
        for m in ("v1_mu", "mu_e1", "aniso_112", "bimodal_skew"):
            f = build_member(grid, m)
            four = boltzmann.bobylev_qform_maxwellian(mu, f, k, cfg)
            phys = boltzmann.qform_split(mu, f, k, cfg)[0]
            out.append(abs(four - phys) / abs(phys))
        return max(out)

    worst, dt = _timed(run)
    ok = worst <= 0.05 and dt <= 300
    criterion(5, "Bobylev vs physical dissipation", ok, f"max rel diff {worst:.2%}, {dt:.0f}s")
    assert ok


def test_criterion_06_sphere_equivalence(criterion):
    rows, dt = _timed(sphere_equivalence_ratios)
    ratios = [r for *_, r in rows]
    chk = norms.check_baseline("sphere/equivalence", ratios, "both")
    width = max(ratios) / min(ratios)
    ok = chk.ok and width <= 50 and dt <= 120
    criterion(6, "Gagliardo vs spectral on S2", ok,
              f"bracket [{min(ratios):.3g}, {max(ratios):.3g}], width {width:.2f}, {dt:.0f}s {chk.reason}")
    assert ok


def test_criterion_07_dyadic_profile(criterion):
    rows, dt = _timed(dyadic_ratios)
    ratios = [r[3] for r in rows]
    chk = norms.check_baseline("dyadic/profile", ratios, "both")
    members = {r[0] for r in rows}
    ok = chk.ok and len(members) == 12 and dt <= 120
    criterion(7, "dyadic profile", ok,
              f"{len(ratios)} ratios in [{min(ratios):.3g}, {max(ratios):.3g}], {dt:.1f}s {chk.reason}")
    assert ok


@pytest.mark.slow
def test_criterion_08_upper_bound(criterion):
    rep, dt = _timed(lambda: run_experiment(default_config("upper_bound_boltzmann")))
    groups = {f"upper_bound_boltzmann/gamma={g:g}" for g in (0, 1)}
    ok = _checks_ok(rep) and groups <= set(rep.checks) and dt <= 600
    sups = ", ".join(f"{t.split('/')[-1]} sup {rep.fitted[t]['ratio_sup']:.3g}" for t in sorted(groups))
    criterion(8, "upper bound sup ratio", ok, f"{sups}, {dt:.0f}s")
    assert ok


@pytest.mark.slow
def test_criterion_09_coercivity(criterion):
    cfg = default_config("lower_bound")
    (rb, rl), dt = _timed(lambda: (run_experiment(cfg), run_experiment(cfg.with_(operator="landau"))))
    infs = {t: f["ratio_inf"] for rep in (rb, rl) for t, f in rep.fitted.items()}
    etas = {t.split("eta=")[-1] for t in infs}
    ok = (_checks_ok(rb) and _checks_ok(rl) and min(infs.values()) > 0 and etas == {"0.1", "0.01"}
          and len(rb.checks) == len(rb.fitted) and len(rl.checks) == len(rl.fitted) and dt <= 600)
    criterion(9, "coercivity", ok, f"min fitted constant {min(infs.values()):.3g} over {len(infs)} groups, {dt:.0f}s")
    assert ok


@pytest.mark.slow
def test_criterion_10_grazing_limit(criterion):
    cfg = default_config("grazing").with_(extra={"lbplim_s": (), "lbplim_eps": ()})
    rep, dt = _timed(lambda: run_experiment(cfg))
    slopes = [r for r in rep.rows if r.group == "slope"]
    chk = rep.checks["grazing/limit"]
    ok = chk["ok"] and dt <= 600
    detail = ", ".join(f"{r.ratio:.2f}{'' if r.detail['monotone'] else '(non-monotone)'}" for r in slopes)
    criterion(10, "grazing limit", ok, f"{chk['passing']}/{len(slopes)} pass; slopes {detail}; {dt:.0f}s")
    assert ok


def test_criterion_11_lbplim_bracket(criterion):
    rows, dt = _timed(lbplim_ratios)
    ratios = [r for *_, r in rows]
    chk = norms.check_baseline("grazing/lbplim", ratios, "both")
    ok = chk.ok and dt <= 120
    criterion(11, "grazing sphere bracket", ok,
              f"{len(ratios)} ratios in [{min(ratios):.3g}, {max(ratios):.3g}], {dt:.0f}s {chk.reason}")
    assert ok


@pytest.mark.slow
def test_criterion_12_refinement(criterion):
    rep, dt = _timed(lambda: run_experiment(default_config("refinement")))
    drift = max(abs(r.lhs - r.rhs) / abs(r.rhs) for r in rep.rows)
    ok = rep.checks["refinement/drift"]["ok"] and dt <= 900
    criterion(12, "refinement robustness", ok, f"max drift {drift:.2%} over {len(rep.rows)} functionals, {dt:.0f}s")
    assert ok
