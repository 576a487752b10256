import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from kinops import field, norms, sphere
from kinops.field import GridSpec, VelocityField, maxwellian

import oracles

G24 = GridSpec(24, 6.0)
G16 = GridSpec(16, 6.0)


def _random_field(seed, grid=G16):
    rng = np.random.default_rng(seed)
    r2 = grid.radius() ** 2
    return VelocityField(grid, rng.standard_normal(r2.shape) * np.exp(-0.25 * r2))


def test_maxwellian_l2():
    mu = maxwellian(GridSpec(32, 6.0))
    assert norms.sobolev_norm(mu, 0, 0) == pytest.approx(oracles.maxwellian_l2(), rel=1e-8)
    assert norms.sobolev_norm(mu, 0, 0) == pytest.approx(mu.l2_norm(), rel=1e-14)


def test_lp_family():
    mu = maxwellian(GridSpec(32, 6.0))
    assert norms.lp_norm(mu, 1) == pytest.approx(1.0, abs=1e-8)
    assert norms.lp_norm(mu, 1, 2) == pytest.approx(4.0, abs=1e-6)
    assert norms.lp_norm(mu, 2) == pytest.approx(mu.l2_norm(), rel=1e-14)
    assert norms.llogl_norm(mu.with_values(np.zeros_like(mu.values))) == 0.0
    with pytest.raises(ValueError):
        norms.lp_norm(mu, 0.5)


@given(st.integers(0, 2**31 - 1), st.floats(0, 2), st.floats(0, 2))
def test_sobolev_dominates_l2(seed, m, l):
    f = _random_field(seed)
    assert norms.sobolev_norm(f, m, l) >= norms.sobolev_norm(f, 0, 0) * (1 - 1e-12)


@given(st.integers(0, 2**31 - 1), st.floats(-3, 3).filter(lambda c: c == 0 or abs(c) > 1e-6),
       st.floats(-1, 2), st.floats(-1, 2))
def test_sobolev_homogeneous_and_subadditive(seed, c, m, l):
    f, g = _random_field(seed), _random_field(seed + 1)
    nf = norms.sobolev_norm(f, m, l)
    assert norms.sobolev_norm(f * c, m, l) == pytest.approx(abs(c) * nf, rel=1e-10, abs=1e-300)
    assert norms.sobolev_norm(f + g, m, l) <= nf + norms.sobolev_norm(g, m, l) + 1e-12


@given(st.integers(0, 2**31 - 1), st.floats(1, 4), st.floats(-1, 2))
def test_lp_triangle(seed, p, l):
    f, g = _random_field(seed), _random_field(seed + 7)
    assert norms.lp_norm(f + g, p, l) <= norms.lp_norm(f, p, l) + norms.lp_norm(g, p, l) + 1e-12


def test_aniso_ns_scaling_and_zero():
    mu = maxwellian(G16)
    base = norms.aniso_norm_ns(mu, 0.5)
    assert norms.aniso_norm_ns(mu * 3.0, 0.5) == pytest.approx(9 * base, rel=1e-12)
    assert norms.aniso_norm_ns(mu * 0.0, 0.5) == 0.0
    wide = norms.aniso_norm_ns(mu, 0.5, exclusion_cells=2)
    assert 0 < wide < base


def test_aniso_ns_refinement():
    a = norms.aniso_norm_ns(maxwellian(GridSpec(24, 6.0)), 0.5)
    b = norms.aniso_norm_ns(maxwellian(GridSpec(32, 6.0)), 0.5)
    assert np.isfinite(a) and np.isfinite(b)
    # the near-diagonal exclusion is one cell, so the value drifts with h; both stay O(1) apart
    assert 0.5 < a / b < 2.0


def test_triple_norm_constant_and_monotone_weight():
    c = VelocityField(G16, np.ones(G16.n ** 3))
    assert norms.aniso_triple_norm(c, 0.5) == pytest.approx(norms.weighted_l2_sq(c, 0.5), rel=1e-9)
    mu = maxwellian(G16)
    parts = [norms.weighted_l2_sq(mu, s) for s in (0.1, 0.3, 0.5, 0.9)]
    assert all(a <= b for a, b in zip(parts, parts[1:]))


def test_dyadic_profile_examples():
    mu = maxwellian(G24)
    prof = norms.dyadic_profile(mu, 1, 2)
    assert 1 / 20 <= prof.ratio <= 20
    scaled = norms.dyadic_profile(mu * 2.5, 1, 2)
    assert scaled.ratio == pytest.approx(prof.ratio, rel=1e-12)
    small = VelocityField(G24, np.where(G24.radius() <= 2 / 3, 1.0, 0.0))
    blocks = norms.dyadic_profile(small, 0, 0).blocks
    assert blocks[0] > 0 and all(b == 0 for b in blocks[1:])
    profile, reference, ratio = prof
    assert ratio == pytest.approx(profile / reference)


def test_lb_weighted_norm():
    g = GridSpec(32, 6.0)
    q = sphere.build_quadrature(12, 24)
    radii = field.shell_radii(4.0, 24)
    mu = maxwellian(g)
    assert norms.lb_weighted_norm(mu, 0.5, 0.0, radii, q, 6) <= 1e-3 * mu.l2_norm()
    x, y, z = g.coords()
    f = VelocityField(g, z * np.exp(-(x * x + y * y + z * z)))
    val = norms.lb_weighted_norm(f, 1.0, 0.0, radii, q, 6)
    assert val == pytest.approx(oracles.dipole_lb_norm(), rel=0.03)
    # s = 0 keeps every degree, including l = 0, so the plain L2 norm comes back
    assert norms.lb_weighted_norm(f, 0.0, 0.0, radii, q, 6) == pytest.approx(f.l2_norm(), rel=0.03)


def test_translation_bound_identity_shift():
    g = GridSpec(24, 6.0)
    q = sphere.build_quadrature(12, 24)
    radii = field.shell_radii(4.0, 16)
    lhs, rhs, ratio = norms.translation_bound_check(maxwellian(g) * (1 + 0 * g.radius()), [0, 0, 0], 0.5, radii, q, 6)
    assert ratio <= 1 + 1e-9


def test_norm_report_rejects_negative():
    with pytest.raises(ValueError):
        norms.NormReport("x", -1.0)


def test_baseline_freeze_and_check(tmp_path):
    p = tmp_path / "b.json"
    rec = norms.freeze_baseline("demo/id", [0.5, 2.0, np.nan], GridSpec(16, 6.0), path=p)
    assert rec == {"ratio_sup": 2.0, "ratio_inf": 0.5, "grid": {"n": 16, "extent": 6.0}}
    assert json.loads(p.read_text())["demo/id"]["ratio_sup"] == 2.0
    assert norms.check_baseline("demo/id", [0.6, 2.19], "upper", path=p).ok
    assert not norms.check_baseline("demo/id", [0.6, 2.21], "upper", path=p).ok
    assert norms.check_baseline("demo/id", [0.46, 1.0], "lower", path=p).ok
    bad = norms.check_baseline("demo/id", [0.45, 1.0], "both", path=p)
    assert not bad.ok and "inf" in bad.reason
    missing = norms.check_baseline("other", [1.0], path=p)
    assert not missing.ok and missing.frozen is None


def test_baseline_path_env(monkeypatch, tmp_path):
    monkeypatch.setenv(norms.BASELINE_ENV, str(tmp_path / "x.json"))
    assert norms.baseline_path() == tmp_path / "x.json"
    assert norms.load_baselines() == {}
