import json

import numpy as np
import pytest
from click.testing import CliRunner

from kinops import norms, sphere
from kinops.field import GridSpec
from kinops.harness import (EXPERIMENTS, ConstraintError, ExperimentConfig, ExperimentReport, Row,
                            default_config, emit_report, read_csv, run_experiment)
from kinops.harness import families
from kinops.harness.cli import main
from kinops.harness.experiments import freeze_report

SMALL = GridSpec(16, 6.0)


@pytest.fixture
def baselines(tmp_path, monkeypatch):
    p = tmp_path / "baselines.json"
    monkeypatch.setenv(norms.BASELINE_ENV, str(p))
    return p


@pytest.fixture
def scaled_family(monkeypatch):
    fam = dict(families.STANDARD)
    for base, c in (("mu_e1", 2.0), ("v1_mu", 3.0)):
        fn = fam[base][0]
        fam[f"{base}_x{c:g}"] = ((lambda fn, c: lambda x, y, z: c * fn(x, y, z))(fn, c), False)
    fam["zero"] = (lambda x, y, z: 0.0 * x, False)
    monkeypatch.setitem(families.FAMILIES, "scaled", fam)
    return "scaled"


def _small_ub(**kw):
    return default_config("upper_bound_boltzmann").with_(
        grid=SMALL, gammas=(0.0,), triples=(("mu", "mu_e1", "v1_mu"), ("mu", "mu", "mu")), **kw)


# --- command line ------------------------------------------------------------

def test_cli_list():
    res = CliRunner().invoke(main, ["list"])
    assert res.exit_code == 0
    assert res.output.split() == list(EXPERIMENTS)
    assert len(EXPERIMENTS) == 6


def test_cli_unknown_experiment():
    res = CliRunner().invoke(main, ["run", "--experiment", "nope"])
    assert res.exit_code == 2


@pytest.mark.parametrize("patch,name", [
    ({"ab": [[0.5, 0.6]]}, "a+b=2s"),
    ({"kernel": {"s": 1.5}}, "kernel: angular exponent s must lie in (0, 1)"),
    ({"weights": [[0.5, 0.2]]}, "w1+w2=gamma+2s"),
    ({"bogus": 1}, "config"),
])
def test_cli_constraint_violation(tmp_path, patch, name):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"experiment": "upper_bound_boltzmann", **patch}))
    res = CliRunner().invoke(main, ["run", "--experiment", "upper_bound_boltzmann", "--config", str(cfg)])
    assert res.exit_code == 3
    assert name in res.output


def test_cli_run_freeze_and_regress(tmp_path, baselines):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"experiment": "upper_bound_boltzmann", "grid": {"n": 16, "extent": 6.0},
                               "gammas": [0.0], "triples": [["mu", "mu_e1", "v1_mu"]]}))
    out = tmp_path / "out"
    run = ["run", "--experiment", "upper_bound_boltzmann", "--config", str(cfg), "--out", str(out)]
    first = CliRunner().invoke(main, run)
    assert first.exit_code == 0 and "no baseline" in first.output
    frz = CliRunner().invoke(main, ["baseline", "freeze", "--experiment", "upper_bound_boltzmann",
                                    "--config", str(cfg)])
    assert frz.exit_code == 0 and "upper_bound_boltzmann/gamma=0" in frz.output
    again = CliRunner().invoke(main, run)
    assert again.exit_code == 0 and "(pass)" in again.output
    data = json.loads(baselines.read_text())
    data["upper_bound_boltzmann/gamma=0"]["ratio_sup"] *= 0.5
    baselines.write_text(json.dumps(data))
    bad = CliRunner().invoke(main, run)
    assert bad.exit_code == 1
    rows = read_csv(out / "upper_bound_boltzmann.csv")
    assert any(r["pass"] is False for r in rows)


# --- configuration -----------------------------------------------------------

def test_config_json_round_trip():
    for exp in EXPERIMENTS:
        cfg = default_config(exp)
        back = ExperimentConfig.from_json(cfg.to_json())
        assert back == cfg


@pytest.mark.parametrize("exp,kw,name", [
    ("upper_bound_aniso", {"sub": ((0.1, 0.1),)}, "a1+b1=s"),
    ("upper_bound_aniso", {"weights": ((0.5, 0.5),)}, "w1+w2=gamma+s"),
    ("grazing", {"eps": (0.2, 0.1)}, "eps-count"),
    ("entropy", {"members": ("mu", "v1_mu")}, "positivity"),
    ("lower_bound", {"members": ("mu", "unknown")}, "family"),
    ("lower_bound", {"eta": (1.5,)}, "eta-range"),
    ("lower_bound", {"operator": "landau", "ab": ((1.0, 0.5),)}, "a+b=2"),
    ("lower_bound", {"gammas": (-3.5,)}, "gamma-range"),
])
def test_constraints_are_named(exp, kw, name):
    with pytest.raises(ConstraintError) as err:
        default_config(exp).with_(**kw).validate()
    assert err.value.constraint == name


def test_landau_weight_bookkeeping():
    cfg = default_config("lower_bound").with_(operator="landau")
    assert cfg.derivative_pairs() == ((1.0, 1.0), (2.0, 0.0), (0.0, 2.0))
    assert cfg.weight_pairs(1.0)[0] == (1.5, 1.5)


# --- reports -----------------------------------------------------------------

def test_csv_round_trip_is_bit_exact(tmp_path):
    rng = np.random.default_rng(11)
    ratios = rng.random(20) * 10.0 ** rng.integers(-12, 12, 20)
    rep = ExperimentReport("upper_bound_boltzmann", {"k": 1})
    for i, r in enumerate(ratios):
        rep.rows.append(Row(f"case{i}", float(r * 3), 3.0, float(r), 0.0, 0.5, 0.25, 0.75, 0.5, 0.5,
                            passed=bool(i % 2)))
    rep.rows.append(Row("nan-row", float("nan"), 1.0, float("inf")))
    csv_path, json_path = emit_report(rep, tmp_path)
    back = read_csv(csv_path)
    assert [r["ratio"] for r in back[:-1]] == [float(r) for r in ratios]
    assert back[-1]["ratio"] == float("inf") and back[-1]["gamma"] is None
    assert [r["pass"] for r in back[:3]] == [False, True, False]
    assert json.loads(json_path.read_text())["experiment"] == "upper_bound_boltzmann"


# --- experiments on a small grid ---------------------------------------------

def test_upper_bound_equilibrium_and_determinism(baselines):
    rep1 = run_experiment(_small_ub())
    rep2 = run_experiment(_small_ub())
    assert [r.ratio for r in rep1.rows] == [r.ratio for r in rep2.rows]
    eq = [r.ratio for r in rep1.rows if r.case_id == "mu|mu|mu"]
    other = [r.ratio for r in rep1.rows if r.case_id == "mu|mu_e1|v1_mu"]
    # the coarse grid leaves a ~7% equilibrium residual
    assert max(eq) < 0.1 * min(other)
    assert rep1.passed is None


def test_upper_bound_homogeneity(baselines, scaled_family):
    cfg = _small_ub(family=scaled_family).with_(triples=(("mu", "mu_e1", "v1_mu"), ("mu", "mu_e1_x2", "v1_mu")))
    rep = run_experiment(cfg)
    one = [r for r in rep.rows if r.case_id == "mu|mu_e1|v1_mu"]
    two = [r for r in rep.rows if r.case_id == "mu|mu_e1_x2|v1_mu"]
    for a, b in zip(one, two):
        assert b.lhs == pytest.approx(2 * a.lhs, rel=1e-12)
        assert b.rhs == pytest.approx(2 * a.rhs, rel=1e-12)
        assert b.ratio == pytest.approx(a.ratio, rel=1e-12)


def test_aniso_scale_invariance_and_radial_rows(baselines, scaled_family):
    cfg = default_config("upper_bound_aniso").with_(
        grid=SMALL, family=scaled_family, sphere_nodes=(12, 24), l_max=8,
        triples=(("mu", "mu_e1", "v1_mu"), ("mu", "mu_e1", "v1_mu_x3"), ("mu", "mu", "mu")))
    rep = run_experiment(cfg)
    one = [r.ratio for r in rep.rows if r.case_id == "mu|mu_e1|v1_mu"]
    three = [r.ratio for r in rep.rows if r.case_id == "mu|mu_e1|v1_mu_x3"]
    np.testing.assert_allclose(three, one, rtol=1e-12)
    radial = [r.ratio for r in rep.rows if r.case_id == "mu|mu|mu"]
    assert all(np.isfinite(radial))
    ab = {(r.a, r.b) for r in rep.rows}
    assert {(1.0, 0.0), (0.0, 1.0)} <= ab


def test_lower_bound_zero_field(baselines, scaled_family):
    cfg = default_config("lower_bound").with_(grid=SMALL, family=scaled_family, members=("zero", "v1_mu"),
                                              sphere_nodes=(12, 24), l_max=8)
    rep = run_experiment(cfg)
    zero = [r for r in rep.rows if r.case_id.startswith("mu|zero")]
    assert all(r.lhs == 0 and r.rhs == 0 for r in zero)
    assert rep.notes["lbc"]["mass"] > cfg.delta
    v1 = [r.ratio for r in rep.rows if r.case_id.startswith("mu|v1_mu")]
    assert min(v1) > 0


def test_lower_bound_rejects_bad_g(baselines):
    cfg = default_config("lower_bound").with_(grid=SMALL, delta=2.0)
    with pytest.raises(ConstraintError) as err:
        run_experiment(cfg)
    assert err.value.constraint == "lbc"


def test_entropy_equilibrium_row(baselines):
    cfg = default_config("entropy").with_(grid=SMALL, members=("mu",), sphere_nodes=(12, 24), l_max=8)
    rep = run_experiment(cfg)
    row = next(r for r in rep.rows if r.case_id == "mu")
    assert abs(row.detail["dissipation"]) <= 1e-6
    assert np.isfinite(row.ratio) and row.ratio > 0
    assert any(r.group == "scaling" for r in rep.rows)
    assert "entropy/scaling" not in rep.fitted


def test_frozen_baseline_grid_mismatch_is_skipped(baselines):
    rep = run_experiment(_small_ub())
    freeze_report(rep, GridSpec(24, 6.0))
    again = run_experiment(_small_ub())
    assert again.passed is None
    assert again.notes["skipped_baselines"] == ["upper_bound_boltzmann/gamma=0"]


def test_sharp_band_degenerates_for_large_eps():
    q = sphere.build_quadrature(13, 28)
    rng = np.random.default_rng(5)
    c = sphere.analyze(sphere.synthesize(sphere.HarmonicCoeffs(12, rng.standard_normal(169)), q.nodes), q, 12)
    for s in (0.25, 0.5, 0.75):
        for eps in (1.0, 2.0):
            want = c.norm_sq() + eps ** (2 * s - 2) * sphere.frac_laplace_beltrami(c, s).norm_sq()
            assert sphere.sharp_band_norm_sq(c, s, eps) == pytest.approx(want, rel=1e-12)
