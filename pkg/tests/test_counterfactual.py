import io
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spatialvote.counterfactual import (ShiftSpec, apply_shift, run_shift, simulate_election, sweep_1d,
                                        sweep_2d)
from spatialvote.inference import (ChoiceModel, LinearFit, LogitFit, PerceptionModel, choice_preset, fit_all,
                                   perception_cells, threshold_choice_model)
from spatialvote.survey import Stage1Truth, SurveyDataset, SynthConfig, synth_survey


def flat_config(kerry, bush, sd=1.0, size=600, mean=(0.0, 0.0)):
    """Every party perceives the candidates at fixed (econ, soc) points plus noise."""
    s1 = {}
    for p in "DIR":
        for k, d in enumerate(("econ", "soc")):
            s1[("bush", d, p)] = Stage1Truth(bush[k], 0.0, 0.0, sd)
            s1[("kerry", d, p)] = Stage1Truth(kerry[k], 0.0, 0.0, sd)
    return SynthConfig(stage1=s1, sizes={p: size for p in "DIR"}, self_mean={p: mean for p in "DIR"})


def truth_models(cfg):
    pm = PerceptionModel({k: LinearFit(*cfg.stage1[k]) for k in perception_cells()})
    cm = ChoiceModel({p: LogitFit(*cfg.stage2[p]) for p in "DIR"})
    return pm, cm


@pytest.fixture(scope="module")
def fitted():
    ds = synth_survey(seed=31)
    pm, cm = fit_all(ds)
    return pm, cm, ds


def test_apply_shift_kerry_econ(fitted):
    pm, _, _ = fitted
    out = apply_shift(pm, ShiftSpec("kerry", delta_econ=1.0))
    for key in perception_cells():
        if key[:2] == ("kerry", "econ"):
            assert out[key].intercept == pm[key].intercept + 1.0
            assert out[key].coefs[1:].tolist() == pm[key].coefs[1:].tolist()
            assert (out[key].residual_sd, out[key].se, out[key].n) == (pm[key].residual_sd, pm[key].se, pm[key].n)
        else:
            assert out[key] == pm[key]


def test_apply_shift_bush_soc_and_input_untouched(fitted):
    pm, _, _ = fitted
    before = dict(pm.fits)
    out = apply_shift(pm, ShiftSpec("bush", delta_soc=-2.0))
    for p in "DIR":
        assert out[("bush", "soc", p)].intercept == before[("bush", "soc", p)].intercept - 2.0
    assert pm.fits == before


def test_zero_shift_is_identity(fitted):
    pm, _, _ = fitted
    assert apply_shift(pm, ShiftSpec("kerry")).fits == pm.fits


@settings(max_examples=50, deadline=None)
@given(st.sampled_from(["bush", "kerry"]), *[st.integers(-12, 12).map(lambda k: k / 4) for _ in range(4)])
def test_apply_shift_composition(candidate, e1, s1, e2, s2):
    # quarter-point intercepts and shifts are exactly representable, so composition is exact
    pm = PerceptionModel({k: LinearFit(i / 4 - 1.5, 0.2, -0.1, 1.0) for i, k in enumerate(perception_cells())})
    a, b = ShiftSpec(candidate, e1, s1), ShiftSpec(candidate, e2, s2)
    assert apply_shift(apply_shift(pm, a), b).fits == apply_shift(pm, a + b).fits


def test_shift_validation():
    with pytest.raises(ValueError):
        ShiftSpec("nader", 1.0)
    with pytest.raises(ValueError):
        ShiftSpec("kerry", math.inf)
    with pytest.raises(ValueError):
        ShiftSpec("kerry", 1.0) + ShiftSpec("bush", 1.0)


def test_default_draws_and_result_fields(fitted):
    pm, cm, ds = fitted
    r = simulate_election(pm, cm, ds, seed=1)
    assert r.draws == 100
    assert 0 <= r.bush_share <= 1 and r.mc_se > 0


def test_seed_determinism_and_worker_independence(fitted):
    pm, cm, ds = fitted
    # 700 draws span several work blocks
    a = simulate_election(pm, cm, ds, draws=700, seed=2, workers=1)
    b = simulate_election(pm, cm, ds, draws=700, seed=2, workers=4)
    assert a == b
    assert simulate_election(pm, cm, ds, draws=700, seed=3) != a
    s1 = sweep_1d(pm, cm, ds, "kerry", "econ", draws=700, seed=2, workers=1)
    s3 = sweep_1d(pm, cm, ds, "kerry", "econ", draws=700, seed=2, workers=3)
    assert s1.results == s3.results and s1.baseline == s3.baseline == a


def test_rejects_nonconverged_and_zero_draws(fitted):
    pm, cm, ds = fitted
    bad = ChoiceModel({**cm.fits, "I": LogitFit(0.0, 0.0, 0.0, converged=False)})
    with pytest.raises(ValueError, match="converge"):
        simulate_election(pm, bad, ds)
    with pytest.raises(ValueError):
        simulate_election(pm, cm, ds, draws=0)


def test_single_draw_uses_binomial_se(fitted):
    pm, cm, ds = fitted
    r = simulate_election(pm, cm, ds, draws=1, seed=4)
    n = int(ds.stage2_mask().sum())
    assert r.mc_se == pytest.approx(math.sqrt(r.bush_share * (1 - r.bush_share) / n))


def test_threshold_limit_matches_deterministic_count():
    cfg = flat_config((-1.3, -0.7), (1.1, 0.9), sd=0.0, size=200)
    ds = synth_survey(cfg, seed=5)
    pm, _ = truth_models(cfg)
    r = simulate_election(pm, threshold_choice_model(), ds, draws=5, seed=6)
    votes = []
    for row in ds.respondents():
        if row.vote == "none":
            continue
        d_bush = (row.econ_self - 1.1) ** 2 + (row.soc_self - 0.9) ** 2
        d_kerry = (row.econ_self + 1.3) ** 2 + (row.soc_self + 0.7) ** 2
        assert d_bush != d_kerry
        votes.append(1.0 if d_bush < d_kerry else 0.0)
    assert r.bush_share == sum(votes) / len(votes)
    assert r.mc_se == 0.0


def test_excludes_undecided(fitted):
    pm, cm, ds = fitted
    votes = ds.vote.copy()
    votes[: len(votes) // 2] = "none"
    half = SurveyDataset(ds.party_id, ds.econ_self, ds.soc_self, ds.econ_bush, ds.econ_kerry, ds.soc_bush,
                         ds.soc_kerry, votes)
    # the simulated electorate is exactly the decided rows
    a = simulate_election(pm, cm, half, draws=3, seed=7)
    b = simulate_election(pm, cm, ds.subset(half.stage2_mask()), draws=3, seed=7)
    assert abs(a.bush_share - b.bush_share) < 0.05
    with pytest.raises(ValueError):
        simulate_election(pm, cm, ds.subset(np.zeros(len(ds), bool)))


def test_self_consistency_with_generator():
    cfg = SynthConfig(sizes={"D": 3000, "I": 3000, "R": 3000})
    ds = synth_survey(cfg, seed=8)
    pm, cm = truth_models(cfg)
    r = simulate_election(pm, cm, ds, draws=100, seed=9)
    realized = float(np.mean(ds.vote == "bush"))
    # the realized rate is one draw of the same process: its sd is the per-draw sd
    per_draw_sd = r.mc_se * math.sqrt(r.draws)
    assert abs(r.bush_share - realized) <= 4 * math.sqrt(r.mc_se ** 2 + per_draw_sd ** 2)


def test_many_draws_converge():
    cfg = SynthConfig(sizes={"D": 100, "I": 100, "R": 100})
    ds = synth_survey(cfg, seed=10)
    pm, cm = truth_models(cfg)
    a = simulate_election(pm, cm, ds, draws=100, seed=11)
    b = simulate_election(pm, cm, ds, draws=10_000, seed=11)
    assert abs(a.bush_share - b.bush_share) <= 4 * math.hypot(a.mc_se, b.mc_se)
    assert b.mc_se < a.mc_se


def _mirror(pm, cm, ds):
    """Negate every position, swap the candidates and swap D with R."""
    swap_p = {"D": "R", "I": "I", "R": "D"}
    swap_c = {"bush": "kerry", "kerry": "bush"}
    fits = {}
    for c, d, p in perception_cells():
        f = pm[(swap_c[c], d, swap_p[p])]
        fits[(c, d, p)] = LinearFit(-f.intercept, f.coef_econ_self, f.coef_soc_self, f.residual_sd, f.se, f.n)
    choice = {p: LogitFit(-cm[swap_p[p]].intercept, cm[swap_p[p]].coef_dist_e, cm[swap_p[p]].coef_dist_s)
              for p in "DIR"}
    vote = np.select([ds.vote == "bush", ds.vote == "kerry"], ["kerry", "bush"], "none")
    party = np.array([swap_p[p] for p in ds.party_id])
    mirrored = SurveyDataset(party, -ds.econ_self, -ds.soc_self, -ds.econ_kerry, -ds.econ_bush,
                             -ds.soc_kerry, -ds.soc_bush, vote)
    return PerceptionModel(fits), ChoiceModel(choice), mirrored


def test_role_antisymmetry():
    cfg = flat_config((-1.5, -1.0), (1.5, 1.0), size=1000)
    ds = synth_survey(cfg, seed=12)
    pm, cm = truth_models(cfg)
    a = simulate_election(pm, cm, ds, draws=200, seed=13)
    b = simulate_election(*_mirror(pm, cm, ds), draws=200, seed=14)
    assert abs(a.bush_share - (1 - b.bush_share)) <= 4 * math.hypot(a.mc_se, b.mc_se)
    # shifting Kerry in one world mirrors shifting Bush the opposite way in the other
    ka = run_shift(pm, cm, ds, ShiftSpec("kerry", 1.0, 0.5), draws=200, seed=13).results[0]
    kb = run_shift(*_mirror(pm, cm, ds), ShiftSpec("bush", -1.0, -0.5), draws=200, seed=14).results[0]
    assert abs(ka.bush_share - (1 - kb.bush_share)) <= 4 * math.hypot(ka.mc_se, kb.mc_se)


def test_sweep_zero_point_is_baseline_and_crn(fitted):
    pm, cm, ds = fitted
    sw = sweep_1d(pm, cm, ds, "kerry", "econ", draws=20, seed=15)
    assert len(sw.shifts) == 25
    zero = [r for s, r in zip(sw.shifts, sw.results) if s.delta_econ == 0]
    assert zero == [sw.baseline]
    assert sw.baseline == simulate_election(pm, cm, ds, draws=20, seed=15)
    # each grid point is the same random numbers pushed through a shifted model
    for s, r in list(zip(sw.shifts, sw.results))[::6]:
        assert r == simulate_election(apply_shift(pm, s), cm, ds, draws=20, seed=15)


def test_sweep_requires_zero_and_order(fitted):
    pm, cm, ds = fitted
    with pytest.raises(ValueError):
        sweep_1d(pm, cm, ds, "kerry", "econ", lo=0.5, hi=3.0, draws=2)
    with pytest.raises(ValueError):
        sweep_1d(pm, cm, ds, "kerry", "econ", lo=1.0, hi=-1.0, draws=2)
    with pytest.raises(ValueError):
        sweep_1d(pm, cm, ds, "kerry", "foreign", draws=2)


def test_kerry_left_of_median_should_move_right():
    ds = synth_survey(flat_config((-5.0, -1.0), (3.0, 1.0)), seed=16)
    pm, cm = fit_all(ds)
    sw = sweep_1d(pm, cm, ds, "kerry", "econ", draws=100, seed=17)
    best_shift, best = sw.best_for_candidate()
    assert best_shift.delta_econ > 0
    assert sw.baseline.bush_share - best.bush_share > 3 * math.hypot(best.mc_se, sw.baseline.mc_se)
    s = sw.shares()
    zero = [x.delta_econ for x in sw.shifts].index(0.0)
    assert s[zero + 1] < s[zero]


def test_bush_far_right_declines():
    ds = synth_survey(flat_config((-1.0, 0.0), (1.0, 0.0)), seed=18)
    pm, cm = fit_all(ds)
    sw = sweep_1d(pm, cm, ds, "bush", "econ", draws=100, seed=19)
    deltas = np.array([x.delta_econ for x in sw.shifts])
    far_right = sw.shares()[deltas >= 1.5]
    assert np.all(np.diff(far_right) < 0)


def test_2d_kerry_argmin_interior():
    ds = synth_survey(flat_config((-1.5, -1.5), (1.5, 1.5)), seed=20)
    pm, cm = fit_all(ds)
    sw = sweep_2d(pm, cm, ds, "kerry", draws=100, seed=21)
    best, _ = sw.best_for_candidate()
    assert -3 < best.delta_econ < 3 and -3 < best.delta_soc < 3
    summary = sw.summary()
    assert summary["argmin_bush_share"]["delta_econ"] == best.delta_econ


def test_2d_capacity_and_serialization(fitted):
    pm, cm, ds = fitted
    sw = sweep_2d(pm, cm, ds, "kerry", draws=5, seed=22)
    assert len(sw.shifts) == 169
    # economic-major ordering
    assert (sw.shifts[1].delta_econ, sw.shifts[1].delta_soc) == (-3.0, -2.5)
    buf = io.StringIO()
    sw.to_csv(buf, ["note"])
    lines = buf.getvalue().splitlines()
    assert lines[0] == "# note"
    assert lines[1] == "delta_econ,delta_soc,bush_share,mc_se,draws,baseline"
    assert len(lines) == 2 + 1 + 169
    assert lines[2].endswith(",1") and all(ln.endswith(",0") for ln in lines[3:])
    summary = json.loads(sw.summary_json())
    assert summary["candidate"] == "kerry" and summary["draws"] == 5
    assert summary["max_abs_change"] >= abs(summary["argmin_bush_share"]["change_vs_baseline"])
    zero = [r for s, r in zip(sw.shifts, sw.results) if s.delta_econ == 0 and s.delta_soc == 0]
    assert zero == [sw.baseline]


def test_published_choice_model_runs(fitted):
    pm, _, ds = fitted
    r = run_shift(pm, choice_preset("aoas2008-eq31"), ds, ShiftSpec("kerry"), draws=10, seed=23)
    assert r.results[0] == r.baseline
    assert r.summary()["max_abs_change"] == 0.0
