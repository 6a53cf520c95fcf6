# coding: utf-8

# # What if a candidate moved?
#
# Moving Kerry one point right means adding 1 to the intercept of every
# "perceived Kerry economic position" regression. Each simulated election
# then redraws everyone's perceptions and votes.

import numpy as np

from spatialvote import ShiftSpec, apply_shift, fit_all, simulate_election, sweep_1d, sweep_2d, synth_survey

survey = synth_survey(seed=7)
pm, cm = fit_all(survey)

moved = apply_shift(pm, ShiftSpec("kerry", delta_econ=1.0))
for p in "DIR":
    print(p, round(pm[("kerry", "econ", p)].intercept, 3), "->", round(moved[("kerry", "econ", p)].intercept, 3))

base = simulate_election(pm, cm, survey, draws=100, seed=1)
print(f"baseline Bush share {base.bush_share:.4f} +/- {base.mc_se:.4f}")


# Sweep Kerry along the economic axis, three points each way.

sweep = sweep_1d(pm, cm, survey, "kerry", "econ", lo=-3, hi=3, step=0.5, draws=100, seed=1)
for s, r in zip(sweep.shifts, sweep.results):
    change = r.bush_share - sweep.baseline.bush_share
    print(f"{s.delta_econ:+5.1f}  {r.bush_share:.4f}  {change:+.4f}")
print(sweep.summary_json())


# Both axes at once; the surface is ordered economic-major.

surface = sweep_2d(pm, cm, survey, "kerry", econ_grid=(-2, 2, 1.0), soc_grid=(-2, 2, 1.0), draws=50, seed=1)
grid = surface.shares().reshape(5, 5)
print(np.round(grid, 3))
best, res = surface.best_for_candidate()
print("best move for Kerry:", best, f"Bush share {res.bush_share:.4f}")
