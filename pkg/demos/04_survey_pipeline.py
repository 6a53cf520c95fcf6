# coding: utf-8

# # From survey responses to fitted models
#
# A synthetic survey stands in for real micro-data. Each respondent gives
# their own economic and social positions, where they think Bush and Kerry
# stand, and their vote. The generator knows the true model, so the fits
# below can be checked against it.

import io

import numpy as np

from spatialvote import SynthConfig, fit_all, load_survey, synth_survey
from spatialvote.cli import format_fit_table

config = SynthConfig()
survey = synth_survey(config, seed=7)
print(len(survey), "respondents;", {p: int(np.sum(survey.party_id == p)) for p in "DIR"})
print(survey.respondents()[0])


# Round trip through the CSV format that real data would arrive in.

buf = io.StringIO()
survey.to_csv(buf)
loaded, report = load_survey(buf.getvalue())
print("rejected rows:", report.rejected, " flagged:", len(report.flagged))


# Stage one regresses each perceived candidate position on the respondent's
# own positions, per party. Stage two is a logit of a Bush vote on the
# squared-distance differences.

pm, cm = fit_all(loaded)
print(format_fit_table(pm, cm))

for p in "DIR":
    print(p, "true", tuple(config.stage2[p]), "fitted", cm[p].coefs.round(3))
