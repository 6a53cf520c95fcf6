"""Multidimensional spatial voting models and survey-based counterfactual elections."""

from spatialvote.geometry import (ABSOLUTE_VALUE, SQUARED_EUCLIDEAN, Metric, distance, ideal_point,
                                  preferred_party, relative_utility)
from spatialvote.electorate import (CorrelationSpec, Electorate, cholesky_lower, equicorrelation_matrix,
                                    read_electorate_csv, sample_electorate, std_normal_cdf, write_electorate_csv)
from spatialvote.spatial_model import (NoiseConfig, PositionGrid, ShareEstimate, curve_argmax,
                                       optimize_position, share_curve, vote_share, vote_share_noisy)
from spatialvote.survey import (ECON_SCALE, SOC_SCALE, IngestionReport, IssueScale, Respondent, SurveyDataset,
                                SynthConfig, build_scales, distances, load_survey, respondent_distances,
                                synth_survey)
from spatialvote.inference import (ChoiceModel, LinearFit, LogitFit, ModelFitError, PerceptionModel,
                                   choice_preset, fit_all, fit_logit_irls, fit_ols, predict_logit)
from spatialvote.counterfactual import (ElectionResult, ShiftSpec, SweepResult, apply_shift, run_shift,
                                        simulate_election, sweep_1d, sweep_2d)

__version__ = "0.1.0"
