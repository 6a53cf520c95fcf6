"""Stage-1 perception regressions (OLS) and stage-2 vote-choice logits (IRLS).

Perceived candidate positions are regressed on the respondent's economic
and social self-placements, separately for each (candidate, dimension,
party) cell. Vote for Bush is regressed on the squared-distance
differences ``dist_e`` and ``dist_s``, separately for each party.
"""

import math
from dataclasses import dataclass
from typing import Dict, Mapping, Optional, Tuple

import numpy as np
from scipy.optimize import linprog
from scipy.special import expit, log_expit

from spatialvote.survey import CANDIDATES, DIMENSIONS, PARTIES, SurveyDataset, dataset_distances

OLS_COLUMNS = ("intercept", "econ_self", "soc_self")
LOGIT_COLUMNS = ("intercept", "dist_e", "dist_s")


class ModelFitError(ValueError):
    """One or more cells of a multi-cell fit failed; ``cells`` maps cell -> reason."""

    def __init__(self, cells: Mapping):
        self.cells = dict(cells)
        lines = "; ".join(f"{'/'.join(k) if isinstance(k, tuple) else k}: {v}" for k, v in self.cells.items())
        super().__init__(f"fit failed in {len(self.cells)} cell(s): {lines}")


@dataclass(frozen=True)
class LinearFit:
    intercept: float
    coef_econ_self: float
    coef_soc_self: float
    residual_sd: float
    se: Tuple[float, float, float] = (0.0, 0.0, 0.0)
    n: int = 0

    @property
    def coefs(self) -> np.ndarray:
        return np.array([self.intercept, self.coef_econ_self, self.coef_soc_self])

    def mean(self, econ_self, soc_self):
        return self.intercept + self.coef_econ_self * np.asarray(econ_self) + self.coef_soc_self * np.asarray(soc_self)


@dataclass(frozen=True)
class LogitFit:
    intercept: float
    coef_dist_e: float
    coef_dist_s: float
    se: Tuple[float, float, float] = (math.nan, math.nan, math.nan)
    n: int = 0
    converged: bool = True
    iterations: int = 0
    # step-function response instead of inverse-logit (noise-free limit)
    deterministic: bool = False

    @property
    def coefs(self) -> np.ndarray:
        return np.array([self.intercept, self.coef_dist_e, self.coef_dist_s])


def _design(econ, soc) -> np.ndarray:
    econ = np.asarray(econ, dtype=float)
    return np.column_stack([np.ones_like(econ), econ, np.asarray(soc, dtype=float)])


def _check_rank(X: np.ndarray, names) -> None:
    for j in range(1, X.shape[1] + 1):
        if np.linalg.matrix_rank(X[:, :j]) < j:
            raise ValueError(f"design matrix is rank deficient: column {names[j - 1]!r} is collinear "
                             f"with {', '.join(repr(c) for c in names[:j - 1])}")


def fit_ols(econ_self, soc_self, outcome) -> LinearFit:
    """Least squares of ``outcome`` on ``[1, econ_self, soc_self]`` via the normal equations.

    One step of iterative refinement keeps ``X.T @ residuals`` at rounding level.
    The residual sd uses ``n - 3`` degrees of freedom.
    """
    X = _design(econ_self, soc_self)
    y = np.asarray(outcome, dtype=float)
    n = y.size
    if n <= 3:
        raise ValueError(f"need more than 3 rows for a 3-coefficient fit, got {n}")
    _check_rank(X, OLS_COLUMNS)
    xtx = X.T @ X
    beta = np.linalg.solve(xtx, X.T @ y)
    beta = beta + np.linalg.solve(xtx, X.T @ (y - X @ beta))
    resid = y - X @ beta
    rss = float(resid @ resid)
    sd = math.sqrt(rss / (n - 3))
    se = np.sqrt(np.diag(np.linalg.inv(xtx)) * sd * sd)
    return LinearFit(float(beta[0]), float(beta[1]), float(beta[2]), sd, tuple(map(float, se)), n)


def ols_residuals(fit: LinearFit, econ_self, soc_self, outcome) -> np.ndarray:
    return np.asarray(outcome, dtype=float) - _design(econ_self, soc_self) @ fit.coefs


def _loglik(X, y, beta) -> float:
    eta = X @ beta
    return float(np.sum(y * log_expit(eta) + (1 - y) * log_expit(-eta)))


def logit_score(X, y, beta) -> np.ndarray:
    return X.T @ (y - expit(X @ beta))


def separates(X, y) -> bool:
    """True if some nonzero ``beta`` puts every row on its outcome's side of ``X @ beta = 0``.

    That is complete or quasi-complete separation, where the logit MLE does
    not exist. Solved as a small linear program on column-scaled ``X``.
    """
    scale = np.max(np.abs(X), axis=0)
    scale[scale == 0] = 1.0
    signed = (2 * np.asarray(y, dtype=float) - 1)[:, None] * (X / scale)
    res = linprog(-signed.sum(axis=0), A_ub=-signed, b_ub=np.zeros(len(y)), bounds=[(-1, 1)] * X.shape[1],
                  method="highs")
    return bool(res.status == 0 and -res.fun > 1e-9 * len(y))


def fit_logit_irls(dist_e, dist_s, vote, tol: float = 1e-8, max_iter: int = 50,
                   max_coef_norm: float = 1e4) -> LogitFit:
    """Maximum-likelihood logistic regression of ``vote`` (0/1) on ``[1, dist_e, dist_s]``.

    Newton-Raphson (IRLS) from zero with step-halving whenever the
    log-likelihood would drop by more than summation roundoff. Converged means the score max-norm is at
    most ``tol``. Separation shows up as a coefficient norm above
    ``max_coef_norm``, a fitted probability vector matching the outcomes to
    1e-9, a linear-programming separation check when the fit looks nearly
    perfect, or hitting ``max_iter``; the last iterate is returned with
    ``converged=False``. Standard errors come from the observed information.
    """
    X = _design(dist_e, dist_s)
    y = np.asarray(vote, dtype=float)
    n = y.size
    if n <= 3:
        raise ValueError(f"need more than 3 rows for a 3-coefficient fit, got {n}")
    if not np.all((y == 0) | (y == 1)):
        raise ValueError("vote must be coded 0/1")
    if y.min() == y.max():
        raise ValueError(f"degenerate outcome: every row has vote={int(y[0])}")
    _check_rank(X, LOGIT_COLUMNS)

    beta = np.zeros(3)
    ll = _loglik(X, y, beta)
    converged = False
    steps = 0
    while True:
        p = expit(X @ beta)
        score = X.T @ (y - p)
        if np.max(np.abs(score)) <= tol:
            converged = True
            break
        if steps == max_iter or np.linalg.norm(beta) > max_coef_norm:
            break
        info = X.T @ (X * (p * (1 - p))[:, None])
        try:
            step = np.linalg.solve(info, score)
        except np.linalg.LinAlgError:
            break
        # drops smaller than this are summation roundoff, not a worse fit
        slack = 1e-12 * max(1.0, abs(ll))
        t = 1.0
        cand = beta + step
        ll_new = _loglik(X, y, cand)
        while ll_new < ll - slack and t > 1e-10:
            t *= 0.5
            cand = beta + t * step
            ll_new = _loglik(X, y, cand)
        if ll_new < ll - slack:
            break
        beta, ll = cand, ll_new
        steps += 1

    p = expit(X @ beta)
    if np.max(np.abs(y - p)) < 1e-9 or np.linalg.norm(beta) > max_coef_norm:
        converged = False
    elif converged and np.max(np.abs(y - p)) < 1e-3 and separates(X, y):
        converged = False
    info = X.T @ (X * (p * (1 - p))[:, None])
    try:
        se = tuple(map(float, np.sqrt(np.diag(np.linalg.inv(info)))))
    except np.linalg.LinAlgError:
        se = (math.inf, math.inf, math.inf)
    return LogitFit(float(beta[0]), float(beta[1]), float(beta[2]), se, n, converged, steps)


def predict_logit(fit: LogitFit, dist_e, dist_s):
    """Probability of a Bush vote. Deterministic fits return 1, 0, or 0.5 on the boundary."""
    eta = fit.intercept + fit.coef_dist_e * np.asarray(dist_e, dtype=float) + fit.coef_dist_s * np.asarray(dist_s, dtype=float)
    if fit.deterministic:
        return np.where(eta > 0, 1.0, np.where(eta < 0, 0.0, 0.5))
    return expit(eta)


@dataclass(frozen=True)
class PerceptionModel:
    """Twelve stage-1 fits keyed by ``(candidate, dimension, party)``."""

    fits: Dict[Tuple[str, str, str], LinearFit]

    def __post_init__(self):
        missing = [k for k in perception_cells() if k not in self.fits]
        if missing:
            raise ValueError(f"perception model missing cells {missing}")

    def __getitem__(self, key) -> LinearFit:
        return self.fits[key]


@dataclass(frozen=True)
class ChoiceModel:
    """Three stage-2 fits keyed by party."""

    fits: Dict[str, LogitFit]
    name: str = "fitted"

    def __post_init__(self):
        missing = [p for p in PARTIES if p not in self.fits]
        if missing:
            raise ValueError(f"choice model missing parties {missing}")

    def __getitem__(self, party) -> LogitFit:
        return self.fits[party]


def perception_cells():
    return [(c, d, p) for c in CANDIDATES for d in DIMENSIONS for p in PARTIES]


# published vote-choice coefficients (intercept, dist_e, dist_s) by party
_PUBLISHED_CHOICE = {
    "D": (-1.32, -0.05, -0.04),
    "I": (0.38, -0.05, 0.02),
    "R": (2.30, -0.03, -0.02),
}

CHOICE_PRESETS = ("aoas2008-eq31",)


def choice_preset(name: str) -> ChoiceModel:
    """Built-in choice models. ``"aoas2008-eq31"`` carries the published two-decimal
    coefficients; standard errors are unknown (NaN) and sample sizes 0."""
    if name != "aoas2008-eq31":
        raise ValueError(f"unknown choice model preset {name!r}; available: {CHOICE_PRESETS}")
    return ChoiceModel({p: LogitFit(*c) for p, c in _PUBLISHED_CHOICE.items()}, name=name)


def threshold_choice_model(coef_dist_e: float = -1.0, coef_dist_s: float = -1.0) -> ChoiceModel:
    """Noise-free spatial voting: vote Bush exactly when the weighted distance
    difference favours Bush (the infinite-scale limit of a logit)."""
    fit = LogitFit(0.0, coef_dist_e, coef_dist_s, deterministic=True)
    return ChoiceModel({p: fit for p in PARTIES}, name="threshold")


def fit_all(ds: SurveyDataset) -> Tuple[PerceptionModel, ChoiceModel]:
    """Fit the twelve perception regressions and three vote-choice logits.

    Stage 1 uses every respondent with the outcome placement present;
    stage 2 drops undecided/other respondents and incomplete rows. Raises
    :class:`ModelFitError` naming every failed cell; non-converged logits
    count as failures.
    """
    failures = {}
    fits = {}
    for c, d, p in perception_cells():
        y = ds.placement(c, d)
        m = (ds.party_id == p) & np.isfinite(y) & np.isfinite(ds.econ_self) & np.isfinite(ds.soc_self)
        if not m.any():
            failures[(c, d, p)] = f"no respondents in party group {p}"
            continue
        try:
            fits[(c, d, p)] = fit_ols(ds.econ_self[m], ds.soc_self[m], y[m])
        except ValueError as exc:
            failures[(c, d, p)] = str(exc)

    dist_e, dist_s = dataset_distances(ds)
    eligible = ds.stage2_mask()
    logits = {}
    for p in PARTIES:
        m = eligible & (ds.party_id == p)
        if not m.any():
            failures[("choice", p)] = f"no stage-2 respondents in party group {p}"
            continue
        try:
            fit = fit_logit_irls(dist_e[m], dist_s[m], (ds.vote[m] == "bush").astype(float))
        except ValueError as exc:
            failures[("choice", p)] = str(exc)
            continue
        if not fit.converged:
            failures[("choice", p)] = "logistic fit did not converge (possible separation)"
        logits[p] = fit
    if failures:
        raise ModelFitError(failures)
    return PerceptionModel(fits), ChoiceModel(logits)


# ---------------------------------------------------------------------------
# flat text model files


def _kv(**items) -> str:
    return " ".join(f"{k}={v!r}" if isinstance(v, float) else f"{k}={v}" for k, v in items.items())


def format_models(pm: Optional[PerceptionModel], cm: Optional[ChoiceModel]) -> str:
    """One line per fit: kind, cell indices, then ``key=value`` fields."""
    lines = []
    if pm is not None:
        for c, d, p in perception_cells():
            f = pm[(c, d, p)]
            lines.append(f"ols {c} {d} {p} " + _kv(
                intercept=f.intercept, coef_econ_self=f.coef_econ_self, coef_soc_self=f.coef_soc_self,
                se_intercept=f.se[0], se_econ_self=f.se[1], se_soc_self=f.se[2],
                residual_sd=f.residual_sd, n=f.n))
    if cm is not None:
        for p in PARTIES:
            f = cm[p]
            lines.append(f"logit - - {p} " + _kv(
                intercept=f.intercept, coef_dist_e=f.coef_dist_e, coef_dist_s=f.coef_dist_s,
                se_intercept=f.se[0], se_dist_e=f.se[1], se_dist_s=f.se[2],
                n=f.n, converged=int(f.converged), deterministic=int(f.deterministic)))
    return "\n".join(lines) + "\n"


def parse_models(text: str) -> Tuple[Optional[PerceptionModel], Optional[ChoiceModel]]:
    ols, logit = {}, {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        tok = line.split()
        if len(tok) < 4 or tok[0] not in ("ols", "logit"):
            raise ValueError(f"model file line {lineno}: unrecognised record")
        try:
            f = dict(t.split("=", 1) for t in tok[4:])
            if tok[0] == "ols":
                ols[(tok[1], tok[2], tok[3])] = LinearFit(
                    float(f["intercept"]), float(f["coef_econ_self"]), float(f["coef_soc_self"]),
                    float(f["residual_sd"]),
                    (float(f["se_intercept"]), float(f["se_econ_self"]), float(f["se_soc_self"])), int(f["n"]))
            else:
                logit[tok[3]] = LogitFit(
                    float(f["intercept"]), float(f["coef_dist_e"]), float(f["coef_dist_s"]),
                    (float(f["se_intercept"]), float(f["se_dist_e"]), float(f["se_dist_s"])), int(f["n"]),
                    bool(int(f["converged"])), deterministic=bool(int(f.get("deterministic", "0"))))
        except (KeyError, ValueError) as exc:
            raise ValueError(f"model file line {lineno}: {exc}") from None
    pm = PerceptionModel(ols) if ols else None
    cm = ChoiceModel(logit) if logit else None
    return pm, cm
