"""Intercept-shift election simulation.

A candidate "moves" by adding a constant to the intercepts of the
candidate's perceived-position regressions in all three party groups. Each
replicated election redraws every eligible respondent's perceptions of both
candidates from the (shifted) regressions, recomputes the distance
covariates, and draws a Bush/Kerry vote from the choice model.

Random numbers for (respondent, draw) come from substreams keyed by the
seed and the respondent's row in the dataset, and do not depend on the
shift, so all points of a sweep share them (common random numbers).
"""

import csv
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import List, Optional, Sequence

import numpy as np

from spatialvote import _rng
from spatialvote.inference import ChoiceModel, PerceptionModel, predict_logit
from spatialvote.spatial_model import grid_values
from spatialvote.survey import CANDIDATES, DIMENSIONS, PARTIES, SurveyDataset, distances

DEFAULT_DRAWS = 100

# perception variables, in substream order
_VARIABLES = [(c, d) for c in CANDIDATES for d in DIMENSIONS]
_BLOCK_VALUES = 1 << 21


@dataclass(frozen=True)
class ShiftSpec:
    candidate: str
    delta_econ: float = 0.0
    delta_soc: float = 0.0

    def __post_init__(self):
        if self.candidate not in CANDIDATES:
            raise ValueError(f"candidate must be one of {CANDIDATES}, got {self.candidate!r}")
        if not (math.isfinite(self.delta_econ) and math.isfinite(self.delta_soc)):
            raise ValueError("shift deltas must be finite")

    def __add__(self, other: "ShiftSpec") -> "ShiftSpec":
        if other.candidate != self.candidate:
            raise ValueError("cannot add shifts of different candidates")
        return ShiftSpec(self.candidate, self.delta_econ + other.delta_econ, self.delta_soc + other.delta_soc)


@dataclass(frozen=True)
class ElectionResult:
    bush_share: float
    mc_se: float
    draws: int


def apply_shift(pm: PerceptionModel, s: ShiftSpec) -> PerceptionModel:
    """New model with ``s.candidate``'s econ/soc intercepts moved in every party group."""
    fits = dict(pm.fits)
    for dim, delta in (("econ", s.delta_econ), ("soc", s.delta_soc)):
        for p in PARTIES:
            key = (s.candidate, dim, p)
            fits[key] = replace(fits[key], intercept=fits[key].intercept + delta)
    return PerceptionModel(fits)


class _Electorate:
    """Eligible respondents with per-respondent stage-1 means and sds precomputed."""

    def __init__(self, pm: PerceptionModel, cm: ChoiceModel, ds: SurveyDataset):
        for p in PARTIES:
            f = cm[p]
            if not f.converged:
                raise ValueError(f"choice model for party {p} did not converge")
        eligible = ds.stage2_mask()
        self.rows = np.flatnonzero(eligible).astype(np.uint64)
        if self.rows.size == 0:
            raise ValueError("no eligible respondents (all undecided or incomplete)")
        self.party = ds.party_id[eligible]
        self.econ = ds.econ_self[eligible]
        self.soc = ds.soc_self[eligible]
        self.groups = [(p, np.flatnonzero(self.party == p)) for p in PARTIES]
        self.cm = cm
        self.sd = np.empty((len(_VARIABLES), self.rows.size))
        for v, (c, d) in enumerate(_VARIABLES):
            for p, idx in self.groups:
                self.sd[v, idx] = pm[(c, d, p)].residual_sd

    def means(self, pm: PerceptionModel) -> np.ndarray:
        out = np.empty((len(_VARIABLES), self.rows.size))
        for v, (c, d) in enumerate(_VARIABLES):
            for p, idx in self.groups:
                out[v, idx] = pm[(c, d, p)].mean(self.econ[idx], self.soc[idx])
        return out

    def noise(self, seed, draws: np.ndarray):
        k = draws.astype(np.uint64)[:, None, None]
        var = np.arange(len(_VARIABLES), dtype=np.uint64)[None, :, None]
        z = _rng.normals(seed, _rng.ELECTION_PERCEPTION, self.rows[None, None, :], k, var)
        u = _rng.uniforms(seed, _rng.ELECTION_VOTE, self.rows[None, :], draws.astype(np.uint64)[:, None])
        return z, u

    def shares(self, means: np.ndarray, z: np.ndarray, u: np.ndarray) -> np.ndarray:
        """Bush share per draw for one set of stage-1 means."""
        seen = means[None] + self.sd[None] * z
        col = {cd: seen[:, v] for v, cd in enumerate(_VARIABLES)}
        dist_e, dist_s = distances(self.econ, self.soc, col[("bush", "econ")], col[("kerry", "econ")],
                                   col[("bush", "soc")], col[("kerry", "soc")])
        p_bush = np.empty_like(dist_e)
        for p, idx in self.groups:
            p_bush[:, idx] = predict_logit(self.cm[p], dist_e[:, idx], dist_s[:, idx])
        return (u < p_bush).mean(axis=1)


def _result(per_draw: np.ndarray, n: int) -> ElectionResult:
    share = float(per_draw.mean())
    draws = per_draw.size
    if draws > 1:
        se = float(per_draw.std(ddof=1) / math.sqrt(draws))
    else:
        se = math.sqrt(share * (1 - share) / n)
    return ElectionResult(share, se, draws)


def _simulate_many(pm, cm, ds, shifts: Sequence[Optional[ShiftSpec]], draws, seed, workers):
    if draws < 1:
        raise ValueError(f"draws must be at least 1, got {draws}")
    seed = _rng.check_seed(seed)
    el = _Electorate(pm, cm, ds)
    means = [el.means(pm if s is None else apply_shift(pm, s)) for s in shifts]
    block = max(1, min(draws, _BLOCK_VALUES // (5 * el.rows.size)))
    starts = list(range(0, draws, block))

    def run(start):
        k = np.arange(start, min(start + block, draws))
        z, u = el.noise(seed, k)
        return np.stack([el.shares(m, z, u) for m in means], axis=1)

    if workers > 1 and len(starts) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, starts))
    else:
        parts = [run(s) for s in starts]
    per_draw = np.concatenate(parts, axis=0)
    return [_result(per_draw[:, j], el.rows.size) for j in range(len(shifts))]


def simulate_election(pm: PerceptionModel, cm: ChoiceModel, ds: SurveyDataset, draws: int = DEFAULT_DRAWS,
                      seed: int = 0, workers: int = 1) -> ElectionResult:
    """Bush's share among decided respondents, averaged over ``draws`` replicated elections.

    ``mc_se`` is the across-draw standard deviation over ``sqrt(draws)``
    (binomial for a single draw). The result does not depend on ``workers``.
    """
    return _simulate_many(pm, cm, ds, [None], draws, seed, workers)[0]


@dataclass(frozen=True)
class SweepResult:
    candidate: str
    shifts: List[ShiftSpec]
    results: List[ElectionResult]
    baseline: ElectionResult

    def shares(self) -> np.ndarray:
        return np.array([r.bush_share for r in self.results])

    def best_for_candidate(self):
        """Grid cell that is best for the moving candidate (min Bush share for Kerry, max for Bush)."""
        s = self.shares()
        k = int(np.argmin(s) if self.candidate == "kerry" else np.argmax(s))
        return self.shifts[k], self.results[k]

    def summary(self) -> dict:
        s = self.shares()
        hi, lo = int(np.argmax(s)), int(np.argmin(s))

        def cell(k):
            r = self.results[k]
            return {"delta_econ": self.shifts[k].delta_econ, "delta_soc": self.shifts[k].delta_soc,
                    "bush_share": r.bush_share, "mc_se": r.mc_se,
                    "change_vs_baseline": r.bush_share - self.baseline.bush_share}

        return {
            "candidate": self.candidate,
            "draws": self.baseline.draws,
            "baseline": {"bush_share": self.baseline.bush_share, "mc_se": self.baseline.mc_se},
            "argmax_bush_share": cell(hi),
            "argmin_bush_share": cell(lo),
            "max_abs_change": float(np.max(np.abs(s - self.baseline.bush_share))),
        }

    def to_csv(self, fh, header_lines=()) -> None:
        for line in header_lines:
            fh.write(f"# {line}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["delta_econ", "delta_soc", "bush_share", "mc_se", "draws", "baseline"])
        b = self.baseline
        w.writerow([repr(0.0), repr(0.0), repr(b.bush_share), repr(b.mc_se), b.draws, 1])
        for s, r in zip(self.shifts, self.results):
            w.writerow([repr(s.delta_econ), repr(s.delta_soc), repr(r.bush_share), repr(r.mc_se), r.draws, 0])

    def summary_json(self) -> str:
        return json.dumps(self.summary(), indent=2, sort_keys=True) + "\n"


def _sweep(pm, cm, ds, shifts, draws, seed, workers) -> SweepResult:
    if not any(s.delta_econ == 0 and s.delta_soc == 0 for s in shifts):
        raise ValueError("sweep grid must include the zero shift")
    res = _simulate_many(pm, cm, ds, [None] + list(shifts), draws, seed, workers)
    return SweepResult(shifts[0].candidate, list(shifts), res[1:], res[0])


def sweep_1d(pm: PerceptionModel, cm: ChoiceModel, ds: SurveyDataset, candidate: str, dimension: str,
             lo: float = -3.0, hi: float = 3.0, step: float = 0.25, draws: int = DEFAULT_DRAWS,
             seed: int = 0, workers: int = 1) -> SweepResult:
    """Move one candidate along one dimension over ``lo..hi`` (inclusive) in ``step`` increments."""
    if dimension not in DIMENSIONS:
        raise ValueError(f"dimension must be one of {DIMENSIONS}, got {dimension!r}")
    if not lo < hi:
        raise ValueError(f"need lo < hi, got [{lo}, {hi}]")
    key = "delta_econ" if dimension == "econ" else "delta_soc"
    shifts = [ShiftSpec(candidate, **{key: float(x)}) for x in grid_values(lo, hi, step)]
    return _sweep(pm, cm, ds, shifts, draws, seed, workers)


def sweep_2d(pm: PerceptionModel, cm: ChoiceModel, ds: SurveyDataset, candidate: str,
             econ_grid=(-3.0, 3.0, 0.5), soc_grid=(-3.0, 3.0, 0.5), draws: int = DEFAULT_DRAWS,
             seed: int = 0, workers: int = 1) -> SweepResult:
    """Move one candidate over the product of an economic and a social ``(lo, hi, step)`` grid.

    Cells are ordered economic-major.
    """
    for lo, hi, _ in (econ_grid, soc_grid):
        if not lo < hi:
            raise ValueError(f"need lo < hi, got [{lo}, {hi}]")
    shifts = [ShiftSpec(candidate, float(e), float(s))
              for e in grid_values(*econ_grid) for s in grid_values(*soc_grid)]
    return _sweep(pm, cm, ds, shifts, draws, seed, workers)


def run_shift(pm: PerceptionModel, cm: ChoiceModel, ds: SurveyDataset, shift: ShiftSpec,
              draws: int = DEFAULT_DRAWS, seed: int = 0, workers: int = 1) -> SweepResult:
    """A one-cell "sweep": the baseline and a single shift, on common random numbers."""
    base, moved = _simulate_many(pm, cm, ds, [None, shift], draws, seed, workers)
    return SweepResult(shift.candidate, [shift], [moved], base)
