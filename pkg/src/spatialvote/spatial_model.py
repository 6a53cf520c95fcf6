"""Vote shares, share-versus-position curves and party-position search.

D's share counts each voter who strictly prefers D as one vote and each
exact tie as half a vote. With perception noise, every voter sees both
parties displaced by independent N(0, sigma_j^2) errors per dimension and
per draw; the noise for (voter, draw, party, dimension) comes from a fixed
substream of the seed, so every point of a curve sees the same noise.
"""

import csv
import itertools
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from spatialvote import _rng
from spatialvote.electorate import Electorate
from spatialvote.geometry import DEFAULT_METRIC, Metric, d_support, ideal_point, relative_utility

# cap on (voters x draws x dims) values generated per noise block
_BLOCK_VALUES = 1 << 21


@dataclass(frozen=True)
class ShareEstimate:
    share: float
    mc_se: float
    n_voters: int
    draws: int = 1


@dataclass(frozen=True)
class NoiseConfig:
    """Perception noise: per-dimension sd (scalar broadcasts), draws per voter, seed."""

    sigma: Union[float, Sequence[float]] = 0.0
    draws: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.draws < 1:
            raise ValueError(f"draws must be at least 1, got {self.draws}")
        s = np.atleast_1d(np.asarray(self.sigma, dtype=float))
        if np.any(s < 0) or not np.all(np.isfinite(s)):
            raise ValueError(f"sigma must be finite and non-negative, got {s.tolist()}")
        _rng.check_seed(self.seed)

    def sigma_vector(self, d: int) -> np.ndarray:
        s = np.atleast_1d(np.asarray(self.sigma, dtype=float))
        if s.size == 1:
            return np.full(d, s[0])
        if s.size != d:
            raise ValueError(f"sigma has {s.size} entries but positions have dimension {d}")
        return s

    def is_degenerate(self) -> bool:
        return not np.any(np.asarray(self.sigma, dtype=float))


@dataclass(frozen=True)
class PositionGrid:
    """Regular grid over one coordinate, both endpoints included."""

    axis: int
    lo: float
    hi: float
    step: float

    def __post_init__(self):
        if not self.step > 0:
            raise ValueError(f"grid step must be positive, got {self.step}")
        if not self.lo < self.hi:
            raise ValueError(f"grid needs lo < hi, got [{self.lo}, {self.hi}]")
        if self.axis < 0:
            raise ValueError(f"grid axis must be non-negative, got {self.axis}")

    def values(self) -> np.ndarray:
        return grid_values(self.lo, self.hi, self.step)


def grid_values(lo: float, hi: float, step: float) -> np.ndarray:
    """``lo, lo+step, ...`` up to ``hi`` (inclusive within half a step), rounded to 1e-12."""
    k = int(math.floor((hi - lo) / step + 0.5))
    v = np.round(lo + step * np.arange(k + 1), 12)
    return v + 0.0  # no negative zeros


def _check_positions(e: Electorate, *positions):
    pts = [ideal_point(p) for p in positions]
    for p in pts:
        if p.size != e.dim:
            raise ValueError(f"position {p.tolist()} has dimension {p.size}, electorate has {e.dim}")
    return pts


def _shares(voters: np.ndarray, d_positions: np.ndarray, r_pos: np.ndarray, metric: Metric,
            shift: float, noise: Optional[NoiseConfig]):
    """D's share and MC standard error for each row of ``d_positions``."""
    n, d = voters.shape
    g = d_positions.shape[0]
    if noise is None or noise.is_degenerate():
        draws = 1 if noise is None else noise.draws
        total = np.empty(g)
        total_sq = np.empty(g)
        for k in range(g):
            o = d_support(relative_utility(voters, d_positions[k], r_pos, metric, shift))
            total[k] = o.sum()
            total_sq[k] = (o * o).sum()
        share = total / n
        var = np.maximum(total_sq / n - share**2, 0.0)
        return share, np.sqrt(var / (n * draws)), draws

    sigma = noise.sigma_vector(d)
    total = np.zeros(g)
    total_sq = np.zeros(g)
    block = max(1, min(noise.draws, _BLOCK_VALUES // max(1, n * d)))
    vi = np.arange(n, dtype=np.uint64)[:, None, None]
    dims = np.arange(d, dtype=np.uint64)[None, None, :]
    for start in range(0, noise.draws, block):
        kd = np.arange(start, min(start + block, noise.draws), dtype=np.uint64)[None, :, None]
        zd = _rng.normals(noise.seed, _rng.PERCEPTION, vi, kd, 0, dims) * sigma
        zr = _rng.normals(noise.seed, _rng.PERCEPTION, vi, kd, 1, dims) * sigma
        r_seen = r_pos + zr
        x = voters[:, None, :]
        for k in range(g):
            o = d_support(relative_utility(x, d_positions[k] + zd, r_seen, metric, shift))
            total[k] += o.sum()
            total_sq[k] += (o * o).sum()
    m = n * noise.draws
    share = total / m
    var = np.maximum(total_sq / m - share**2, 0.0)
    return share, np.sqrt(var / m), noise.draws


def _estimates(e, d_positions, r_pos, metric, shift, noise) -> List[ShareEstimate]:
    share, se, draws = _shares(e.voters, np.asarray(d_positions, dtype=float), r_pos, metric, shift, noise)
    return [ShareEstimate(float(s), float(q), e.n, draws) for s, q in zip(share, se)]


def vote_share(e: Electorate, d_pos, r_pos, metric: Metric = DEFAULT_METRIC,
               shift: float = 0.0) -> ShareEstimate:
    """D's share of ``e`` with both parties seen at their true positions."""
    d_pos, r_pos = _check_positions(e, d_pos, r_pos)
    return _estimates(e, d_pos[None, :], r_pos, metric, shift, None)[0]


def vote_share_noisy(e: Electorate, d_pos, r_pos, metric: Metric = DEFAULT_METRIC, shift: float = 0.0,
                     sigma=0.0, draws: int = 1, seed: int = 0) -> ShareEstimate:
    """D's share averaged over voters and ``draws`` noisy perceptions of both parties."""
    d_pos, r_pos = _check_positions(e, d_pos, r_pos)
    noise = NoiseConfig(sigma, draws, seed)
    return _estimates(e, d_pos[None, :], r_pos, metric, shift, noise)[0]


def share_curve(e: Electorate, r_pos, d_template, grid: PositionGrid, metric: Metric = DEFAULT_METRIC,
                shift: float = 0.0, noise: Optional[NoiseConfig] = None) -> List[Tuple[float, ShareEstimate]]:
    """D's share as its ``grid.axis`` coordinate sweeps the grid, other coordinates fixed.

    Args:
        e: electorate.
        r_pos: R's (fixed) position.
        d_template: D's position; its ``grid.axis`` coordinate is replaced.
        grid: positions to evaluate.
        metric, shift: utility specification.
        noise: optional perception noise, shared by every grid point.

    Returns:
        ``[(position, ShareEstimate), ...]`` in grid order.
    """
    d_template, r_pos = _check_positions(e, d_template, r_pos)
    if grid.axis >= e.dim:
        raise ValueError(f"grid axis {grid.axis} out of range for dimension {e.dim}")
    xs = grid.values()
    positions = np.repeat(d_template[None, :], xs.size, axis=0)
    positions[:, grid.axis] = xs
    est = _estimates(e, positions, r_pos, metric, shift, noise)
    return [(float(x), s) for x, s in zip(xs, est)]


def curve_argmax(curve) -> Tuple[float, ShareEstimate]:
    """First (smallest-position) point with the largest D share."""
    best = int(np.argmax([s.share for _, s in curve]))
    return curve[best]


def optimize_position(e: Electorate, r_pos, d_template, free_axes: Sequence[int],
                      bounds: Sequence[Tuple[float, float]], coarse_step: float = 0.1,
                      refine_rounds: int = 2, metric: Metric = DEFAULT_METRIC, shift: float = 0.0,
                      noise: Optional[NoiseConfig] = None) -> Tuple[np.ndarray, ShareEstimate]:
    """Coarse-to-fine grid search for D's share-maximising position.

    The free coordinates start on a ``coarse_step`` grid over ``bounds``;
    each refinement round searches +-1 old step around the incumbent at a
    ten times finer step, clipped to ``bounds``. Ties go to the
    lexicographically smallest coordinates (ordered by axis index).
    """
    d_template, r_pos = _check_positions(e, d_template, r_pos)
    if len(free_axes) == 0:
        raise ValueError("free_axes must name at least one axis")
    if len(free_axes) > 2:
        raise ValueError(f"at most two free axes are supported, got {len(free_axes)}")
    if len(bounds) != len(free_axes):
        raise ValueError("need one (lo, hi) bound per free axis")
    order = np.argsort(free_axes, kind="stable")
    axes = [int(free_axes[i]) for i in order]
    bounds = [tuple(map(float, bounds[i])) for i in order]
    if len(set(axes)) != len(axes) or any(a < 0 or a >= e.dim for a in axes):
        raise ValueError(f"invalid free axes {list(free_axes)} for dimension {e.dim}")
    for lo, hi in bounds:
        if not (np.isfinite(lo) and np.isfinite(hi) and lo < hi):
            raise ValueError(f"bounds must be finite with lo < hi, got ({lo}, {hi})")
    if not coarse_step > 0 or refine_rounds < 0:
        raise ValueError("coarse_step must be positive and refine_rounds non-negative")

    windows = bounds
    step = coarse_step
    best = None
    for rnd in range(refine_rounds + 1):
        axis_values = [grid_values(lo, hi, step) for lo, hi in windows]
        axis_values = [v[(v >= lo - 1e-12) & (v <= hi + 1e-12)] for v, (lo, hi) in zip(axis_values, bounds)]
        combos = np.array(list(itertools.product(*axis_values)))
        positions = np.repeat(d_template[None, :], len(combos), axis=0)
        positions[:, axes] = combos
        est = _estimates(e, positions, r_pos, metric, shift, noise)
        k = int(np.argmax([s.share for s in est]))
        best = (positions[k], est[k])
        if rnd < refine_rounds:
            windows = [(max(lo, c - step), min(hi, c + step)) for c, (lo, hi) in zip(combos[k], bounds)]
            step = step / 10.0
    return best


def write_curve_csv(rows, fh, header_lines=()) -> None:
    """Serialise ``(position, ShareEstimate)`` rows; position may be a scalar or a pair."""
    for line in header_lines:
        fh.write(f"# {line}\n")
    w = csv.writer(fh, lineterminator="\n")
    two = bool(rows) and np.ndim(rows[0][0]) == 1 and len(rows[0][0]) == 2
    w.writerow((["axis_value", "axis2_value"] if two else ["axis_value"]) + ["d_share", "mc_se", "n_voters", "draws"])
    for pos, s in rows:
        cells = [repr(float(p)) for p in pos] if two else [repr(float(pos))]
        w.writerow(cells + [repr(s.share), repr(s.mc_se), s.n_voters, s.draws])
