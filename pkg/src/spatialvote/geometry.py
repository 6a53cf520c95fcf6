"""Positions, distance metrics and relative spatial utility.

Positions are plain float arrays whose last axis indexes issue dimensions
(dimension 0 is the economic one by convention). All functions broadcast
over leading axes, so a ``(n, d)`` array of voters can be scored against a
pair of party positions in one call.
"""

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

SQUARED_EUCLIDEAN = "squared-euclidean"
ABSOLUTE_VALUE = "absolute-value"
METRIC_KINDS = (SQUARED_EUCLIDEAN, ABSOLUTE_VALUE)

TIE_RULES = ("split", "D", "R")


def ideal_point(coords) -> np.ndarray:
    """Validate and return a position as a 1-D float array."""
    x = np.atleast_1d(np.asarray(coords, dtype=float))
    if x.ndim != 1 or x.size < 1:
        raise ValueError(f"an ideal point needs at least one coordinate, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError(f"ideal point coordinates must be finite, got {x.tolist()}")
    return x


@dataclass(frozen=True)
class Metric:
    """Distance between positions: weighted squared-Euclidean or weighted L1.

    ``weights=None`` means every dimension counts once, whatever ``d`` is.
    """

    kind: str = SQUARED_EUCLIDEAN
    weights: Optional[Sequence[float]] = field(default=None)

    def __post_init__(self):
        if self.kind not in METRIC_KINDS:
            raise ValueError(f"unknown metric kind {self.kind!r}; expected one of {METRIC_KINDS}")
        if self.weights is not None:
            w = tuple(float(x) for x in self.weights)
            if not w or not all(np.isfinite(x) and x > 0 for x in w):
                raise ValueError(f"metric weights must be positive and finite, got {w}")
            object.__setattr__(self, "weights", w)

    def weight_vector(self, d: int) -> np.ndarray:
        if self.weights is None:
            return np.ones(d)
        if len(self.weights) != d:
            raise ValueError(f"metric has {len(self.weights)} weights but positions have dimension {d}")
        return np.asarray(self.weights)


DEFAULT_METRIC = Metric()


def _common_dim(*arrays) -> int:
    dims = {np.shape(a)[-1] for a in arrays}
    if len(dims) != 1:
        raise ValueError(f"dimension mismatch: {sorted(dims)}")
    return dims.pop()


def distance(a, b, metric: Metric = DEFAULT_METRIC):
    """Weighted distance between positions ``a`` and ``b`` (broadcast over leading axes).

    >>> float(distance([0, 0], [2, 1]))
    5.0
    >>> float(distance([0, 0], [2, 1], Metric(ABSOLUTE_VALUE)))
    3.0
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.ndim == 0 or b.ndim == 0:
        raise ValueError("positions must have a trailing dimension axis")
    w = metric.weight_vector(_common_dim(a, b))
    diff = a - b
    if metric.kind == SQUARED_EUCLIDEAN:
        return np.sum(w * (diff * diff), axis=-1)
    return np.sum(w * np.abs(diff), axis=-1)


def relative_utility(voter, d_pos, r_pos, metric: Metric = DEFAULT_METRIC, shift: float = 0.0):
    """Utility of D minus utility of R: ``dist(voter, R) - dist(voter, D) + shift``.

    Positive values mean the voter prefers D. ``shift`` is the valence
    advantage of D (negative for an R advantage).
    """
    if not np.isfinite(shift):
        raise ValueError(f"valence shift must be finite, got {shift}")
    return distance(voter, r_pos, metric) - distance(voter, d_pos, metric) + shift


def d_support(utility, tie_rule: str = "split"):
    """Map relative utilities to D's vote weight: 1, 0, or the tie value at exactly 0."""
    if tie_rule not in TIE_RULES:
        raise ValueError(f"unknown tie rule {tie_rule!r}; expected one of {TIE_RULES}")
    tie = {"split": 0.5, "D": 1.0, "R": 0.0}[tie_rule]
    u = np.asarray(utility)
    return np.where(u > 0, 1.0, np.where(u < 0, 0.0, tie))


def preferred_party(voter, d_pos, r_pos, metric: Metric = DEFAULT_METRIC, shift: float = 0.0,
                    tie_rule: str = "split") -> str:
    """Return ``"D"``, ``"R"`` or ``"split"`` for a single voter."""
    u = float(relative_utility(ideal_point(voter), ideal_point(d_pos), ideal_point(r_pos), metric, shift))
    if u > 0:
        return "D"
    if u < 0:
        return "R"
    if tie_rule not in TIE_RULES:
        raise ValueError(f"unknown tie rule {tie_rule!r}; expected one of {TIE_RULES}")
    return tie_rule
