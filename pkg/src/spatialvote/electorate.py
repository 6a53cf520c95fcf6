"""Equicorrelated normal electorates and the small kernels behind them."""

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import ndtr

from spatialvote import _rng


@dataclass(frozen=True)
class CorrelationSpec:
    """Unit-variance normal voters with a common pairwise correlation ``rho``.

    For ``dim == 1`` the correlation is irrelevant and any placeholder is
    accepted.
    """

    dim: int
    rho: float = 0.0

    def __post_init__(self):
        if int(self.dim) != self.dim or self.dim < 1:
            raise ValueError(f"dim must be a positive integer, got {self.dim}")
        if self.dim > 1:
            lo = -1.0 / (self.dim - 1)
            if not (lo < self.rho < 1.0):
                raise ValueError(
                    f"rho={self.rho} gives a matrix that is not positive definite; "
                    f"for dim={self.dim} rho must lie in ({lo:g}, 1)"
                )


def equicorrelation_matrix(spec: CorrelationSpec) -> np.ndarray:
    m = np.full((spec.dim, spec.dim), float(spec.rho))
    np.fill_diagonal(m, 1.0)
    return m


def cholesky_lower(m) -> np.ndarray:
    """Lower-triangular ``L`` with ``L @ L.T == m`` (Cholesky-Banachiewicz).

    Raises ``ValueError`` on a non-symmetric input or a non-positive pivot.
    """
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    if not np.allclose(m, m.T, rtol=0, atol=1e-12):
        raise ValueError("matrix is not symmetric")
    n = m.shape[0]
    L = np.zeros_like(m)
    for i in range(n):
        for j in range(i + 1):
            s = m[i, j] - L[i, :j] @ L[j, :j]
            if i == j:
                if s <= 0.0:
                    raise ValueError(f"matrix is not positive definite (pivot {i} is {s:g})")
                L[i, i] = math.sqrt(s)
            else:
                L[i, j] = s / L[j, j]
    return L


def std_normal_cdf(x):
    """Standard normal CDF, vectorised."""
    return ndtr(x)


@dataclass(frozen=True, eq=False)
class Electorate:
    """A sampled population: ``voters`` has shape ``(n, d)``."""

    voters: np.ndarray
    spec: Optional[CorrelationSpec] = None
    seed: Optional[int] = None

    def __post_init__(self):
        v = np.asarray(self.voters, dtype=float)
        if v.ndim == 1:
            v = v[:, None]
        if v.ndim != 2 or v.shape[0] < 1:
            raise ValueError("an electorate needs at least one voter")
        if self.spec is not None and v.shape[1] != self.spec.dim:
            raise ValueError(f"voters have dimension {v.shape[1]} but spec says {self.spec.dim}")
        v.setflags(write=False)
        object.__setattr__(self, "voters", v)

    @property
    def n(self) -> int:
        return self.voters.shape[0]

    @property
    def dim(self) -> int:
        return self.voters.shape[1]

    def __len__(self):
        return self.n


def _sample_block(seed, L, start, stop):
    idx = np.arange(start, stop, dtype=np.uint64)[:, None]
    dims = np.arange(L.shape[0], dtype=np.uint64)[None, :]
    z = _rng.normals(seed, _rng.ELECTORATE, idx, dims)
    return z @ L.T


def sample_electorate(spec: CorrelationSpec, n: int, seed: int = 0, workers: int = 1,
                      chunk: int = 65536) -> Electorate:
    """Draw ``n`` voters i.i.d. from N(0, equicorrelation(spec)).

    Voter ``i`` depends only on ``(seed, i)``, so the result is the same for
    any ``workers`` or ``chunk`` and a smaller ``n`` yields a prefix.
    """
    if n < 1:
        raise ValueError(f"n must be at least 1, got {n}")
    seed = _rng.check_seed(seed)
    L = cholesky_lower(equicorrelation_matrix(spec))
    bounds = [(s, min(s + chunk, n)) for s in range(0, n, chunk)]
    if workers > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            blocks = list(pool.map(lambda b: _sample_block(seed, L, *b), bounds))
    else:
        blocks = [_sample_block(seed, L, *b) for b in bounds]
    return Electorate(np.concatenate(blocks), spec, seed)


def write_electorate_csv(e: Electorate, fh, header_lines=()) -> None:
    """Write voters as CSV with header ``v0,...,v{d-1}`` and round-trip float precision."""
    for line in header_lines:
        fh.write(f"# {line}\n")
    if e.spec is not None:
        fh.write(f"# dim={e.spec.dim} rho={e.spec.rho!r}\n")
    if e.seed is not None:
        fh.write(f"# seed={e.seed}\n")
    w = csv.writer(fh, lineterminator="\n")
    w.writerow([f"v{j}" for j in range(e.dim)])
    for row in e.voters:
        w.writerow([repr(float(x)) for x in row])


def read_electorate_csv(fh) -> Electorate:
    """Inverse of :func:`write_electorate_csv`; ``#`` comment lines are skipped."""
    if isinstance(fh, str):
        fh = io.StringIO(fh)
    meta = {}
    body = []
    for line in fh:
        if line.startswith("#"):
            for tok in line[1:].split():
                if "=" in tok:
                    k, v = tok.split("=", 1)
                    meta[k] = v
        elif line.strip():
            body.append(line)
    rows = list(csv.reader(body))
    if not rows:
        raise ValueError("electorate file has no header")
    header = rows[0]
    expected = [f"v{j}" for j in range(len(header))]
    if header != expected:
        raise ValueError(f"electorate header must be {','.join(expected)}, got {','.join(header)}")
    voters = np.array([[float(x) for x in r] for r in rows[1:]], dtype=float).reshape(-1, len(header))
    spec = None
    if "dim" in meta and "rho" in meta:
        spec = CorrelationSpec(int(meta["dim"]), float(meta["rho"]))
    seed = int(meta["seed"]) if "seed" in meta else None
    return Electorate(voters, spec, seed)
