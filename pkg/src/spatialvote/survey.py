"""Survey data: issue scales, respondent records, distance covariates, CSV I/O
and a synthetic-survey generator with known ground truth.

A :class:`SurveyDataset` stores one numpy column per field so that large
synthetic surveys stay cheap; :meth:`SurveyDataset.respondents` gives the
record view. Missing placements are NaN.
"""

import csv
import hashlib
import io
import json
from dataclasses import dataclass, field, replace
from typing import Dict, List, Mapping, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from scipy.special import expit

from spatialvote import _rng

PARTIES = ("D", "I", "R")
CANDIDATES = ("bush", "kerry")
DIMENSIONS = ("econ", "soc")
VOTES = ("bush", "kerry", "none")

PLACEMENTS = ("econ_self", "soc_self", "econ_bush", "econ_kerry", "soc_bush", "soc_kerry")
CSV_COLUMNS = ("party_id",) + PLACEMENTS + ("vote",)


@dataclass(frozen=True)
class IssueScale:
    name: str
    n_items: int
    lo: int
    hi: int

    def __post_init__(self):
        if self.lo != -self.hi or self.hi <= 0:
            raise ValueError(f"scale bounds must be symmetric about 0, got [{self.lo}, {self.hi}]")
        if self.n_items < 1:
            raise ValueError("a scale needs at least one item")

    def contains(self, x):
        x = np.asarray(x, dtype=float)
        return (x >= self.lo) & (x <= self.hi)


ECON_SCALE = IssueScale("econ", 3, -9, 9)
SOC_SCALE = IssueScale("soc", 3, -8, 8)


class Respondent(NamedTuple):
    party_id: str
    econ_self: float
    soc_self: float
    econ_bush: float
    econ_kerry: float
    soc_bush: float
    soc_kerry: float
    vote: str


@dataclass
class IngestionReport:
    """Row-level problems found while building or loading a survey.

    ``rejected`` rows were dropped; ``flagged`` rows were kept with a
    missing (NaN) placement. Row numbers count data lines from 1.
    """

    rejected: List[Tuple[int, str]] = field(default_factory=list)
    flagged: List[Tuple[int, str]] = field(default_factory=list)

    def __bool__(self):
        return bool(self.rejected or self.flagged)


def _column(values, dtype=float):
    a = np.array(values, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class SurveyDataset:
    party_id: np.ndarray
    econ_self: np.ndarray
    soc_self: np.ndarray
    econ_bush: np.ndarray
    econ_kerry: np.ndarray
    soc_bush: np.ndarray
    soc_kerry: np.ndarray
    vote: np.ndarray
    scales: Tuple[IssueScale, IssueScale] = (ECON_SCALE, SOC_SCALE)
    provenance: str = ""

    def __post_init__(self):
        n = len(self.party_id)
        object.__setattr__(self, "party_id", _column(self.party_id, dtype="<U1"))
        object.__setattr__(self, "vote", _column(self.vote, dtype="<U5"))
        for name in PLACEMENTS:
            col = _column(getattr(self, name))
            if col.shape != (n,):
                raise ValueError(f"column {name} has shape {col.shape}, expected ({n},)")
            object.__setattr__(self, name, col)
        if self.vote.shape != (n,):
            raise ValueError("vote column length does not match party_id")
        bad = set(np.unique(self.party_id)) - set(PARTIES)
        if bad:
            raise ValueError(f"unknown party_id values {sorted(bad)}")
        bad = set(np.unique(self.vote)) - set(VOTES)
        if bad:
            raise ValueError(f"unknown vote values {sorted(bad)}")

    def __len__(self):
        return len(self.party_id)

    @classmethod
    def from_respondents(cls, respondents: Sequence[Respondent], **kw) -> "SurveyDataset":
        cols = list(zip(*respondents)) if respondents else [()] * len(CSV_COLUMNS)
        return cls(*cols, **kw)

    def respondents(self) -> List[Respondent]:
        cols = [self.party_id.tolist()] + [getattr(self, p).tolist() for p in PLACEMENTS] + [self.vote.tolist()]
        return [Respondent(*row) for row in zip(*cols)]

    def placement(self, candidate: str, dimension: str) -> np.ndarray:
        return getattr(self, f"{dimension}_{candidate}")

    def self_placements(self) -> np.ndarray:
        return np.column_stack([self.econ_self, self.soc_self])

    def complete(self) -> np.ndarray:
        """Rows with all six placements present."""
        return np.all(np.isfinite(np.column_stack([getattr(self, p) for p in PLACEMENTS])), axis=1)

    def stage2_mask(self) -> np.ndarray:
        """Rows usable for the vote-choice fit: a Bush/Kerry vote and complete placements."""
        return (self.vote != "none") & self.complete()

    def subset(self, mask) -> "SurveyDataset":
        cols = {p: getattr(self, p)[mask] for p in ("party_id",) + PLACEMENTS + ("vote",)}
        return replace(self, **cols)

    def to_csv(self, fh, header_lines=()) -> None:
        for line in header_lines:
            fh.write(f"# {line}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in self.respondents():
            cells = [r.party_id] + ["" if np.isnan(v) else repr(float(v)) for v in r[1:7]] + [r.vote]
            w.writerow(cells)


def distances(econ_self, soc_self, econ_bush, econ_kerry, soc_bush, soc_kerry):
    """Squared distance to Bush minus squared distance to Kerry, per dimension.

    Positive means the respondent is farther from Bush than from Kerry.
    Works elementwise on arrays; any NaN placement gives a NaN distance.
    """
    dist_e = (np.subtract(econ_bush, econ_self) ** 2) - (np.subtract(econ_kerry, econ_self) ** 2)
    dist_s = (np.subtract(soc_bush, soc_self) ** 2) - (np.subtract(soc_kerry, soc_self) ** 2)
    return dist_e, dist_s


def respondent_distances(r: Respondent) -> Tuple[float, float]:
    e, s = distances(r.econ_self, r.soc_self, r.econ_bush, r.econ_kerry, r.soc_bush, r.soc_kerry)
    if np.isnan(e) or np.isnan(s):
        raise ValueError("respondent has a missing placement")
    return float(e), float(s)


def dataset_distances(ds: SurveyDataset):
    return distances(ds.econ_self, ds.soc_self, ds.econ_bush, ds.econ_kerry, ds.soc_bush, ds.soc_kerry)


def build_scales(items: Mapping[str, Sequence[Sequence[Optional[float]]]],
                 scales: Tuple[IssueScale, IssueScale] = (ECON_SCALE, SOC_SCALE)):
    """Sum item scores into scale placements.

    Args:
        items: maps a placement name (``"econ_self"``, ``"soc_kerry"``, ...)
            to per-respondent rows of item scores, one row per respondent.
            ``None`` or NaN marks a missing item.
        scales: economic and social scales; their ``n_items`` fix the row width.

    Returns:
        ``(placements, report)`` where ``placements`` maps each name to a
        float array (NaN where an item was missing or the sum fell outside
        the scale) and ``report`` flags those cells by respondent number.
    """
    by_dim = {s.name: s for s in scales}
    out = {}
    report = IngestionReport()
    for name, rows in items.items():
        dim = name.split("_", 1)[0]
        if dim not in by_dim or name not in PLACEMENTS:
            raise ValueError(f"unknown placement {name!r}")
        scale = by_dim[dim]
        a = np.array([[np.nan if v is None else v for v in row] for row in rows], dtype=float)
        a = a.reshape(len(rows), -1) if len(rows) else np.empty((0, scale.n_items))
        if a.shape[1] != scale.n_items:
            raise ValueError(f"{name}: expected {scale.n_items} items per respondent, got {a.shape[1]}")
        total = a.sum(axis=1)
        for i in np.flatnonzero(np.isnan(total)):
            report.flagged.append((int(i) + 1, f"{name}: missing item"))
        outside = np.isfinite(total) & ~scale.contains(np.nan_to_num(total))
        for i in np.flatnonzero(outside):
            report.flagged.append((int(i) + 1, f"{name}: sum {total[i]:g} outside [{scale.lo}, {scale.hi}]"))
        total[outside] = np.nan
        out[name] = total
    return out, report


def load_survey(source, scales: Tuple[IssueScale, IssueScale] = (ECON_SCALE, SOC_SCALE),
                provenance: Optional[str] = None):
    """Read a survey CSV (``#`` comment lines allowed) into a dataset and report.

    Rows with an unknown party or vote, an unparseable placement, or a
    missing/out-of-range self-placement are rejected. Missing candidate
    placements are kept as NaN and flagged.
    """
    if isinstance(source, str):
        provenance = provenance or "<string>"
        source = io.StringIO(source)
    lines = [ln for ln in source if not ln.startswith("#") and ln.strip()]
    reader = csv.reader(lines)
    header = next(reader, None)
    if header is None:
        raise ValueError("survey file is empty")
    header = [h.strip() for h in header]
    missing = [c for c in CSV_COLUMNS if c not in header]
    if missing:
        raise ValueError(f"survey file is missing columns: {', '.join(missing)}")
    pos = {c: header.index(c) for c in CSV_COLUMNS}
    econ, soc = scales
    report = IngestionReport()
    rows = []
    for rownum, raw in enumerate(reader, start=1):
        try:
            cells = {c: raw[pos[c]].strip() for c in CSV_COLUMNS}
        except IndexError:
            report.rejected.append((rownum, "too few fields"))
            continue
        if cells["party_id"] not in PARTIES:
            report.rejected.append((rownum, f"party_id {cells['party_id']!r} not in {PARTIES}"))
            continue
        if cells["vote"] not in VOTES:
            report.rejected.append((rownum, f"vote {cells['vote']!r} not in {VOTES}"))
            continue
        values = {}
        problem = None
        for c in PLACEMENTS:
            text = cells[c]
            if text == "" or text.lower() == "nan":
                values[c] = np.nan
                continue
            try:
                values[c] = float(text)
            except ValueError:
                problem = f"{c} {text!r} is not a number"
                break
            if not np.isfinite(values[c]):
                problem = f"{c} {text!r} is not finite"
                break
        if problem is None:
            for c, scale in (("econ_self", econ), ("soc_self", soc)):
                if np.isnan(values[c]):
                    problem = f"{c} missing"
                elif not scale.contains(values[c]):
                    problem = f"{c}={values[c]:g} outside [{scale.lo}, {scale.hi}]"
                if problem:
                    break
        if problem:
            report.rejected.append((rownum, problem))
            continue
        for c in PLACEMENTS[2:]:
            if np.isnan(values[c]):
                report.flagged.append((rownum, f"{c} missing"))
        rows.append(Respondent(cells["party_id"], *(values[c] for c in PLACEMENTS), cells["vote"]))
    if provenance is None:
        provenance = getattr(source, "name", "<stream>")
    ds = SurveyDataset.from_respondents(rows, scales=scales, provenance=provenance)
    return ds, report


# ---------------------------------------------------------------------------
# synthetic surveys


class Stage1Truth(NamedTuple):
    intercept: float
    coef_econ_self: float
    coef_soc_self: float
    residual_sd: float


class Stage2Truth(NamedTuple):
    intercept: float
    coef_dist_e: float
    coef_dist_s: float


def _default_stage1():
    # (candidate, dimension) -> party -> truth; own-party candidate tracks the
    # respondent, the other candidate is pushed away along economics
    t = {
        ("bush", "econ"): {"D": (4.0, -0.30, -0.05, 2.5), "I": (3.0, 0.10, -0.05, 2.5), "R": (2.5, 0.40, -0.05, 2.5)},
        ("kerry", "econ"): {"D": (-1.5, 0.40, 0.05, 2.5), "I": (-1.5, 0.10, 0.05, 2.5), "R": (-3.0, -0.30, 0.00, 2.5)},
        ("bush", "soc"): {"D": (2.0, -0.20, 0.00, 2.5), "I": (1.5, 0.00, 0.20, 2.5), "R": (1.0, 0.00, 0.50, 2.5)},
        ("kerry", "soc"): {"D": (-1.0, 0.00, 0.50, 2.5), "I": (-1.0, 0.00, 0.20, 2.5), "R": (-2.0, -0.30, 0.00, 2.5)},
    }
    return {(c, d, p): Stage1Truth(*v) for (c, d), per in t.items() for p, v in per.items()}


def _default_stage2():
    return {
        "D": Stage2Truth(-1.32, -0.05, -0.04),
        "I": Stage2Truth(0.38, -0.05, 0.02),
        "R": Stage2Truth(2.30, -0.03, -0.02),
    }


@dataclass(frozen=True)
class SynthConfig:
    """Ground truth for :func:`synth_survey`.

    ``stage1`` maps ``(candidate, dimension, party)`` to the perceived-position
    regression; ``stage2`` maps party to the vote-choice logit. Self-placements
    are bivariate normal per party (``self_mean[party]``, common ``self_sd`` and
    ``self_rho``), rounded to integers when ``discretize`` and clipped to the
    scales.
    """

    stage1: Dict[Tuple[str, str, str], Stage1Truth] = field(default_factory=_default_stage1)
    stage2: Dict[str, Stage2Truth] = field(default_factory=_default_stage2)
    sizes: Dict[str, int] = field(default_factory=lambda: {"D": 600, "I": 300, "R": 500})
    self_mean: Dict[str, Tuple[float, float]] = field(
        default_factory=lambda: {"D": (-1.5, -1.0), "I": (0.0, 0.0), "R": (2.0, 1.5)})
    self_sd: Tuple[float, float] = (3.0, 3.0)
    self_rho: float = 0.5
    discretize: bool = True
    scales: Tuple[IssueScale, IssueScale] = (ECON_SCALE, SOC_SCALE)

    def validate(self) -> None:
        for c in CANDIDATES:
            for d in DIMENSIONS:
                for p in PARTIES:
                    t = self.stage1.get((c, d, p))
                    if t is None:
                        raise ValueError(f"stage1 truth missing for {c}/{d}/{p}")
                    if not all(np.isfinite(t)) or t.residual_sd < 0:
                        raise ValueError(f"stage1 {c}/{d}/{p}: residual_sd must be >= 0 and values finite")
        for p in PARTIES:
            if p not in self.stage2 or not all(np.isfinite(self.stage2[p])):
                raise ValueError(f"stage2 truth missing or non-finite for party {p}")
            if self.sizes.get(p, 0) < 30:
                raise ValueError(f"group size for {p} must be at least 30, got {self.sizes.get(p)}")
            if p not in self.self_mean:
                raise ValueError(f"self_mean missing for party {p}")
        if min(self.self_sd) <= 0 or not -1 < self.self_rho < 1:
            raise ValueError("self_sd must be positive and -1 < self_rho < 1")

    def digest(self) -> str:
        return hashlib.sha256(json.dumps(config_to_dict(self), sort_keys=True).encode()).hexdigest()


def synth_survey(config: Optional[SynthConfig] = None, seed: int = 0) -> SurveyDataset:
    """Generate a survey from known stage-1 and stage-2 truth.

    Rows are grouped by party in D, I, R order. Perceived candidate
    placements are not clamped to the scales. Every random quantity of
    respondent ``i`` comes from substreams keyed by ``(seed, i)``.
    """
    config = config or SynthConfig()
    config.validate()
    seed = _rng.check_seed(seed)
    econ, soc = config.scales
    group = np.concatenate([np.full(config.sizes[p], k) for k, p in enumerate(PARTIES)])
    party = np.array(PARTIES)[group]
    n = party.size
    idx = np.arange(n, dtype=np.uint64)

    z = _rng.normals(seed, _rng.SURVEY_SELF, idx[:, None], np.arange(2, dtype=np.uint64)[None, :])
    rho = config.self_rho
    z2 = rho * z[:, 0] + np.sqrt(1 - rho * rho) * z[:, 1]
    means = np.array([config.self_mean[p] for p in PARTIES])[group]
    e_self = means[:, 0] + config.self_sd[0] * z[:, 0]
    s_self = means[:, 1] + config.self_sd[1] * z2
    if config.discretize:
        e_self, s_self = np.rint(e_self), np.rint(s_self)
    e_self = np.clip(e_self, econ.lo, econ.hi) + 0.0
    s_self = np.clip(s_self, soc.lo, soc.hi) + 0.0

    perceived = {}
    for k, (c, d) in enumerate((c, d) for c in CANDIDATES for d in DIMENSIONS):
        eps = _rng.normals(seed, _rng.SURVEY_PERCEPTION, idx, k)
        coefs = np.array([config.stage1[(c, d, p)] for p in PARTIES])[group]
        perceived[(c, d)] = coefs[:, 0] + coefs[:, 1] * e_self + coefs[:, 2] * s_self + coefs[:, 3] * eps

    dist_e, dist_s = distances(e_self, s_self, perceived[("bush", "econ")], perceived[("kerry", "econ")],
                               perceived[("bush", "soc")], perceived[("kerry", "soc")])
    b = np.array([config.stage2[p] for p in PARTIES])[group]
    p_bush = expit(b[:, 0] + b[:, 1] * dist_e + b[:, 2] * dist_s)
    u = _rng.uniforms(seed, _rng.SURVEY_VOTE, idx)
    vote = np.where(u < p_bush, "bush", "kerry")

    return SurveyDataset(party, e_self, s_self, perceived[("bush", "econ")], perceived[("kerry", "econ")],
                         perceived[("bush", "soc")], perceived[("kerry", "soc")], vote,
                         scales=config.scales, provenance=f"synth:{config.digest()}:seed={seed}")


# ---------------------------------------------------------------------------
# flat key-value generator configs

CONFIG_HELP = """\
Generator config: one `key = value` per line, `#` starts a comment.
  size.<party>                       group size (party in D, I, R), >= 30
  stage1.<cand>.<dim>.<party>        intercept coef_econ_self coef_soc_self residual_sd
  stage2.<party>                     intercept coef_dist_e coef_dist_s
  self.mean.<party>                  econ soc
  self.sd                            econ soc
  self.rho                           correlation of self-placements
  self.discretize                    true | false (round self-placements)
cand in {bush, kerry}, dim in {econ, soc}. Unspecified keys keep their defaults.
"""


def _fmt(values) -> str:
    return " ".join(repr(float(v)) for v in values)


def config_to_dict(config: SynthConfig) -> Dict[str, str]:
    out = {f"size.{p}": str(config.sizes[p]) for p in PARTIES}
    for (c, d, p), t in sorted(config.stage1.items()):
        out[f"stage1.{c}.{d}.{p}"] = _fmt(t)
    for p in PARTIES:
        out[f"stage2.{p}"] = _fmt(config.stage2[p])
        out[f"self.mean.{p}"] = _fmt(config.self_mean[p])
    out["self.sd"] = _fmt(config.self_sd)
    out["self.rho"] = repr(float(config.self_rho))
    out["self.discretize"] = "true" if config.discretize else "false"
    return out


def format_config(config: SynthConfig) -> str:
    return "".join(f"{k} = {v}\n" for k, v in config_to_dict(config).items())


def apply_config_entries(entries: Mapping[str, str], base: Optional[SynthConfig] = None) -> SynthConfig:
    """Return ``base`` (default config if None) with flat ``key -> value`` entries applied."""
    base = base or SynthConfig()
    stage1, stage2 = dict(base.stage1), dict(base.stage2)
    sizes, self_mean = dict(base.sizes), dict(base.self_mean)
    self_sd, self_rho, discretize = base.self_sd, base.self_rho, base.discretize

    def nums(key, text, k):
        try:
            vals = tuple(float(x) for x in text.replace(",", " ").split())
        except ValueError:
            raise ValueError(f"{key}: expected {k} numbers, got {text!r}") from None
        if len(vals) != k:
            raise ValueError(f"{key}: expected {k} numbers, got {len(vals)}")
        return vals

    for key, text in entries.items():
        parts = key.split(".")
        if parts[0] == "size" and len(parts) == 2 and parts[1] in PARTIES:
            sizes[parts[1]] = int(text)
        elif (parts[0] == "stage1" and len(parts) == 4 and parts[1] in CANDIDATES
              and parts[2] in DIMENSIONS and parts[3] in PARTIES):
            stage1[(parts[1], parts[2], parts[3])] = Stage1Truth(*nums(key, text, 4))
        elif parts[0] == "stage2" and len(parts) == 2 and parts[1] in PARTIES:
            stage2[parts[1]] = Stage2Truth(*nums(key, text, 3))
        elif key.startswith("self.mean.") and len(parts) == 3 and parts[2] in PARTIES:
            self_mean[parts[2]] = nums(key, text, 2)
        elif key == "self.sd":
            self_sd = nums(key, text, 2)
        elif key == "self.rho":
            self_rho = float(text)
        elif key == "self.discretize":
            if text.strip().lower() not in ("true", "false"):
                raise ValueError(f"self.discretize must be true or false, got {text!r}")
            discretize = text.strip().lower() == "true"
        else:
            raise ValueError(f"unknown config key {key!r}")
    cfg = SynthConfig(stage1, stage2, sizes, self_mean, self_sd, self_rho, discretize, base.scales)
    cfg.validate()
    return cfg


def parse_config(text: str, base: Optional[SynthConfig] = None) -> SynthConfig:
    entries = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"config line {lineno}: expected `key = value`")
        k, v = line.split("=", 1)
        entries[k.strip()] = v.strip()
    return apply_config_entries(entries, base)
