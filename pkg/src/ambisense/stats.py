"""Descriptive statistics and the two-model comparison tests.

Everything here is a pure function of its inputs. The Wilcoxon exact path
builds the null distribution of the signed-rank statistic by dynamic
programming over (doubled, hence integral) ranks, which is the same
distribution a full enumeration of sign assignments produces.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy import stats as _sps

from .records import TACTIC_ORDER

ALTERNATIVES = ("two-sided", "greater", "less")
EXACT_MAX_N = 20


class DegenerateSampleError(ValueError):
    pass


# -- descriptive ---------------------------------------------------------------


@dataclass(frozen=True)
class Summary:
    n: int
    mean: float
    sd: float
    median: float
    pct_above: float

    def to_dict(self) -> dict:
        sd = None if math.isnan(self.sd) else self.sd
        return {"n": self.n, "mean": self.mean, "sd": sd, "median": self.median, "pct_above": self.pct_above}


def describe(values: Iterable[float], threshold: float = 0.5) -> Summary:
    """Mean, sample SD (n-1), median and percentage strictly above ``threshold``.

    The SD of a single value is undefined and comes back as NaN.
    """
    x = np.asarray(list(values), dtype=float)
    if x.size == 0:
        raise ValueError("describe() needs at least one value")
    sd = float(np.std(x, ddof=1)) if x.size > 1 else float("nan")
    return Summary(
        n=int(x.size),
        mean=float(np.mean(x)),
        sd=sd,
        median=float(np.median(x)),
        pct_above=100.0 * float(np.count_nonzero(x > threshold)) / x.size,
    )


# -- Wilcoxon signed-rank --------------------------------------------------------


@dataclass(frozen=True)
class PairedSample:
    a: tuple[float, ...]
    b: tuple[float, ...]
    labels: tuple[str, str] = ("A", "B")

    def __post_init__(self):
        if len(self.a) != len(self.b):
            raise ValueError("paired sample needs equal lengths")
        for v in (*self.a, *self.b):
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"paired value {v} outside [0, 1]")

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[float, float]], labels: tuple[str, str] = ("A", "B")) -> "PairedSample":
        pairs = list(pairs)
        return cls(tuple(float(p[0]) for p in pairs), tuple(float(p[1]) for p in pairs), tuple(labels))

    def swapped(self) -> "PairedSample":
        return PairedSample(self.b, self.a, (self.labels[1], self.labels[0]))

    def __len__(self) -> int:
        return len(self.a)


@dataclass(frozen=True)
class WilcoxonResult:
    W: float
    p: float
    method: str
    n_effective: int
    alternative: str = "two-sided"
    zero_method: str = "wilcox"

    def to_dict(self) -> dict:
        return dict(vars(self))


def signed_ranks(diffs: Sequence[float], zero_method: str = "wilcox") -> tuple[np.ndarray, np.ndarray]:
    """Ranks of |d| (average ranks for ties) and the matching signs, zeros removed.

    With ``zero_method="pratt"`` zeros take part in the ranking and are
    dropped afterwards, so the remaining ranks start above them.
    """
    d = np.asarray(diffs, dtype=float)
    if zero_method == "wilcox":
        d = d[d != 0]
        ranks = _sps.rankdata(np.abs(d))
    elif zero_method == "pratt":
        ranks = _sps.rankdata(np.abs(d))
        keep = d != 0
        d, ranks = d[keep], ranks[keep]
    else:
        raise ValueError(f"zero_method must be 'wilcox' or 'pratt', not {zero_method!r}")
    return ranks, np.sign(d)


def exact_null_counts(ranks: Sequence[float]) -> np.ndarray:
    """Number of sign assignments giving each value of 2*W.

    Index ``k`` holds the count of assignments whose positive-rank sum is
    ``k / 2``. Average ranks are multiples of 1/2, so doubling keeps the
    support integral.
    """
    doubled = [int(round(2 * r)) for r in ranks]
    counts = np.zeros(sum(doubled) + 1)
    counts[0] = 1.0
    for r in doubled:
        # each rank is either absent or present in the positive set
        counts[r:] = counts[r:] + counts[: counts.size - r].copy()
    return counts


def _tail_probs(ranks: np.ndarray, w: float) -> tuple[float, float]:
    counts = exact_null_counts(ranks)
    total = counts.sum()
    k = int(round(2 * w))
    p_ge = counts[k:].sum() / total
    p_le = counts[: k + 1].sum() / total
    return float(p_ge), float(p_le)


def wilcoxon_signed_rank(
    sample: PairedSample,
    alternative: str = "two-sided",
    zero_method: str = "wilcox",
    exact_max_n: int = EXACT_MAX_N,
) -> WilcoxonResult:
    """Signed-rank test of ``a - b``; W is the sum of ranks of positive differences.

    ``greater`` tests whether ``a`` tends to exceed ``b``.
    """
    if alternative not in ALTERNATIVES:
        raise ValueError(f"alternative must be one of {ALTERNATIVES}")
    diffs = np.asarray(sample.a) - np.asarray(sample.b)
    ranks, signs = signed_ranks(diffs, zero_method)
    n = int(ranks.size)
    if n == 0:
        raise DegenerateSampleError("degenerate paired sample: every difference is zero")
    w = float(ranks[signs > 0].sum())

    if n <= exact_max_n:
        p_ge, p_le = _tail_probs(ranks, w)
        method = "exact"
    else:
        # moments of a sum of independent +-r/2 terms; with average ranks
        # this is the usual tie-corrected variance
        mean = float(ranks.sum()) / 2.0
        sd = math.sqrt(float((ranks**2).sum()) / 4.0)
        p_ge = float(_sps.norm.sf((w - mean - 0.5) / sd))
        p_le = float(_sps.norm.cdf((w - mean + 0.5) / sd))
        method = "normal-approx"

    if alternative == "greater":
        p = p_ge
    elif alternative == "less":
        p = p_le
    else:
        p = min(1.0, 2.0 * min(p_ge, p_le))
    return WilcoxonResult(w, min(1.0, max(0.0, p)), method, n, alternative, zero_method)


# -- chi-square on two proportions -------------------------------------------------


@dataclass(frozen=True)
class Chi2Result:
    statistic: float
    df: int
    p: float
    counts: tuple[tuple[int, int], tuple[int, int]]
    yates: bool = False

    def to_dict(self) -> dict:
        return {"statistic": self.statistic, "df": self.df, "p": self.p,
                "counts": [list(r) for r in self.counts], "yates": self.yates}


def chi2_proportions(k1: int, n1: int, k2: int, n2: int, yates: bool = False) -> Chi2Result:
    """Pearson chi-square for the table ``[[k1, n1-k1], [k2, n2-k2]]`` with df=1."""
    for k, n in ((k1, n1), (k2, n2)):
        if n <= 0:
            raise ValueError("group sizes must be positive")
        if not 0 <= k <= n:
            raise ValueError(f"count {k} outside [0, {n}]")
    table = np.array([[k1, n1 - k1], [k2, n2 - k2]], dtype=float)
    rows = table.sum(axis=1)
    cols = table.sum(axis=0)
    total = table.sum()
    for j, name in enumerate(("'hit' column (k1 + k2 = 0)", "'miss' column (every observation is a hit)")):
        if cols[j] == 0:
            raise ValueError(f"degenerate margin: {name} gives an expected count of zero")
    expected = np.outer(rows, cols) / total
    dev = np.abs(table - expected)
    if yates:
        dev = np.maximum(dev - 0.5, 0.0)
    stat = float((dev**2 / expected).sum())
    p = float(_sps.chi2.sf(stat, 1))
    counts = ((int(k1), int(n1 - k1)), (int(k2), int(n2 - k2)))
    return Chi2Result(stat, 1, p, counts, yates)


# -- aggregation and export ----------------------------------------------------------


def per_tactic_means(observations: Iterable) -> dict[str, dict[str, float]]:
    """tactic -> model -> mean trait probability, tactics in reporting order."""
    acc: dict[str, dict[str, list[float]]] = defaultdict(lambda: defaultdict(list))
    for obs in observations:
        acc[obs.tactic][obs.model].append(obs.trait_probability)
    known = [t for t in TACTIC_ORDER if t in acc]
    extra = sorted(t for t in acc if t not in TACTIC_ORDER)
    return {
        t: {m: float(np.mean(v)) for m, v in sorted(acc[t].items())}
        for t in known + extra
    }


@dataclass(frozen=True)
class Histogram:
    edges: tuple[float, ...]
    density: tuple[float, ...]


def histogram_density(values: Iterable[float], n_bins: int = 50) -> Histogram:
    """Density-normalised histogram on uniform bins over [0, 1]."""
    x = np.asarray(list(values), dtype=float)
    if x.size == 0:
        raise ValueError("histogram_density() needs at least one value")
    if n_bins < 1:
        raise ValueError("n_bins must be >= 1")
    if np.any((x < 0) | (x > 1)):
        raise ValueError("values must lie in [0, 1]")
    density, edges = np.histogram(x, bins=n_bins, range=(0.0, 1.0), density=True)
    return Histogram(tuple(float(e) for e in edges), tuple(float(d) for d in density))


def pair_observations(observations: Iterable, models: tuple[str, str] = ("ambiguity", "loss")) -> PairedSample:
    """Pair the two models' trait probabilities action by action.

    Actions are matched on (participant, seq); actions only one model
    scored are left out.
    """
    by_key: dict[tuple[str, int], dict[str, float]] = defaultdict(dict)
    for obs in observations:
        if obs.model in models:
            by_key[(obs.participant_id, obs.seq)][obs.model] = obs.trait_probability
    pairs = [(v[models[0]], v[models[1]]) for _, v in sorted(by_key.items()) if len(v) == 2]
    return PairedSample.from_pairs(pairs, models)
