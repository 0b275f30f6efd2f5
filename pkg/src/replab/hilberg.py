"""Power-law growth exponents and the two empirical growth laws.

The Hilberg exponent of a positive sequence a_k is the limsup of
max(0, log a_k / log k): it measures asymptotic power-law growth while
ignoring multiplicative constants.  A finite window cannot certify a
limsup, so two estimators are always reported together:

* tail_max     max over the window of the pointwise ratio (an upper
  envelope; biased upward by constants, shrinking as the window moves out),
* regression   the slope of log a_k on log k (constant-blind; exact on pure
  power laws).

The growth laws fitted to measured curves are the log-power law for the
maximal repetition length, L2_n ~ C (log n)^alpha, and the stretched
exponential for the repetition time, log R2_k ~ C k^beta.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .seqstat import CurveKind, StatCurve, SymbolSeq, compute_curve, \
    recurrence_time, repetition_time
from .sources import Source, as_seed
from .entropy import _log_prob_rows

MIN_WINDOW_POINTS = 8
MIN_FIT_POINTS = 10

STATISTIC_KINDS = ("L1", "L2", "R1", "R2", "neglogp")


@dataclass(frozen=True)
class HilbergFit:
    exponent: float
    window: tuple
    method: str           # "tail_max" or "loglog_regression"
    residual: float


@dataclass(frozen=True)
class HilbergEstimate:
    tail_max: HilbergFit
    regression: HilbergFit


@dataclass(frozen=True)
class LawFit:
    law: str              # "log_power" or "stretched_exp"
    alpha_or_beta: float
    c: float
    r_squared: float
    window: tuple
    n_points: int
    censored_fraction: float


@dataclass(frozen=True)
class EnsembleSummary:
    kind: str
    ks: np.ndarray
    median: np.ndarray
    mean: np.ndarray
    variance: np.ndarray
    censored_counts: np.ndarray
    n_paths: int

    def series(self, which: str) -> dict:
        values = getattr(self, which)
        return {int(k): float(v) for k, v in zip(self.ks, values)
                if np.isfinite(v)}


def dyadic_grid(k_max: int, k_min: int = 2) -> list:
    """Powers of two inside [k_min, k_max]: even spacing in log coordinates."""
    grid = []
    k = 1
    while k <= k_max:
        if k >= k_min:
            grid.append(k)
        k *= 2
    return grid


def hilberg_exponent(series, window: Optional[tuple] = None) -> HilbergEstimate:
    """Estimate the power-law growth exponent of a positive series.

    ``series`` maps index k to a value a_k > 0.  ``window`` restricts to
    k_min <= k <= k_max; indices below 2 are always dropped (log k must be
    positive).  At least 8 usable points are required.
    """
    items = sorted((int(k), float(v)) for k, v in dict(series).items())
    if window is not None:
        lo, hi = window
        items = [(k, v) for k, v in items if lo <= k <= hi]
    items = [(k, v) for k, v in items if k >= 2]
    if len(items) < MIN_WINDOW_POINTS:
        raise ValueError(f"need at least {MIN_WINDOW_POINTS} points in the window")
    if any(v <= 0 for _, v in items):
        raise ValueError("series values must be positive")
    ks = np.array([k for k, _ in items], dtype=float)
    vs = np.array([v for _, v in items], dtype=float)
    used_window = (int(ks[0]), int(ks[-1]))

    ratios = np.maximum(0.0, np.log(vs) / np.log(ks))
    tail = HilbergFit(exponent=float(ratios.max()), window=used_window,
                      method="tail_max",
                      residual=float(ratios.max() - ratios.min()))

    x = np.log(ks)
    y = np.log(vs)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    reg = HilbergFit(exponent=float(max(0.0, slope)), window=used_window,
                     method="loglog_regression",
                     residual=float(np.sqrt((resid ** 2).mean())))
    return HilbergEstimate(tail_max=tail, regression=reg)


def fit_law(curve: StatCurve, law: str, indices: Optional[Sequence[int]] = None,
            min_points: int = MIN_FIT_POINTS) -> LawFit:
    """Least-squares fit of a growth law in its linearising coordinates.

    log_power (L2 curves):      log L2_n   = log C + alpha * log log n
    stretched_exp (R2 curves):  log log R2 = log C + beta  * log k

    Censored points never enter; points where the linearisation is
    undefined (values < 1 for log_power, < 2 for stretched_exp, indices
    < 2) are dropped.  By default the curve is subsampled on a dyadic
    index grid so that points spread evenly in log coordinates.
    """
    if law == "log_power":
        if curve.kind is not CurveKind.L2:
            raise ValueError("log_power law applies to L2 curves")
    elif law == "stretched_exp":
        if curve.kind is not CurveKind.R2:
            raise ValueError("stretched_exp law applies to R2 curves")
    else:
        raise ValueError(f"unknown law {law!r}")

    if indices is None:
        indices = dyadic_grid(curve.max_index())
    sub = curve.restrict(indices)
    censored_fraction = sub.censored_fraction()
    idx, vals = sub.uncensored()

    if law == "log_power":
        keep = (idx >= 2) & (vals >= 1)
        x = np.log(np.log(idx[keep].astype(float)))
        y = np.log(vals[keep].astype(float))
    else:
        keep = (idx >= 2) & (vals >= 2)
        x = np.log(idx[keep].astype(float))
        y = np.log(np.log(vals[keep].astype(float)))
    if keep.sum() < min_points:
        raise ValueError(f"only {int(keep.sum())} usable points, need {min_points}")

    slope, intercept = np.polyfit(x, y, 1)
    fitted = slope * x + intercept
    ss_res = float(((y - fitted) ** 2).sum())
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else (1.0 if ss_res == 0 else 0.0)
    window = (int(idx[keep][0]), int(idx[keep][-1]))
    return LawFit(law=law, alpha_or_beta=float(slope), c=float(math.exp(intercept)),
                  r_squared=r2, window=window, n_points=int(keep.sum()),
                  censored_fraction=censored_fraction)


# ---------------------------------------------------------------------------
# ensembles of path statistics


def _path_statistic(model: Source, seq: SymbolSeq, kind: str, k: int):
    """One statistic at one k on one path; None when censored."""
    if kind == "R1":
        cv = recurrence_time(seq, k)
        return None if cv.censored else float(cv.value)
    if kind == "R2":
        cv = repetition_time(seq, k)
        return None if cv.censored else float(cv.value)
    if kind == "neglogp":
        rows = seq.symbols[:k].astype(np.int64)[None, :]
        return float(-_log_prob_rows(model, rows)[0])
    raise ValueError(f"unsupported ensemble statistic {kind!r}")


def ensemble_summary(model: Source, kind: str, k_grid, paths: int, seed,
                     path_length: int = 100_000) -> EnsembleSummary:
    """Per-k median, mean and variance over independently seeded paths.

    Statistic kinds: R1, R2, neglogp.  Censored values are excluded per k;
    the number excluded is reported so the horizon can be judged.
    """
    if kind not in ("R1", "R2", "neglogp"):
        raise ValueError(f"ensemble statistics are R1, R2, neglogp; got {kind!r}")
    if paths < 2:
        raise ValueError("need at least two paths")
    base = as_seed(seed)
    ks = np.asarray(sorted(set(int(k) for k in k_grid)), dtype=np.int64)
    samples = [[] for _ in ks]
    censored = np.zeros(ks.size, dtype=np.int64)
    for p in range(paths):
        seq = model.sample(path_length, base.substream(p))
        for j, k in enumerate(ks):
            value = _path_statistic(model, seq, kind, int(k))
            if value is None:
                censored[j] += 1
            else:
                samples[j].append(value)
    median = np.array([np.median(s) if s else np.nan for s in samples])
    mean = np.array([np.mean(s) if s else np.nan for s in samples])
    variance = np.array([np.var(s, ddof=1) if len(s) > 1 else np.nan for s in samples])
    return EnsembleSummary(kind=kind, ks=ks, median=median, mean=mean,
                           variance=variance, censored_counts=censored,
                           n_paths=paths)


# ---------------------------------------------------------------------------
# shift-monotonicity (the hypothesis behind exponent sandwiches)


def _curve_values_for_kind(model, seq: SymbolSeq, kind: str, k_max: int):
    """J_1..J_{k_max} with None at censored points."""
    if kind in ("L1", "L2", "R1", "R2"):
        curve = compute_curve(seq, CurveKind[kind])
        out = []
        for k in range(1, min(k_max, len(seq)) + 1):
            cv = curve.point(k)
            out.append(None if cv.censored else int(cv.value))
        return out
    if kind == "neglogp":
        sym = seq.symbols.astype(np.int64)
        kk = min(k_max, len(seq))
        rows = [sym[:k][None, :] for k in range(1, kk + 1)]
        return [float(-_log_prob_rows(model, r)[0]) for r in rows]
    raise ValueError(f"unsupported statistic {kind!r}")


def t_increasing_violations(model, seq: SymbolSeq, kind: str, k_max: int) -> list:
    """Indices k with J_{k+1}(x) < J_k(x shifted by one symbol).

    Pairs where either side is censored are skipped.  ``model`` is only
    consulted for the neglogp statistic and may be None otherwise.
    """
    full = _curve_values_for_kind(model, seq, kind, k_max + 1)
    shifted = _curve_values_for_kind(model, seq.suffix(1), kind, k_max)
    bad = []
    for k in range(1, min(k_max, len(shifted), len(full) - 1) + 1):
        a = full[k]          # J_{k+1} on x
        b = shifted[k - 1]   # J_k on Tx
        if a is None or b is None:
            continue
        if a < b:
            bad.append(k)
    return bad


def check_t_increasing(model: Source, kind: str, k_max: int, seed,
                       path_length: int = 2000) -> bool:
    """Sample one path and verify the shift-monotonicity J_{k+1} >= J_k o T."""
    if kind not in STATISTIC_KINDS:
        raise ValueError(f"statistic must be one of {STATISTIC_KINDS}")
    seq = model.sample(path_length, as_seed(seed))
    return not t_increasing_violations(model, seq, kind, k_max)


def t_increasing_pairs_ok(full: Sequence, shifted: Sequence) -> bool:
    """Same comparison on two precomputed value lists (1-based J on x and on Tx)."""
    limit = min(len(full) - 1, len(shifted))
    for k in range(1, limit + 1):
        a, b = full[k], shifted[k - 1]
        if a is None or b is None:
            continue
        if a < b:
            return False
    return True
