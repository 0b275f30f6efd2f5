"""Renyi entropies of orders 0..inf for distributions and analytic sources.

All values are in nats.  Quantities that cannot be computed exactly are
returned as certified intervals [lo, hi]; exact results have lo == hi.

Conventions:

* order 0 is the Hartley entropy (log support size),
* order 1 the Shannon entropy,
* order 2 the collision entropy,
* order inf the min-entropy -log max p.

The conditional entropy of order g follows the Arimoto form
-(g/(g-1)) log sum_y (sum_x P(x,y)^g)^(1/g), whose limits reproduce the
closed forms above.  Orders in (1 - 1e-6, 1 + 1e-6) other than exactly 1
are rejected: the generic formula cancels catastrophically there.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import logsumexp

from .seqstat import SymbolSeq
from .sources import (HMMSource, IIDSource, MarkovSource, Source,
                      enumerate_log_block_probabilities)

INF = math.inf
ENUM_LIMIT_DEFAULT = 1 << 24
_GAMMA_GAP = 1e-6
_TIE_TOL = 1e-12


@dataclass(frozen=True)
class EntropyValue:
    lo: float
    hi: float

    def __post_init__(self):
        if not self.lo <= self.hi + 1e-12:
            raise ValueError(f"inverted interval [{self.lo}, {self.hi}]")

    @classmethod
    def exact(cls, value: float) -> "EntropyValue":
        return cls(float(value), float(value))

    @property
    def is_exact(self) -> bool:
        return self.lo == self.hi

    @property
    def width(self) -> float:
        return self.hi - self.lo

    @property
    def mid(self) -> float:
        return 0.5 * (self.lo + self.hi)


@dataclass(frozen=True)
class ContextLengthValue:
    k: int
    gamma: float
    value: int


@dataclass(frozen=True)
class WeightedEntropyValue:
    k: int
    lo: float
    hi: float
    truncation_m: int

    @property
    def width(self) -> float:
        return self.hi - self.lo


@dataclass(frozen=True)
class VarentropyResult:
    value: EntropyValue
    ratio: float          # sqrt(var) / Shannon block entropy
    method: str           # "enumeration" or "monte_carlo"


def _check_gamma(gamma) -> float:
    g = float(gamma)
    if math.isnan(g) or g < 0:
        raise ValueError(f"entropy order must lie in [0, inf], got {gamma}")
    if g != 1.0 and abs(g - 1.0) < _GAMMA_GAP:
        raise ValueError("orders within 1e-6 of 1 (but not exactly 1) are rejected")
    return g


# ---------------------------------------------------------------------------
# plain distributions


def renyi_entropy(dist, gamma) -> EntropyValue:
    """Renyi entropy of a probability vector, exact closed forms at 0/1/inf."""
    g = _check_gamma(gamma)
    p = np.asarray(dist, dtype=float)
    if p.ndim != 1 or p.size == 0 or np.any(p < 0):
        raise ValueError("need a non-empty non-negative vector")
    total = float(p.sum())
    if abs(total - 1.0) > 1e-9:
        raise ValueError(f"distribution sums to {total}, not 1")
    pos = p[p > 0]
    if g == 0.0:
        return EntropyValue.exact(math.log(pos.size))
    if g == 1.0:
        return EntropyValue.exact(float(-(pos * np.log(pos)).sum()))
    if g == INF:
        return EntropyValue.exact(-math.log(float(pos.max())))
    m = float(pos.max())
    log_power_sum = g * math.log(m) + math.log(float(((pos / m) ** g).sum()))
    return EntropyValue.exact(log_power_sum / (1.0 - g))


def conditional_renyi(joint, gamma) -> EntropyValue:
    """Arimoto conditional entropy H_g(X|Y) from a joint P(x, y) matrix."""
    g = _check_gamma(gamma)
    j = np.asarray(joint, dtype=float)
    if j.ndim != 2 or np.any(j < 0):
        raise ValueError("need a non-negative 2-d joint")
    total = float(j.sum())
    if abs(total - 1.0) > 1e-9:
        raise ValueError(f"joint sums to {total}, not 1")
    py = j.sum(axis=0)
    if g == 0.0:
        support = (j > 0).sum(axis=0)
        support = support[py > 0]
        return EntropyValue.exact(math.log(int(support.max())))
    if g == 1.0:
        pj = j[j > 0]
        h_joint = float(-(pj * np.log(pj)).sum())
        pyp = py[py > 0]
        h_y = float(-(pyp * np.log(pyp)).sum())
        return EntropyValue.exact(h_joint - h_y)
    if g == INF:
        return EntropyValue.exact(-math.log(float(j.max(axis=0).sum())))
    # per-column (sum_x P^g)^(1/g), scaled by the column max for stability
    t = np.full(j.shape[1], -np.inf)
    for y in range(j.shape[1]):
        col = j[:, y]
        m = float(col.max())
        if m <= 0.0:
            continue
        t[y] = math.log(m) + math.log(float(((col / m) ** g).sum())) / g
    return EntropyValue.exact(-(g / (g - 1.0)) * float(logsumexp(t)))


# ---------------------------------------------------------------------------
# block entropies of analytic sources

# The Markov computations run a transfer-matrix pass in the required
# semiring (max-plus for order inf, log-sum for finite orders, counting for
# order 0), so no block enumeration is ever needed for chains.


def _markov_maxplus(model: MarkovSource, k: int) -> np.ndarray:
    lv = model._logpi.copy()
    for _ in range(k - 1):
        lv = (lv[:, None] + model._logT).max(axis=0)
    return lv


def _markov_power_dp(model: MarkovSource, k: int, g: float) -> np.ndarray:
    """log of sum over length-k blocks ending in each state of P^g."""
    lw = g * model._logpi
    step = g * model._logT
    for _ in range(k - 1):
        lw = logsumexp(lw[:, None] + step, axis=0)
    return lw

def _markov_count_dp(model: MarkovSource, k: int) -> np.ndarray:
    c = (model.initial > 0).astype(float)
    b = (model.transition > 0).astype(float)
    for _ in range(k - 1):
        c = c @ b
    return c


def _markov_shannon_step(model: MarkovSource) -> float:
    rows = model.transition
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(rows > 0, rows * np.log(rows), 0.0)
    return float(-(model.initial * terms.sum(axis=1)).sum())


def block_renyi_entropy(model: Source, k: int, gamma,
                        limit: int = ENUM_LIMIT_DEFAULT) -> EntropyValue:
    """H_g(X_1^k) of a tractable source, exact."""
    g = _check_gamma(gamma)
    if k < 1:
        raise ValueError("block length must be positive")
    if isinstance(model, IIDSource):
        return EntropyValue.exact(k * renyi_entropy(model.probs, g).lo)
    if isinstance(model, MarkovSource):
        if g == INF:
            return EntropyValue.exact(-float(_markov_maxplus(model, k).max()))
        if g == 1.0:
            h0 = renyi_entropy(model.initial, 1.0).lo
            return EntropyValue.exact(h0 + (k - 1) * _markov_shannon_step(model))
        if g == 0.0:
            return EntropyValue.exact(math.log(float(_markov_count_dp(model, k).sum())))
        lw = _markov_power_dp(model, k, g)
        return EntropyValue.exact(float(logsumexp(lw)) / (1.0 - g))
    logp = enumerate_log_block_probabilities(model, k, limit=limit)
    return renyi_entropy(np.exp(logp), g)


def block_min_entropy(model: Source, k: int,
                      limit: int = ENUM_LIMIT_DEFAULT) -> EntropyValue:
    """Min-entropy of the length-k block: -log of the modal block probability."""
    return block_renyi_entropy(model, k, INF, limit=limit)


def conditional_block_renyi(model: Source, k: int, i: int, gamma,
                            limit: int = ENUM_LIMIT_DEFAULT) -> EntropyValue:
    """H_g(X_1^k | X_{k+1}..X_{k+i}) of a tractable source, exact.

    For IID sources conditioning is vacuous; for Markov chains the value
    equals the i = 1 value because the conditional law of the past depends
    on the first future symbol only (checked against enumeration in the
    tests).  HMMs are evaluated by enumeration subject to ``limit``.
    """
    g = _check_gamma(gamma)
    if i < 0:
        raise ValueError("conditioning length must be non-negative")
    if i == 0:
        return block_renyi_entropy(model, k, g, limit=limit)
    if isinstance(model, IIDSource):
        return block_renyi_entropy(model, k, g, limit=limit)
    if isinstance(model, MarkovSource):
        if g == INF:
            lv = _markov_maxplus(model, k)
            per_y = (lv[:, None] + model._logT).max(axis=0)
            return EntropyValue.exact(-float(logsumexp(per_y)))
        if g == 1.0:
            return EntropyValue.exact(k * _markov_shannon_step(model))
        if g == 0.0:
            c = _markov_count_dp(model, k)
            per_y = c @ (model.transition > 0).astype(float)
            return EntropyValue.exact(math.log(float(per_y.max())))
        lw = _markov_power_dp(model, k, g)
        ends = logsumexp(lw[:, None] + g * model._logT, axis=0)
        return EntropyValue.exact(-(g / (g - 1.0)) * float(logsumexp(ends / g)))
    if isinstance(model, HMMSource):
        d = model.alphabet_size
        if d ** (k + i) > limit:
            raise ValueError(f"enumeration of {d}^{k + i} blocks exceeds limit {limit}")
        logp = enumerate_log_block_probabilities(model, k + i, limit=limit)
        grid = logp.reshape(d ** k, d ** i)
        if g == INF:
            return EntropyValue.exact(-float(logsumexp(grid.max(axis=0))))
        if g == 0.0:
            counts = (grid > -np.inf).sum(axis=0)
            return EntropyValue.exact(math.log(int(counts.max())))
        if g == 1.0:
            h_joint = _shannon_from_log(logp)
            h_future = _shannon_from_log(
                enumerate_log_block_probabilities(model, i, limit=limit))
            return EntropyValue.exact(h_joint - h_future)
        t = logsumexp(g * grid, axis=0) / g
        return EntropyValue.exact(-(g / (g - 1.0)) * float(logsumexp(t)))
    raise ValueError(f"{model.label}: conditional block entropies unsupported")


def conditional_min_entropy(model: Source, k: int, i: int,
                            limit: int = ENUM_LIMIT_DEFAULT) -> EntropyValue:
    return conditional_block_renyi(model, k, i, INF, limit=limit)


def _shannon_from_log(logp: np.ndarray) -> float:
    p = np.exp(logp)
    mask = p > 0
    return float(-(p[mask] * logp[mask]).sum())


def modal_block(model: Source, k: int, limit: int = ENUM_LIMIT_DEFAULT) -> np.ndarray:
    """A most probable length-k block; ties resolve to the smallest ids."""
    if k < 1:
        raise ValueError("block length must be positive")
    if isinstance(model, IIDSource):
        return np.full(k, int(np.argmax(model.probs)), dtype=np.int64)
    if isinstance(model, MarkovSource):
        d = model.alphabet_size
        suffix = np.zeros((k, d))
        for t in range(k - 2, -1, -1):
            suffix[t] = (model._logT + suffix[t + 1][None, :]).max(axis=1)
        block = np.empty(k, dtype=np.int64)
        scores = model._logpi + suffix[0]
        block[0] = int(np.argmax(scores))
        running = float(model._logpi[block[0]])
        for t in range(1, k):
            cand = running + model._logT[block[t - 1]] + suffix[t]
            block[t] = int(np.argmax(cand))
            running += float(model._logT[block[t - 1], block[t]])
        return block
    logp = enumerate_log_block_probabilities(model, k, limit=limit)
    idx = int(np.argmax(logp))
    d = model.alphabet_size
    block = np.empty(k, dtype=np.int64)
    for t in range(k - 1, -1, -1):
        block[t] = idx % d
        idx //= d
    return block


# ---------------------------------------------------------------------------
# context length and the weighted conditional entropy


def context_length(model: Source, k: int, gamma=INF,
                   limit: int = ENUM_LIMIT_DEFAULT) -> ContextLengthValue:
    """Least i such that c * log i reaches H_g(X_1^k | X_{k+1}..X_{k+i}).

    c = 1 for the min-entropy and g/(g-1) for finite orders g > 1.  The
    search doubles and then bisects, which is valid because log i strictly
    increases while the conditional entropy is non-increasing in i.  The
    answer never exceeds D^k, since at i = D^k the threshold c log i is at
    least k log D >= H_g.
    """
    g = _check_gamma(gamma)
    if g <= 1.0:
        raise ValueError("context length needs order > 1")
    coeff = 1.0 if g == INF else g / (g - 1.0)
    cache = {}

    def cond(i: int) -> float:
        if i not in cache:
            cache[i] = conditional_block_renyi(model, k, i, g, limit=limit).lo
        return cache[i]

    def satisfied(i: int) -> bool:
        # boundary ties resolve downward: a threshold within 1e-12 counts
        return coeff * math.log(i) >= cond(i) - _TIE_TOL

    cap = model.alphabet_size ** k
    i = 1
    while not satisfied(i):
        if i >= cap:
            raise AssertionError("context-length search exceeded D^k")
        i = min(2 * i, cap)
    lo, hi = max(1, i // 2), i
    while lo < hi:
        mid = (lo + hi) // 2
        if satisfied(mid):
            hi = mid
        else:
            lo = mid + 1
    return ContextLengthValue(k=k, gamma=g, value=int(hi))


def weighted_conditional_entropy(model: Source, k: int,
                                 truncation_m: int = 10_000,
                                 limit: int = ENUM_LIMIT_DEFAULT) -> WeightedEntropyValue:
    """-log of sum_i e^{-H_inf(X_1^k | next i symbols)} / (i (i+1)).

    The infinite sum is truncated at ``truncation_m``; the tail is bracketed
    by [e^{-H_M}/(M+1), 1/(M+1)] using monotonicity of the terms in i.  For
    sources whose conditional min-entropy does not depend on i (IID,
    Markov) the weights telescope and the value is exact.
    """
    if truncation_m < 1:
        raise ValueError("truncation must be positive")
    m = int(truncation_m)
    if model.conditioning_invariant:
        h = conditional_min_entropy(model, k, 1, limit=limit).lo
        return WeightedEntropyValue(k=k, lo=h, hi=h, truncation_m=m)
    partial = 0.0
    h_last = None
    for i in range(1, m + 1):
        h_last = conditional_min_entropy(model, k, i, limit=limit).lo
        partial += math.exp(-h_last) / (i * (i + 1))
    tail_lo = math.exp(-h_last) / (m + 1)
    tail_hi = 1.0 / (m + 1)
    return WeightedEntropyValue(k=k,
                                lo=-math.log(partial + tail_hi),
                                hi=-math.log(partial + tail_lo),
                                truncation_m=m)


def weighted_interval(value: WeightedEntropyValue) -> EntropyValue:
    return EntropyValue(value.lo, value.hi)


# ---------------------------------------------------------------------------
# rates, varentropy, empirical plug-in


def entropy_rate(model: Source, gamma) -> EntropyValue:
    """Shannon (order 1) or collision (order 2) entropy rate, exact.

    Order 1 uses the conditional-entropy formula; order 2 comes from the
    spectral radius of the entrywise-squared transition structure.
    """
    g = _check_gamma(gamma)
    if g not in (1.0, 2.0):
        raise ValueError("entropy rates implemented for orders 1 and 2 only")
    if isinstance(model, IIDSource):
        return renyi_entropy(model.probs, g)
    if isinstance(model, MarkovSource):
        if g == 1.0:
            return EntropyValue.exact(_markov_shannon_step(model))
        squared = model.transition ** 2
        rho = float(np.max(np.abs(np.linalg.eigvals(squared))))
        return EntropyValue.exact(-math.log(rho))
    raise ValueError(f"{model.label}: entropy rates need an IID or Markov source")


def varentropy(model: Source, k: int, trials: int = 100_000, seed=None,
               limit: int = ENUM_LIMIT_DEFAULT) -> VarentropyResult:
    """Variance of -log P(X_1^k): exact by enumeration when feasible,
    otherwise a Monte-Carlo estimate with a 3-sigma interval."""
    if not model.tractable:
        raise ValueError(f"{model.label}: varentropy needs a tractable law")
    d = model.alphabet_size
    if d ** k <= limit:
        logp = enumerate_log_block_probabilities(model, k, limit=limit)
        p = np.exp(logp)
        mask = p > 0
        mean = float(-(p[mask] * logp[mask]).sum())
        second = float((p[mask] * logp[mask] ** 2).sum())
        var = max(0.0, second - mean ** 2)
        ratio = math.sqrt(var) / mean if mean > 0 else 0.0
        return VarentropyResult(EntropyValue.exact(var), ratio, "enumeration")
    from .sources import as_seed
    rng = as_seed(seed if seed is not None else 0).generator()
    rows = model.sample_block_batch(trials, k, rng)
    values = _log_prob_rows(model, rows)
    neg = -values
    var = float(neg.var(ddof=1))
    n = neg.size
    m4 = float(((neg - neg.mean()) ** 4).mean())
    se = math.sqrt(max(m4 - (n - 3) / (n - 1) * var ** 2, 0.0) / n)
    h1 = float(neg.mean())
    ratio = math.sqrt(max(var, 0.0)) / h1 if h1 > 0 else 0.0
    return VarentropyResult(EntropyValue(var - 3 * se, var + 3 * se), ratio,
                            "monte_carlo")


def _log_prob_rows(model: Source, rows: np.ndarray) -> np.ndarray:
    """log P of many blocks at once (rows of a 2-d array)."""
    if isinstance(model, IIDSource):
        return model._logp[rows].sum(axis=1)
    if isinstance(model, MarkovSource):
        out = model._logpi[rows[:, 0]].copy()
        if rows.shape[1] > 1:
            out += model._logT[rows[:, :-1], rows[:, 1:]].sum(axis=1)
        return out
    if isinstance(model, HMMSource):
        alpha = model._logpi[None, :] + model._logE[:, rows[:, 0]].T
        for t in range(1, rows.shape[1]):
            alpha = logsumexp(alpha[:, :, None] + model._logT[None, :, :], axis=1)
            alpha = alpha + model._logE[:, rows[:, t]].T
        return logsumexp(alpha, axis=1)
    raise ValueError(f"{model.label}: no tractable law")


def plug_in_entropy(seq: SymbolSeq, k: int, gamma) -> EntropyValue:
    """Renyi entropy of the empirical distribution of overlapping k-blocks.

    This is the plain plug-in estimator: biased, no correction attempted.
    A warning is emitted when D^k is not much smaller than the sample.
    """
    g = _check_gamma(gamma)
    n = len(seq)
    if not 1 <= k <= n:
        raise ValueError("k outside 1..N")
    windows = n - k + 1
    if seq.alphabet_size ** k > windows / 10:
        warnings.warn("D^k is not small relative to the sample; the plug-in "
                      "estimate will be strongly biased", stacklevel=2)
    data = seq.as_bytes()
    counts = {}
    if data is not None:
        for i in range(windows):
            w = data[i:i + k]
            counts[w] = counts.get(w, 0) + 1
    else:
        sym = seq.symbols
        for i in range(windows):
            w = tuple(sym[i:i + k].tolist())
            counts[w] = counts.get(w, 0) + 1
    freqs = np.fromiter(counts.values(), dtype=float)
    return renyi_entropy(freqs / freqs.sum(), g)


# ---------------------------------------------------------------------------
# structural checks


def check_chain_rule(joint, gamma, slack: float = 1e-9) -> bool:
    """Chain-rule inequalities on a joint over (U, X, Y, Z):

    H_g(X|Y,Z) <= H_g(X|Y) <= H_g(U,X|Y) <= H_0(U|Y) + H_g(X|Y,U).
    """
    g = _check_gamma(gamma)
    j = np.asarray(joint, dtype=float)
    if j.ndim != 4:
        raise ValueError("need a joint over four variables (U, X, Y, Z)")
    nu, nx, ny, nz = j.shape
    x_yz = j.sum(axis=0).reshape(nx, ny * nz)
    x_y = j.sum(axis=(0, 3))
    ux_y = j.sum(axis=3).reshape(nu * nx, ny)
    u_y = j.sum(axis=(1, 3))
    # X given (Y, U): axes to (X, Y, U) then flatten the conditioners
    x_yu = j.sum(axis=3).transpose(1, 2, 0).reshape(nx, ny * nu)
    h_x_yz = conditional_renyi(x_yz, g).lo
    h_x_y = conditional_renyi(x_y, g).lo
    h_ux_y = conditional_renyi(ux_y, g).lo
    h0_u_y = conditional_renyi(u_y, 0.0).lo
    h_x_yu = conditional_renyi(x_yu, g).lo
    return (h_x_yz <= h_x_y + slack
            and h_x_y <= h_ux_y + slack
            and h_ux_y <= h0_u_y + h_x_yu + slack)


def pmi_bound_estimate(model: Source, n_max: int, m_max: int,
                       limit: int = ENUM_LIMIT_DEFAULT) -> EntropyValue:
    """Largest pointwise mutual-information ratio over finite windows.

    Returns sup over n <= n_max, m <= m_max and positive-probability blocks
    of P(X_1^{n+m}) / (P(X_1^n) P(X_{n+1}^{n+m})), as an interval whose
    upper end is infinite: a finite window only ever certifies a lower
    bound on the true supremum.
    """
    if n_max < 1 or m_max < 1:
        raise ValueError("window sizes must be positive")
    d = model.alphabet_size
    if d ** (n_max + m_max) > limit:
        raise ValueError("window exceeds the enumeration limit")
    best = -math.inf
    cache = {}

    def blocks(length):
        if length not in cache:
            cache[length] = enumerate_log_block_probabilities(model, length, limit=limit)
        return cache[length]

    for n in range(1, n_max + 1):
        for m in range(1, m_max + 1):
            joint = blocks(n + m)
            pre = blocks(n)
            suf = blocks(m)
            idx = np.arange(joint.size)
            with np.errstate(invalid="ignore"):
                ratios = joint - pre[idx // d ** m] - suf[idx % d ** m]
            ratios = ratios[joint > -np.inf]
            if ratios.size:
                best = max(best, float(ratios.max()))
    return EntropyValue(math.exp(best), math.inf)


# ---------------------------------------------------------------------------
# tabulation


class EntropyTable:
    """Collected entropy values over a (gamma, k, i) grid plus the derived
    weighted and context-length rows, exportable as CSV."""

    def __init__(self):
        self.entries = {}     # (gamma, k, i) -> EntropyValue
        self.weighted = {}    # k -> WeightedEntropyValue
        self.context = {}     # k -> ContextLengthValue

    @classmethod
    def build(cls, model: Source, gammas, ks, i_values=(0,),
              include_weighted: bool = False, include_context: bool = False,
              truncation_m: int = 10_000,
              limit: int = ENUM_LIMIT_DEFAULT) -> "EntropyTable":
        table = cls()
        for k in ks:
            for gamma in gammas:
                for i in i_values:
                    value = conditional_block_renyi(model, k, i, gamma, limit=limit)
                    table.entries[(float(gamma), int(k), int(i))] = value
            if include_weighted:
                table.weighted[int(k)] = weighted_conditional_entropy(
                    model, k, truncation_m=truncation_m, limit=limit)
            if include_context:
                table.context[int(k)] = context_length(model, k, limit=limit)
        return table

    def rows(self):
        """(gamma, k, i, lo, hi, kind) tuples in deterministic order."""
        for (gamma, k, i), val in sorted(self.entries.items()):
            yield gamma, k, i, val.lo, val.hi, "plain"
        for k, w in sorted(self.weighted.items()):
            yield INF, k, 0, w.lo, w.hi, "weighted"
        for k, c in sorted(self.context.items()):
            yield c.gamma, k, 0, float(c.value), float(c.value), "context_length"

    def write_csv(self, path, header_comments=()):
        lines = [f"# {comment}" for comment in header_comments]
        lines.append("gamma,k,i,lo,hi,kind")
        for gamma, k, i, lo, hi, kind in self.rows():
            gtxt = "inf" if gamma == INF else f"{gamma:.12g}"
            lines.append(f"{gtxt},{k},{i},{lo:.12g},{hi:.12g},{kind}")
        with open(path, "w") as fh:
            fh.write("\n".join(lines) + "\n")
