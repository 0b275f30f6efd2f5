"""Analytic stochastic sources with exact block probabilities.

Every tractable model (IID / Markov / HMM) exposes the log probability of
finite blocks and of blocks conditioned on a stretch of future symbols, all
in the log domain so that block lengths up to ~60 survive without
underflow.  The copy source is an exploratory generator with no tractable
law; probability queries on it raise.

Sampling is reproducible: a SeedSpec derives one 64-bit generator seed per
(master_seed, stream_index) pair through a fixed mixing function, so
Monte-Carlo trials can run on independent streams and still replay exactly.
"""

from __future__ import annotations

import math
from typing import Optional, Sequence

import numpy as np
from scipy.sparse import csgraph
from scipy.special import logsumexp

from .seqstat import SymbolSeq

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB

PROB_ATOL = 1e-12
STATIONARY_ATOL = 1e-10


def _mix64(master: int, stream: int) -> int:
    """splitmix64 finalizer on master + stream * golden-ratio increment.

    Constants: increment 0x9E3779B97F4A7C15, multipliers 0xBF58476D1CE4E5B9
    and 0x94D049BB133111EB, shifts 30/27/31.
    """
    z = (master + stream * _GOLDEN) & _MASK64
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK64
    return z ^ (z >> 31)


class SeedSpec:
    """Reproducible seed: a master seed plus a stream index."""

    __slots__ = ("master_seed", "stream_index")

    def __init__(self, master_seed: int, stream_index: int = 0):
        if stream_index < 0:
            raise ValueError("stream index must be non-negative")
        self.master_seed = int(master_seed) & _MASK64
        self.stream_index = int(stream_index)

    def derived_seed(self) -> int:
        return _mix64(self.master_seed, self.stream_index)

    def generator(self) -> np.random.Generator:
        return np.random.Generator(np.random.PCG64(self.derived_seed()))

    def stream(self, index: int) -> "SeedSpec":
        """Sibling stream under the same master."""
        return SeedSpec(self.master_seed, index)

    def substream(self, index: int) -> "SeedSpec":
        """Child stream family rooted at this spec."""
        return SeedSpec(self.derived_seed(), index)

    def __repr__(self):
        return f"SeedSpec({self.master_seed}, {self.stream_index})"


def as_seed(seed) -> SeedSpec:
    if isinstance(seed, SeedSpec):
        return seed
    return SeedSpec(int(seed))


def _check_prob_vector(p, name="probs") -> np.ndarray:
    v = np.asarray(p, dtype=float)
    if v.ndim != 1 or v.size == 0:
        raise ValueError(f"{name} must be a non-empty vector")
    if np.any(v < 0):
        raise ValueError(f"{name} has negative entries")
    if abs(float(v.sum()) - 1.0) > PROB_ATOL:
        raise ValueError(f"{name} sums to {v.sum():.15f}, not 1")
    return v


def _check_stochastic_matrix(m, name="transition") -> np.ndarray:
    a = np.asarray(m, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
        raise ValueError(f"{name} must be a square matrix")
    for i, row in enumerate(a):
        if np.any(row < 0):
            raise ValueError(f"{name} row {i} has negative entries")
        if abs(float(row.sum()) - 1.0) > PROB_ATOL:
            raise ValueError(f"{name} row {i} sums to {row.sum():.15f}, not 1")
    return a


def _is_irreducible(matrix: np.ndarray) -> bool:
    adj = (matrix > 0).astype(np.int8)
    n_comp, _ = csgraph.connected_components(adj, directed=True, connection="strong")
    return n_comp == 1


def _is_aperiodic(matrix: np.ndarray) -> bool:
    # irreducible + aperiodic == primitive: some boolean power is all-positive
    n = matrix.shape[0]
    reach = matrix > 0
    bound = (n - 1) ** 2 + 1
    power = 1
    while power < bound:
        if reach.all():
            return True
        reach = reach @ reach
        power *= 2
    return bool(reach.all())


def stationary_distribution(transition) -> np.ndarray:
    """Solve pi P = pi, sum pi = 1 for an irreducible chain."""
    p = _check_stochastic_matrix(transition)
    if not _is_irreducible(p):
        raise ValueError("transition matrix is reducible")
    n = p.shape[0]
    a = p.T - np.eye(n)
    a[-1, :] = 1.0
    b = np.zeros(n)
    b[-1] = 1.0
    pi = np.linalg.solve(a, b)
    pi = np.clip(pi, 0.0, None)
    pi /= pi.sum()
    residual = float(np.abs(pi @ p - pi).max())
    if residual > STATIONARY_ATOL:
        raise ValueError(f"stationary solve residual {residual:.2e} too large")
    return pi


def _safe_log(x: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.log(x)


class Source:
    """Common behaviour of all sources."""

    tractable = False
    #: True when H_inf(X_1^k | future of length i) provably does not depend
    #: on i >= 1 (independence for IID; one-step screening for Markov).
    conditioning_invariant = False
    label = "source"

    @property
    def alphabet_size(self) -> int:
        return self._D

    def sample(self, n: int, seed) -> SymbolSeq:
        raise NotImplementedError

    def marginal(self) -> np.ndarray:
        """Distribution of a single symbol under the stationary law."""
        raise NotImplementedError

    def log_block_probability(self, block) -> float:
        raise ValueError(f"{self.label}: block probabilities not available")

    def log_conditional_block_probability(self, past, future) -> float:
        raise ValueError(f"{self.label}: conditional probabilities not available")

    def _as_block(self, block) -> np.ndarray:
        b = np.asarray(block, dtype=np.int64)
        if b.ndim != 1:
            raise ValueError("block must be one-dimensional")
        if b.size and (b.min() < 0 or b.max() >= self._D):
            raise ValueError("block symbol outside alphabet")
        return b


class IIDSource(Source):
    """Memoryless source with a fixed symbol distribution."""

    tractable = True
    conditioning_invariant = True

    def __init__(self, probs, label: Optional[str] = None):
        self.probs = _check_prob_vector(probs)
        self.probs.flags.writeable = False
        self._D = int(self.probs.size)
        self._logp = _safe_log(self.probs)
        self.label = label or f"iid(D={self._D})"

    @classmethod
    def uniform(cls, d: int, label=None):
        return cls(np.full(d, 1.0 / d), label=label or f"iid-uniform(D={d})")

    def marginal(self):
        return self.probs

    @property
    def _uniform(self) -> bool:
        return bool(np.all(self.probs == self.probs[0]))

    def _draw(self, shape, rng) -> np.ndarray:
        if self._uniform:
            return rng.integers(0, self._D, size=shape, dtype=np.int64)
        return rng.choice(self._D, size=shape, p=self.probs)

    def sample(self, n: int, seed) -> SymbolSeq:
        rng = as_seed(seed).generator()
        return SymbolSeq(self._draw(int(n), rng), alphabet_size=self._D)

    def sample_block_batch(self, count: int, k: int, rng) -> np.ndarray:
        return self._draw((int(count), int(k)), rng)

    def log_block_probability(self, block) -> float:
        b = self._as_block(block)
        return float(self._logp[b].sum())

    def log_conditional_block_probability(self, past, future) -> float:
        # independence: the future tells nothing
        self._as_block(future)
        return self.log_block_probability(past)


class MarkovSource(Source):
    """Stationary first-order Markov chain.

    The initial distribution is always the stationary one, so sampled paths
    are stationary.  Construction requires irreducibility; aperiodicity is
    also required unless ``allow_periodic`` is set (a periodic irreducible
    chain started from its stationary law is still stationary and ergodic,
    and deterministic cycles are useful edge cases).
    """

    tractable = True
    conditioning_invariant = True

    def __init__(self, transition, label: Optional[str] = None,
                 allow_periodic: bool = False):
        self.transition = _check_stochastic_matrix(transition)
        if not _is_irreducible(self.transition):
            raise ValueError("transition matrix is reducible")
        if not allow_periodic and not _is_aperiodic(self.transition):
            raise ValueError("transition matrix is periodic (pass allow_periodic=True "
                             "to accept a periodic but irreducible chain)")
        self.initial = stationary_distribution(self.transition)
        self.transition.flags.writeable = False
        self.initial.flags.writeable = False
        self._D = int(self.transition.shape[0])
        self._logT = _safe_log(self.transition)
        self._logpi = _safe_log(self.initial)
        self._cum = np.cumsum(self.transition, axis=1)
        self.label = label or f"markov(D={self._D})"

    def marginal(self):
        return self.initial

    def sample(self, n: int, seed) -> SymbolSeq:
        n = int(n)
        rng = as_seed(seed).generator()
        if n == 0:
            return SymbolSeq(np.empty(0, np.int64), alphabet_size=self._D)
        start = int(np.searchsorted(np.cumsum(self.initial), rng.random(), side="right"))
        if self._D == 2:
            sym = self._sample_two_state(n, start, rng)
        else:
            sym = self._sample_steps(n, start, rng)
        return SymbolSeq(sym, alphabet_size=self._D)

    def _sample_two_state(self, n: int, start: int, rng) -> np.ndarray:
        # exact run-length construction: a sojourn in state s is geometric
        # with exit probability 1 - T[s, s], and with two states the next
        # state is forced, so the path is a deterministic alternation of runs
        exit_p = np.array([1.0 - self.transition[0, 0], 1.0 - self.transition[1, 1]])
        out = np.empty(0, dtype=np.int64)
        state = start
        while out.size < n:
            m = max(16, int((n - out.size) / (1.0 / exit_p[0] + 1.0 / exit_p[1]) * 2) + 16)
            states = np.empty(m, dtype=np.int64)
            states[0::2] = state
            states[1::2] = 1 - state
            lens = np.empty(m, dtype=np.int64)
            for s in (0, 1):
                idx = np.flatnonzero(states == s)
                if exit_p[s] >= 1.0:
                    lens[idx] = 1
                else:
                    lens[idx] = rng.geometric(exit_p[s], size=idx.size)
            out = np.concatenate([out, np.repeat(states, lens)]) if out.size else np.repeat(states, lens)
            state = int(1 - states[-1])
        return out[:n]

    def _sample_steps(self, n: int, start: int, rng) -> np.ndarray:
        cum = self._cum
        u = rng.random(n - 1)
        sym = np.empty(n, dtype=np.int64)
        sym[0] = start
        s = start
        for t in range(1, n):
            s = int(np.searchsorted(cum[s], u[t - 1], side="right"))
            sym[t] = s
        return sym

    def sample_block_batch(self, count: int, k: int, rng) -> np.ndarray:
        """count independent stationary blocks of length k, vectorised over rows."""
        count, k = int(count), int(k)
        out = np.empty((count, k), dtype=np.int64)
        out[:, 0] = np.searchsorted(np.cumsum(self.initial), rng.random(count), side="right")
        for t in range(1, k):
            u = rng.random(count)
            rows = self._cum[out[:, t - 1]]
            out[:, t] = (u[:, None] >= rows).sum(axis=1)
        return out

    def step_batch(self, states: np.ndarray, rng) -> np.ndarray:
        u = rng.random(states.size)
        return (u[:, None] >= self._cum[states]).sum(axis=1)

    def sample_continuation(self, last_symbol: int, n: int, rng) -> np.ndarray:
        """Continue a path whose last symbol is known."""
        n = int(n)
        if n == 0:
            return np.empty(0, dtype=np.int64)
        if self._D == 2:
            first = int(rng.random() >= self._cum[last_symbol, 0])
            sym = np.empty(n, dtype=np.int64)
            sym[0] = first
            if n > 1:
                # run lengths are geometric, so conditioning on the first
                # symbol of a run construction leaves the remainder exact
                sym[1:] = self._sample_two_state(n, first, rng)[1:]
            return sym
        sym = np.empty(n, dtype=np.int64)
        s = last_symbol
        u = rng.random(n)
        for t in range(n):
            s = int(np.searchsorted(self._cum[s], u[t], side="right"))
            sym[t] = s
        return sym

    def log_block_probability(self, block) -> float:
        b = self._as_block(block)
        if b.size == 0:
            return 0.0
        total = float(self._logpi[b[0]])
        if b.size > 1:
            total += float(self._logT[b[:-1], b[1:]].sum())
        return total

    def log_conditional_block_probability(self, past, future) -> float:
        """log P(block | the next stretch of symbols).

        For a first-order chain the conditional law of the past given any
        finite or infinite future depends on the first future symbol only:
        P(x_1^k | x_{k+1}^{k+i}) = pi(x_1) prod T / pi(x_{k+1}).  Validated
        against enumeration in the test suite.
        """
        b = self._as_block(past)
        f = self._as_block(future)
        if f.size == 0:
            return self.log_block_probability(b)
        if b.size == 0:
            return 0.0
        joined = np.concatenate([b, f[:1]])
        num = float(self._logpi[joined[0]] + self._logT[joined[:-1], joined[1:]].sum())
        return num - float(self._logpi[f[0]])


class HMMSource(Source):
    """Hidden Markov source: hidden chain + per-state emission rows."""

    tractable = True

    def __init__(self, state_transition, emission, label: Optional[str] = None,
                 allow_periodic: bool = False):
        self.state_transition = _check_stochastic_matrix(state_transition, "state_transition")
        if not _is_irreducible(self.state_transition):
            raise ValueError("state transition matrix is reducible")
        if not allow_periodic and not _is_aperiodic(self.state_transition):
            raise ValueError("state transition matrix is periodic")
        em = np.asarray(emission, dtype=float)
        if em.ndim != 2 or em.shape[0] != self.state_transition.shape[0]:
            raise ValueError("emission must have one row per hidden state")
        for i, row in enumerate(em):
            if np.any(row < 0) or abs(float(row.sum()) - 1.0) > PROB_ATOL:
                raise ValueError(f"emission row {i} is not a distribution")
        self.emission = em
        self.state_initial = stationary_distribution(self.state_transition)
        for a in (self.state_transition, self.emission, self.state_initial):
            a.flags.writeable = False
        self._S = int(self.state_transition.shape[0])
        self._D = int(em.shape[1])
        self._logT = _safe_log(self.state_transition)
        self._logE = _safe_log(self.emission)
        self._logpi = _safe_log(self.state_initial)
        self.label = label or f"hmm(S={self._S},D={self._D})"

    def marginal(self):
        return self.state_initial @ self.emission

    def sample(self, n: int, seed) -> SymbolSeq:
        n = int(n)
        rng = as_seed(seed).generator()
        if n == 0:
            return SymbolSeq(np.empty(0, np.int64), alphabet_size=self._D)
        cumT = np.cumsum(self.state_transition, axis=1)
        s = int(np.searchsorted(np.cumsum(self.state_initial), rng.random(), side="right"))
        states = np.empty(n, dtype=np.int64)
        u = rng.random(n - 1)
        states[0] = s
        for t in range(1, n):
            s = int(np.searchsorted(cumT[s], u[t - 1], side="right"))
            states[t] = s
        cumE = np.cumsum(self.emission, axis=1)
        sym = (rng.random(n)[:, None] >= cumE[states]).sum(axis=1)
        return SymbolSeq(sym, alphabet_size=self._D)

    def sample_block_batch(self, count: int, k: int, rng) -> np.ndarray:
        count, k = int(count), int(k)
        cumT = np.cumsum(self.state_transition, axis=1)
        cumE = np.cumsum(self.emission, axis=1)
        states = np.searchsorted(np.cumsum(self.state_initial), rng.random(count), side="right")
        out = np.empty((count, k), dtype=np.int64)
        for t in range(k):
            if t > 0:
                states = (rng.random(count)[:, None] >= cumT[states]).sum(axis=1)
            out[:, t] = (rng.random(count)[:, None] >= cumE[states]).sum(axis=1)
        return out

    def _log_forward(self, block: np.ndarray) -> np.ndarray:
        """Log of the joint vector P(block, hidden state after last symbol)."""
        alpha = self._logpi + self._logE[:, block[0]]
        for sym in block[1:]:
            alpha = logsumexp(alpha[:, None] + self._logT, axis=0) + self._logE[:, sym]
        return alpha

    def log_block_probability(self, block) -> float:
        b = self._as_block(block)
        if b.size == 0:
            return 0.0
        return float(logsumexp(self._log_forward(b)))

    def log_conditional_block_probability(self, past, future) -> float:
        b = self._as_block(past)
        f = self._as_block(future)
        if f.size == 0:
            return self.log_block_probability(b)
        if b.size == 0:
            return 0.0
        joint = self.log_block_probability(np.concatenate([b, f]))
        return joint - self.log_block_probability(f)

    def filtered_state_distribution(self, block) -> np.ndarray:
        """P(hidden state after the block | block)."""
        b = self._as_block(block)
        if b.size == 0:
            return self.state_initial.copy()
        alpha = self._log_forward(b)
        alpha -= logsumexp(alpha)
        return np.exp(alpha)


class CopySource(Source):
    """Exploratory generator producing long repetitions.

    At each step, with probability ``copy_prob`` the source copies the next
    symbol of a segment anchored at a uniformly chosen past offset
    (starting a new segment after ``max_copy_len`` copied symbols), else it
    emits a fresh symbol from the base distribution.  No tractable law, not
    certified stationary ergodic: results measured on it are exploratory.
    """

    tractable = False
    exploratory = True

    def __init__(self, base_probs, copy_prob: float, max_copy_len: int,
                 label: Optional[str] = None):
        self.base_probs = _check_prob_vector(base_probs, "base_probs")
        self.base_probs.flags.writeable = False
        if not 0.0 <= copy_prob < 1.0:
            raise ValueError("copy_prob must lie in [0, 1)")
        if max_copy_len < 1:
            raise ValueError("max_copy_len must be positive")
        self.copy_prob = float(copy_prob)
        self.max_copy_len = int(max_copy_len)
        self._D = int(self.base_probs.size)
        self._cum = np.cumsum(self.base_probs)
        self.label = label or f"copy(p={copy_prob},L={max_copy_len})"

    def marginal(self):
        # fresh symbols follow the base law and copied symbols reproduce the
        # empirical past, so the single-symbol marginal stays the base law
        return self.base_probs

    def sample(self, n: int, seed) -> SymbolSeq:
        n = int(n)
        rng = as_seed(seed).generator()
        out = np.empty(n, dtype=np.int64)
        cum = self._cum
        u_decide = rng.random(n)
        offset = 0          # 0 means "not copying"
        run = 0
        for t in range(n):
            if t == 0 or u_decide[t] >= self.copy_prob:
                out[t] = np.searchsorted(cum, rng.random(), side="right")
                offset = 0
                run = 0
            else:
                if offset == 0 or run >= self.max_copy_len:
                    offset = int(rng.integers(1, t + 1))
                    run = 0
                out[t] = out[t - offset]
                run += 1
        return SymbolSeq(out, alphabet_size=self._D)


# ---------------------------------------------------------------------------
# module-level operation wrappers


def sample_path(model: Source, n: int, seed) -> SymbolSeq:
    return model.sample(n, seed)


def sample_copy_source(base_probs, copy_prob, max_copy_len, n, seed) -> SymbolSeq:
    return CopySource(base_probs, copy_prob, max_copy_len).sample(n, seed)


def block_probability(model: Source, block) -> float:
    return math.exp(model.log_block_probability(block))


def conditional_block_probability(model: Source, past_block, future_block) -> float:
    return math.exp(model.log_conditional_block_probability(past_block, future_block))


def enumerate_log_block_probabilities(model: Source, k: int,
                                      limit: int = 1 << 24) -> np.ndarray:
    """Log probabilities of all D^k blocks, ordered as base-D numerals.

    Block index b encodes the block whose t-th symbol is the t-th base-D
    digit of b, most significant first.
    """
    if not model.tractable:
        raise ValueError(f"{model.label}: no tractable law to enumerate")
    d = model.alphabet_size
    if k < 0:
        raise ValueError("k must be non-negative")
    if d ** k > limit:
        raise ValueError(f"enumeration of {d}^{k} blocks exceeds limit {limit}")
    if k == 0:
        return np.zeros(1)
    if isinstance(model, IIDSource):
        logp = _safe_log(model.probs)
        cur = logp.copy()
        for _ in range(k - 1):
            cur = (cur[:, None] + logp[None, :]).ravel()
        return cur
    if isinstance(model, MarkovSource):
        logpi = model._logpi
        logT = model._logT
        cur = logpi.copy()
        size = d
        for _ in range(k - 1):
            last = np.arange(size) % d
            cur = (cur[:, None] + logT[last, :]).ravel()
            size *= d
        return cur
    if isinstance(model, HMMSource):
        logpi = model._logpi
        logT = model._logT
        logE = model._logE
        # alpha[b, s] = log P(block b, state s after emitting it)
        alpha = logpi[None, :] + logE.T  # shape (D, S)
        for _ in range(k - 1):
            trans = logsumexp(alpha[:, :, None] + logT[None, :, :], axis=1)
            alpha = (trans[:, None, :] + logE.T[None, :, :]).reshape(-1, model._S)
        return logsumexp(alpha, axis=1)
    raise ValueError(f"unsupported model {model.label}")


def model_from_config(spec: dict) -> Source:
    """Build a source from a config mapping (see README for the schema)."""
    if not isinstance(spec, dict):
        raise ValueError("model spec must be a mapping")
    kind = spec.get("type")
    if kind == "iid":
        if "probs" not in spec:
            raise ValueError("model.probs is required for type 'iid'")
        return IIDSource(spec["probs"], label=spec.get("label"))
    if kind == "markov":
        if "transition" not in spec:
            raise ValueError("model.transition is required for type 'markov'")
        return MarkovSource(spec["transition"], label=spec.get("label"),
                            allow_periodic=bool(spec.get("allow_periodic", False)))
    if kind == "hmm":
        for key in ("transition", "emission"):
            if key not in spec:
                raise ValueError(f"model.{key} is required for type 'hmm'")
        return HMMSource(spec["transition"], spec["emission"], label=spec.get("label"),
                         allow_periodic=bool(spec.get("allow_periodic", False)))
    if kind == "copy":
        for key in ("probs", "copy_prob", "max_copy_len"):
            if key not in spec:
                raise ValueError(f"model.{key} is required for type 'copy'")
        return CopySource(spec["probs"], spec["copy_prob"], spec["max_copy_len"],
                          label=spec.get("label"))
    raise ValueError(f"unknown model.type {kind!r} (expected iid/markov/hmm/copy)")
