"""Repetition and recurrence statistics of finite symbol sequences.

Four integer-valued statistics are computed for a sequence x_1..x_N over a
finite alphabet (all indices 1-based on the outside, 0-based internally):

* longest match length   L1_n: largest k such that the prefix x_1..x_k
  reoccurs starting at some position i+1 with 0 < i <= n-k,
* maximal repetition     L2_n: largest k such that some length-k substring
  occurs at least twice (overlaps allowed) within x_1..x_n,
* recurrence time        R1_k: least i >= 1 with x_{i+1}..x_{i+k} = x_1..x_k,
* repetition time        R2_k: least i >= 1 such that x_{i+1}..x_{i+k}
  equals x_{j+1}..x_{j+k} for some 0 <= j < i.

The families are linked by the duality  R_k > n  <=>  L_{n+k} < k.  On a
finite sample an R-value that never materialises is reported censored at
N-k+1, which is a valid lower bound for the true value.
"""

from __future__ import annotations

import enum
from typing import Iterable, NamedTuple, Optional

import numpy as np

ORACLE_LIMIT_DEFAULT = 2000


class CurveKind(enum.Enum):
    L1 = "L1"
    L2 = "L2"
    R1 = "R1"
    R2 = "R2"

    @property
    def is_length_kind(self) -> bool:
        """True for curves indexed by prefix length n (L1/L2)."""
        return self in (CurveKind.L1, CurveKind.L2)

    @property
    def dual(self) -> "CurveKind":
        return _DUALS[self]


_DUALS = {
    CurveKind.L1: CurveKind.R1,
    CurveKind.R1: CurveKind.L1,
    CurveKind.L2: CurveKind.R2,
    CurveKind.R2: CurveKind.L2,
}


class CensoredValue(NamedTuple):
    value: int
    censored: bool = False


class SymbolSeq:
    """Immutable sequence of dense non-negative symbol ids.

    The alphabet size is either declared explicitly or inferred from the
    data (max id + 1, which equals the number of distinct symbols when the
    ids are dense); which mode was used is recorded in ``declared``.
    """

    __slots__ = ("symbols", "alphabet_size", "declared", "_bytes")

    def __init__(self, symbols, alphabet_size: Optional[int] = None):
        arr = np.asarray(symbols)
        if arr.ndim != 1:
            raise ValueError("symbols must be one-dimensional")
        if arr.size and not np.issubdtype(arr.dtype, np.integer):
            raise ValueError("symbols must be integers")
        if arr.size and int(arr.min()) < 0:
            raise ValueError("symbol ids must be non-negative")
        observed = int(arr.max()) + 1 if arr.size else 0
        if alphabet_size is None:
            self.alphabet_size = max(observed, 1)
            self.declared = False
        else:
            if alphabet_size < 1:
                raise ValueError("alphabet size must be positive")
            if observed > alphabet_size:
                raise ValueError(
                    f"symbol id {observed - 1} outside declared alphabet of size {alphabet_size}"
                )
            self.alphabet_size = int(alphabet_size)
            self.declared = True
        dtype = np.uint8 if self.alphabet_size <= 256 else np.int64
        arr = arr.astype(dtype, copy=True)
        arr.flags.writeable = False
        self.symbols = arr
        self._bytes = None

    @classmethod
    def from_tokens(cls, tokens: Iterable) -> "SymbolSeq":
        """Map arbitrary hashable tokens to dense ids in order of first use."""
        vocab = {}
        ids = []
        for tok in tokens:
            idx = vocab.get(tok)
            if idx is None:
                idx = len(vocab)
                vocab[tok] = idx
            ids.append(idx)
        seq = cls(np.asarray(ids, dtype=np.int64) if ids else np.empty(0, np.int64))
        return seq

    @classmethod
    def from_bytes(cls, data: bytes) -> "SymbolSeq":
        """Ingest raw bytes, remapping observed byte values to dense ids."""
        raw = np.frombuffer(data, dtype=np.uint8)
        if raw.size == 0:
            return cls(np.empty(0, np.int64))
        values = np.unique(raw)
        lut = np.zeros(256, dtype=np.int64)
        lut[values] = np.arange(len(values))
        return cls(lut[raw])

    def __len__(self) -> int:
        return int(self.symbols.size)

    def __getitem__(self, idx):
        return self.symbols[idx]

    def suffix(self, i: int) -> "SymbolSeq":
        """View of the sequence with the first i symbols dropped (the shift)."""
        if not 0 <= i <= len(self):
            raise ValueError("shift outside sequence")
        out = object.__new__(SymbolSeq)
        out.symbols = self.symbols[i:]
        out.alphabet_size = self.alphabet_size
        out.declared = self.declared
        out._bytes = None
        return out

    def prefix(self, n: int) -> "SymbolSeq":
        if not 0 <= n <= len(self):
            raise ValueError("prefix length outside sequence")
        out = object.__new__(SymbolSeq)
        out.symbols = self.symbols[:n]
        out.alphabet_size = self.alphabet_size
        out.declared = self.declared
        out._bytes = None
        return out

    def as_bytes(self) -> Optional[bytes]:
        """Byte view for fast substring search; None when D > 256."""
        if self.alphabet_size > 256:
            return None
        if self._bytes is None:
            self._bytes = self.symbols.tobytes()
        return self._bytes

    def __setattr__(self, name, value):
        # _bytes is a lazily filled cache; everything else is frozen after init
        if name != "_bytes" and hasattr(self, "_bytes"):
            raise AttributeError("SymbolSeq is immutable")
        object.__setattr__(self, name, value)

    def __repr__(self):
        return f"SymbolSeq(N={len(self)}, D={self.alphabet_size})"


def seq_from_text(text: str) -> SymbolSeq:
    """Convenience for tests: one symbol per character."""
    return SymbolSeq.from_tokens(text)


class StatCurve:
    """One statistic as a sparse map from 1-based index to CensoredValue."""

    __slots__ = ("kind", "indices", "values", "censored")

    def __init__(self, kind: CurveKind, indices, values, censored=None):
        self.kind = kind
        idx = np.asarray(indices, dtype=np.int64)
        val = np.asarray(values, dtype=np.int64)
        if censored is None:
            cen = np.zeros(idx.size, dtype=bool)
        else:
            cen = np.asarray(censored, dtype=bool)
        if not (idx.size == val.size == cen.size):
            raise ValueError("index/value/censored arrays must align")
        if idx.size and (np.any(np.diff(idx) <= 0) or idx[0] < 1):
            raise ValueError("indices must be strictly increasing and >= 1")
        if kind.is_length_kind and cen.any():
            raise ValueError("length-kind curves cannot carry censored points")
        for a in (idx, val, cen):
            a.flags.writeable = False
        self.indices = idx
        self.values = val
        self.censored = cen

    @classmethod
    def dense(cls, kind: CurveKind, values, censored=None) -> "StatCurve":
        values = np.asarray(values)
        return cls(kind, np.arange(1, values.size + 1), values, censored)

    def __len__(self) -> int:
        return int(self.indices.size)

    def point(self, index: int) -> CensoredValue:
        pos = np.searchsorted(self.indices, index)
        if pos >= self.indices.size or self.indices[pos] != index:
            raise KeyError(f"no point at index {index}")
        return CensoredValue(int(self.values[pos]), bool(self.censored[pos]))

    def items(self):
        for i, v, c in zip(self.indices, self.values, self.censored):
            yield int(i), CensoredValue(int(v), bool(c))

    def max_index(self) -> int:
        return int(self.indices[-1]) if self.indices.size else 0

    def uncensored(self):
        """(indices, values) restricted to uncensored points."""
        keep = ~self.censored
        return self.indices[keep], self.values[keep]

    def censored_fraction(self) -> float:
        return float(self.censored.mean()) if self.censored.size else 0.0

    def restrict(self, indices) -> "StatCurve":
        wanted = np.asarray(sorted(set(int(i) for i in indices)), dtype=np.int64)
        if self.indices.size == 0 or wanted.size == 0:
            return StatCurve(self.kind, [], [])
        pos = np.searchsorted(self.indices, wanted)
        clipped = np.minimum(pos, self.indices.size - 1)
        ok = (pos < self.indices.size) & (self.indices[clipped] == wanted)
        pos = pos[ok]
        return StatCurve(self.kind, self.indices[pos], self.values[pos], self.censored[pos])

    def __repr__(self):
        return f"StatCurve({self.kind.value}, {len(self)} points)"


# ---------------------------------------------------------------------------
# linear-time machinery


def z_array(symbols) -> list:
    """Z-array: z[i] = length of the longest common prefix of x and x[i:]."""
    s = list(symbols)
    n = len(s)
    z = [0] * n
    if n == 0:
        return z
    z[0] = n
    left = right = 0
    for i in range(1, n):
        zi = 0
        if i < right:
            zi = min(right - i, z[i - left])
        while i + zi < n and s[zi] == s[i + zi]:
            zi += 1
        z[i] = zi
        if i + zi > right:
            left, right = i, i + zi
    return z


def _first_prefix_occurrence(z) -> list:
    """minoff[k] = least i >= 1 with z[i] >= k (0 marks 'none'), k = 1..n."""
    n = len(z)
    first = [0] * (n + 2)
    for i in range(n - 1, 0, -1):
        zi = z[i]
        if zi > 0:
            first[zi] = i
    # z[i] >= k+1 implies z[i] >= k, so sweep the thresholds downwards
    for k in range(n - 1, 0, -1):
        nxt = first[k + 1]
        if nxt and (first[k] == 0 or nxt < first[k]):
            first[k] = nxt
    return first


def longest_match_curve(seq: SymbolSeq) -> StatCurve:
    """L1 curve for every prefix, via one Z-array pass."""
    n = len(seq)
    z = z_array(seq.symbols)
    first = _first_prefix_occurrence(z)
    values = np.zeros(n, dtype=np.int64)
    k = 0
    for pos in range(1, n + 1):
        # a length-(k+1) prefix match is complete once first[k+1] + (k+1) <= pos
        while k + 1 <= n and first[k + 1] and first[k + 1] + k + 1 <= pos:
            k += 1
        values[pos - 1] = k
    return StatCurve.dense(CurveKind.L1, values)


def recurrence_time_curve(seq: SymbolSeq) -> StatCurve:
    """R1 curve for k = 1..N; unobserved recurrences censored at N-k+1."""
    n = len(seq)
    z = z_array(seq.symbols)
    first = _first_prefix_occurrence(z)
    values = np.zeros(n, dtype=np.int64)
    censored = np.zeros(n, dtype=bool)
    for k in range(1, n + 1):
        if first[k]:
            values[k - 1] = first[k]
        else:
            values[k - 1] = n - k + 1
            censored[k - 1] = True
    return StatCurve.dense(CurveKind.R1, values, censored)


class SuffixAutomaton:
    """Online suffix automaton over integer symbols.

    ``extend`` appends one symbol and returns the length of the longest
    suffix of the current string that occurs at least twice within it,
    which is exactly the new repeated-suffix length needed for the
    maximal-repetition curve.
    """

    def __init__(self):
        self._next = [{}]
        self._link = [-1]
        self._len = [0]
        self._last = 0

    def __len__(self):
        return len(self._len)

    def extend(self, c) -> int:
        nxt = self._next
        link = self._link
        length = self._len
        cur = len(nxt)
        nxt.append({})
        length.append(length[self._last] + 1)
        link.append(0)
        p = self._last
        while p >= 0 and c not in nxt[p]:
            nxt[p][c] = cur
            p = link[p]
        if p >= 0:
            q = nxt[p][c]
            if length[p] + 1 == length[q]:
                link[cur] = q
            else:
                clone = len(nxt)
                nxt.append(nxt[q].copy())
                length.append(length[p] + 1)
                link.append(link[q])
                while p >= 0 and nxt[p].get(c) == q:
                    nxt[p][c] = clone
                    p = link[p]
                link[q] = clone
                link[cur] = clone
        self._last = cur
        return length[link[cur]]


def maximal_repetition_curve(seq: SymbolSeq) -> StatCurve:
    """L2 curve via the online automaton: running max of repeated-suffix lengths."""
    n = len(seq)
    values = np.zeros(n, dtype=np.int64)
    sam = SuffixAutomaton()
    best = 0
    extend = sam.extend
    for pos, c in enumerate(seq.symbols.tolist()):
        rep = extend(c)
        if rep > best:
            best = rep
        values[pos] = best
    return StatCurve.dense(CurveKind.L2, values)


def repetition_time_curve(seq: SymbolSeq, l2: Optional[StatCurve] = None) -> StatCurve:
    """R2 curve derived from the L2 curve through the duality relation."""
    n = len(seq)
    if l2 is None:
        l2 = maximal_repetition_curve(seq)
    if l2.kind is not CurveKind.L2 or len(l2) != n:
        raise ValueError("need the dense L2 curve of the same sequence")
    l2v = l2.values
    # firstpos[k] = least prefix length p with L2_p >= k
    firstpos = np.zeros(n + 1, dtype=np.int64)
    prev = 0
    for p in range(1, n + 1):
        cur = int(l2v[p - 1])
        for k in range(prev + 1, cur + 1):
            firstpos[k] = p
        prev = max(prev, cur)
    values = np.zeros(n, dtype=np.int64)
    censored = np.zeros(n, dtype=bool)
    for k in range(1, n + 1):
        if k <= prev and firstpos[k]:
            values[k - 1] = firstpos[k] - k
        else:
            values[k - 1] = n - k + 1
            censored[k - 1] = True
    return StatCurve.dense(CurveKind.R2, values, censored)


def compute_curve(seq: SymbolSeq, kind: CurveKind) -> StatCurve:
    if kind is CurveKind.L1:
        return longest_match_curve(seq)
    if kind is CurveKind.L2:
        return maximal_repetition_curve(seq)
    if kind is CurveKind.R1:
        return recurrence_time_curve(seq)
    return repetition_time_curve(seq)


# ---------------------------------------------------------------------------
# point queries (early-exit; used on long sampled paths)


def recurrence_time(seq: SymbolSeq, k: int) -> CensoredValue:
    """R1_k of one sequence without building the whole curve."""
    n = len(seq)
    if not 1 <= k <= n:
        raise ValueError("k outside 1..N")
    data = seq.as_bytes()
    if data is not None:
        pos = data.find(data[:k], 1)
        if pos != -1:
            return CensoredValue(pos, False)
        return CensoredValue(n - k + 1, True)
    sym = seq.symbols
    block = sym[:k]
    candidates = np.flatnonzero(sym[1:] == block[0]) + 1
    for i in candidates:
        if i + k <= n and np.array_equal(sym[i:i + k], block):
            return CensoredValue(int(i), False)
    return CensoredValue(n - k + 1, True)


def repetition_time(seq: SymbolSeq, k: int) -> CensoredValue:
    """R2_k of one sequence: first window whose content was seen before."""
    n = len(seq)
    if not 1 <= k <= n:
        raise ValueError("k outside 1..N")
    data = seq.as_bytes()
    if data is not None:
        seen = {data[:k]}
        for i in range(1, n - k + 1):
            w = data[i:i + k]
            if w in seen:
                return CensoredValue(i, False)
            seen.add(w)
    else:
        sym = seq.symbols
        seen = {tuple(sym[:k].tolist())}
        for i in range(1, n - k + 1):
            w = tuple(sym[i:i + k].tolist())
            if w in seen:
                return CensoredValue(i, False)
            seen.add(w)
    return CensoredValue(n - k + 1, True)


# ---------------------------------------------------------------------------
# brute-force oracle


def _pair_match_table(symbols: np.ndarray) -> np.ndarray:
    """ext[i, j] = length of the longest common extension of x[i:] and x[j:]."""
    n = symbols.size
    ext = np.zeros((n + 1, n + 1), dtype=np.int32)
    for i in range(n - 1, -1, -1):
        ext[i, :n] = np.where(symbols == symbols[i], ext[i + 1, 1:] + 1, 0)
    return ext[:n, :n]


def brute_force_curve(seq: SymbolSeq, kind: CurveKind,
                      limit: int = ORACLE_LIMIT_DEFAULT) -> StatCurve:
    """Definitional evaluation of any of the four statistics.

    Enumerates all start-position pairs through a quadratic match-length
    table; O(N^2) time and memory, so refuses sequences above ``limit``.
    """
    n = len(seq)
    if n > limit:
        raise ValueError(f"oracle limit exceeded: N={n} > {limit}")
    if n == 0:
        return StatCurve(kind, [], [])
    sym = seq.symbols.astype(np.int64)
    ext = _pair_match_table(sym)
    prefix_match = ext[0]                      # match with the prefix, offset i
    cummax = np.maximum.accumulate(ext, axis=0)
    any_match = np.zeros(n, dtype=np.int64)    # match with any earlier offset
    any_match[1:] = np.array([cummax[j - 1, j] for j in range(1, n)], dtype=np.int64)

    if kind in (CurveKind.L1, CurveKind.L2):
        source = prefix_match if kind is CurveKind.L1 else any_match
        values = np.zeros(n, dtype=np.int64)
        for pos in range(2, n + 1):
            offs = np.arange(1, pos)
            values[pos - 1] = int(np.minimum(source[1:pos], pos - offs).max())
        return StatCurve.dense(kind, values)

    source = prefix_match if kind is CurveKind.R1 else any_match
    values = np.zeros(n, dtype=np.int64)
    censored = np.zeros(n, dtype=bool)
    for k in range(1, n + 1):
        hits = np.flatnonzero(source[1:] >= k)
        if hits.size:
            values[k - 1] = int(hits[0]) + 1
        else:
            values[k - 1] = n - k + 1
            censored[k - 1] = True
    return StatCurve.dense(kind, values, censored)


# ---------------------------------------------------------------------------
# structural checks


def check_duality(lcurve: StatCurve, rcurve: StatCurve) -> bool:
    """Verify R_k > n <=> L_{n+k} < k for all n+k <= N.

    Censored R-values enter as the lower bound they certify; within the
    checked range n <= N-k that bound always exceeds n, so the censored
    semantics stays sound.
    """
    if not lcurve.kind.is_length_kind or rcurve.kind is not lcurve.kind.dual:
        raise ValueError(f"kind mismatch: {lcurve.kind.value} vs {rcurve.kind.value}")
    n = lcurve.max_index()
    if rcurve.max_index() != n or len(lcurve) != n or len(rcurve) != n:
        raise ValueError("curves must be dense over the same sequence")
    lv = lcurve.values
    rv = rcurve.values
    for k in range(1, n + 1):
        ns = np.arange(1, n - k + 1)
        if ns.size == 0:
            break
        left = rv[k - 1] > ns
        right = lv[k + ns - 1] < k
        if not np.array_equal(left, right):
            return False
    return True


def check_min_decomposition(seq: SymbolSeq, k: int) -> Optional[bool]:
    """Check R2_k = min_i (i + R1_k of the i-shifted sequence), i < R2_k.

    Returns None when R2_k is censored (the identity cannot be decided on
    the sample); censored inner recurrence values act as the lower bounds
    they are, which never undercut the minimum.
    """
    r2 = repetition_time(seq, k)
    if r2.censored:
        return None
    best = None
    for i in range(r2.value):
        inner = recurrence_time(seq.suffix(i), k)
        term = i + inner.value
        if best is None or term < best:
            best = term
    return best == r2.value
