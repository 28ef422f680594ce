"""Words over a finite alphabet, cylinder masses and shift-invariant measures.

Symbols are 0-based: the alphabet of an N-tuple is ``range(N)`` and a word
is a tuple of symbols. All three measure carriers are linear
representations ``mu([w]) = alpha^T T_{w_1} ... T_{w_n} beta`` with
``sum_i T_i beta = beta`` (consistency) and ``alpha^T sum_i T_i = alpha^T``
(shift invariance), so cylinder evaluation, sampling and invariance checks
share one implementation.
"""
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product

import numpy as np

from . import linalg
from .errors import BudgetError, InputError

DEFAULT_BUDGET = 2 ** 24


def check_budget(N: int, n: int, budget: int = DEFAULT_BUDGET) -> int:
    count = N ** n
    if count > budget:
        raise BudgetError(f"{N}^{n} = {count} words exceeds the budget {budget}")
    return count


def enumerate_words(N: int, n: int, budget: int = DEFAULT_BUDGET):
    """All words of length n over range(N), lexicographically."""
    if N < 1 or n < 0:
        raise InputError("need N >= 1 and n >= 0")
    check_budget(N, n, budget)
    return product(range(N), repeat=n)


def word_index(word, N: int) -> int:
    """Lexicographic rank of a word among words of the same length."""
    idx = 0
    for a in word:
        idx = idx * N + a
    return idx


def index_word(idx: int, N: int, n: int) -> tuple:
    out = []
    for _ in range(n):
        idx, a = divmod(idx, N)
        out.append(a)
    return tuple(reversed(out))


def word_product(tup, word):
    """Left-to-right product A_{w_1} ... A_{w_n}; identity for the empty word."""
    mats = tup.matrices if hasattr(tup, "matrices") else tup
    d = np.asarray(mats[0]).shape[0]
    exact = linalg.is_exact(np.asarray(mats[0]))
    out = linalg.identity(d, exact)
    for a in word:
        if not 0 <= a < len(mats):
            raise InputError(f"symbol {a} out of range")
        out = out @ mats[a]
    return out


class LinearMeasure:
    """Common machinery for measures given by a linear representation."""

    def representation(self):  # pragma: no cover - abstract
        raise NotImplementedError

    @property
    def N(self) -> int:
        return len(self.representation()[1])

    def cylinder(self, word):
        alpha, T, beta = self.representation()
        r = alpha
        for a in word:
            if not 0 <= a < len(T):
                raise InputError(f"symbol {a} out of range")
            r = r @ T[a]
        return r @ beta

    def _float_rep(self):
        alpha, T, beta = self.representation()
        return (np.asarray(alpha, dtype=float), np.asarray(np.stack(T), dtype=float),
                np.asarray(beta, dtype=float))

    def masses(self, n: int, budget: int = DEFAULT_BUDGET) -> np.ndarray:
        """Float cylinder masses of all length-n words in lexicographic order."""
        alpha, T, beta = self._float_rep()
        check_budget(len(T), n, budget)
        R = alpha[None, :]
        for _ in range(n):
            R = np.einsum("wm,imk->wik", R, T).reshape(-1, T.shape[-1])
        return R @ beta

    def sample(self, count: int, length: int, seed: int, offset: int = 0) -> np.ndarray:
        """Seeded random words, shape (count, length).

        Trajectory t draws its uniforms from the stream seeded by
        (seed, offset + t), so splitting a run into chunks with matching
        offsets reproduces the unsplit result.
        """
        alpha, T, beta = self._float_rep()
        N, m = T.shape[0], T.shape[-1]
        U = np.stack([np.random.default_rng([seed, offset + t]).random(length) for t in range(count)]) \
            if count else np.zeros((0, length))
        words = np.zeros((count, length), dtype=np.int64)
        R = np.tile(alpha, (count, 1))
        Tb = T @ beta  # (N, m)
        for t in range(length):
            w = R @ Tb.T  # (count, N) unnormalised next-symbol weights
            w = w / w.sum(axis=1, keepdims=True)
            cum = np.cumsum(w, axis=1)
            sym = np.minimum((U[:, t:t + 1] >= cum).sum(axis=1), N - 1)
            words[:, t] = sym
            R = np.einsum("cm,cmk->ck", R, T[sym])
            R = R / (R @ beta)[:, None]
        return words

    def block_entropy(self, n: int, budget: int = DEFAULT_BUDGET) -> float:
        """(1/n) H(mu restricted to length-n cylinders); nonincreasing in n."""
        if n < 1:
            raise InputError("n must be >= 1")
        p = self.masses(n, budget)
        p = p[p > 0]
        return float(-(p * np.log(p)).sum() / n)

    def conditional_entropy(self, n: int, budget: int = DEFAULT_BUDGET) -> float:
        """H_n - H_{n-1}; also an upper bound on the entropy, usually much sharper."""
        hn = self.block_entropy(n, budget) * n
        hm = self.block_entropy(n - 1, budget) * (n - 1) if n > 1 else 0.0
        return hn - hm


def _check_probability_vector(p, name):
    if any(x < 0 for x in p):
        raise InputError(f"{name} has negative entries")
    total = sum(p)
    if isinstance(total, Fraction):
        if total != 1:
            raise InputError(f"{name} sums to {total}, not 1")
    elif abs(float(total) - 1.0) > 1e-12:
        raise InputError(f"{name} sums to {float(total)!r}, not 1")


@dataclass(frozen=True, eq=False)
class BernoulliSpec(LinearMeasure):
    """I.i.d. symbols with probabilities ``probs`` (Fractions stay exact)."""

    probs: tuple

    def __post_init__(self):
        probs = tuple(self.probs)
        if not all(isinstance(p, Fraction) for p in probs):
            probs = tuple(float(p) for p in probs)
        _check_probability_vector(probs, "probs")
        object.__setattr__(self, "probs", probs)

    def representation(self):
        exact = all(isinstance(p, Fraction) for p in self.probs)
        one = linalg.identity(1, exact)[0]
        T = [linalg.identity(1, exact) * p for p in self.probs]
        return one, T, one

    def cylinder(self, word):
        out = Fraction(1) if all(isinstance(p, Fraction) for p in self.probs) else 1.0
        for a in word:
            out = out * self.probs[a]
        return out

    def entropy(self) -> float:
        p = np.array([float(x) for x in self.probs])
        p = p[p > 0]
        return float(-(p * np.log(p)).sum())


@dataclass(frozen=True, eq=False)
class MarkovSpec(LinearMeasure):
    """Stationary Markov chain on states, each state emitting ``symbol_map[state]``.

    ``stationary`` defaults to the left fixed vector of ``transition``. It is not
    checked for stationarity here; ``invariance_check`` reports any defect.
    """

    transition: np.ndarray
    stationary: np.ndarray | None = None
    symbol_map: tuple | None = None
    n_symbols: int | None = None

    def __post_init__(self):
        P = np.asarray(self.transition)
        exact = P.dtype == object or any(isinstance(x, Fraction) for x in np.ravel(P))
        P = linalg.fraction_array(P) if exact else P.astype(float)
        m = P.shape[0]
        if P.shape != (m, m):
            raise InputError("transition matrix must be square")
        for row in P:
            _check_probability_vector(list(row), "transition row")
        pi = self.stationary
        if pi is None:
            ker = linalg.nullspace((P - linalg.identity(m, exact)).T)
            if ker.shape[1] != 1:
                raise InputError("stationary vector is not unique; pass it explicitly")
            pi = ker[:, 0] / ker[:, 0].sum()
            if not exact:
                pi = np.abs(pi)
        else:
            pi = linalg.fraction_array(pi) if exact else np.asarray(pi, dtype=float)
        _check_probability_vector(list(pi), "stationary vector")
        smap = tuple(range(m)) if self.symbol_map is None else tuple(int(x) for x in self.symbol_map)
        if len(smap) != m:
            raise InputError("symbol_map needs one symbol per state")
        ns = self.n_symbols if self.n_symbols is not None else max(smap) + 1
        object.__setattr__(self, "transition", P)
        object.__setattr__(self, "stationary", pi)
        object.__setattr__(self, "symbol_map", smap)
        object.__setattr__(self, "n_symbols", ns)

    def representation(self):
        P = self.transition
        exact = P.dtype == object
        m = P.shape[0]
        T = []
        for i in range(self.n_symbols):
            D = linalg.zeros((m, m), exact)
            for a, sym in enumerate(self.symbol_map):
                if sym == i:
                    D[a, a] = 1
            T.append(D @ P)
        one = np.array([Fraction(1)] * m, dtype=object) if exact else np.ones(m)
        return self.stationary, T, one

    def entropy(self) -> float | None:
        """Closed form when each state emits its own symbol, else None."""
        if len(set(self.symbol_map)) != len(self.symbol_map):
            return None
        P = np.asarray(self.transition, dtype=float)
        pi = np.asarray(self.stationary, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            terms = np.where(P > 0, P * np.log(np.where(P > 0, P, 1.0)), 0.0)
        return float(-(pi * terms.sum(axis=1)).sum())


@dataclass(frozen=True, eq=False)
class PerronGibbsSpec(LinearMeasure):
    """mu([w]) = u^T M_w v / (rho^|w| u^T v) for nonnegative matrices M_i."""

    matrices: np.ndarray
    perron_value: float
    u: np.ndarray
    v: np.ndarray
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        M = np.asarray(self.matrices, dtype=float)
        if M.ndim != 3 or M.shape[1] != M.shape[2]:
            raise InputError("matrices must have shape (N, m, m)")
        if np.any(M < 0):
            raise InputError("matrices must be entrywise nonnegative")
        object.__setattr__(self, "matrices", M)
        object.__setattr__(self, "u", np.asarray(self.u, dtype=float))
        object.__setattr__(self, "v", np.asarray(self.v, dtype=float))
        object.__setattr__(self, "perron_value", float(self.perron_value))

    def representation(self):
        return (self.u / (self.u @ self.v), list(self.matrices / self.perron_value), self.v)


MeasureSpec = BernoulliSpec | MarkovSpec | PerronGibbsSpec


def cylinder_measure(spec: LinearMeasure, word):
    return spec.cylinder(word)


def entropy_rate(spec: LinearMeasure, n: int = 10, budget: int = DEFAULT_BUDGET) -> float:
    """Entropy of the measure.

    Closed form for Bernoulli and (symbol-per-state) Markov specs; otherwise the
    finite-n block entropy (1/n) H_n, which is an upper bound.
    """
    if n < 1:
        raise InputError("n must be >= 1")
    if isinstance(spec, (BernoulliSpec, MarkovSpec)):
        h = spec.entropy()
        if h is not None:
            return h
    return spec.block_entropy(n, budget)


@dataclass
class InvarianceReport:
    defect: float
    n: int
    sampled: bool = False
    samples: int = 0
    seed: int | None = None

    @property
    def ok(self) -> bool:
        return self.defect <= 1e-12


def invariance_check(spec: LinearMeasure, n: int, budget: int = DEFAULT_BUDGET,
                     samples: int = 4096, seed: int = 0) -> InvarianceReport:
    """max over length-n words w of |sum_i mu([i w]) - mu([w])|.

    Past the word budget the maximum is taken over seeded random words and the
    report says so.
    """
    N = spec.N
    if N ** (n + 1) <= budget:
        lhs = spec.masses(n + 1, budget).reshape(N, -1).sum(axis=0)
        rhs = spec.masses(n, budget)
        return InvarianceReport(float(np.max(np.abs(lhs - rhs))), n)
    alpha, T, beta = spec._float_rep()
    words = spec.sample(samples, n, seed)
    worst = 0.0
    for w in words:
        tail = beta
        for a in w[::-1]:
            tail = T[a] @ tail
        lhs = sum(alpha @ T[i] @ tail for i in range(N))
        worst = max(worst, abs(float(lhs - alpha @ tail)))
    return InvarianceReport(worst, n, True, samples, seed)
