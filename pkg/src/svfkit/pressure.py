"""Partition sums, certified pressure bounds, exact pressure of nonnegative
tuples and affinity-dimension root finding.

Upper bounds come from subadditivity: the pressure is the infimum of
(1/n) log Z_n, so every finite n gives a valid upper bound. Lower bounds come
from two minorants of phi^s: the determinant bound |det A|^(s/d) <= phi^s(A),
which is multiplicative, and the spectral bound chi^s(A)^m <= phi^s(A^m),
which turns any single word into a lower bound for the growth rate.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from math import isfinite

import numpy as np
from scipy.special import logsumexp

from .errors import DomainError, InputError
from .multilinear import log_chi_from_log_moduli, log_svf_from_log_sv
from .symbolic import DEFAULT_BUDGET, check_budget
from .tuples import MatrixTuple

# word products are formed in blocks of at most this many words
BLOCK_WORDS = 2 ** 15


@dataclass(frozen=True)
class Potential:
    """``kind`` is "svf" (phi^s) or "norm" (operator norm to the power s)."""

    kind: str
    s: float

    def __post_init__(self):
        if self.kind not in ("svf", "norm"):
            raise InputError(f"unknown potential kind {self.kind!r}")
        if not (self.s >= 0 and isfinite(self.s)):
            raise InputError("potential exponent must be a finite nonnegative number")


def SVF(s: float) -> Potential:
    return Potential("svf", float(s))


def NormPow(s: float) -> Potential:
    return Potential("norm", float(s))


@dataclass
class PressureEstimate:
    lower: float
    upper: float
    n_used: int
    methods: dict = field(default_factory=dict)
    exact: bool = False
    s: float | None = None

    def __post_init__(self):
        if self.lower > self.upper + 1e-12 * max(1.0, abs(self.upper)):
            raise AssertionError(f"lower bound {self.lower} exceeds upper bound {self.upper}")

    @property
    def width(self) -> float:
        return self.upper - self.lower

    def overlaps(self, other: "PressureEstimate", slack: float = 0.0) -> bool:
        return self.lower <= other.upper + slack and other.lower <= self.upper + slack


# ------------------------------------------------------------ word spectra

def _level_products(mats: np.ndarray, n: int) -> np.ndarray:
    d = mats.shape[-1]
    out = np.eye(d)[None]
    for _ in range(n):
        out = np.einsum("wij,ajk->waik", out, mats).reshape(-1, d, d)
    return out


def _word_blocks(mats: np.ndarray, n: int):
    """Yield products of all length-n words, lexicographically, in blocks."""
    N = mats.shape[0]
    b = n
    while b > 0 and N ** b > BLOCK_WORDS:
        b -= 1
    suffix = _level_products(mats, b)
    prefix = _level_products(mats, n - b)
    for P in prefix:
        yield P @ suffix


def _log_dets(mats: np.ndarray, n: int) -> np.ndarray:
    """log|det A_w| for all length-n words, summed generator by generator."""
    ld1 = np.linalg.slogdet(mats)[1]
    out = np.zeros(1)
    for _ in range(n):
        out = (out[:, None] + ld1[None, :]).ravel()
    return out


class WordSpectra:
    """Cache of log singular values and log eigenvalue moduli of word products.

    Arrays are indexed by lexicographic word rank. The last singular value is
    recomputed from the exactly additive log-determinant, which keeps the
    smallest gain accurate for long words.
    """

    def __init__(self, tup, threads: int = 1, budget: int = DEFAULT_BUDGET):
        self.mats = tup.as_float() if isinstance(tup, MatrixTuple) else np.asarray(tup, dtype=float)
        self.N, self.d = self.mats.shape[0], self.mats.shape[-1]
        self.threads = max(1, int(threads))
        self.budget = budget
        self._sv: dict[int, np.ndarray] = {}
        self._eig: dict[int, np.ndarray] = {}
        self._ld: dict[int, np.ndarray] = {}

    def _map(self, fn, n):
        blocks = _word_blocks(self.mats, n)
        if self.threads == 1:
            parts = [fn(B) for B in blocks]
        else:
            with ThreadPoolExecutor(self.threads) as ex:
                parts = list(ex.map(fn, blocks))
        return np.concatenate(parts, axis=0)

    def log_det(self, n: int) -> np.ndarray:
        if n not in self._ld:
            check_budget(self.N, n, self.budget)
            self._ld[n] = _log_dets(self.mats, n)
        return self._ld[n]

    def log_sv(self, n: int) -> np.ndarray:
        if n not in self._sv:
            check_budget(self.N, n, self.budget)
            with np.errstate(divide="ignore"):
                L = self._map(lambda B: np.log(np.linalg.svd(B, compute_uv=False)), n)
            L[:, -1] = self.log_det(n) - L[:, :-1].sum(axis=1)
            self._sv[n] = L
        return self._sv[n]

    def log_moduli(self, n: int) -> np.ndarray:
        if n not in self._eig:
            check_budget(self.N, n, self.budget)

            def moduli(B):
                m = np.sort(np.abs(np.linalg.eigvals(B)), axis=1)[:, ::-1]
                with np.errstate(divide="ignore"):
                    return np.log(m)

            self._eig[n] = self._map(moduli, n)
        return self._eig[n]

    def log_potential(self, pot: Potential, n: int) -> np.ndarray:
        L = self.log_sv(n)
        if pot.kind == "norm":
            return pot.s * L[:, 0]
        return log_svf_from_log_sv(L, pot.s, self.log_det(n))


def _spectra(tup, spectra, threads=1):
    if spectra is not None:
        return spectra
    return WordSpectra(tup, threads)


def partition_sum(tup, pot: Potential, n: int, threads: int = 1, spectra: WordSpectra | None = None) -> float:
    """log of the sum over length-n words of pot(A_w)."""
    if n < 1:
        raise InputError("n must be >= 1")
    sp = _spectra(tup, spectra, threads)
    return float(logsumexp(sp.log_potential(pot, n)))


def partition_sums(tup, pot: Potential, n_max: int, threads: int = 1,
                   spectra: WordSpectra | None = None) -> np.ndarray:
    """Array of (1/n) log Z_n for n = 1..n_max."""
    sp = _spectra(tup, spectra, threads)
    return np.array([partition_sum(tup, pot, n, spectra=sp) / n for n in range(1, n_max + 1)])


def _upper(sp: WordSpectra, pot: Potential, n_max: int) -> tuple[float, int]:
    vals = [logsumexp(sp.log_potential(pot, n)) / n for n in range(1, n_max + 1)]
    i = int(np.argmin(vals))
    return float(vals[i]), i + 1


def _lower(sp: WordSpectra, pot: Potential, n_max: int) -> tuple[float, str]:
    d = sp.d
    ld1 = sp.log_det(1)
    det_bound = float(logsumexp((pot.s / d) * ld1))
    best, method = det_bound, "determinant"
    if pot.kind == "svf" and pot.s >= d:
        # phi^s is multiplicative here, so the determinant bound is the pressure
        return det_bound, "determinant (exact for s >= d)"
    for n in range(1, n_max + 1):
        E = sp.log_moduli(n)
        if pot.kind == "norm":
            vals = pot.s * E[:, 0]
        else:
            vals = log_chi_from_log_moduli(E, pot.s)
        j = int(np.argmax(vals))
        cand = float(vals[j]) / n
        if cand > best:
            best, method = cand, f"spectral (word length {n}, rank {j})"
    return best, method


def pressure_upper(tup, pot: Potential, n_max: int, threads: int = 1,
                   spectra: WordSpectra | None = None) -> float:
    """min over n <= n_max of (1/n) log Z_n: a certified upper bound."""
    if n_max < 1:
        raise InputError("n_max must be >= 1")
    return _upper(_spectra(tup, spectra, threads), pot, n_max)[0]


def pressure_lower(tup, pot: Potential, n_max: int, threads: int = 1,
                   spectra: WordSpectra | None = None) -> float:
    """Max of the determinant and spectral minorants: a certified lower bound."""
    if n_max < 1:
        raise InputError("n_max must be >= 1")
    return _lower(_spectra(tup, spectra, threads), pot, n_max)[0]


def pressure_bounds(tup, pot: Potential, n_max: int, threads: int = 1,
                    spectra: WordSpectra | None = None) -> PressureEstimate:
    sp = _spectra(tup, spectra, threads)
    up, n_used = _upper(sp, pot, n_max)
    lo, how = _lower(sp, pot, n_max)
    # both bounds are floating point; a lower bound that overshoots by rounding
    # only is clipped so the interval stays well formed
    if lo > up and lo - up <= 1e-12 * max(1.0, abs(up)):
        lo = up
    return PressureEstimate(lo, up, n_used, {"upper": f"subadditive minimum at n={n_used}", "lower": how},
                            False, pot.s)


def _stack(lift) -> np.ndarray:
    if isinstance(lift, MatrixTuple):
        return lift.as_float()
    if hasattr(lift, "matrices"):
        return np.asarray(lift.matrices, dtype=float)
    return np.asarray(lift, dtype=float)


def perron_value(M: np.ndarray) -> float:
    """Spectral radius of a nonnegative matrix."""
    return float(np.max(np.abs(np.linalg.eigvals(M)))) if M.size else 0.0


def pressure_exact_nonneg(lift) -> float:
    """Norm pressure of an entrywise nonnegative tuple: log of the spectral radius of the sum."""
    mats = _stack(lift)
    if np.any(mats < 0):
        raise InputError("matrices must be entrywise nonnegative")
    rho = perron_value(mats.sum(axis=0))
    if rho <= 0:
        raise DomainError("sum matrix is nilpotent; pressure is -inf")
    return float(np.log(rho))


def _exact_route(tup):
    from .equilibrium import exact_pressure_function
    return exact_pressure_function(tup)


def pressure_curve(tup, s_grid, n_max: int, threads: int = 1, exact: bool = True) -> list[PressureEstimate]:
    """Pressure estimates of phi^s along a grid of s values."""
    d = tup.dim
    grid = [float(s) for s in s_grid]
    if any(s < 0 or s > d for s in grid):
        raise InputError(f"grid values must lie in [0, {d}]")
    route = _exact_route(tup) if exact else None
    sp = WordSpectra(tup, threads)
    out = []
    for s in grid:
        if route is not None:
            p = route.pressure(s)
            out.append(PressureEstimate(p, p, 0, {"exact": route.name}, True, s))
        else:
            out.append(pressure_bounds(tup, SVF(s), n_max, spectra=sp))
    return out


def curve_csv(estimates: list[PressureEstimate]) -> str:
    lines = ["s,lower,upper,exact,n_used"]
    for e in estimates:
        lines.append(f"{e.s:.17g},{e.lower:.17g},{e.upper:.17g},{str(e.exact).lower()},{e.n_used}")
    return "\n".join(lines) + "\n"


# ------------------------------------------------------------ affinity dimension

@dataclass
class AffinityDimension:
    lo: float
    hi: float
    exact: bool
    certified: bool
    method: str
    iterations: int = 0
    notes: list = field(default_factory=list)

    @property
    def width(self) -> float:
        return self.hi - self.lo

    @property
    def value(self) -> float:
        return 0.5 * (self.lo + self.hi)


def _bisect_decreasing(f, a: float, b: float, tol: float, max_iter: int):
    """Bracket the sign change of a nonincreasing f on [a, b].

    Returns (lo, hi, iterations) with f(lo) >= 0 and f(hi) < 0, except at the
    ends: if f(b) >= 0 the result is (b, b); if f(a) < 0 it is (a, a).
    """
    if f(b) >= 0:
        return b, b, 0
    if f(a) < 0:
        return a, a, 0
    it = 0
    while b - a > tol and it < max_iter:
        m = 0.5 * (a + b)
        if f(m) >= 0:
            a = m
        else:
            b = m
        it += 1
    return a, b, it


def affinity_dimension(tup: MatrixTuple, n_max: int = 8, tol: float = 1e-9, exact: bool = True,
                       allow_noncontractive: bool = False, threads: int = 1,
                       max_iter: int = 200) -> AffinityDimension:
    """Interval containing the zero of s -> P(phi^s), capped at d.

    On the bound route the lower end is the zero of the lower-bound curve and
    the upper end the zero of the upper-bound curve. When the tuple admits a
    closed-form pressure (similitudes, diagonal or generalised permutation
    tuples, possibly after block reduction) a single bracket of width <= tol
    is returned.
    """
    notes = []
    certified = True
    if not tup.is_contractive():
        if not allow_noncontractive:
            raise DomainError("tuple is not contractive; pass allow_noncontractive=True to compute anyway")
        certified = False
        notes.append("non-contractive tuple: pressure need not be strictly decreasing, result not certified")
    d = float(tup.dim)
    route = _exact_route(tup) if exact else None
    if route is not None:
        lo, hi, it = _bisect_decreasing(route.pressure, 0.0, d, tol, max_iter)
        if not route.certified:
            notes.append("closed-form route built from a float basis change")
        return AffinityDimension(lo, hi, True, certified and route.certified, f"exact: {route.name}", it, notes)
    sp = WordSpectra(tup, threads)

    def f_up(s):
        return _upper(sp, SVF(s), n_max)[0]

    def f_low(s):
        return _lower(sp, SVF(s), n_max)[0]

    lo, _, it1 = _bisect_decreasing(f_low, 0.0, d, tol, max_iter)
    _, hi, it2 = _bisect_decreasing(f_up, 0.0, d, tol, max_iter)
    if hi < lo:
        # cannot happen for certified bounds; guard against rounding at equal curves
        notes.append(f"bound curves crossed by {lo - hi:.3e}; interval widened")
        lo, hi = min(lo, hi), max(lo, hi)
    return AffinityDimension(lo, hi, False, certified, f"bounds (n_max={n_max})", it1 + it2, notes)
