"""Lyapunov exponents, Lyapunov dimension and the dimension-drop verdict."""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import InputError
from .pressure import AffinityDimension, PressureEstimate, WordSpectra, affinity_dimension, pressure_curve
from .symbolic import BernoulliSpec, LinearMeasure, MarkovSpec, check_budget
from .tuples import MatrixTuple

METHODS = ("auto", "closed-form", "deterministic", "monte-carlo")
BURN_IN = 20
_CHUNK = 1024


@dataclass
class LyapunovSpectrum:
    exponents: np.ndarray
    half_widths: np.ndarray
    method: str
    details: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return len(self.exponents)

    def log_svf(self, s: float, shift: float = 0.0) -> float:
        """lambda(phi^s) assembled from the exponents, each moved by shift*half_width."""
        lam = self.exponents + shift * self.half_widths
        d = len(lam)
        if s >= d:
            return float(s / d * lam.sum())
        k = int(np.floor(s))
        return float(lam[:k].sum() + (s - k) * lam[k])


def _is_diagonal_tuple(tup: MatrixTuple) -> bool:
    F = tup.as_float()
    return bool(np.all(F * (1 - np.eye(tup.dim)) == 0))


def _closed_form(tup, measure):
    # log|a_{w,axis}| is additive along words, so its average is a
    # one-symbol expectation for any invariant measure
    p = measure.masses(1)
    logs = np.log(np.abs(np.diagonal(tup.as_float(), axis1=1, axis2=2)))  # (N, d)
    lam = np.sort(p @ logs)[::-1]
    return LyapunovSpectrum(lam, np.zeros_like(lam), "closed-form")


def _deterministic(tup, measure, n, threads):
    if n < 2:
        raise InputError("deterministic method needs n >= 2")
    check_budget(tup.count, n)
    sp = WordSpectra(tup, threads)
    totals = []
    for m in (n - 1, n):
        mu = measure.masses(m)
        totals.append(np.cumsum(mu @ sp.log_sv(m)))  # sum_w mu(w) sum_{j<=k} log a_j
    est = totals[1] - totals[0]
    upper = totals[1] / n
    lam = np.diff(np.concatenate([[0.0], est]))
    # distance between the differenced estimate and the subadditive average,
    # spread over the exponents it touches
    gap = np.abs(upper - est)
    hw = gap + np.concatenate([[0.0], gap[:-1]])
    return LyapunovSpectrum(lam, hw, "deterministic", {"n": n, "upper_aggregates": upper.tolist()})


def _mc_chunk(F, measure, seed, offset, count, length):
    words = measure.sample(count, length, seed, offset)
    d = F.shape[-1]
    Q = np.broadcast_to(np.eye(d), (count, d, d)).copy()
    acc = np.zeros((count, d))
    FT = np.transpose(F, (0, 2, 1))
    for t in range(length):
        Q, R = np.linalg.qr(FT[words[:, t]] @ Q)
        if t >= BURN_IN:
            acc += np.log(np.abs(np.diagonal(R, axis1=1, axis2=2)))
    return acc / (length - BURN_IN)


def _monte_carlo(tup, measure, samples, length, seed, threads):
    if seed is None:
        raise InputError("monte-carlo estimation needs an explicit seed")
    if length <= BURN_IN:
        raise InputError(f"trajectory length must exceed the burn-in {BURN_IN}")
    if samples < 2:
        raise InputError("need at least two trajectories")
    F = tup.as_float()
    starts = list(range(0, samples, _CHUNK))
    jobs = [(s0, min(_CHUNK, samples - s0)) for s0 in starts]

    def run(job):
        return _mc_chunk(F, measure, seed, job[0], job[1], length)

    if threads > 1:
        with ThreadPoolExecutor(threads) as ex:
            parts = list(ex.map(run, jobs))
    else:
        parts = [run(j) for j in jobs]
    per = np.concatenate(parts)
    lam = per.mean(axis=0)
    se = per.std(axis=0, ddof=1) / np.sqrt(samples)
    return LyapunovSpectrum(lam, 3 * se, "monte-carlo",
                            {"samples": samples, "length": length, "seed": seed, "burn_in": BURN_IN,
                             "standard_errors": se.tolist()})


def lyapunov_exponents(tup: MatrixTuple, measure: LinearMeasure, method: str = "auto", n: int = 10,
                       samples: int = 10 ** 4, length: int = 200, seed: int | None = None,
                       threads: int = 1) -> LyapunovSpectrum:
    """Lyapunov exponents of the tuple under a shift-invariant measure.

    ``closed-form`` applies to diagonal tuples. ``deterministic`` differences
    the length-n and length-(n-1) averages of partial sums of log singular
    values; the length-n averages divided by n are upper bounds on the true
    partial sums and are kept in ``details``. ``monte-carlo`` follows sampled
    trajectories with QR re-orthogonalisation; half-widths are three standard
    errors. ``auto`` picks closed form when possible and otherwise the
    deterministic method.
    """
    if method not in METHODS:
        raise InputError(f"unknown method {method!r}")
    if measure.N != tup.count:
        raise InputError("measure alphabet does not match the tuple size")
    if method == "auto":
        method = "closed-form" if _is_diagonal_tuple(tup) else "deterministic"
    if method == "closed-form":
        if not _is_diagonal_tuple(tup):
            raise InputError("closed form needs a diagonal tuple")
        return _closed_form(tup, measure)
    if method == "deterministic":
        return _deterministic(tup, measure, n, threads)
    return _monte_carlo(tup, measure, samples, length, seed, threads)


@dataclass
class LyapunovDimension:
    lo: float
    hi: float
    entropy: tuple
    spectrum: LyapunovSpectrum
    capped: bool = False
    notes: list = field(default_factory=list)

    @property
    def value(self) -> float:
        return 0.5 * (self.lo + self.hi)


def _root(h: float, lam: np.ndarray) -> tuple[float, bool]:
    """Zero of s -> h + lambda(phi^s) scanning the affine pieces; d if none."""
    d = len(lam)
    f = h
    for k in range(d):
        g = f + lam[k]
        if f >= 0 > g:
            return k + f / (f - g), False
        f = g
    return float(d), True


def _entropy_bounds(measure, n):
    if isinstance(measure, (BernoulliSpec, MarkovSpec)):
        h = measure.entropy()
        if h is not None:
            return (h, h), True
    return (measure.conditional_entropy(n),) * 2, False


def lyapunov_dimension(tup: MatrixTuple, measure: LinearMeasure, spectrum: LyapunovSpectrum | None = None,
                       n: int = 10, **kwargs) -> LyapunovDimension:
    """Interval for the zero of s -> h(mu) + lambda(phi^s, mu), capped at d."""
    if spectrum is None:
        spectrum = lyapunov_exponents(tup, measure, n=n, **kwargs)
    (h_lo, h_hi), closed = _entropy_bounds(measure, n)
    lam = spectrum.exponents
    hw = spectrum.half_widths
    lo, c1 = _root(h_lo, np.sort(lam - hw)[::-1])
    hi, c2 = _root(h_hi, np.sort(lam + hw)[::-1])
    notes = []
    if not closed:
        notes.append(f"entropy replaced by the conditional block entropy at n={n}, an upper bound")
    if c1 or c2:
        notes.append("no zero in [0, d]; value capped at d")
    return LyapunovDimension(lo, hi, (h_lo, h_hi), spectrum, c1 or c2, notes)


# ------------------------------------------------------------ dimension drop

@dataclass
class DropReport:
    full: AffinityDimension
    reduced: AffinityDimension
    verdict: str  # "StrictDrop" | "Inconclusive"
    removed: int
    gap: float
    grid: list = field(default_factory=list)  # (s, gap_lower, gap_upper)
    notes: list = field(default_factory=list)

    def grid_csv(self) -> str:
        lines = ["s,gap_lower,gap_upper"]
        lines += [f"{s:.17g},{lo:.17g},{up:.17g}" for s, lo, up in self.grid]
        return "\n".join(lines) + "\n"


def pressure_gaps(full: list[PressureEstimate], reduced: list[PressureEstimate]) -> list:
    return [(a.s, a.lower - b.upper, a.upper - b.lower) for a, b in zip(full, reduced)]


def dimension_drop(tup: MatrixTuple, remove: int, n_max: int = 8, tol: float = 1e-9, exact: bool = True,
                   grid=None, threads: int = 1, allow_noncontractive: bool = False) -> DropReport:
    """Affinity dimension before and after removing matrix ``remove`` (0-based).

    StrictDrop is reported only when the reduced interval lies strictly below
    the full one, or when both come from closed-form routes and differ by more
    than twice the bisection tolerance. Anything else is Inconclusive.
    """
    if tup.count < 3:
        raise InputError("dimension_drop needs at least three matrices")
    reduced_tup = tup.remove(remove)
    kw = dict(n_max=n_max, tol=tol, exact=exact, threads=threads, allow_noncontractive=allow_noncontractive)
    full = affinity_dimension(tup, **kw)
    red = affinity_dimension(reduced_tup, **kw)
    gap = full.value - red.value
    strict = red.hi < full.lo or (full.exact and red.exact and gap > 2 * tol)
    if grid is None:
        grid = np.linspace(0.0, tup.dim, 4 * tup.dim + 1)
    rows = pressure_gaps(pressure_curve(tup, grid, n_max, threads, exact),
                         pressure_curve(reduced_tup, grid, n_max, threads, exact))
    notes = []
    if not strict:
        notes.append("intervals overlap; a strict drop is not established numerically")
    return DropReport(full, red, "StrictDrop" if strict else "Inconclusive", remove, gap, rows, notes)

