"""Dense small-matrix kernel: singular values, eigenvalue moduli, exterior
powers, the Hodge star and the singular value function.

Wedge bases are indexed by strictly increasing 0-based index tuples in
lexicographic order, so ``wedge_basis(3, 2) == [(0, 1), (0, 2), (1, 2)]``.
"""
from functools import lru_cache
from itertools import combinations
from math import comb, floor

import numpy as np

from . import linalg
from .errors import DomainError, InputError, NumericError

# alpha_d / alpha_1 below this is treated as singular on the float backend
SINGULAR_RTOL = 1e-14
_LOG_MAX = 709.0


def _square(A) -> np.ndarray:
    A = np.asarray(A)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise InputError(f"expected a square matrix, got shape {A.shape}")
    if not linalg.is_exact(A) and not np.all(np.isfinite(A)):
        raise InputError("matrix has non-finite entries")
    return A


@lru_cache(maxsize=None)
def wedge_basis(d: int, k: int) -> tuple[tuple[int, ...], ...]:
    if not 0 <= k <= d:
        raise InputError(f"k={k} outside [0, {d}]")
    return tuple(combinations(range(d), k))


@lru_cache(maxsize=None)
def _wedge_lookup(d: int, k: int) -> dict:
    return {c: i for i, c in enumerate(wedge_basis(d, k))}


def wedge_index(combo, d: int) -> int:
    return _wedge_lookup(d, len(combo))[tuple(combo)]


def _perm_sign(seq) -> int:
    """Sign of the permutation that sorts a sequence of distinct integers."""
    seq = list(seq)
    sign = 1
    for i in range(len(seq)):
        for j in range(i + 1, len(seq)):
            if seq[i] > seq[j]:
                sign = -sign
    return sign


# ------------------------------------------------------------ spectra

def singular_values(A) -> np.ndarray:
    """Singular values alpha_1 >= ... >= alpha_d of a square matrix.

    Rational input is converted to float first.
    """
    A = _square(A)
    return np.linalg.svd(linalg.as_float(A), compute_uv=False)


def eigen_moduli(A) -> np.ndarray:
    """Moduli of the eigenvalues, sorted nonincreasingly (always float precision)."""
    A = _square(A)
    try:
        ev = np.linalg.eigvals(linalg.as_float(A))
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"eigenvalue solver did not converge: {exc}") from exc
    return np.sort(np.abs(ev))[::-1]


def check_invertible(A) -> None:
    A = _square(A)
    if linalg.is_exact(A):
        if linalg.det(A) == 0:
            raise DomainError("matrix is singular")
        return
    sv = singular_values(A)
    if sv[-1] <= SINGULAR_RTOL * max(sv[0], 1e-300):
        raise DomainError(f"matrix is numerically singular (alpha_d/alpha_1 = {sv[-1] / max(sv[0], 1e-300):.3e})")


def _split(s: float, d: int) -> tuple[int, float]:
    if s < 0:
        raise InputError("s must be nonnegative")
    k = int(floor(s))
    return k, s - k


def log_svf_from_log_sv(log_sv: np.ndarray, s: float, log_det=None) -> np.ndarray:
    """Vectorised log of the singular value function.

    ``log_sv`` has shape (..., d) with log singular values sorted
    nonincreasingly along the last axis.
    """
    log_sv = np.asarray(log_sv, dtype=float)
    d = log_sv.shape[-1]
    k, frac = _split(s, d)
    if k >= d:
        ld = log_sv.sum(axis=-1) if log_det is None else log_det
        return (s / d) * ld
    out = log_sv[..., :k].sum(axis=-1)
    if frac > 0:
        out = out + frac * log_sv[..., k]
    return out


def log_svf(A, s: float) -> float:
    A = _square(A)
    check_invertible(A)
    return float(log_svf_from_log_sv(np.log(singular_values(A)), s))


def svf(A, s: float) -> float:
    """Singular value function phi^s(A).

    For k <= s < k+1 with k < d this is alpha_1...alpha_k * alpha_{k+1}^(s-k);
    for s >= d it is |det A|^(s/d). Evaluated in the log domain.
    """
    val = log_svf(A, s)
    if val > _LOG_MAX:
        raise NumericError("svf overflows float range; use log_svf")
    return float(np.exp(val))


def log_chi_from_log_moduli(log_mod: np.ndarray, s: float) -> np.ndarray:
    log_mod = np.asarray(log_mod, dtype=float)
    d = log_mod.shape[-1]
    k, frac = _split(s, d)
    if k >= d:
        raise InputError("chi requires s < d")
    out = log_mod[..., :k].sum(axis=-1)
    if frac > 0:
        out = out + frac * log_mod[..., k]
    return out


def chi(A, s: float) -> float:
    """Spectral minorant |l_1...l_k| |l_{k+1}|^(s-k) of phi^s, from eigenvalue moduli."""
    A = _square(A)
    check_invertible(A)
    return float(np.exp(log_chi_from_log_moduli(np.log(eigen_moduli(A)), s)))


# ------------------------------------------------------------ exterior algebra

def exterior_power(A, k: int) -> np.ndarray:
    """k-th exterior power: the matrix of k×k minors in lexicographic wedge order.

    Exact (Fraction) input gives exact output.
    """
    A = _square(A)
    d = A.shape[0]
    basis = wedge_basis(d, k)
    n = len(basis)
    exact = linalg.is_exact(A)
    if k == 0:
        return linalg.identity(1, exact)
    if exact:
        out = linalg.zeros((n, n), True)
        for r, S in enumerate(basis):
            for c, T in enumerate(basis):
                out[r, c] = linalg.det(A[np.ix_(S, T)])
        return out
    idx = np.array(basis)
    sub = A[idx[:, None, :, None], idx[None, :, None, :]]  # (n, n, k, k)
    return np.linalg.det(sub)


def hodge_star(v, k: int, d: int) -> np.ndarray:
    """Hodge star of a k-vector given by its wedge-basis coordinates."""
    v = np.asarray(v)
    basis = wedge_basis(d, k)
    if v.shape != (len(basis),):
        raise InputError(f"expected {len(basis)} coordinates for a {k}-vector in dimension {d}")
    out = np.zeros(comb(d, d - k), dtype=v.dtype)
    if v.dtype == object:
        out = linalg.zeros(comb(d, d - k), True)
    for i, S in enumerate(basis):
        comp = tuple(j for j in range(d) if j not in S)
        out[wedge_index(comp, d)] = _perm_sign(S + comp) * v[i]
    return out


def wedge(v, k: int, w, j: int, d: int) -> np.ndarray:
    """Exterior product of a k-vector and a j-vector."""
    v, w = np.asarray(v), np.asarray(w)
    if k + j > d:
        return np.zeros(0)
    bk, bj = wedge_basis(d, k), wedge_basis(d, j)
    if v.shape != (len(bk),) or w.shape != (len(bj),):
        raise InputError("coordinate length mismatch")
    exact = v.dtype == object or w.dtype == object
    out = linalg.zeros(comb(d, k + j), True) if exact else np.zeros(comb(d, k + j))
    for a, S in enumerate(bk):
        if v[a] == 0:
            continue
        for b, T in enumerate(bj):
            if set(S) & set(T):
                continue
            out[wedge_index(tuple(sorted(S + T)), d)] += _perm_sign(S + T) * v[a] * w[b]
    return out


def graded_inner(v, w, k: int, d: int):
    """Inner product of k-vectors computed as *(v ∧ *w)."""
    v, w = np.asarray(v), np.asarray(w)
    if v.shape != w.shape:
        raise InputError("k-vectors of different lengths")
    top = wedge(v, k, hodge_star(w, k, d), d - k, d)
    return hodge_star(top, d, d)[0]
