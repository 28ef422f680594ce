"""Small linear-algebra helpers over two backends.

Rational matrices are numpy object arrays holding ``Fraction`` entries; float
matrices are ordinary ``float64`` arrays. Every helper dispatches on dtype so
callers can stay backend agnostic.
"""
from fractions import Fraction
from math import lcm

import numpy as np

from .errors import DomainError, InputError

# relative tolerance used for float rank decisions
FLOAT_RANK_TOL = 1e-10


def is_exact(M) -> bool:
    return isinstance(M, np.ndarray) and M.dtype == object


def to_fraction(x) -> Fraction:
    """Convert a string, int, Fraction or finite float to a Fraction."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, np.integer)):
        return Fraction(int(x))
    if isinstance(x, str):
        try:
            return Fraction(x.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise InputError(f"cannot parse {x!r} as a rational") from exc
    if isinstance(x, (float, np.floating)):
        if not np.isfinite(x):
            raise InputError("non-finite entry")
        return Fraction(float(x))
    raise InputError(f"unsupported scalar {x!r}")


def fraction_array(rows) -> np.ndarray:
    arr = np.array(rows, dtype=object)
    flat = [to_fraction(x) for x in arr.ravel()]
    out = np.empty(arr.shape, dtype=object)
    out.ravel()[:] = flat
    return out


def as_float(M) -> np.ndarray:
    return np.array(M, dtype=float)


def identity(d: int, exact: bool) -> np.ndarray:
    if exact:
        out = np.empty((d, d), dtype=object)
        for i in range(d):
            for j in range(d):
                out[i, j] = Fraction(int(i == j))
        return out
    return np.eye(d)


def zeros(shape, exact: bool) -> np.ndarray:
    if exact:
        out = np.empty(shape, dtype=object)
        out.ravel()[:] = [Fraction(0)] * out.size
        return out
    return np.zeros(shape)


# ---------------------------------------------------------------- exact core

def _integer_rows(M) -> tuple[list[list[int]], Fraction]:
    """Clear denominators row by row; returns integer rows and the product of scales."""
    rows = []
    scale = Fraction(1)
    for row in M:
        m = lcm(*(Fraction(x).denominator for x in row)) if len(row) else 1
        rows.append([int(Fraction(x) * m) for x in row])
        scale *= m
    return rows, scale


def _bareiss(rows: list[list[int]]) -> tuple[int, int, int]:
    """Fraction-free elimination in place. Returns (rank, sign, last pivot)."""
    m = len(rows)
    n = len(rows[0]) if m else 0
    r, prev, sign = 0, 1, 1
    for c in range(n):
        piv = next((i for i in range(r, m) if rows[i][c] != 0), None)
        if piv is None:
            continue
        if piv != r:
            rows[r], rows[piv] = rows[piv], rows[r]
            sign = -sign
        p = rows[r][c]
        for i in range(r + 1, m):
            ric = rows[i][c]
            row_i, row_r = rows[i], rows[r]
            for j in range(c + 1, n):
                row_i[j] = (row_i[j] * p - ric * row_r[j]) // prev
            row_i[c] = 0
        prev = p
        r += 1
        if r == m:
            break
    return r, sign, prev


def rank(M, tol: float = FLOAT_RANK_TOL) -> int:
    M = np.asarray(M)
    if M.size == 0:
        return 0
    if is_exact(M):
        rows, _ = _integer_rows(M)
        return _bareiss(rows)[0]
    sv = np.linalg.svd(M.astype(float), compute_uv=False)
    if sv[0] == 0:
        return 0
    return int(np.sum(sv > tol * sv[0]))


def det(M):
    M = np.asarray(M)
    n = M.shape[0]
    if n == 0:
        return Fraction(1) if is_exact(M) else 1.0
    if is_exact(M):
        rows, scale = _integer_rows(M)
        r, sign, last = _bareiss(rows)
        if r < n:
            return Fraction(0)
        return Fraction(sign * last) / scale
    return float(np.linalg.det(M))


def rref(M):
    """Reduced row echelon form over the rationals. Returns (R, pivot columns)."""
    R = np.array(M, dtype=object, copy=True)
    m, n = R.shape
    pivots = []
    r = 0
    for c in range(n):
        piv = next((i for i in range(r, m) if R[i, c] != 0), None)
        if piv is None:
            continue
        if piv != r:
            R[[r, piv]] = R[[piv, r]]
        R[r] = R[r] / R[r, c]
        for i in range(m):
            if i != r and R[i, c] != 0:
                R[i] = R[i] - R[i, c] * R[r]
        pivots.append(c)
        r += 1
        if r == m:
            break
    return R, pivots


def nullspace(M, tol: float = FLOAT_RANK_TOL) -> np.ndarray:
    """Basis of the right kernel, as columns of an n×m array."""
    M = np.asarray(M)
    n = M.shape[1]
    if is_exact(M):
        R, pivots = rref(M)
        free = [c for c in range(n) if c not in pivots]
        out = zeros((n, len(free)), exact=True)
        for t, f in enumerate(free):
            out[f, t] = Fraction(1)
            for row, p in enumerate(pivots):
                out[p, t] = -R[row, f]
        return out
    M = M.astype(float)
    if M.shape[0] == 0:
        return np.eye(n)
    _, sv, vt = np.linalg.svd(M)
    top = sv[0] if sv.size else 0.0
    r = int(np.sum(sv > tol * max(top, 1e-300))) if top > 0 else 0
    return vt[r:].T.copy()


def inverse(M):
    M = np.asarray(M)
    if is_exact(M):
        n = M.shape[0]
        aug = np.concatenate([M, identity(n, True)], axis=1)
        R, pivots = rref(aug)
        if pivots[:n] != list(range(n)):
            raise DomainError("matrix is singular")
        return R[:, n:].copy()
    return np.linalg.inv(M.astype(float))


def column_basis(V, tol: float = FLOAT_RANK_TOL) -> np.ndarray:
    """A basis of the column span of V (exact: pivot columns of the RREF of V^T rows;
    float: orthonormal)."""
    V = np.asarray(V)
    if is_exact(V):
        if V.shape[1] == 0:
            return V
        R, pivots = rref(V.T)
        return R[: len(pivots)].T.copy()
    if V.shape[1] == 0:
        return V.astype(float)
    u, sv, _ = np.linalg.svd(V.astype(float), full_matrices=False)
    if sv[0] == 0:
        return np.zeros((V.shape[0], 0))
    r = int(np.sum(sv > tol * sv[0]))
    return u[:, :r].copy()


def complete_basis(W) -> np.ndarray:
    """Extend the columns of W to a basis of the whole space.

    Exact: greedily append standard basis vectors. Float: append an orthonormal
    basis of the orthogonal complement.
    """
    W = np.asarray(W)
    d = W.shape[0]
    if is_exact(W):
        cols = [W[:, j] for j in range(W.shape[1])]
        r = len(cols)
        eye = identity(d, True)
        for j in range(d):
            trial = np.stack(cols + [eye[:, j]], axis=1)
            if rank(trial) > r:
                cols.append(eye[:, j])
                r += 1
            if r == d:
                break
        return np.stack(cols, axis=1)
    comp = nullspace(W.T.astype(float)) if W.shape[1] else np.eye(d)
    return np.concatenate([W.astype(float), comp], axis=1)


class Span:
    """Incrementally built subspace of K^n, exact or float.

    ``add`` returns True when the vector enlarged the span.
    """

    def __init__(self, n: int, exact: bool, tol: float = FLOAT_RANK_TOL):
        self.n = n
        self.exact = exact
        self.tol = tol
        self._rows: list = []   # exact: echelon rows with pivot 1; float: orthonormal
        self._pivots: list[int] = []
        self.vectors: list = []  # the original vectors that were accepted

    @property
    def dim(self) -> int:
        return len(self._rows)

    def _reduce(self, v):
        if self.exact:
            w = np.array(v, dtype=object, copy=True)
            for row, p in zip(self._rows, self._pivots):
                if w[p] != 0:
                    w = w - w[p] * row
            return w
        w = np.array(v, dtype=float, copy=True)
        for _ in range(2):
            for q in self._rows:
                w -= (q @ w) * q
        return w

    def contains(self, v, scale: float | None = None) -> bool:
        w = self._reduce(v)
        if self.exact:
            return all(x == 0 for x in w)
        ref = scale if scale is not None else max(np.linalg.norm(np.asarray(v, float)), 1e-300)
        return np.linalg.norm(w) <= self.tol * ref

    def add(self, v, scale: float | None = None) -> bool:
        w = self._reduce(v)
        if self.exact:
            nz = next((i for i, x in enumerate(w) if x != 0), None)
            if nz is None:
                return False
            w = w / w[nz]
            # keep rows reduced at the new pivot
            self._rows = [r - r[nz] * w if r[nz] != 0 else r for r in self._rows]
            self._rows.append(w)
            self._pivots.append(nz)
            self.vectors.append(v)
            return True
        ref = scale if scale is not None else max(np.linalg.norm(np.asarray(v, float)), 1e-300)
        nrm = np.linalg.norm(w)
        if nrm <= self.tol * ref:
            return False
        self._rows.append(w / nrm)
        self.vectors.append(np.asarray(v, float))
        return True

    def basis(self) -> np.ndarray:
        """Basis as columns (exact: reduced echelon rows transposed; float: orthonormal)."""
        if not self._rows:
            return zeros((self.n, 0), self.exact)
        if self.exact:
            order = np.argsort(self._pivots)
            return np.stack([self._rows[i] for i in order], axis=1)
        return np.stack(self._rows, axis=1)
