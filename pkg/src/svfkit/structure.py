"""Structural classification of matrix tuples.

Irreducibility is decided through the generated matrix algebra. If the
algebra has dimension d^2 it is the full matrix algebra and the tuple is
irreducible (an exact certificate on the rational backend). Otherwise a
witness is searched for: a vector v whose orbit span {X v : X in algebra} is
a proper subspace. Candidates are standard basis vectors and kernels of
p(X), where X runs over algebra elements and p over the irreducible factors
of their characteristic polynomials. The transposed algebra yields invariant
hyperplanes the same way. Rational inputs try exact candidates first; float
candidates (real eigenvectors and real invariant planes) follow, and a float
witness is promoted to an exact one when its rationalisation verifies.
"""
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import product
from math import lcm

import numpy as np
import sympy

from . import linalg
from .errors import InputError
from .multilinear import exterior_power, log_svf_from_log_sv
from .tuples import as_matrix_list

ALGEBRA_TOL = 1e-9
INVARIANCE_TOL = 1e-10
LINE_TOL = 1e-8
_RNG_SEED = 20240521


@dataclass
class StructureReport:
    """verdict is "irreducible", "reducible" or "unknown"."""

    verdict: str
    certified: bool
    backend: str
    witness: np.ndarray | None = None
    algebra_dim: int | None = None
    diagnostics: dict = field(default_factory=dict)

    @property
    def irreducible(self) -> bool:
        return self.verdict == "irreducible"

    @property
    def reducible(self) -> bool:
        return self.verdict == "reducible"


@dataclass
class BlockTriangularization:
    basis: np.ndarray
    block_dims: tuple
    certified: bool

    def blocks(self, mats, i: int, j: int) -> list:
        """The (i, j) block of every conjugated matrix."""
        off = np.concatenate([[0], np.cumsum(self.block_dims)])
        Xi = linalg.inverse(self.basis)
        out = []
        for A in mats:
            C = Xi @ A @ self.basis
            out.append(C[off[i]:off[i + 1], off[j]:off[j + 1]])
        return out


@dataclass
class PermutationForm:
    """X^{-1} A_i X e_j = scalars[i][j] e_{perms[i][j]}."""

    basis: np.ndarray
    perms: tuple
    scalars: np.ndarray
    exact: bool

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    def residual(self, mats) -> float:
        Xi = np.linalg.inv(linalg.as_float(self.basis))
        X = linalg.as_float(self.basis)
        worst = 0.0
        for i, A in enumerate(mats):
            C = Xi @ linalg.as_float(A) @ X
            P = np.zeros_like(C)
            for j, r in enumerate(self.perms[i]):
                P[r, j] = float(self.scalars[i][j])
            worst = max(worst, float(np.abs(C - P).max() / max(np.abs(C).max(), 1e-300)))
        return worst


@dataclass
class QuasimultReport:
    s: float
    found: bool
    c: float
    K: int
    profile: list
    growth: float
    counterexample: tuple | None = None


@dataclass
class EqualModulusReport:
    holds: bool
    worst_ratio: float
    word: tuple
    n: int


# ------------------------------------------------------------ algebra

def _mats(tup):
    mats, exact = as_matrix_list(tup)
    d = mats[0].shape[0]
    for M in mats:
        if M.shape != (d, d):
            raise InputError("matrices must share one square shape")
    return mats, exact, d


def algebra_closure(tup) -> list:
    """Basis of span{A_w : all words w, including the empty word}.

    Seeds with the identity and multiplies accepted elements by generators on
    the left until nothing new appears. Float elements are normalised.
    """
    mats, exact, d = _mats(tup)
    span = linalg.Span(d * d, exact, ALGEBRA_TOL)
    basis = []
    queue = [linalg.identity(d, exact)]
    span.add(queue[0].ravel())
    basis.append(queue[0])
    while queue:
        X = queue.pop(0)
        for A in mats:
            Y = A @ X
            if not exact:
                nrm = np.linalg.norm(Y)
                if nrm == 0:
                    continue
                Y = Y / nrm
            if span.add(Y.ravel()):
                basis.append(Y)
                queue.append(Y)
                if span.dim == d * d:
                    return basis
    return basis


def _orbit_span(alg, seeds, exact: bool, d: int) -> linalg.Span:
    span = linalg.Span(d, exact, ALGEBRA_TOL)
    for w in seeds:
        for X in alg:
            y = X @ w
            if not exact:
                nrm = np.linalg.norm(y)
                if nrm == 0:
                    continue
                y = y / nrm
            span.add(y)
            if span.dim == d:
                return span
    return span


def _is_invariant(mats, W, exact: bool) -> bool:
    m = W.shape[1]
    if exact:
        return all(linalg.rank(np.concatenate([W, A @ W], axis=1)) == m for A in mats)
    Q = linalg.column_basis(W)
    for A in mats:
        AW = A @ Q
        res = AW - Q @ (Q.T @ AW)
        if np.linalg.norm(res) > INVARIANCE_TOL * max(np.linalg.norm(A), 1e-300):
            return False
    return True


def _charpoly(X) -> tuple:
    """Monic characteristic polynomial of a rational matrix, highest degree
    first (Faddeev-LeVerrier, exact in Fractions)."""
    n = X.shape[0]
    eye = linalg.identity(n, True)
    coeffs = [Fraction(1)]
    M = linalg.zeros((n, n), True)
    for k in range(1, n + 1):
        M = X @ M + eye * coeffs[-1]
        coeffs.append(-sum((X @ M)[i, i] for i in range(n)) / k)
    return tuple(coeffs)


@lru_cache(maxsize=4096)
def _factor_coeffs(coeffs: tuple) -> tuple:
    x = sympy.Symbol("x")
    poly = sympy.Poly([sympy.Rational(c.numerator, c.denominator) for c in coeffs], x, domain="QQ")
    out = []
    for f, _ in poly.factor_list()[1]:
        out.append(tuple(Fraction(int(c.p), int(c.q)) for c in f.all_coeffs()))
    return tuple(out)


def _rational_factors(X) -> list:
    """Coefficient lists (highest degree first) of the distinct irreducible
    rational factors of the characteristic polynomial of a rational matrix."""
    return [list(f) for f in _factor_coeffs(_charpoly(X))]


def _poly_of_matrix(coeffs, X):
    n = X.shape[0]
    out = linalg.zeros((n, n), True)
    eye = linalg.identity(n, True)
    for c in coeffs:
        out = out @ X + eye * c
    return out


def _exact_candidates(alg, rng):
    d = alg[0].shape[0]
    eye = linalg.identity(d, True)
    seeds = [[eye[:, j]] for j in range(d)]
    elements = list(alg)
    for _ in range(2):
        g = linalg.zeros((d, d), True)
        for X in alg:
            g = g + X * Fraction(int(rng.integers(-9, 10)))
        elements.append(g)
    for X in elements:
        for coeffs in _rational_factors(X):
            K = linalg.nullspace(_poly_of_matrix(coeffs, X))
            for j in range(K.shape[1]):
                seeds.append([K[:, j]])
    return seeds


def _float_candidates(alg, rng):
    d = alg[0].shape[0]
    F = [linalg.as_float(X) for X in alg]
    seeds = [[np.eye(d)[:, j]] for j in range(d)]
    seeds += [[rng.standard_normal(d)] for _ in range(2)]
    elements = F + [sum(rng.standard_normal() * X for X in F) for _ in range(3)]
    for g in elements:
        ev, V = np.linalg.eig(g)
        scale = max(np.abs(ev).max(), 1e-300)
        for j in range(d):
            if abs(ev[j].imag) <= 1e-9 * scale:
                K = linalg.nullspace(g - ev[j].real * np.eye(d), tol=1e-8)
                if K.shape[1] == 0:
                    K = np.real(V[:, j:j + 1])
                for t in range(K.shape[1]):
                    seeds.append([K[:, t]])
            elif ev[j].imag > 0:
                seeds.append([V[:, j].real, V[:, j].imag])
    return seeds


def _rationalize_subspace(W) -> np.ndarray | None:
    """Echelon-normalise a float basis and round entries to nearby rationals."""
    m = W.shape[1]
    _, _, piv = _qr_pivots(W.T)
    sub = W[piv[:m], :]
    if abs(np.linalg.det(sub)) < 1e-12:
        return None
    E = W @ np.linalg.inv(sub)
    return linalg.fraction_array([[Fraction(float(x)).limit_denominator(10 ** 6) for x in row] for row in E])


def _qr_pivots(A):
    from scipy.linalg import qr
    return qr(A, pivoting=True)


def _search_witness(mats, alg, exact: bool, d: int):
    """Return (W, exact_flag) for a minimal proper invariant subspace found, or None."""
    rng = np.random.default_rng(_RNG_SEED)
    best = None

    def consider(W, is_exact):
        nonlocal best
        if 0 < W.shape[1] < d and (best is None or W.shape[1] < best[0].shape[1]
                                   or (W.shape[1] == best[0].shape[1] and is_exact and not best[1])):
            best = (W, is_exact)

    if exact:
        algT = [X.T.copy() for X in alg]
        for seeds in _exact_candidates(alg, rng):
            sp = _orbit_span(alg, seeds, True, d)
            if 0 < sp.dim < d:
                consider(sp.basis(), True)
        for seeds in _exact_candidates(algT, rng):
            sp = _orbit_span(algT, seeds, True, d)
            if 0 < sp.dim < d:
                W = linalg.nullspace(sp.basis().T)
                consider(W, True)
        if best is not None and best[0].shape[1] == 1:
            return best
    F = [linalg.as_float(X) for X in alg]
    FT = [X.T.copy() for X in F]
    fmats = [linalg.as_float(A) for A in mats]
    for transposed, family in ((False, F), (True, FT)):
        for seeds in _float_candidates(family, rng):
            sp = _orbit_span(family, [np.asarray(s, float) for s in seeds], False, d)
            if not 0 < sp.dim < d:
                continue
            W = sp.basis()
            if transposed:
                W = linalg.nullspace(W.T)
            if not _is_invariant(fmats, W, False):
                continue
            if best is not None and best[0].shape[1] <= W.shape[1]:
                continue
            if exact:
                Wq = _rationalize_subspace(W)
                if Wq is not None and _is_invariant(mats, Wq, True):
                    consider(Wq, True)
                    continue
            consider(W, False)
    return best


def irreducibility_test(tup) -> StructureReport:
    """Decide whether the tuple has a common proper nontrivial invariant subspace.

    A reducible verdict always carries a verified witness basis (columns).
    On the float backend an irreducible verdict is never certified.
    """
    mats, exact, d = _mats(tup)
    backend = "exact" if exact else "float"
    if d == 1:
        return StructureReport("irreducible", True, backend, algebra_dim=1)
    alg = algebra_closure(mats)
    r = len(alg)
    diag = {"algebra_dim": r}
    if not exact:
        Bm = np.stack([linalg.as_float(X).ravel() for X in alg], axis=1)
        sv = np.linalg.svd(Bm, compute_uv=False)
        diag["algebra_condition"] = float(sv[0] / sv[-1]) if sv[-1] > 0 else float("inf")
    if r == d * d:
        if exact:
            return StructureReport("irreducible", True, backend, algebra_dim=r, diagnostics=diag)
        if diag["algebra_condition"] > 1e8:
            diag["note"] = "algebra basis badly conditioned; verdict near the rank boundary"
            return StructureReport("unknown", False, backend, algebra_dim=r, diagnostics=diag)
        diag["note"] = "full algebra over floats: irreducible up to rounding"
        return StructureReport("irreducible", False, backend, algebra_dim=r, diagnostics=diag)
    found = _search_witness(mats, alg, exact, d)
    if found is not None:
        W, w_exact = found
        diag["witness_dim"] = W.shape[1]
        # the witness is verified: exactly, or to INVARIANCE_TOL for a float basis
        return StructureReport("reducible", True, "exact" if w_exact else "float", W, r, diag)
    if d == 2 and r == 2:
        # a 2-dimensional commutative algebra acts irreducibly iff it is of
        # complex type, i.e. a non-scalar element has non-real eigenvalues
        g = alg[1]
        tr = g[0, 0] + g[1, 1]
        det = g[0, 0] * g[1, 1] - g[0, 1] * g[1, 0]
        disc = tr * tr - 4 * det
        if exact and disc < 0:
            diag["note"] = "algebra of complex type"
            return StructureReport("irreducible", True, backend, algebra_dim=r, diagnostics=diag)
        if not exact and disc < -1e-9 * max(tr * tr, abs(det), 1e-300):
            diag["note"] = "algebra of complex type"
            return StructureReport("irreducible", False, backend, algebra_dim=r, diagnostics=diag)
    if d % 2 == 1:
        diag["note"] = "proper algebra in odd dimension implies reducibility, but no witness was located"
    return StructureReport("unknown", False, backend, algebra_dim=r, diagnostics=diag)


def k_irreducibility(tup, k: int) -> StructureReport:
    """Irreducibility of the tuple of k-th exterior powers."""
    mats, exact, d = _mats(tup)
    if not 0 <= k <= d:
        raise InputError(f"k={k} outside [0, {d}]")
    return irreducibility_test([exterior_power(A, k) for A in mats])


# ------------------------------------------------------------ block structure

def _block_diag(P, Q, exact):
    m, n = P.shape[0], Q.shape[0]
    out = linalg.zeros((m + n, m + n), exact)
    out[:m, :m] = P
    out[m:, m:] = Q
    return out


def _triangularize(mats, exact, d):
    """Returns (X, dims, certified, complete); complete means every diagonal
    block received an irreducible verdict."""
    if d == 1:
        return linalg.identity(1, exact), [1], True, True
    rep = irreducibility_test(mats)
    if rep.verdict != "reducible":
        ok = rep.verdict == "irreducible"
        return linalg.identity(d, exact), [d], ok and rep.certified, ok
    W = rep.witness
    if exact and not linalg.is_exact(W):
        # float witness for rational input: continue in floats
        mats = [linalg.as_float(A) for A in mats]
        exact = False
    X = linalg.complete_basis(W)
    Xi = linalg.inverse(X)
    m = W.shape[1]
    conj = [Xi @ A @ X for A in mats]
    XB, dB, cB, okB = _triangularize([C[:m, :m] for C in conj], exact, m)
    XD, dD, cD, okD = _triangularize([C[m:, m:] for C in conj], exact, d - m)
    if not (linalg.is_exact(XB) == linalg.is_exact(XD) == linalg.is_exact(X)):
        XB, XD, X = linalg.as_float(XB), linalg.as_float(XD), linalg.as_float(X)
    return X @ _block_diag(XB, XD, linalg.is_exact(X)), dB + dD, cB and cD, okB and okD


def is_block_upper(mats, X, dims, tol: float = 1e-10) -> bool:
    Xi = linalg.inverse(X)
    off = np.concatenate([[0], np.cumsum(dims)])
    for A in mats:
        C = Xi @ A @ X
        for b in range(len(dims)):
            lower = C[off[b + 1]:, off[b]:off[b + 1]]
            if lower.size == 0:
                continue
            if linalg.is_exact(C):
                if any(x != 0 for x in lower.ravel()):
                    return False
            elif np.abs(lower).max() > tol * max(np.abs(C).max(), 1e-300):
                return False
    return True


def block_triangularize(tup) -> BlockTriangularization | None:
    """Simultaneous block-upper-triangular form with irreducible diagonal blocks.

    Returns None for an irreducible tuple. Invariant subspaces are extracted
    smallest first, so the block dimensions follow an ascending flag.
    """
    mats, exact, d = _mats(tup)
    X, dims, certified, complete = _triangularize(mats, exact, d)
    if dims == [d] and complete:
        return None
    return BlockTriangularization(X, tuple(dims), certified and complete)


# ------------------------------------------------------------ permutation structure

def _read_permutation(mats, X, exact: bool, tol: float = 1e-9):
    Xi = linalg.inverse(X)
    d = X.shape[0]
    perms, scalars = [], []
    for A in mats:
        C = Xi @ A @ X
        pi, a = [], []
        for j in range(d):
            col = C[:, j]
            if exact:
                nz = [r for r in range(d) if col[r] != 0]
                if len(nz) != 1:
                    return None
                r = nz[0]
            else:
                mag = np.abs(col)
                r = int(np.argmax(mag))
                if mag[r] == 0 or np.delete(mag, r).max(initial=0.0) > tol * mag[r]:
                    return None
            pi.append(r)
            a.append(col[r])
        if sorted(pi) != list(range(d)):
            return None
        perms.append(tuple(pi))
        scalars.append(a)
    arr = np.array(scalars, dtype=object if exact else float)
    return tuple(perms), arr


def _same_line(u, v) -> bool:
    return np.linalg.norm(u - (u @ v) * v) < LINE_TOL


def _unit(v):
    v = np.asarray(v, dtype=float)
    v = v / np.linalg.norm(v)
    k = int(np.argmax(np.abs(v)))
    return v if v[k] > 0 else -v


def _line_orbit(F, v, budget):
    """Unit vectors spanning the lines in the orbit of v; None past budget."""
    orbit = [v]
    queue = [v]
    while queue:
        u = queue.pop(0)
        for A in F:
            w = _unit(A @ u)
            O = np.array(orbit)
            if np.linalg.norm(w[None, :] - (O @ w)[:, None] * O, axis=1).min() >= LINE_TOL:
                orbit.append(w)
                queue.append(w)
                if len(orbit) > budget:
                    return None
    return orbit


def _powers_commute(mats, exact: bool, d: int) -> bool:
    """Necessary condition: in a permutation basis every word raised to
    lcm(1..d) is diagonal, so such powers of short words commute."""
    L = lcm(*range(1, d + 1))
    words = [w for n in (1, 2) for w in product(range(len(mats)), repeat=n)]
    powers = []
    for w in words:
        W = linalg.identity(d, exact)
        for a in w:
            W = W @ mats[a]
        P = linalg.identity(d, exact)
        for _ in range(L):
            P = P @ W
        if not exact:
            P = P / np.linalg.norm(P)
        powers.append(P)
    for i in range(len(powers)):
        for j in range(i + 1, len(powers)):
            comm = powers[i] @ powers[j] - powers[j] @ powers[i]
            if exact:
                if any(x != 0 for x in comm.ravel()):
                    return False
            elif np.linalg.norm(comm) > 1e-7:
                return False
    return True


def _orbit_covers(orbits, d: int, limit: int = 2000):
    """Sets of orbits with sizes summing to d, largest orbits first."""
    order = sorted(range(len(orbits)), key=lambda i: -len(orbits[i]))
    found = 0

    def rec(start, left, chosen):
        nonlocal found
        if left == 0:
            found += 1
            yield [orbits[i] for i in chosen]
            return
        for pos in range(start, len(order)):
            if found >= limit:
                return
            i = order[pos]
            if len(orbits[i]) <= left:
                yield from rec(pos + 1, left - len(orbits[i]), chosen + [i])

    yield from rec(0, d, [])


def detect_generalized_permutation(tup, max_word_length: int = 4, line_budget: int = 64,
                                   max_candidates: int = 400) -> PermutationForm | None:
    """Find a basis in which every matrix is a generalised permutation matrix.

    Candidate lines are real eigenlines of words of length <= max_word_length
    (of the tuple and of its transposes); a candidate succeeds when its orbit
    under the generators closes up in exactly d independent lines.
    """
    mats, exact, d = _mats(tup)
    eye = linalg.identity(d, exact)
    got = _read_permutation(mats, eye, exact, tol=0.0)
    if got is not None:
        return PermutationForm(eye, got[0], got[1], exact)
    F = [linalg.as_float(A) for A in mats]
    if not _powers_commute(mats, exact, d):
        return None
    for transposed in (False, True):
        G = [A.T.copy() for A in F] if transposed else F
        cands = []
        for L in range(1, max_word_length + 1):
            for word in product(range(len(G)), repeat=L):
                W = np.eye(d)
                for a in word:
                    W = W @ G[a]
                ev, V = np.linalg.eig(W)
                scale = max(np.abs(ev).max(), 1e-300)
                for j in range(d):
                    if abs(ev[j].imag) <= 1e-10 * scale:
                        u = _unit(np.real(V[:, j]))
                        if not any(_same_line(u, c) for c in cands):
                            cands.append(u)
                if len(cands) >= max_candidates:
                    break
            if len(cands) >= max_candidates:
                break
        orbits = []
        for v in cands:
            orbit = _line_orbit(G, v, min(line_budget, d))
            if orbit is None:
                continue
            if not any(len(o) == len(orbit) and all(any(_same_line(u, w) for w in o) for u in orbit)
                       for o in orbits):
                orbits.append(orbit)
        # an intransitive permutation group splits the basis into several orbits
        for combo in _orbit_covers(orbits, d):
            Y = np.stack([u for o in combo for u in o], axis=1)
            if np.linalg.matrix_rank(Y) < d:
                continue
            X = np.linalg.inv(Y).T if transposed else Y
            X = X / np.abs(X).max(axis=0)
            if exact:
                Xq = linalg.fraction_array([[Fraction(float(x)).limit_denominator(10 ** 6) for x in row]
                                            for row in X])
                if linalg.det(Xq) != 0:
                    got = _read_permutation(mats, Xq, True)
                    if got is not None:
                        return PermutationForm(Xq, got[0], got[1], True)
            got = _read_permutation(F, X, False)
            if got is not None:
                return PermutationForm(X, got[0], got[1], False)
    return None


# ------------------------------------------------------------ quasimultiplicativity

def _words_upto(N, n):
    for L in range(1, n + 1):
        yield from product(range(N), repeat=L)


def _products(F, words):
    d = F.shape[-1]
    out = np.empty((len(words), d, d))
    for t, w in enumerate(words):
        M = np.eye(d)
        for a in w:
            M = M @ F[a]
        out[t] = M
    return out


def _log_phi(P, s):
    with np.errstate(divide="ignore"):
        L = np.log(np.linalg.svd(P, compute_uv=False))
    return log_svf_from_log_sv(L, s)


def quasimult_search(tup, s: float, K_max: int = 1, n_max: int | None = None,
                     slope_tol: float = 0.02, max_words: int = 1024) -> QuasimultReport:
    """Empirical quasimultiplicativity profile of phi^s.

    For every pair of words (i, j) with lengths <= n_max, the best bridge k with
    |k| <= K_max maximises phi^s(A_{ikj}) / (phi^s(A_i) phi^s(A_j)). c is the
    reciprocal of the worst such ratio. The profile c_n restricts to pairs of
    length <= n; ``found`` means log c_n did not grow over the second half of
    the profile (slope at most ``slope_tol``).

    This is evidence, not a certificate. When quasimultiplicativity fails, log
    c_n grows linearly, but a long bridge can hide that growth for short words.
    A quasimultiplicative tuple can also show growth while c_n is still
    settling. n_max defaults to the largest length with at most ``max_words``
    words.
    """
    mats, _, d = _mats(tup)
    F = np.stack([linalg.as_float(A) for A in mats])
    N = len(F)
    if not 0 < s < d or float(s).is_integer():
        raise InputError("quasimult_search needs a non-integer s in (0, d)")
    if n_max is None:
        n_max = 1
        while sum(N ** L for L in range(1, n_max + 2)) <= max_words:
            n_max += 1
        n_max = max(n_max, 2)
    words = list(_words_upto(N, n_max))
    lens = np.array([len(w) for w in words])
    P = _products(F, words)
    lp = _log_phi(P, s)
    bridges = [()] + list(_words_upto(N, K_max))
    B = _products(F, bridges) if len(bridges) > 1 else np.eye(d)[None]
    blen = np.array([len(b) for b in bridges])
    W = len(words)
    best = np.full((W, W), -np.inf)
    best_len = np.zeros((W, W), dtype=int)
    for b, Bk in enumerate(B):
        right = Bk @ P  # (W, d, d)
        for i0 in range(0, W, 64):
            blk = P[i0:i0 + 64, None] @ right[None]  # (w, W, d, d)
            val = _log_phi(blk, s) - lp[i0:i0 + 64, None] - lp[None, :]
            cur = best[i0:i0 + 64]
            better = val > cur + 1e-12
            cur[better] = val[better]
            best_len[i0:i0 + 64][better] = blen[b]
    profile = []
    for n in range(1, n_max + 1):
        mask = lens <= n
        profile.append(float(np.exp(max(0.0, -best[np.ix_(mask, mask)].min()))))
    i, j = np.unravel_index(int(np.argmin(best)), best.shape)
    c = profile[-1]
    K = int(best_len[i, j])
    half = max(1, (n_max + 1) // 2)
    span = n_max - half
    growth = (np.log(profile[-1]) - np.log(profile[half - 1])) / span if span > 0 else 0.0
    found = bool(growth <= slope_tol)
    counter = None if found else (words[i], words[j])
    return QuasimultReport(float(s), found, c, K, profile, float(growth), counter)


def equal_modulus_probe(tup, n: int, tol: float = 1e-9) -> EqualModulusReport:
    """Check whether every word of length <= n, normalised to unit |det|, has
    all eigenvalues of equal modulus."""
    mats, _, d = _mats(tup)
    F = np.stack([linalg.as_float(A) for A in mats])
    worst, worst_word = 1.0, ()
    for w in _words_upto(len(F), n):
        M = np.eye(d)
        for a in w:
            M = M @ F[a]
        M = M / abs(np.linalg.det(M)) ** (1.0 / d)
        mod = np.abs(np.linalg.eigvals(M))
        ratio = float(mod.max() / mod.min())
        if ratio > worst:
            worst, worst_word = ratio, w
    return EqualModulusReport(worst <= 1 + tol, worst, worst_word, n)
