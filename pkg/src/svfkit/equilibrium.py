"""Equilibrium states for the classes where they can be written down.

A generalised permutation tuple (A e_j = a_j e_{pi(j)} in a suitable basis)
is lifted to nonnegative generalised permutation matrices acting on pairs
(S, i) with S a k-set and i outside S; the lift is multiplicative and its
operator norm equals phi^s. Equilibrium states of phi^s are then norm
equilibrium states of the lifted nonnegative tuple, which are built from
Perron vectors of irreducible components of the summed lift.

Block-triangular tuples reduce to their block-diagonal part. In dimension 3
with one 1×1 block b and one 2×2 block C, and 1 < s < 2, phi^s of a word is
the largest of three products of singular values:

    e1 = |b| a1(C)^(s-1),  e2 = a1(C) |b|^(s-1),  e3 = a1(C) a2(C)^(s-1)

(a1 >= a2 the singular values of C). Each is a norm potential of a rescaled
2×2 tuple:

    e1 = ||b^(1/(s-1)) C||^(s-1)
    e2 = ||b^(s-1) C||
    e3 = |||det C|^((s-1)/(2-s)) C||^(2-s)

so the pressure is the largest of three norm pressures.
"""
from dataclasses import dataclass, field
from itertools import combinations
from math import comb, floor, gcd

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from . import linalg
from .errors import DomainError, InputError
from .pressure import (NormPow, PressureEstimate, SVF, WordSpectra, _level_products, perron_value,
                       pressure_bounds, pressure_exact_nonneg)
from .structure import (BlockTriangularization, PermutationForm, StructureReport, block_triangularize,
                        detect_generalized_permutation, irreducibility_test, quasimult_search)
from .symbolic import BernoulliSpec, PerronGibbsSpec, check_budget
from .tuples import MatrixTuple

# states whose cylinder masses agree to this tolerance are identified
DEDUP_TOL = 1e-10
# pressures of maximal components agree to this tolerance
PRESSURE_TOL = 1e-10
_DEDUP_WORDS = 2 ** 18


@dataclass
class LiftedTuple:
    matrices: np.ndarray  # (N, d', d')
    labels: list  # (S, i) pairs, 0-based
    d: int
    k: int
    s: float

    @property
    def dim(self) -> int:
        return len(self.labels)


@dataclass
class StateEntry:
    spec: object
    pressure: float
    component: list
    period: int = 1
    ergodic: bool | None = True
    gibbs_constant: float = 1.0
    fully_supported: bool = True
    component_matrices: np.ndarray | None = None


@dataclass
class EquilibriumReport:
    states: list
    multiplicity_bound: int | None
    exact: bool
    route: str
    pressure: PressureEstimate | None = None
    s: float | None = None
    notes: list = field(default_factory=list)
    evidence: dict = field(default_factory=dict)
    structure: StructureReport | None = None
    candidates: dict | None = None
    route_matrices: np.ndarray | None = None


@dataclass
class ExactRoute:
    name: str
    pressure: object
    certified: bool
    form: PermutationForm | None = None


# ------------------------------------------------------------ lift

def lift_labels(d: int, k: int) -> list:
    return [(S, i) for S in combinations(range(d), k) for i in range(d) if i not in S]


def _lift(form: PermutationForm, s: float, k: int) -> LiftedTuple:
    d = form.dim
    if not 0 <= k < d:
        raise InputError(f"k={k} must satisfy 0 <= k < d")
    labels = lift_labels(d, k)
    index = {lab: t for t, lab in enumerate(labels)}
    N = len(form.perms)
    mats = np.zeros((N, len(labels), len(labels)))
    absval = np.abs(np.array(form.scalars, dtype=float))
    for n, pi in enumerate(form.perms):
        a = absval[n]
        for col, (S, i) in enumerate(labels):
            row = index[(tuple(sorted(pi[j] for j in S)), pi[i])]
            mats[n, row, col] = np.prod(a[list(S)]) * a[i] ** (s - k)
    return LiftedTuple(mats, labels, d, k, float(s))


def permutation_lift(form: PermutationForm, s: float, k: int | None = None) -> LiftedTuple:
    """Nonnegative lift whose operator norm reproduces phi^s on every word.

    Column (S, i) of the lift of A carries prod_{j in S} |a_j| * |a_i|^(s-k)
    in row (pi(S), pi(i)).
    """
    if k is None:
        k = int(floor(s))
    if not k < s < k + 1:
        raise InputError(f"need k < s < k+1, got k={k}, s={s}")
    return _lift(form, s, k)


# ------------------------------------------------------------ Perron states

def _perron_vectors(M: np.ndarray):
    ev, V = np.linalg.eig(M)
    j = int(np.argmax(ev.real))
    v = np.abs(np.real(V[:, j]))
    evl, U = np.linalg.eig(M.T)
    u = np.abs(np.real(U[:, int(np.argmax(evl.real))]))
    return float(ev[j].real), u, v


def _period(adj: np.ndarray) -> int:
    level = {0: 0}
    queue = [0]
    g = 0
    while queue:
        a = queue.pop(0)
        for b in np.nonzero(adj[a])[0]:
            b = int(b)
            if b not in level:
                level[b] = level[a] + 1
                queue.append(b)
            else:
                g = gcd(g, level[a] + 1 - level[b])
    return abs(g) or 1


def _same_measure(a: StateEntry, b: StateEntry, N: int) -> bool:
    """Two linear representations of sizes m1, m2 agree on all words iff they
    agree on all words of length < m1 + m2."""
    L = len(a.component) + len(b.component) - 1
    for n in range(1, L + 1):
        if N ** n > _DEDUP_WORDS:
            break
        if np.max(np.abs(a.spec.masses(n) - b.spec.masses(n))) > DEDUP_TOL:
            return False
    return True


def nonneg_equilibria(lift, labels=None) -> EquilibriumReport:
    """Norm equilibrium states of an entrywise nonnegative tuple.

    Each strongly connected component of the support of the summed matrix
    with maximal Perron value contributes one Perron-Gibbs state. 1×1
    components give Bernoulli states. Identical measures are merged.
    """
    if isinstance(lift, MatrixTuple):
        M = np.asarray(lift.as_float())
    elif isinstance(lift, LiftedTuple):
        M = lift.matrices
        labels = lift.labels if labels is None else labels
    else:
        M = np.asarray(lift, dtype=float)
    if np.any(M < 0):
        raise InputError("matrices must be entrywise nonnegative")
    N, m = M.shape[0], M.shape[1]
    labels = list(labels) if labels is not None else list(range(m))
    Msum = M.sum(axis=0)
    adj = Msum > 0
    ncomp, lab = connected_components(csr_matrix(adj), directed=True, connection="strong")
    comps = sorted((np.nonzero(lab == c)[0] for c in range(ncomp)), key=lambda c: int(c[0]))
    rhos = []
    for c in comps:
        sub = Msum[np.ix_(c, c)]
        rhos.append(perron_value(sub) if sub.any() else 0.0)
    rho_max = max(rhos)
    if rho_max <= 0:
        raise DomainError("summed matrix is nilpotent")
    P = float(np.log(rho_max))
    notes = []
    states: list[StateEntry] = []
    for c, rho in zip(comps, rhos):
        if rho <= 0 or abs(np.log(rho) - P) > PRESSURE_TOL * max(1.0, abs(P)):
            continue
        Mc = M[:, c][:, :, c]
        comp_labels = [labels[t] for t in c]
        if len(c) == 1:
            w = Mc[:, 0, 0]
            spec = BernoulliSpec(tuple(w / w.sum()))
            entry = StateEntry(spec, float(np.log(w.sum())), comp_labels, 1, True, 1.0,
                               bool(np.all(w > 0)), Mc)
        else:
            rho_c, u, v = _perron_vectors(Msum[np.ix_(c, c)])
            v = v / v.max()
            u = u / (u @ v)
            if u.min() <= 0 or v.min() <= 0:
                raise DomainError("Perron vectors are not strictly positive on an irreducible component")
            spec = PerronGibbsSpec(Mc, rho_c, u, v)
            period = _period(Msum[np.ix_(c, c)] > 0)
            C = float(max(1.0 / (u.min() * v.min()), len(c) * u.max() * v.max()))
            comp_struct = irreducibility_test(list(Mc))
            ergodic = True if (period == 1 and comp_struct.verdict == "irreducible") else None
            if period > 1:
                notes.append(f"component {comp_labels} has period {period}; ergodicity not asserted")
            full = bool(np.all(Mc.sum(axis=(1, 2)) > 0))
            entry = StateEntry(spec, float(np.log(rho_c)), comp_labels, period, ergodic, C, full, Mc)
        if not any(_same_measure(entry, other, N) for other in states):
            states.append(entry)
    est = PressureEstimate(P, P, 0, {"exact": "log Perron value of the summed nonnegative tuple"}, True)
    rep = EquilibriumReport(states, None, True, "nonnegative", est, notes=notes)
    rep.evidence["components"] = [[labels[t] for t in c] for c in comps]
    rep.evidence["component_log_perron"] = [float(np.log(r)) if r > 0 else float("-inf") for r in rhos]
    rep.evidence["lift_irreducible"] = ncomp == 1
    return rep


def _is_diagonal(A) -> bool:
    A = np.asarray(A)
    return all(A[i, j] == 0 for i in range(A.shape[0]) for j in range(A.shape[1]) if i != j)


def _lift_report(form: PermutationForm, s: float, route: str, tup=None) -> EquilibriumReport:
    d = form.dim
    k = int(floor(s))
    lift = _lift(form, s, k)
    rep = nonneg_equilibria(lift)
    rep.route = route
    rep.s = float(s)
    rep.pressure.s = float(s)
    rep.multiplicity_bound = (d - k) * comb(d, k)
    rep.evidence["lift_dim"] = lift.dim
    rep.evidence["basis_exact"] = form.exact
    rep.exact = True
    if tup is not None:
        X = form.basis
        Xi = linalg.inverse(X)
        rep.route_matrices = np.stack([linalg.as_float(Xi @ A @ X) for A in tup])
    return rep


def diagonal_equilibria(tup, s: float) -> EquilibriumReport:
    """Equilibrium states of phi^s for a tuple of diagonal matrices."""
    mats = list(tup.matrices) if isinstance(tup, MatrixTuple) else [np.asarray(A) for A in tup]
    if not all(_is_diagonal(A) for A in mats):
        raise InputError("all matrices must be diagonal")
    d = mats[0].shape[0]
    k = int(floor(s))
    if not k < s < k + 1 or k >= d:
        raise InputError("need k < s < k+1 with k < d")
    exact = all(linalg.is_exact(A) for A in mats)
    perms = tuple(tuple(range(d)) for _ in mats)
    scal = np.array([[A[j, j] for j in range(d)] for A in mats], dtype=object if exact else float)
    form = PermutationForm(linalg.identity(d, exact), perms, scal, exact)
    return _lift_report(form, s, "diagonal", mats)


def block_diagonal_reduce(tup: MatrixTuple, tri: BlockTriangularization) -> MatrixTuple:
    """Conjugate to block-upper form and zero the off-diagonal blocks."""
    X = tri.basis
    exact = linalg.is_exact(X) and tup.exact
    src = tup if exact else tup.to_float()
    Xi = linalg.inverse(X if exact else linalg.as_float(X))
    Xu = X if exact else linalg.as_float(X)
    off = np.concatenate([[0], np.cumsum(tri.block_dims)])
    out = []
    for A in src.matrices:
        C = Xi @ A @ Xu
        D = linalg.zeros(C.shape, exact)
        for b in range(len(tri.block_dims)):
            sl = slice(off[b], off[b + 1])
            D[sl, sl] = C[sl, sl]
        out.append(D)
    return MatrixTuple(tuple(out), "rational" if exact else "float", tup.labels)


# ------------------------------------------------------------ 3D reducible

def candidate_exponents(b: float, C, s: float) -> tuple[float, float, float]:
    """The three log-potentials whose maximum is log phi^s(b ⊕ C), 1 < s < 2."""
    a = np.linalg.svd(np.asarray(C, dtype=float), compute_uv=False)
    lb = np.log(abs(b))
    la1, la2 = np.log(a[0]), np.log(a[1])
    return lb + (s - 1) * la1, la1 + (s - 1) * lb, la1 + (s - 1) * la2


def candidate_tuples(b, C, s: float) -> dict:
    """The three rescaled 2×2 tuples with their norm exponents."""
    if not 1 < s < 2:
        raise InputError("s must lie strictly between 1 and 2")
    b = np.abs(np.asarray(b, dtype=float))
    C = [np.asarray(linalg.as_float(M)) for M in C]
    if len(b) != len(C):
        raise InputError("need one scalar per 2x2 matrix")
    dets = np.abs([np.linalg.det(M) for M in C])
    return {
        "scaled_by_b_root": ([bi ** (1 / (s - 1)) * M for bi, M in zip(b, C)], s - 1),
        "scaled_by_b_power": ([bi ** (s - 1) * M for bi, M in zip(b, C)], 1.0),
        "scaled_by_det": ([di ** ((s - 1) / (2 - s)) * M for di, M in zip(dets, C)], 2 - s),
    }


@dataclass
class ReducibleCandidates:
    combined: PressureEstimate
    candidates: dict


def reducible3d_pressure(b, C, s: float, n_max: int = 8, threads: int = 1) -> ReducibleCandidates:
    """Pressure of phi^s for b ⊕ C as the largest of three norm pressures."""
    cands = candidate_tuples(b, C, s)
    ests = {}
    for name, (mats, t) in cands.items():
        e = pressure_bounds(MatrixTuple.from_floats(mats), NormPow(t), n_max, threads)
        e.s = float(s)
        ests[name] = e
    lo = max(e.lower for e in ests.values())
    up = max(e.upper for e in ests.values())
    combined = PressureEstimate(lo, up, n_max, {"lower": "max of candidate lower bounds",
                                                "upper": "max of candidate upper bounds"}, False, float(s))
    return ReducibleCandidates(combined, ests)


# ------------------------------------------------------------ routes

def _similitude_ratios(tup: MatrixTuple):
    """Scale factors r_i if every A_i^T A_i = r_i^2 I, else None."""
    d = tup.dim
    out = []
    for A in tup.matrices:
        G = A.T @ A
        if tup.exact:
            if not all(G[i, j] == (G[0, 0] if i == j else 0) for i in range(d) for j in range(d)):
                return None
            out.append(float(G[0, 0]) ** 0.5)
        else:
            g = float(G[0, 0])
            if np.abs(G - g * np.eye(d)).max() > 1e-12 * g:
                return None
            out.append(g ** 0.5)
    return np.array(out)


def _form_pressure(form: PermutationForm, dets: np.ndarray):
    d = form.dim

    def P(s):
        if s >= d:
            return float(np.log(np.sum(dets ** (s / d))))
        return pressure_exact_nonneg(_lift(form, s, int(floor(s))))

    return P


def _find_form(tup: MatrixTuple):
    """(form, reduced tuple or None, triangularization or None)."""
    form = detect_generalized_permutation(tup)
    if form is not None:
        return form, None, None
    tri = block_triangularize(tup)
    if tri is None or len(tri.block_dims) == 1:
        return None, None, tri
    reduced = block_diagonal_reduce(tup, tri)
    return detect_generalized_permutation(reduced), reduced, tri


def exact_pressure_function(tup: MatrixTuple) -> ExactRoute | None:
    """Closed-form s -> P(phi^s) when the tuple belongs to an explicit class."""
    dets = np.abs([np.linalg.det(A) for A in tup.as_float()])
    r = _similitude_ratios(tup)
    if r is not None:
        return ExactRoute("similitude", lambda s: float(np.log(np.sum(r ** s))), True)
    form, reduced, tri = _find_form(tup)
    if form is None:
        return None
    kind = "diagonal" if all(p == tuple(range(tup.dim)) for p in form.perms) else "generalized permutation"
    if reduced is not None:
        kind = f"block reduction, {kind}"
    certified = form.exact and (tri is None or tri.certified)
    return ExactRoute(kind, _form_pressure(form, dets), certified, form)


def classify3d(tup: MatrixTuple, s: float, n_max: int = 8, quasimult_nmax: int | None = 5,
               threads: int = 1) -> EquilibriumReport:
    """Classify the phi^s equilibrium states of a 3×3 tuple.

    Routes, in order: similitudes (one Bernoulli state); tuples that are
    generalised permutation tuples, directly or after block reduction
    (explicit Perron-Gibbs states); for 1 < s < 2 the reducible 1 ⊕ 2 case
    (three candidate pressures) and the irreducible case without a
    permutation basis (uniqueness expected, no explicit state); otherwise
    pressure bounds with the multiplicity bound that governs the range of s.
    """
    if tup.dim != 3:
        raise InputError("classify3d needs 3x3 matrices")
    if not 0 < s < 3:
        raise InputError("s must lie in (0, 3)")
    s = float(s)
    middle = 1 < s < 2
    struct = irreducibility_test(tup)
    r = _similitude_ratios(tup)
    if r is not None:
        w = r ** s
        spec = BernoulliSpec(tuple(w / w.sum()))
        P = float(np.log(w.sum()))
        est = PressureEstimate(P, P, 0, {"exact": "similitude: log sum r_i^s"}, True, s)
        entry = StateEntry(spec, P, ["similitude"], 1, True, 1.0, True, w[:, None, None])
        rep = EquilibriumReport([entry], 1, True, "quasimultiplicative (similitude)", est, s, structure=struct)
        rep.route_matrices = tup.as_float()
        rep.evidence["lift_irreducible"] = True
        return rep
    form, reduced, tri = _find_form(tup)
    if form is not None:
        kind = "diagonal" if all(p == (0, 1, 2) for p in form.perms) else "generalized permutation"
        route = kind if reduced is None else f"block reduction, {kind}"
        rep = _lift_report(form, s, route, reduced.matrices if reduced is not None else tup.matrices)
        rep.structure = struct
        if not middle:
            rep.multiplicity_bound = 3
        if not form.exact:
            rep.notes.append("permutation basis found in floating point")
        if reduced is not None:
            rep.notes.append("states computed for the block-diagonal reduction, which has the same equilibrium states")
        return rep
    bounds = pressure_bounds(tup, SVF(s), n_max, threads)
    if not middle:
        rep = EquilibriumReport([], 3, False, "norm pressure route", bounds, s, structure=struct)
        rep.notes.append("at most 3 ergodic equilibrium states; none constructed explicitly")
        return rep
    if struct.verdict == "reducible" and tri is not None and sorted(tri.block_dims) == [1, 2]:
        red = reduced if reduced is not None else block_diagonal_reduce(tup, tri)
        one = 0 if tri.block_dims[0] == 1 else 2
        two = slice(1, 3) if one == 0 else slice(0, 2)
        b = [linalg.as_float(A)[one, one] for A in red.matrices]
        C = [linalg.as_float(A)[two, two] for A in red.matrices]
        cands = reducible3d_pressure(b, C, s, n_max, threads)
        rep = EquilibriumReport([], 3, False, "reducible 1+2 blocks, three candidate pressures",
                                cands.combined, s, structure=struct, candidates=cands.candidates)
        rep.evidence["direct_bounds"] = bounds
        rep.notes.append("equilibrium states are those of the candidate attaining the maximum; none constructed")
        return rep
    if struct.verdict == "irreducible":
        qm = quasimult_search(tup, s, n_max=quasimult_nmax)
        rep = EquilibriumReport([], 6, False, "strongly irreducible route (no permutation basis found)",
                                bounds, s, structure=struct)
        rep.evidence["quasimultiplicativity"] = qm
        rep.notes.append("a unique equilibrium state is expected when the tuple is strongly irreducible; "
                         "this is not certified numerically and the state is not constructed, so the "
                         "worst-case bound 6 is reported")
        return rep
    rep = EquilibriumReport([], 6, False, "structure undetermined", bounds, s, structure=struct)
    rep.notes.append("irreducibility could not be decided; only pressure bounds are reported")
    return rep


def equilibria(tup: MatrixTuple, s: float, n_max: int = 8, threads: int = 1) -> EquilibriumReport:
    """Dimension-agnostic entry point: classify3d in dimension 3, otherwise the
    similitude and permutation routes only."""
    if tup.dim == 3:
        return classify3d(tup, s, n_max, threads=threads)
    d = tup.dim
    if not 0 < s < d:
        raise InputError(f"s must lie in (0, {d})")
    form, reduced, _ = _find_form(tup)
    if form is None:
        bounds = pressure_bounds(tup, SVF(s), n_max, threads)
        return EquilibriumReport([], None, False, "no explicit route", bounds, s,
                                 notes=["no explicit construction is available for this tuple"])
    return _lift_report(form, s, "generalized permutation", (reduced or tup).matrices)


# ------------------------------------------------------------ Gibbs check

@dataclass
class GibbsRow:
    state: int
    C: float
    component_min: float
    component_max: float
    phi_min: float
    phi_max: float
    component_ok: bool
    phi_upper_ok: bool
    phi_lower_required: bool
    phi_lower_ok: bool

    @property
    def ok(self) -> bool:
        return self.component_ok and self.phi_upper_ok and (self.phi_lower_ok or not self.phi_lower_required)


def gibbs_check(report: EquilibriumReport, tup: MatrixTuple, s: float, n: int, rtol: float = 1e-9) -> list:
    """Gibbs ratios mu([w]) e^{nP} / potential(w) over all words of length n.

    Two potentials are used: the norm of the state's own component of the
    lift, for which the ratio always lies in [1/C, C], and phi^s of the
    tuple in the basis of the route, for which the ratio is at most C and
    also at least 1/C when the lift is irreducible (a single component, the
    quasimultiplicative case).
    """
    if not report.states:
        return []
    ref = report.route_matrices if report.route_matrices is not None else tup.as_float()
    check_budget(len(ref), n)
    logphi = WordSpectra(ref).log_potential(SVF(s), n)
    need_lower = bool(report.evidence.get("lift_irreducible", False))
    rows = []
    for t, st in enumerate(report.states):
        mu = st.spec.masses(n)
        with np.errstate(divide="ignore"):
            lmu = np.log(mu)
        P = st.pressure
        Mc = np.asarray(st.component_matrices, dtype=float)
        prods = _level_products(Mc, n)
        if Mc.shape[-1] == 1:
            lcomp = np.log(prods[:, 0, 0])
        else:
            lcomp = np.log(np.linalg.svd(prods, compute_uv=False)[:, 0])
        rc = lmu + n * P - lcomp
        rp = lmu + n * P - logphi
        C = st.gibbs_constant
        lc = np.log(C) + rtol
        rows.append(GibbsRow(t, C, float(np.exp(rc.min())), float(np.exp(rc.max())),
                             float(np.exp(rp.min())), float(np.exp(rp.max())),
                             bool(rc.min() >= -lc and rc.max() <= lc), bool(rp.max() <= lc),
                             need_lower, bool(rp.min() >= -lc)))
    return rows
