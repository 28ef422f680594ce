from fractions import Fraction
from itertools import product

import numpy as np
import pytest

from conftest import irred_mats, max_states_mats, random_rational
from svfkit import equilibrium as eq
from svfkit.errors import InputError
from svfkit.multilinear import log_svf, singular_values
from svfkit.pressure import SVF, NormPow, WordSpectra, pressure_bounds, pressure_exact_nonneg
from svfkit.structure import PermutationForm, block_triangularize, detect_generalized_permutation
from svfkit.symbolic import invariance_check, word_product
from svfkit.tuples import MatrixTuple

S = 1.5
# reference lift written in the label order (1,2),(2,3),(3,1),(1,3),(2,1),(3,2) of (S, i) labels
DISPLAY_ORDER = [((0,), 1), ((1,), 2), ((2,), 0), ((0,), 2), ((1,), 0), ((2,), 1)]


def reference_lift(lam, s):
    a, b, c = abs(lam), abs(lam) ** (s - 1), abs(lam) ** s
    H1 = np.zeros((6, 6))
    H1[0, 2], H1[1, 0], H1[2, 1] = a, b, c
    H1[3, 5], H1[4, 3], H1[5, 4] = c, b, a
    H2 = np.zeros((6, 6))
    H2[0, 1], H2[1, 2], H2[2, 0] = b, c, a
    H2[3, 4], H2[4, 5], H2[5, 3] = b, a, c
    return H1, H2


def norm(M):
    return singular_values(M)[0]


def word_matrix(mats, w):
    P = np.eye(mats[0].shape[0])
    for a in w:
        P = P @ mats[a]
    return P


@pytest.fixture
def irred_report(irred):
    return eq.classify3d(irred, S)


@pytest.fixture
def max_report(max_states):
    return eq.classify3d(max_states, S)


# ------------------------------------------------------------ lift

def test_lift_of_diagonal_tuple(max_states):
    form = detect_generalized_permutation(max_states)
    lift = eq.permutation_lift(form, S)
    assert lift.dim == 6
    for H in lift.matrices:
        assert np.count_nonzero(H - np.diag(np.diag(H))) == 0
        assert set(np.round(np.diag(H), 12)) <= {1.0, 2.0, round(2 ** (S - 1), 12)}


def test_lift_matches_reference_matrices(irred):
    for s in (1.25, 1.5, 1.8):
        lift = eq.permutation_lift(detect_generalized_permutation(irred), s)
        idx = [lift.labels.index(lab) for lab in DISPLAY_ORDER]
        for H, D in zip(lift.matrices, reference_lift(2, s)):
            assert np.allclose(H[np.ix_(idx, idx)], D, atol=1e-14)


def test_lift_is_multiplicative(rng):
    for _ in range(10):
        P = [np.eye(3, dtype=int)[:, rng.permutation(3)] * rng.integers(1, 5, size=3) * rng.choice([-1, 1], size=3)
             for _ in range(2)]
        mats = [P[0], P[1], P[0] @ P[1]]
        T = MatrixTuple.from_rationals(mats)
        form = detect_generalized_permutation(T)
        for s in (0.5, 1.5, 2.5):
            H = eq.permutation_lift(form, s).matrices
            assert np.allclose(H[2], H[0] @ H[1], rtol=1e-13)


def test_lift_norm_identity(irred, rng):
    P = [np.eye(3)[:, rng.permutation(3)] * rng.uniform(0.3, 3, size=3) for _ in range(2)]
    for T in (irred, MatrixTuple.from_floats(P)):
        form = detect_generalized_permutation(T)
        for s in (0.4, 1.5, 2.3):
            H = eq.permutation_lift(form, s).matrices
            for n in range(1, 5):
                for w in product(range(2), repeat=n):
                    A = word_product(T.as_float(), w)
                    assert np.log(norm(word_matrix(H, w))) == pytest.approx(log_svf(A, s), abs=1e-10)


def test_lift_requires_fractional_range(irred):
    with pytest.raises(InputError):
        eq.permutation_lift(detect_generalized_permutation(irred), 1.5, k=0)


# ------------------------------------------------------------ nonnegative states

def test_scalar_tuple_gives_bernoulli():
    a = np.array([1.0, 2.0, 5.0])
    rep = eq.nonneg_equilibria(a[:, None, None])
    assert len(rep.states) == 1
    assert np.allclose(rep.states[0].spec.probs, a / a.sum())
    assert rep.pressure.lower == pytest.approx(np.log(8))


def test_max_states_weights(max_report):
    assert len(max_report.states) == 6
    w = np.array([2 ** (S - 1), 2, 1]) / (2 ** (S - 1) + 3)
    seen = set()
    for st in max_report.states:
        assert sorted(st.spec.probs) == pytest.approx(sorted(w), abs=1e-15)
        seen.add(tuple(np.round(st.spec.probs, 12)))
    assert len(seen) == 6


def test_irred_components(irred_report):
    assert len(irred_report.states) == 2
    logs = irred_report.evidence["component_log_perron"]
    assert abs(logs[0] - logs[1]) <= 1e-10
    B, D = (st.component_matrices for st in irred_report.states)
    assert norm(B[0] @ B[0] @ B[1]) == pytest.approx(16)
    assert norm(D[0] @ D[0] @ D[1]) == pytest.approx(2 ** 3.5)
    w = (0, 0, 1, 0, 1, 1)
    rho = [max(abs(np.linalg.eigvals(word_matrix(M, w)))) for M in (B, D)]
    assert abs(rho[0] - rho[1]) > 1


def test_irred_states_need_long_cylinders(irred_report):
    # the two states agree on every cylinder of length <= 3; they first differ at length 4
    a, b = (st.spec for st in irred_report.states)
    assert np.allclose(a.masses(3), b.masses(3), atol=1e-14)
    assert np.abs(a.masses(4) - b.masses(4)).max() > 1e-3


def test_diagonal_equilibria_examples():
    lam = Fraction(1, 2)
    T = [np.eye(3, dtype=int) * lam] * 3
    rep = eq.diagonal_equilibria(T, S)
    assert len(rep.states) == 1
    assert np.allclose(rep.states[0].spec.probs, [1 / 3] * 3)
    dominant = [np.diag([3.0, 1, 1]), np.diag([3.0, 1, 1]) * 0.9]
    rep = eq.diagonal_equilibria(dominant, 0.5)
    assert len(rep.states) == 1 and rep.states[0].component == [((), 0)]
    with pytest.raises(InputError):
        eq.diagonal_equilibria([np.ones((3, 3)), np.eye(3)], S)


# ------------------------------------------------------------ state invariants

@pytest.mark.parametrize("which", ["irred", "max_states"])
def test_state_invariants(which, request):
    T = request.getfixturevalue(which)
    rep = eq.classify3d(T, S)
    sp = WordSpectra(T)
    P = rep.pressure.lower
    for st in rep.states:
        assert invariance_check(st.spec, 6).defect <= 1e-12
        assert abs(st.pressure - P) <= 1e-10
        assert st.spec.masses(8 if T.count == 2 else 6).min() > 0
        vals = []
        for n in range(1, 8):
            mu = st.spec.masses(n)
            vals.append(st.spec.block_entropy(n) + mu @ sp.log_potential(SVF(S), n) / n)
        assert min(vals) >= P - 1e-9
        assert all(b <= a + 1e-12 for a, b in zip(vals, vals[1:]))


# ------------------------------------------------------------ block reduction

def block_upper_tuple(rng, dims=(1, 2), N=2):
    mats = []
    while len(mats) < N:
        M = random_rational(rng, 3)
        if dims == (1, 2):
            M[1, 0] = M[2, 0] = Fraction(0)
        else:
            M[2, 0] = M[2, 1] = Fraction(0)
        if np.linalg.det(M.astype(float)) != 0:
            mats.append(M)
    return MatrixTuple.from_rationals(mats)


def test_block_diagonal_reduce_upper_triangular(rng):
    mats = []
    for _ in range(2):
        M = random_rational(rng, 3)
        for i in range(3):
            for j in range(i):
                M[i, j] = Fraction(0)
            M[i, i] = M[i, i] or Fraction(1)
        mats.append(M)
    T = MatrixTuple.from_rationals(mats)
    R = eq.block_diagonal_reduce(T, block_triangularize(T))
    for A in R.matrices:
        assert all(A[i, j] == 0 for i in range(3) for j in range(3) if i != j)


def test_block_reduction_monotone_and_equal_pressure(rng):
    for t in range(60):
        T = block_upper_tuple(rng, (1, 2) if t % 2 else (2, 1))
        tri = block_triangularize(T)
        R = eq.block_diagonal_reduce(T, tri)
        for s in (0.5, 1.5, 2.5):
            for A, B in zip(T.as_float(), R.as_float()):
                assert log_svf(A, s) >= log_svf(B, s) - 1e-10
    for _ in range(5):
        T = block_upper_tuple(rng).scaled(Fraction(1, 10))
        R = eq.block_diagonal_reduce(T, block_triangularize(T))
        a = pressure_bounds(T, SVF(S), 8)
        b = pressure_bounds(R, SVF(S), 8)
        assert a.overlaps(b)


# ------------------------------------------------------------ three candidates

def random_one_two(rng, N=2):
    b = rng.uniform(0.2, 1.0, size=N) * rng.choice([-1, 1], size=N)
    C = [rng.normal(size=(2, 2)) * 0.5 for _ in range(N)]
    return b, C


def direct(b, C):
    mats = []
    for bi, Ci in zip(b, C):
        M = np.zeros((3, 3))
        M[0, 0] = bi
        M[1:, 1:] = Ci
        mats.append(M)
    return mats


def test_candidate_exponents_per_word(rng):
    for _ in range(50):
        b, C = random_one_two(rng)
        mats = direct(b, C)
        s = rng.uniform(1.05, 1.95)
        for _ in range(10):
            w = rng.integers(0, 2, size=rng.integers(1, 8))
            bw = np.prod(b[w])
            Cw = word_matrix(C, w)
            e = eq.candidate_exponents(bw, Cw, s)
            assert max(e) == pytest.approx(log_svf(word_matrix(mats, w), s), abs=1e-10)


def test_candidate_tuples_reproduce_exponents(rng):
    b, C = random_one_two(rng)
    s = 1.3
    cands = eq.candidate_tuples(b, C, s)
    e = eq.candidate_exponents(b[0], C[0], s)
    for (mats, t), ei in zip(cands.values(), e):
        assert t * np.log(norm(mats[0])) == pytest.approx(ei)


def test_candidates_coincide_for_similarities(rng):
    r = np.array([0.5, 0.3])
    C = [ri * np.linalg.qr(rng.normal(size=(2, 2)))[0] for ri in r]
    out = eq.reducible3d_pressure(r, C, S, n_max=6)
    vals = [(e.lower, e.upper) for e in out.candidates.values()]
    for lo, up in vals:
        assert lo == pytest.approx(vals[0][0]) and up == pytest.approx(vals[0][1])
    assert out.combined.lower == pytest.approx(np.log(np.sum(r ** S)))


def test_max_of_three_overlaps_direct(rng):
    for _ in range(5):
        b, C = random_one_two(rng)
        out = eq.reducible3d_pressure(b, C, 1.4, n_max=8)
        d = pressure_bounds(MatrixTuple.from_floats(direct(b, C)), SVF(1.4), 8)
        assert out.combined.overlaps(d)


def test_alternative_third_candidate_only_matches_at_midpoint(rng):
    # |det C|^((2-s)/(s-1)) C with norm power s-1 agrees with e3 only when s = 3/2
    b, C = random_one_two(rng)
    for s, agree in ((1.5, True), (1.3, False), (1.8, False)):
        dt = abs(np.linalg.det(C[0]))
        alt = (s - 1) * np.log(norm(dt ** ((2 - s) / (s - 1)) * C[0]))
        e3 = eq.candidate_exponents(b[0], C[0], s)[2]
        assert (abs(alt - e3) < 1e-10) == agree


def test_candidate_range():
    with pytest.raises(InputError):
        eq.candidate_tuples([1.0, 1.0], [np.eye(2), np.eye(2)], 2.0)


# ------------------------------------------------------------ classify3d

def test_classify_routes(max_report, irred_report, rng):
    assert max_report.route == "diagonal" and max_report.exact and max_report.multiplicity_bound == 6
    assert all(st.fully_supported for st in max_report.states)
    assert max_report.pressure.lower == pytest.approx(np.log(2 ** 0.5 + 3), abs=1e-12)
    assert irred_report.route == "generalized permutation" and len(irred_report.states) == 2
    sim = MatrixTuple.from_floats([0.5 * np.linalg.qr(rng.normal(size=(3, 3)))[0], 0.3 * np.eye(3)])
    rep = eq.classify3d(sim, S)
    assert rep.route.startswith("quasimultiplicative") and len(rep.states) == 1
    assert np.allclose(rep.states[0].spec.probs, np.array([0.5, 0.3]) ** S / np.sum(np.array([0.5, 0.3]) ** S))
    same = MatrixTuple.from_floats([0.5 * np.eye(3)] * 2)
    assert np.allclose(eq.classify3d(same, S).states[0].spec.probs, [0.5, 0.5])


def test_classify_outer_ranges_use_bound_three(rng):
    T = MatrixTuple.from_floats(rng.normal(size=(2, 3, 3)) * 0.3)
    for s in (0.5, 1.0, 2.0, 2.5):
        rep = eq.classify3d(T, s, n_max=5)
        assert rep.multiplicity_bound == 3 and not rep.states


def test_classify_generic_irreducible(rng):
    T = MatrixTuple.from_floats(rng.normal(size=(2, 3, 3)) * 0.3)
    rep = eq.classify3d(T, S, n_max=5)
    assert rep.route.startswith("strongly irreducible")
    assert rep.multiplicity_bound == 6 and not rep.exact and not rep.states
    assert "quasimultiplicativity" in rep.evidence


def test_classify_reducible_one_two(rng):
    T = block_upper_tuple(rng).scaled(Fraction(1, 10))
    rep = eq.classify3d(T, S, n_max=6)
    assert rep.multiplicity_bound == 3 and rep.candidates is not None
    assert rep.pressure.overlaps(rep.evidence["direct_bounds"])


def test_classify_input_checks(max_states):
    with pytest.raises(InputError):
        eq.classify3d(max_states, 3.0)
    with pytest.raises(InputError):
        eq.classify3d(MatrixTuple.from_floats([np.eye(2), 2 * np.eye(2)]), 1.5)


def test_exact_pressure_function_matches_lift(irred, max_states):
    for T in (irred, max_states):
        route = eq.exact_pressure_function(T)
        assert route is not None and route.certified
        lift = eq.permutation_lift(detect_generalized_permutation(T), 1.7)
        assert route.pressure(1.7) == pytest.approx(pressure_exact_nonneg(lift), abs=1e-12)
        assert route.pressure(3.2) == pytest.approx(np.log(sum(abs(np.linalg.det(A)) ** (3.2 / 3)
                                                               for A in T.as_float())))


# ------------------------------------------------------------ Gibbs

def test_gibbs_scalar_case():
    T = MatrixTuple.from_floats([0.5 * np.eye(3), 0.25 * np.eye(3)])
    rep = eq.classify3d(T, S)
    row = eq.gibbs_check(rep, T, S, 6)[0]
    assert row.C == 1 and row.phi_min == pytest.approx(1) and row.phi_max == pytest.approx(1)


@pytest.mark.parametrize("which", ["irred", "max_states"])
def test_gibbs_within_constant(which, request):
    T = request.getfixturevalue(which)
    rep = eq.classify3d(T, S)
    for n in range(1, 7):
        for row in eq.gibbs_check(rep, T, S, n):
            assert row.ok


def test_gibbs_two_sided_phi_bound_fails_with_several_components(max_report, max_states):
    # each Bernoulli state only sees its own slot; words favouring another slot
    # push the ratio against phi^s towards zero
    rows = eq.gibbs_check(max_report, max_states, S, 6)
    assert all(r.phi_max <= r.C * (1 + 1e-9) for r in rows)
    assert all(r.phi_min < 1 / r.C for r in rows)
