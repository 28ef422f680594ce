from fractions import Fraction

import numpy as np
import pytest
from scipy.optimize import brentq

from conftest import max_states_mats, random_contractive_float
from svfkit import dimension as dm
from svfkit.equilibrium import classify3d
from svfkit.errors import InputError
from svfkit.pressure import SVF, affinity_dimension, pressure_upper
from svfkit.symbolic import BernoulliSpec
from svfkit.tuples import MatrixTuple

LOG43 = np.log(4) / np.log(3)


def thirds(n=4):
    return MatrixTuple.from_rationals([np.eye(3, dtype=int) * Fraction(1, 3)] * n)


def uniform(N):
    return BernoulliSpec(tuple(Fraction(1, N) for _ in range(N)))


def test_closed_form_examples():
    T = MatrixTuple.from_rationals([np.eye(3, dtype=int) * Fraction(1, 2)] * 2)
    sp = dm.lyapunov_exponents(T, uniform(2))
    assert sp.method == "closed-form"
    assert np.all(sp.exponents == -np.log(2)) and np.all(sp.half_widths == 0)
    D = MatrixTuple.from_floats([np.diag([0.5, 0.2, 0.1]), np.diag([0.1, 0.4, 0.3])])
    mu = BernoulliSpec((0.3, 0.7))
    sp = dm.lyapunov_exponents(D, mu)
    per_axis = 0.3 * np.log([0.5, 0.2, 0.1]) + 0.7 * np.log([0.1, 0.4, 0.3])
    assert np.allclose(sp.exponents, np.sort(per_axis)[::-1], atol=1e-15)
    with pytest.raises(InputError):
        dm.lyapunov_exponents(random_contractive_float(np.random.default_rng(0), 3, 2), mu, "closed-form")


def test_exponent_sum_is_mean_log_det(rng):
    T = random_contractive_float(rng, 3, 2)
    mu = BernoulliSpec((0.4, 0.6))
    target = mu.probs @ np.log(np.abs(np.linalg.det(T.as_float())))
    sp = dm.lyapunov_exponents(T, mu, "deterministic", n=6)
    assert np.all(np.diff(sp.exponents) <= 1e-12)
    assert sp.exponents.sum() == pytest.approx(target, abs=1e-12)
    mc = dm.lyapunov_exponents(T, mu, "monte-carlo", samples=500, length=60, seed=1)
    se = np.array(mc.details["standard_errors"]).sum()
    assert abs(mc.exponents.sum() - target) <= 3 * se + 1e-12


def test_deterministic_aggregates_are_upper_bounds(rng):
    T = random_contractive_float(rng, 3, 2)
    mu = uniform(2)
    a = dm.lyapunov_exponents(T, mu, "deterministic", n=10)
    b = dm.lyapunov_exponents(T, mu, "deterministic", n=5)
    # n-averaged partial sums decrease with n towards the true aggregates
    assert np.all(np.array(a.details["upper_aggregates"]) <= np.array(b.details["upper_aggregates"]) + 1e-12)
    assert np.all(np.cumsum(a.exponents) <= np.array(a.details["upper_aggregates"]) + 1e-12)


def test_deterministic_and_monte_carlo_agree():
    g = np.random.default_rng(7)
    T = MatrixTuple.from_floats(g.normal(size=(2, 2, 2)) * 0.5)
    mu = uniform(2)
    det = dm.lyapunov_exponents(T, mu, "deterministic", n=10)
    mc = dm.lyapunov_exponents(T, mu, "monte-carlo", samples=10 ** 4, length=200, seed=11)
    se = np.array(mc.details["standard_errors"])
    assert np.all(np.abs(det.exponents - mc.exponents) <= 3 * se)


def test_monte_carlo_reproducible_across_threads(rng):
    T = random_contractive_float(rng, 3, 2)
    mu = BernoulliSpec((0.5, 0.5))
    a = dm.lyapunov_exponents(T, mu, "monte-carlo", samples=2100, length=40, seed=3, threads=1)
    b = dm.lyapunov_exponents(T, mu, "monte-carlo", samples=2100, length=40, seed=3, threads=3)
    c = dm.lyapunov_exponents(T, mu, "monte-carlo", samples=2100, length=40, seed=4)
    assert np.array_equal(a.exponents, b.exponents) and np.array_equal(a.half_widths, b.half_widths)
    assert not np.array_equal(a.exponents, c.exponents)


def test_monte_carlo_needs_seed(rng):
    with pytest.raises(InputError):
        dm.lyapunov_exponents(random_contractive_float(rng, 3, 2), uniform(2), "monte-carlo")
    with pytest.raises(InputError):
        dm.lyapunov_exponents(random_contractive_float(rng, 3, 2), uniform(3))


def test_log_svf_assembly_is_piecewise_affine():
    sp = dm.LyapunovSpectrum(np.array([-1.0, -2.0, -4.0]), np.zeros(3), "closed-form")
    assert sp.log_svf(0) == 0
    assert sp.log_svf(1.5) == pytest.approx(-2)
    assert sp.log_svf(2.5) == pytest.approx(-5)
    assert sp.log_svf(3) == pytest.approx(-7)
    s = np.linspace(0, 3, 301)
    vals = np.array([sp.log_svf(x) for x in s])
    assert np.abs(np.diff(vals)).max() <= 4 * 0.01 + 1e-12


def test_lyapunov_dimension_examples():
    ld = dm.lyapunov_dimension(thirds(), uniform(4))
    assert ld.lo == pytest.approx(LOG43, abs=1e-12) and ld.hi == pytest.approx(LOG43, abs=1e-12)
    ld = dm.lyapunov_dimension(thirds(), BernoulliSpec((1, 0, 0, 0)))
    assert ld.value == 0


def test_lyapunov_dimension_caps_expanding():
    T = MatrixTuple.from_floats([2 * np.eye(3), 3 * np.eye(3)])
    ld = dm.lyapunov_dimension(T, uniform(2))
    assert ld.capped and ld.value == 3


def test_equilibrium_state_attains_affinity_dimension():
    T = MatrixTuple.from_rationals(max_states_mats(Fraction(1, 3)))
    root = affinity_dimension(T).value
    for st in classify3d(T, root).states:
        ld = dm.lyapunov_dimension(T, st.spec)
        assert ld.value == pytest.approx(root, abs=1e-8)
    # any other Bernoulli measure stays below
    ld = dm.lyapunov_dimension(T, uniform(3))
    assert ld.hi < root


def test_variational_inequality_on_grid(rng):
    T = random_contractive_float(rng, 3, 2)
    mu = BernoulliSpec((0.35, 0.65))
    h = mu.entropy()
    sp = dm.lyapunov_exponents(T, mu, "deterministic", n=8)
    for s in np.linspace(0, 3, 13):
        assert h + sp.log_svf(s, shift=-1) <= pressure_upper(T, SVF(s), 8) + 1e-12


def test_drop_similitude():
    rep = dm.dimension_drop(thirds(), 3)
    assert rep.verdict == "StrictDrop"
    assert rep.full.value == pytest.approx(LOG43, abs=1e-9)
    assert rep.reduced.value == pytest.approx(1, abs=1e-9)
    lines = rep.grid_csv().splitlines()
    assert lines[0] == "s,gap_lower,gap_upper" and len(lines) == 14
    s, lo, up = rep.grid[4]
    assert s == 1 and lo == pytest.approx(np.log(4 / 3))


def test_drop_scaled_max_states():
    # reduced tuple diag(2,1,1)/3, diag(1,2,1)/3: root of log(2^(s-1)+2) = s log 3
    oracle = brentq(lambda s: np.log(2 ** (s - 1) + 2) - s * np.log(3), 0.5, 2, xtol=1e-14)
    rep = dm.dimension_drop(MatrixTuple.from_rationals(max_states_mats(Fraction(1, 3))), 2)
    assert rep.verdict == "StrictDrop"
    assert rep.full.value == pytest.approx(1.3159312226503446, abs=1e-9)
    assert rep.reduced.value == pytest.approx(oracle, abs=1e-9)
    assert rep.gap > 1e-6


def test_drop_repeated_map_example():
    # two-dimensional five-map example with repeated linear parts; the attractor
    # is a segment for its particular translations, but the affinity dimension drops
    A = np.diag([Fraction(1, 3), Fraction(1, 5)]).astype(object)
    B = np.diag([Fraction(1, 2), Fraction(1, 4)]).astype(object)
    T = MatrixTuple.from_rationals([A, A, A, B, B])
    rep = dm.dimension_drop(T, 0)
    assert rep.verdict == "StrictDrop" and rep.full.value > 1 and rep.gap > 0.05


def test_drop_generic_never_false_strict(rng):
    for _ in range(4):
        T = random_contractive_float(rng, 3, 3, scale=0.5)
        mats = T.as_float().copy()
        mats[2] = mats[2] * 0.01
        rep = dm.dimension_drop(MatrixTuple.from_floats(mats), 2, n_max=6, grid=[0.5, 1.5])
        if rep.verdict == "StrictDrop":
            assert rep.reduced.hi < rep.full.lo
        else:
            assert rep.reduced.hi >= rep.full.lo


def test_drop_input_checks(rng):
    with pytest.raises(InputError):
        dm.dimension_drop(thirds(2), 0)
    with pytest.raises(InputError):
        dm.dimension_drop(thirds(), 5)
