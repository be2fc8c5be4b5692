import math

import numpy as np
import pytest

from morreylab.grid import Field, make_grid, make_structure
from morreylab.norms import NormSpec
from morreylab.solvers import (
    DriftDivergence,
    OperatorSpec,
    apply_operator,
    apriori_ratio,
    oscillation_estimate,
    random_sdelta,
    sdelta_brackets,
    solve_drift,
    solve_heat,
    solve_laplace,
    spectral_derivative_fields,
)
from morreylab.testfunctions import test_function as tf

S2 = make_structure(2, (1, 1))
SP = make_structure(2, (2, 1))


def test_solve_laplace_exact_symbol():
    g = make_grid(2, math.pi, 64, periodic=True)
    xs = g.mesh()
    k = (3, 2)
    lam = 2.0
    f = Field(g, np.cos(k[0] * xs[0] + k[1] * xs[1]))
    u = solve_laplace(f, lam)
    expected = f.values / (k[0] ** 2 + k[1] ** 2 + lam)
    assert np.abs(u.values - expected).max() < 1e-13


def test_solve_laplace_residual():
    g = make_grid(2, math.pi, 64, periodic=True)
    f = tf("random_band", g, kmax=6, seed=0)
    lam = 3.0
    u = solve_laplace(f, lam)
    resid = apply_operator(u, OperatorSpec("laplace", lam=lam), S2).values + f.values
    assert np.sqrt((resid ** 2).mean()) <= 1e-10 * np.sqrt((f.values ** 2).mean())


def test_solve_laplace_validation():
    g = make_grid(1, 1.0, 64, periodic=True)
    with pytest.raises(ValueError):
        solve_laplace(Field(g, np.ones(64)), -1.0)
    g_np = make_grid(1, 1.0, 64, periodic=False)
    with pytest.raises(ValueError):
        solve_laplace(Field(g_np, np.ones(64)), 1.0)


def test_linearity():
    g = make_grid(2, math.pi, 64, periodic=True)
    f1 = tf("random_band", g, kmax=5, seed=1)
    f2 = tf("random_band", g, kmax=5, seed=2)
    a, b = 2.0, -0.7
    u1 = solve_laplace(f1, 2.0)
    u2 = solve_laplace(f2, 2.0)
    u12 = solve_laplace(Field(g, a * f1.values + b * f2.values), 2.0)
    err = np.abs(u12.values - a * u1.values - b * u2.values).max()
    assert err <= 1e-12 * max(np.abs(u12.values).max(), 1e-30)


def test_hessian_energy_identity_every_u():
    g = make_grid(2, math.pi, 64, periodic=True)
    u = tf("random_band", g, kmax=6, seed=3)
    _, d2, lap, _ = spectral_derivative_fields(u, S2)
    lhs = sum(float((d2[i][j] ** 2).sum()) for i in range(2) for j in range(2))
    rhs = float((lap ** 2).sum())
    assert lhs == pytest.approx(rhs, rel=1e-12)


def test_heat_modewise_formula():
    # f = e^{ikx} g(t): the mode solves the scalar backward ODE exactly
    g = make_grid(2, (1.0, math.pi), (64, 32), periodic=True)
    xs = g.mesh()
    kx = 3
    prof = ((xs[0] > -0.5) & (xs[0] < 0.3)).astype(float)
    f = Field(g, prof * np.cos(kx * xs[1]))
    lam = 1.5
    u, ut = solve_heat(f, lam)
    t = g.axis(0)
    ht = g.h[0]
    kappa = lam + kx ** 2

    def exact(ti):
        val = 0.0
        for j in range(len(t)):
            if prof[j, 0] == 0:
                continue
            lo, hi = max(t[j] - ht / 2, ti), t[j] + ht / 2
            if hi > lo:
                val += (math.exp(-kappa * (lo - ti)) - math.exp(-kappa * (hi - ti))) / kappa
        return val

    for i in (4, 10, 30):
        expected = exact(t[i]) * np.cos(kx * xs[1][i])
        assert np.abs(u.values[i] - expected).max() < 1e-12


def test_heat_energy_identity_torus():
    u = tf("random_band", make_grid(2, (1.0, math.pi), (64, 64), periodic=True),
           kmax=5, seed=4)
    _, d2, lap, ut = spectral_derivative_fields(u, SP)
    f = ut + lap
    lhs = float(((ut ** 2) + (d2[0][0] ** 2)).sum())
    assert lhs == pytest.approx(float((f ** 2).sum()), rel=1e-12)


def test_heat_roundtrip_bandlimited():
    # u = R_lam(lam u - L0 u) for compactly-in-t supported u
    g = make_grid(2, (2.0, math.pi), (128, 32), periodic=True)
    xs = g.mesh()
    window = np.exp(-1.0 / np.maximum(1 - (xs[0] / 1.2) ** 2, 1e-12)) * (np.abs(xs[0]) < 1.2)
    u0 = Field(g, window * np.cos(2 * xs[1]))
    lam = 2.0
    # the time derivative of the piecewise-constant interpolant is encoded by
    # the solver itself: feed g = lam u - L0 u computed from closed forms
    t = xs[0]
    dwin = window * (-2 * t / 1.2 ** 2) / np.maximum(1 - (t / 1.2) ** 2, 1e-12) ** 2
    dwin = np.where(np.abs(t) < 1.2, dwin, 0.0)
    ut0 = dwin * np.cos(2 * xs[1])
    lap0 = -4.0 * u0.values
    src = Field(g, lam * u0.values - ut0 - lap0)
    u, _ = solve_heat(src, lam)
    err = np.abs(u.values - u0.values).max() / np.abs(u0.values).max()
    assert err < 2e-3  # slab interpolation of a smooth source


def test_causality_after_support():
    g = make_grid(2, (1.0, math.pi), (64, 32), periodic=True)
    xs = g.mesh()
    f = Field(g, np.exp(-xs[1] ** 2) * (xs[0] < -0.2))
    u, _ = solve_heat(f, 1.0)
    after = xs[0][:, 0] >= -0.2 + g.h[0]
    assert np.abs(u.values[after]).max() == 0.0


def test_at_solver_rejects_bad_path():
    g = make_grid(2, (1.0, math.pi), (32, 32), periodic=True)
    f = Field(g, np.ones(g.cells))
    bad = np.repeat(np.diag([0.05])[None], 32, axis=0)
    with pytest.raises(ValueError):
        solve_heat(f, 1.0, a_of_t=bad, delta=0.5)


def test_drift_zero_converges_immediately():
    g = make_grid(2, math.pi, 64, periodic=True)
    f = tf("random_band", g, kmax=4, seed=5)
    b0 = [Field(g, np.zeros(g.cells)) for _ in range(2)]
    u, trace = solve_drift(f, 2.0, b0, S2)
    assert len(trace) == 2
    resid = apply_operator(u, OperatorSpec("laplace", lam=2.0), S2).values + f.values
    assert np.abs(resid).max() < 1e-10


def test_drift_small_geometric_convergence():
    g = make_grid(2, math.pi, 64, periodic=True)
    f = tf("random_band", g, kmax=4, seed=6)
    xs = g.mesh()
    b = [Field(g, 0.4 * np.sin(xs[i])) for i in range(2)]
    u, trace = solve_drift(f, 2.0, b, S2)
    rates = [trace[i + 1] / trace[i] for i in range(1, min(5, len(trace) - 1))]
    assert all(r < 0.6 for r in rates)
    resid = apply_operator(u, OperatorSpec("laplace", lam=2.0, b=b), S2).values + f.values
    assert np.abs(resid).max() < 1e-7 * np.abs(u.values).max()


def test_drift_divergence_raises_with_factor():
    g = make_grid(2, math.pi, 64, periodic=True)
    f = tf("random_band", g, kmax=4, seed=7)
    xs = g.mesh()
    b = [Field(g, 40.0 * np.sin(xs[i])) for i in range(2)]
    with pytest.raises(DriftDivergence) as exc:
        solve_drift(f, 2.0, b, S2, max_iter=25)
    assert exc.value.kappa_c >= 1.0


def test_eigenpair_annihilated_and_ratio_infinite():
    # the inverse-square drift pair: the operator annihilates u, so the
    # a-priori ratio denominator is floored and the ratio is infinite
    g = make_grid(3, 4.0, 48)
    u, b, resid = tf("exp_drift_pair", g, lam=1.0)
    den = math.sqrt(float((resid.values ** 2).sum()) * g.cell_volume)
    u_norm = math.sqrt(float((u.values ** 2).sum()) * g.cell_volume)
    assert den <= 1e-10 * u_norm
    from morreylab.solvers import denominator_floor

    assert denominator_floor(den, u_norm) == math.inf


def test_apriori_ratio_energy_case_exact():
    g = make_grid(2, math.pi, 64, periodic=True)
    u = tf("random_band", g, kmax=5, seed=8)
    out = apriori_ratio(u, OperatorSpec("laplace", lam=0.0),
                        NormSpec("Lp", p=2.0), S2)
    assert out["parts"]["d2"] / out["denominator"] == pytest.approx(1.0, abs=1e-10)


def test_apriori_ratio_floored_denominator():
    g = make_grid(2, math.pi, 32, periodic=True)
    u = Field(g, np.zeros(g.cells))
    out = apriori_ratio(u, OperatorSpec("laplace", lam=1.0),
                        NormSpec("Lp", p=2.0), S2)
    assert out["floored"] and out["ratio"] == math.inf


def test_oscillation_quadratic_is_zero():
    g = make_grid(2, math.pi, 64, periodic=True)
    xs = g.mesh()
    u = Field(g, np.cos(xs[0]))
    # cos has nonzero osc; a genuinely quadratic poly is not periodic, so
    # check instead that a single Fourier mode on a tiny ball has tiny osc
    data = oscillation_estimate(u, Field(g, np.abs(u.values)), S2, 4.0, 0.05, 2.0)
    assert data["osc"] < 0.05


def test_matrix_bracket_inequalities_bulk():
    rng = np.random.default_rng(9)
    for delta in (0.2, 0.5, 0.9):
        for _ in range(500):
            a = random_sdelta(rng, 3, delta)
            u = rng.normal(size=(3, 3))
            u = 0.5 * (u + u.T)
            br = sdelta_brackets(a, u)
            assert br >= delta ** 2 * float((u ** 2).sum()) - 1e-12
            shifted = sdelta_brackets(a - delta * np.eye(3), u)
            assert -1e-12 <= shifted <= (1 - delta ** 2) ** 2 * br + 1e-10


def test_interpolation_gradient_family():
    g = make_grid(2, math.pi, 64, periodic=True)
    for eps in (0.25, 0.5, 1.0):
        worst = 0.0
        for seed in range(5):
            u = tf("random_band", g, kmax=5, seed=seed)
            du, d2, _, _ = spectral_derivative_fields(u, S2)
            ndu = math.sqrt(sum(float((x ** 2).sum()) for x in du))
            nd2 = math.sqrt(sum(float((d2[i][j] ** 2).sum())
                                for i in range(2) for j in range(2)))
            nu = math.sqrt(float((u.values ** 2).sum()))
            worst = max(worst, ndu / (eps * nd2 + nu / eps))
        assert worst <= 0.51  # L2 interpolation constant is 1/2 at worst


def test_whole_space_insensitivity_to_box_doubling():
    # spectral solves on a doubled box with the same source stay put
    vals = []
    for L, n in ((math.pi, 64), (2 * math.pi, 128)):
        g = make_grid(2, L, n, periodic=True)
        xs = g.mesh()
        f = Field(g, np.exp(-2.0 * (xs[0] ** 2 + xs[1] ** 2)))
        u = solve_laplace(f, 2.0)
        i0 = tuple(c // 2 for c in g.cells)
        vals.append(u.values[i0])
    assert vals[0] == pytest.approx(vals[1], rel=1e-3)
