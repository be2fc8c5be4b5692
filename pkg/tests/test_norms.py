import math

import numpy as np
import pytest

from morreylab.grid import Field, lp_norm, make_grid, make_structure, mollify
from morreylab.norms import (
    NormSpec,
    bmo_seminorms,
    drift_seminorm,
    evaluate_norm,
    mixed_norm,
    morrey_product,
)
from morreylab.testfunctions import test_function as tf

S1 = make_structure(1, (1,))
S2 = make_structure(2, (1, 1))
S3 = make_structure(3, (1, 1, 1))
SP = make_structure(2, (2, 1))


def test_constant_local_morrey():
    g = make_grid(2, 1.5, 128)
    c = Field(g, np.full(g.cells, 2.5))
    v = evaluate_norm(c, NormSpec("Epbr", p=2, beta=0.5, r=1.0), S2)
    assert v == pytest.approx(2.5, rel=1e-9)


def test_power_morrey_membership_and_divergence():
    g = make_grid(3, 1.5, 64)
    f = tf("power", g, gamma=1.0)
    fin = evaluate_norm(f, NormSpec("Epbr", p=2, beta=1.0, r=1.0), S3)
    assert math.isfinite(fin)
    div = evaluate_norm(f, NormSpec("Epbr", p=3, beta=1.0, r=1.0), S3)
    assert not math.isfinite(div)


def test_morrey_scaling_law():
    # ||u||_{E_{p,beta;rs}} = r^beta ||u(r .)||_{E_{p,beta;s}}
    p, beta, r_sc = 2.0, 0.4, 2.0
    n = 256
    g_small = make_grid(1, 1.0, n)
    g_big = make_grid(1, 2.0, n)
    prof = lambda x: np.cos(3 * x) + 0.3 * np.sin(7 * x)
    u_big = Field(g_big, prof(g_big.axis(0)))
    u_small = Field(g_small, prof(r_sc * g_small.axis(0)))
    radii_small = tuple(2 * g_small.h[0] * 2 ** (0.25 * j) for j in range(12))
    radii_big = tuple(r_sc * r for r in radii_small)
    lhs = evaluate_norm(u_big, NormSpec("Epbr", p=p, beta=beta, r=2.0), S1,
                        radii=radii_big)
    rhs = r_sc ** beta * evaluate_norm(u_small, NormSpec("Epbr", p=p, beta=beta, r=1.0),
                                       S1, radii=radii_small)
    assert lhs == pytest.approx(rhs, rel=1e-9)


def test_center_restriction_equivalence():
    # restricting sup centers to the inner ball changes nothing when the
    # field is supported there
    g = make_grid(2, 2.0, 128)
    f = tf("bump", g, radius=0.5)
    full = evaluate_norm(f, NormSpec("Epbr", p=2, beta=0.6, r=1.0), S2)
    inner = evaluate_norm(f, NormSpec("Epbr", p=2, beta=0.6, r=1.0), S2,
                          interior_only=True)
    assert inner == pytest.approx(full, rel=1e-9)


def test_advisory_above_threshold():
    g = make_grid(2, 1.0, 32)
    f = Field(g, np.ones(g.cells))
    with pytest.warns(UserWarning):
        evaluate_norm(f, NormSpec("EpbDot", p=2.0, beta=1.5), S2)


def test_mixed_norm_orders_differ():
    g = make_grid(2, (1.0, 1.0), (64, 64))
    xs = g.mesh()
    f = Field(g, np.exp(-8 * xs[0] ** 2) + 0.1 * np.abs(xs[1]))
    a = mixed_norm(f, 2.0, 3.0, SP)
    b = mixed_norm(f, 2.0, 3.0, SP, reversed_order=True)
    assert a > 0 and b > 0 and abs(a - b) > 1e-6


def test_mixed_norm_matches_lp_when_equal_exponents():
    g = make_grid(2, (1.0, 1.0), (64, 64))
    rng = np.random.default_rng(0)
    f = Field(g, rng.random(g.cells))
    assert mixed_norm(f, 2.0, 2.0, SP) == pytest.approx(lp_norm(f, 2.0), rel=1e-12)


def test_drift_seminorm_constant():
    g = make_grid(2, 1.0, 128)
    b = Field(g, np.ones(g.cells))
    for rho_b in (0.25, 0.5, 1.0):
        assert drift_seminorm(b, 2.0, rho_b, S2) == pytest.approx(rho_b, rel=1e-9)


def test_drift_seminorm_inverse_distance_scale_invariant():
    g = make_grid(3, 1.5, 64)
    b = tf("power", g, gamma=1.0)
    vals = [drift_seminorm(b, 2.0, rho_b, S3) for rho_b in (0.25, 0.5, 1.0)]
    assert max(vals) / min(vals) < 1.05
    assert math.isfinite(vals[0])


def test_cz_bump_drift_vs_lq():
    g = make_grid(2, 1.25, 256)
    b, radii = tf("cz_bump", g, p=1.0)
    semi = drift_seminorm(b, 1.0, 1.0, S2)
    assert math.isfinite(semi)
    lq_256 = lp_norm(b, 1.3, region=([0.0, -0.6], [1.05, 0.6]))
    g2 = make_grid(2, 1.25, 512)
    b2, _ = tf("cz_bump", g2, p=1.0)
    lq_512 = lp_norm(b2, 1.3, region=([0.0, -0.6], [1.05, 0.6]))
    assert lq_512 > lq_256 * 1.05  # grows without bound under refinement


def test_bmo_constant_is_zero():
    g = make_grid(2, (1.0, 1.0), (32, 32))
    a = Field(g, np.full(g.cells, 1.7))
    sharp, sharpsharp = bmo_seminorms(a, 0.5, SP)
    assert sharp < 1e-12 and sharpsharp < 1e-12


def test_bmo_time_only_coefficient_x_average_vanishes():
    g = make_grid(2, (1.0, 1.0), (32, 32))
    xs = g.mesh()
    a = Field(g, 1.0 + 0.3 * np.sin(3 * xs[0]))  # depends on t only
    sharp, sharpsharp = bmo_seminorms(a, 0.5, SP)
    assert sharpsharp < 1e-12
    assert sharp > 0.01


def test_bmo_log_oscillation_bounded():
    g = make_grid(2, 1.0, 128)
    r = g.radius()
    a = Field(g, np.sin(np.log(np.maximum(r, 1e-12))))
    sharp, _ = bmo_seminorms(a, 0.3, S2)
    assert 0.05 < sharp <= 2.0


def test_test_function_power_zero_gamma():
    g = make_grid(2, 1.0, 32)
    f = tf("power", g, gamma=0.0)
    assert np.allclose(f.values, 1.0)


def test_test_function_unknown_id():
    g = make_grid(1, 1.0, 16)
    with pytest.raises(ValueError):
        tf("nope", g)


def test_exp_drift_pair_residual_vanishes():
    g = make_grid(3, 4.0, 64)
    u, b, resid = tf("exp_drift_pair", g, lam=1.0)
    r = g.radius()
    outside = r > 0.1
    assert np.abs(resid.values[outside]).max() <= 1e-8 * np.abs(u.values).max()


def test_kappa_ridge_norm_bounds():
    # slashed norms behave like the closed-form envelopes
    g = make_grid(3, 0.75, 64)
    beta, p = 1.5, 4.0 / 3.0
    kappa = 0.1
    u, b_du, d2 = tf("kappa_ridge", g, kappa=kappa, beta=beta)
    r3 = 3 * kappa
    n_bdu = lp_norm(b_du, p, region=([-r3] * 3, [r3] * 3), slashed=True)
    assert n_bdu >= 0.05 * (3 * kappa) ** -2.0  # N1 (3 kappa)^{-2} envelope
    for r in (0.3, 0.6):
        n_d2 = lp_norm(d2, p, region=([-r] * 3, [r] * 3), slashed=True)
        assert n_d2 <= 40.0 * kappa ** (beta - 2.0) * r ** (-beta)


def test_parab_sing_finite_morrey():
    g = make_grid(2, (1.5, 1.5), (96, 96))
    b = tf("parab_sing", g)
    v = evaluate_norm(b, NormSpec("EpbDot", p=2.0, beta=1.0), SP)
    assert math.isfinite(v)


def test_cylinder_slab_classification():
    g = make_grid(3, 1.2, 48)
    b = tf("cylinder_slab", g, d_prime=2)
    fin = evaluate_norm(b, NormSpec("Epbr", p=1.5, beta=1.0, r=1.0), S3)
    assert math.isfinite(fin)
    assert not math.isfinite(lp_norm(b, 2.0))


def test_morrey_product_constant():
    g = make_grid(2, 1.0, 64)
    f = Field(g, np.ones(g.cells))
    rng = np.random.default_rng(1)
    h = Field(g, rng.random(g.cells))
    n_fg, n_f, n_g = morrey_product(f, h, p=1.2, beta=1.5, structure=S2)
    assert n_fg <= n_f * n_g * (1 + 1e-9)


def test_morrey_product_singular_pair():
    g = make_grid(3, 1.5, 48)
    beta, p = 1.5, 4.0 / 3.0
    f = tf("power", g, gamma=1.0)
    h = tf("bump", g, radius=1.0)
    n_fg, n_f, n_g = morrey_product(f, h, p=p, beta=beta, structure=S3)
    assert n_fg <= n_f * n_g * (1 + 1e-9)


def test_morrey_product_random_seeds():
    g = make_grid(2, 1.0, 64)
    for seed in range(20):
        rng = np.random.default_rng(seed)
        f = Field(g, rng.random(g.cells))
        h = Field(g, rng.random(g.cells))
        n_fg, n_f, n_g = morrey_product(f, h, p=1.2, beta=1.5, structure=S2)
        assert n_fg <= n_f * n_g * (1 + 1e-9)


def test_morrey_product_exponent_mismatch():
    g = make_grid(2, 1.0, 32)
    f = Field(g, np.ones(g.cells))
    with pytest.raises(ValueError):
        morrey_product(f, f, p=1.2, beta=1.5, structure=S2, p0=2.0, s=2.0)


def test_comparability_across_scale_caps():
    # sup over scale-r members is controlled by the sup over smaller scales
    # with the dimensional factor
    g = make_grid(2, 1.5, 128)
    rng = np.random.default_rng(3)
    f = Field(g, rng.random(g.cells))
    mu = 0.5
    big = evaluate_norm(f, NormSpec("Epbr", p=2.0, beta=0.5, r=1.0), S2)
    small = evaluate_norm(f, NormSpec("Epbr", p=2.0, beta=0.5, r=mu), S2)
    assert big <= (1 + 1 / mu) ** (2 / 2.0) * small / mu ** 0.5 * (1 + 1e-9)


def test_mollify_approximation_monotone():
    # ||f^(eps) - f||_{E_{p,beta}(B)} decreases along an eps-sequence
    # for f in a slightly better Morrey class
    g = make_grid(2, 1.0, 256)
    f = tf("mollified_power", g, gamma=0.4, eps=0.02)
    errs = []
    for eps in (0.12, 0.06, 0.03):
        fm = mollify(f, eps)
        diff = Field(g, np.where(np.abs(np.stack(g.mesh())).max(axis=0) < 0.6,
                                 fm.values - f.values, 0.0))
        errs.append(evaluate_norm(diff, NormSpec("Epbr", p=2.0, beta=0.8, r=0.5), S2))
    assert errs[0] > errs[1] > errs[2]


def test_mollified_maximal_bounded_in_morrey():
    from morreylab.maximal import classical_maximal

    g = make_grid(2, 1.0, 128)
    rng = np.random.default_rng(5)
    f = Field(g, rng.random(g.cells))
    sup_eps = np.maximum.reduce([mollify(f, e).values for e in (0.05, 0.1, 0.2)])
    spec = NormSpec("Epbr", p=2.0, beta=0.5, r=0.5)
    lhs = evaluate_norm(Field(g, sup_eps), spec, S2)
    rhs = evaluate_norm(f, spec, S2)
    assert lhs <= 3.0 * rhs


def test_lqp_asym_field_masses():
    g = make_grid(3, (1.0, 1.2, 1.2), (32, 48, 48))
    p0, q0 = 2.5, 2.0
    b = tf("lqp_vs_lpq", g, p0=p0)
    std = drift_seminorm(b, p0, 1.0, make_structure(3, (2, 1, 1)), q_b=q0)
    rev = drift_seminorm(b, p0, 1.0, make_structure(3, (2, 1, 1)), q_b=q0,
                         reversed_order=True)
    assert not math.isfinite(std)
    assert math.isfinite(rev)
