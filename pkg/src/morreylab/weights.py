"""Muckenhoupt A_p machinery: constants, reverse Holder, self-improvement,
the Rubio de Francia iteration, Jones factorization, extrapolation transfer.

Constants computed over a finite cube family are certified lower bounds of
the continuum constants.  Finiteness vs. divergence is decided by the
stabilizes-under-refinement criterion; weights whose defining integrals are
not locally integrable report +inf directly through the exact singular-cell
masses of the power-law generators (divergence there is a fact of the
continuum integral, not a discretization artifact).
"""

from __future__ import annotations

import math

import numpy as np

from .grid import Field, RadialPower, lp_norm
from .maximal import BallFamily, classical_maximal

__all__ = [
    "Weight",
    "power_weight",
    "parabolic_power_weight",
    "ap_constant",
    "a1_constant",
    "ainf_profile",
    "reverse_holder",
    "self_improve",
    "rdf_iterate",
    "jones_factorize",
    "extrapolate_check",
    "RdfDivergence",
]


class RdfDivergence(RuntimeError):
    """Raised when the Rubio de Francia partial sums diverge, which means
    the empirical operator norm was underestimated."""

    def __init__(self, norm_estimate):
        super().__init__(
            f"divergent partial sums; re-estimate the operator norm (used {norm_estimate})"
        )
        self.norm_estimate = norm_estimate


class Weight:
    """Strictly positive field with cached A_p constant estimates."""

    def __init__(self, field):
        if np.any(field.values <= 0):
            raise ValueError("weight must be positive at every sample")
        self.field = field
        self.cached = {}

    @property
    def grid(self):
        return self.field.grid

    def ap(self, p, structure, family=None):
        key = (round(float(p), 12), id(family))
        if key not in self.cached:
            self.cached[key] = ap_constant(self, p, structure, family)
        return self.cached[key]


def power_weight(grid, alpha, cap=None):
    """w(x) = |x|^alpha sampled with exact singular-cell averages.

    Negative alpha is a genuine singularity at 0; the singular cell carries
    the closed-form average (or +inf when non-integrable).  `cap` truncates
    w at a constant, as in min(|x|^alpha, c).
    """
    r = grid.radius()
    with np.errstate(divide="ignore"):
        vals = np.where(r > 0, r ** alpha, np.inf if alpha < 0 else 0.0)
    sing = []
    if alpha < 0:
        feat = RadialPower((0.0,) * grid.dim, -alpha)
        m = feat.exact_power_mass(grid, 1.0)
        idx = feat.cell_index(grid)
        if idx is not None:
            vals[idx] = m / grid.cell_volume if math.isfinite(m) else np.inf
            sing = [feat]
    if cap is not None:
        vals = np.minimum(vals, cap)
        sing = []
    f = Field(grid, np.where(np.isfinite(vals), vals, np.finfo(float).max), sing)
    f.values[~np.isfinite(vals)] = np.inf
    f.meta["closed_form"] = ("radial_power", float(alpha))
    return Weight(f)


def parabolic_power_weight(grid, alpha):
    """w(t, x) = (|x| + sqrt|t|)^{-alpha} on a (1+d)-grid (t is axis 0)."""
    xs = grid.mesh()
    rr = np.sqrt(sum(m ** 2 for m in xs[1:])) if grid.dim > 1 else 0.0
    rho = rr + np.sqrt(np.abs(xs[0]))
    with np.errstate(divide="ignore"):
        vals = np.where(rho > 0, rho ** (-alpha), np.inf)
    # exact corner-cell average for the d=1 parabolic case
    sing = []
    if grid.dim == 2 and alpha > 0:
        from .grid import ParabolicPower

        feat = ParabolicPower(alpha)
        cells = feat.cell_indices(grid)
        mass = feat.exact_power_mass(grid, 1.0)
        for idx in cells:
            vals[idx] = mass / grid.cell_volume if math.isfinite(mass) else np.inf
        if math.isfinite(mass):
            sing = [feat]
    fin = np.isfinite(vals)
    f = Field(grid, np.where(fin, vals, np.finfo(float).max), sing)
    f.values[~fin] = np.inf
    f.meta["closed_form"] = ("parabolic_power", float(-alpha))
    return Weight(f)


def _dual_field(weight, p, structure):
    """The field w^{-1/(p-1)} with exact singular-cell masses when the
    closed form of w is known; pointwise powers otherwise."""
    grid = weight.grid
    expo = -1.0 / (p - 1.0)
    cf = weight.field.meta.get("closed_form")
    if cf is not None and cf[0] == "radial_power":
        return power_weight(grid, cf[1] * expo).field
    if cf is not None and cf[0] == "parabolic_power":
        from .weights import parabolic_power_weight as ppw

        return ppw(grid, -cf[1] * expo).field
    with np.errstate(divide="ignore", over="ignore"):
        vals = weight.field.values ** expo
    return Field(grid, np.where(np.isfinite(vals), vals, np.inf), weight.field.singular)


def _cube_family(structure, grid, family):
    if family is None:
        family = BallFamily.for_structure(structure, grid, shape="cube",
                                          rho_max=2.0 * min(grid.half_extent))
    return family


def _cube_half_cells(grid, structure, rho):
    ks = structure.anisotropy
    return [max(1, int(np.ceil((rho ** k / 2.0) / h))) for k, h in zip(ks, grid.h)]


def _box_sum(values, half_cells):
    """Sliding box sums (windows clipped at the boundary), separable."""
    out = values
    for ax, hc in enumerate(half_cells):
        c = np.cumsum(out, axis=ax)
        n = out.shape[ax]
        idx_hi = np.minimum(np.arange(n) + hc, n - 1)
        idx_lo = np.arange(n) - hc - 1
        hi = np.take(c, idx_hi, axis=ax)
        lo = np.where(
            (idx_lo >= 0).reshape([-1 if a == ax else 1 for a in range(out.ndim)]),
            np.take(c, np.maximum(idx_lo, 0), axis=ax),
            0.0,
        )
        out = hi - lo
    return out


def _cube_means(values, grid, structure, rho):
    half_cells = _cube_half_cells(grid, structure, rho)
    dens = structure.density_on(grid) + np.zeros(grid.cells)
    inf_mask = ~np.isfinite(values)
    finite_vals = np.where(inf_mask, 0.0, values)
    num = _box_sum(finite_vals * dens, half_cells)
    den = _box_sum(dens, half_cells)
    with np.errstate(invalid="ignore", divide="ignore"):
        avg = np.where(den > 0, num / den, 0.0)
    if inf_mask.any():
        hit = _box_sum(inf_mask.astype(float), half_cells) > 0.5
        avg = np.where(hit, np.inf, avg)
    return avg


def ap_constant(weight, p, structure, family=None, return_argmax=False):
    """sup over family cubes of w_Q ((w^{-1/(p-1)})_Q)^{p-1} (p > 1), or of
    w_Q / essinf_Q w (p = 1).  A certified lower bound of [w]_{A_p}.
    """
    grid = weight.grid
    if p < 1:
        raise ValueError("p must be >= 1")
    family = _cube_family(structure, grid, family)
    wv = weight.field.values
    best = 1.0
    arg = None
    for rho in family.radii:
        w_q = _cube_means(wv, grid, structure, rho)
        if p == 1:
            from scipy.ndimage import minimum_filter

            size = tuple(2 * hc + 1 for hc in _cube_half_cells(grid, structure, rho))
            ess = minimum_filter(np.where(np.isfinite(wv), wv, np.finfo(float).max),
                                 size=size, mode="nearest")
            with np.errstate(invalid="ignore", divide="ignore"):
                prod = np.where(ess > 0, w_q / ess, np.inf)
        else:
            dual = _dual_field(weight, p, structure)
            d_q = _cube_means(dual.values, grid, structure, rho)
            prod = w_q * d_q ** (p - 1.0)
        m = float(np.nanmax(prod))
        if m > best:
            best = m
            arg = (rho, np.unravel_index(int(np.nanargmax(prod)), grid.cells))
    if return_argmax:
        return best, arg
    return best


def a1_constant(field, structure, family=None):
    return ap_constant(Weight(field), 1.0, structure, family)


def ainf_profile(weight, p, structure, family=None, n_pairs=400, seed=0):
    """Fit (beta, N) with w(S)/w(Q) <= N (mu(S)/mu(Q))^beta over random
    S inside Q pairs; all sampled pairs satisfy the returned bound.
    Also returns the worst violation margin of the lower-bound direction
    [w]_{A_p} w(S)/w(Q) >= (mu(S)/mu(Q))^p.
    """
    grid = weight.grid
    rng = np.random.default_rng(seed)
    dens = structure.density_on(grid) + np.zeros(grid.cells)
    wv = weight.field.values
    wmu = np.where(np.isfinite(wv), wv, 0.0) * dens
    ratios = []
    apw = weight.ap(p, structure, family)
    lower_margin = math.inf
    for _ in range(n_pairs):
        # random cube Q and random sub-box S
        k = structure.anisotropy
        l = math.exp(rng.uniform(math.log(4 * max(grid.h)), math.log(min(grid.half_extent))))
        center = [rng.uniform(-L / 2, L / 2) for L in grid.half_extent]
        sl_q = []
        ok = True
        for i in range(grid.dim):
            half = l ** k[i] / 2.0
            lo = center[i] - half
            hi = center[i] + half
            i0 = max(0, int((lo + grid.half_extent[i]) / grid.h[i]))
            i1 = min(grid.cells[i], int(np.ceil((hi + grid.half_extent[i]) / grid.h[i])))
            if i1 - i0 < 2:
                ok = False
                break
            sl_q.append((i0, i1))
        if not ok:
            continue
        sl_s = []
        for (i0, i1) in sl_q:
            n = i1 - i0
            m = rng.integers(1, n + 1)
            st = rng.integers(i0, i1 - m + 1)
            sl_s.append((int(st), int(st + m)))
        q_idx = tuple(slice(a, b) for a, b in sl_q)
        s_idx = tuple(slice(a, b) for a, b in sl_s)
        mu_q, mu_s = float(dens[q_idx].sum()), float(dens[s_idx].sum())
        w_q, w_s = float(wmu[q_idx].sum()), float(wmu[s_idx].sum())
        if mu_q <= 0 or w_q <= 0 or mu_s <= 0:
            continue
        x = mu_s / mu_q
        y = w_s / w_q
        ratios.append((x, y))
        if x > 0:
            lower_margin = min(lower_margin, apw * y / x ** p)
    xs = np.array([r[0] for r in ratios])
    ys = np.array([r[1] for r in ratios])
    keep = (xs > 0) & (xs < 1) & (ys > 0)
    xs, ys = xs[keep], ys[keep]
    # largest beta whose uniform constant over all sampled pairs stays moderate
    beta = 0.0
    for b in np.linspace(0.05, 1.0, 96):
        n_req = float(np.max(ys / xs ** b))
        if n_req <= 4.0:
            beta = float(b)
    n_fit = float(np.max(ys / xs ** beta)) if beta > 0 else float(np.max(ys / xs))
    return float(beta), float(n_fit), float(lower_margin)


def reverse_holder(weight, p, structure, family=None, eps_grid=None):
    """Largest eps on a search grid with a finite uniform constant N in
    (w^{1+eps})_Q <= N (w_Q)^{1+eps} over the family; returns (eps, N)."""
    grid = weight.grid
    family = _cube_family(structure, grid, family)
    if eps_grid is None:
        eps_grid = [0.05 * 2 ** j for j in range(7)]  # 0.05 .. 3.2
    cf = weight.field.meta.get("closed_form")
    best = (0.0, 1.0)
    for eps in eps_grid:
        if cf is not None and cf[0] == "radial_power":
            wpow = power_weight(grid, cf[1] * (1 + eps)).field
        else:
            with np.errstate(over="ignore"):
                wpow = Field(grid, np.where(
                    np.isfinite(weight.field.values),
                    weight.field.values ** (1 + eps), np.inf))
        sup = 1.0
        finite = True
        for rho in family.radii:
            lhs = _cube_means(wpow.values, grid, structure, rho)
            rhs = _cube_means(weight.field.values, grid, structure, rho) ** (1 + eps)
            with np.errstate(invalid="ignore", divide="ignore"):
                ratio = np.where(rhs > 0, lhs / rhs, np.inf)
            m = float(np.nanmax(ratio))
            if not math.isfinite(m):
                finite = False
                break
            sup = max(sup, m)
        if finite:
            best = (eps, sup)
        else:
            break
    return best


def self_improve(weight, p, structure, family=None):
    """q < p with finite A_q estimate, via reverse Holder applied to
    w^{-1/(p-1)} exactly as in the self-improvement proof:
    (1 + eps)/(p - 1) = 1/(q - 1)."""
    if p <= 1:
        raise ValueError("self improvement needs p > 1")
    dual = Weight(_dual_field(weight, p, structure))
    eps, _ = reverse_holder(dual, p / (p - 1.0), structure, family)
    if eps == 0.0:
        import warnings

        warnings.warn("no reverse-Holder gain found; returning q = p")
        return p, weight.ap(p, structure, family)
    q = 1.0 + (p - 1.0) / (1.0 + eps)
    return q, ap_constant(weight, q, structure, family)


def _estimate_op_norm(op, shape, norm, n_iter=6, seed=0, inflate=1.2):
    """Power iteration on random nonnegative inputs; inflated for safety."""
    rng = np.random.default_rng(seed)
    u = rng.random(shape) + 0.1
    est = 1.0
    for _ in range(n_iter):
        nu = norm(u)
        if nu == 0:
            break
        u = u / nu
        u = op(u)
        est = norm(u)
    return max(est, 1.0) * inflate


def rdf_iterate(f, weight, p_prime, structure, n_terms=24, family=None, seed=0):
    """Rubio de Francia majorant v = sum_n T^n f / (2^n ||T||^n) with
    T u = w^{-1} M(u w); guarantees f <= v, ||v|| <= 2 ||f||, and
    M(v w) <= 2 ||T|| v w pointwise up to family slack.

    Returns (v, op_norm_estimate).
    """
    grid = f.grid
    wv = weight.field.values
    if family is None:
        family = BallFamily.for_structure(structure, grid, shape="cube", density=6.0)

    def T(u):
        uw = Field(grid, np.abs(u) * wv)
        return classical_maximal(uw, structure, 0.0,
                                 BallFamily(family.radii, "cube", family.density)).values / wv

    def pnorm(u):
        return lp_norm(Field(grid, u), p_prime, structure=structure, weight=weight.field)

    t_norm = _estimate_op_norm(T, grid.cells, pnorm, seed=seed)
    term = np.abs(f.values).astype(float)
    v = term.copy()
    nf = pnorm(term)
    for n in range(1, n_terms):
        term = T(term) / (2.0 * t_norm)
        v = v + term
        if pnorm(v) > 4.0 * nf:
            raise RdfDivergence(t_norm)
    return Field(grid, v), t_norm


def jones_factorize(weight, p, structure, n_terms=24, family=None, seed=0):
    """Jones factorization w = w1^{1-p} w2 with both factors A_1.

    Runs the fixed-point construction with S the sum of the two sublinear
    pieces; returns (w1, w2, S_norm_estimate).
    """
    if not 1.0 < p <= 2.0:
        raise ValueError("factorization implemented for p in (1, 2]")
    grid = weight.grid
    wv = weight.field.values
    if family is None:
        family = BallFamily.for_structure(structure, grid, shape="cube", density=6.0)
    fam = BallFamily(family.radii, "cube", family.density)
    pp = p / (p - 1.0)

    def S(u):
        t1 = classical_maximal(Field(grid, np.abs(u) * wv), structure, 0.0, fam).values / wv
        t2 = classical_maximal(Field(grid, np.abs(u) ** (1 / (p - 1))), structure, 0.0,
                               fam).values ** (p - 1)
        return t1 + t2

    def pnorm(u):
        return lp_norm(Field(grid, u), pp, structure=structure, weight=weight.field)

    s_norm = _estimate_op_norm(S, grid.cells, pnorm, seed=seed)
    term = np.ones(grid.cells)
    v = term.copy()
    nf = pnorm(term)
    for _ in range(1, n_terms):
        term = S(term) / (2.0 * s_norm)
        v = v + term
        if pnorm(v) > 4.0 * nf:
            raise RdfDivergence(s_norm)
    w2 = Field(grid, v * wv)
    w1 = Field(grid, v ** (1.0 / (p - 1.0)))
    return w1, w2, s_norm


def extrapolate_check(pairs, p, q, w_q, structure, probe_weights, family=None):
    """Rubio de Francia extrapolation transfer check.

    pairs: list of (f, g) Fields.  Verifies the hypothesis
    ||f||_{L_p(w)} <= ||g||_{L_p(w)} over the probe A_p weights, then checks
    the conclusion ||f||_{L_q(w_q)} <= 2^{q+1} ||g||_{L_q(w_q)}.

    Returns dict with hypothesis_ok, worst hypothesis margin, conclusion
    ratios and the 2^{q+1} bound.
    """
    out = {"hypothesis_ok": True, "hyp_margin": 0.0, "ratios": [], "bound": 2.0 ** (q + 1)}
    for f, g in pairs:
        for w in probe_weights:
            nf = lp_norm(f, p, structure=structure, weight=w.field)
            ng = lp_norm(g, p, structure=structure, weight=w.field)
            margin = nf / ng - 1.0 if ng > 0 else math.inf
            if margin > 1e-9:
                out["hypothesis_ok"] = False
                out["hyp_margin"] = max(out["hyp_margin"], margin)
    for f, g in pairs:
        nf = lp_norm(f, q, structure=structure, weight=w_q.field)
        ng = lp_norm(g, q, structure=structure, weight=w_q.field)
        out["ratios"].append(nf / ng if ng > 0 else math.inf)
    return out
