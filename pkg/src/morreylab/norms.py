"""Morrey, homogeneous Morrey, mixed and parabolic mixed Morrey norms, drift
and BMO seminorms, and the Holder-type product inequality.

All sups over scales and centers run over the shared finite family
discipline (geometric radii, every grid cell as a center, members clipped
to the domain with recomputed measure), so every reported value is a
certified lower bound; divergence is declared either via the octave-growth
criterion or exactly, when a closed-form singular cell mass is infinite.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.signal import fftconvolve

from .grid import Field, lp_norm
from .maximal import member_offsets, _correlate

__all__ = [
    "NormSpec",
    "evaluate_norm",
    "drift_seminorm",
    "bmo_seminorms",
    "morrey_product",
    "power_integrand",
    "slashed_mixed_norm",
    "mixed_norm",
]

_KINDS = (
    "Lp",
    "LpW",
    "Epbr",
    "EpbDot",
    "Lpq",
    "Lqp_reversed",
    "Epqb",
    "EpqbDot",
    "Lqpb_reversed_morrey",
)


@dataclass
class NormSpec:
    """Which norm: exponents, Morrey weight beta, scale cap r, weight."""

    kind: str
    p: float
    q: float = None
    beta: float = None
    r: float = 1.0
    weight: object = None  # Field

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown norm kind {self.kind!r}; use one of {_KINDS}")

    def advisory(self, structure, grid=None):
        """Warn when beta exceeds the d/p (+2/q) threshold: above it the
        homogeneous space is {0} and the local one collapses to local Lp."""
        if self.beta is None:
            return
        d = structure.dim if not structure.parabolic else structure.dim - 1
        if self.kind in ("Epqb", "EpqbDot", "Lqpb_reversed_morrey"):
            thr = d / self.p + 2.0 / self.q
        elif structure.parabolic:
            thr = (d + 2.0) / self.p  # unmixed norm over parabolic cylinders
        else:
            thr = d / self.p
        if self.beta > thr + 1e-12:
            warnings.warn(
                f"beta={self.beta} above the threshold {thr:g}: the homogeneous "
                "space is trivial / the local space equals local Lp", stacklevel=2
            )


def power_integrand(field, p, structure):
    """Per-cell integrand |f|^p * density with exact singular-cell masses.

    Returns (arr, inf_mask): arr is the midpoint integrand, already patched
    with the finite exact masses (per unit cell volume); inf_mask marks
    cells whose continuum |f|^p mass diverges.
    """
    grid = field.grid
    dens = structure.density_on(grid) + np.zeros(grid.cells)
    with np.errstate(over="ignore", invalid="ignore"):
        arr = np.abs(field.values) ** float(p) * dens
    inf_mask = ~np.isfinite(arr)
    arr = np.where(inf_mask, 0.0, arr)
    vol = grid.cell_volume
    for idx, mass in field.power_mass_cells(float(p)):
        if math.isfinite(mass):
            arr[idx] = mass / vol * dens[idx]
        else:
            inf_mask[idx] = True
            arr[idx] = 0.0
    return arr, inf_mask


def _morrey_sup(field, p, beta, structure, radii, shape, interior_only=False,
                return_profile=False):
    """sup over rho in radii, members centered at every cell, of
    rho^beta * slashed L_p over the member."""
    grid = field.grid
    arr, inf_mask = power_integrand(field, p, structure)
    dens = structure.density_on(grid) + np.zeros(grid.cells)
    best = 0.0
    profile = []
    interior = _interior(grid, radii[-1]) if interior_only else None
    for rho in radii:
        stencil, origin = member_offsets(grid, structure, rho, shape)
        num = _correlate(arr, stencil, origin)
        den = _correlate(dens, stencil, origin)
        with np.errstate(invalid="ignore", divide="ignore"):
            s = np.where(den > 0, num / den, 0.0)
        val = rho ** beta * np.maximum(s, 0.0) ** (1.0 / p)
        if inf_mask.any():
            hit = _correlate(inf_mask.astype(float), stencil, origin) > 0.5
            val = np.where(hit, np.inf, val)
        if interior is not None:
            val = np.where(interior, val, 0.0)
        m = float(val.max())
        profile.append((rho, m))
        best = max(best, m)
    if return_profile:
        return best, profile
    return best


def _interior(grid, margin):
    xs = grid.mesh()
    mask = np.ones(grid.cells, dtype=bool)
    for i in range(grid.dim):
        mask &= np.abs(xs[i]) < grid.half_extent[i] - margin
    return mask


def mixed_norm(field, p, q, structure, region=None, reversed_order=False):
    """Global L_{p,q} (inner x with p, outer t with q) or reversed L_{q,p}
    (inner t with q, outer x with p).  Axis 0 is t."""
    grid = field.grid
    ht = grid.h[0]
    volx = grid.cell_volume / ht
    vals = np.abs(field.values)
    mask = np.ones(grid.cells, dtype=bool)
    if region is not None:
        from .grid import _region_mask

        mask = _region_mask(grid, region)
    v = np.where(mask, vals, 0.0)
    if not reversed_order:
        inner = (v ** p).sum(axis=tuple(range(1, grid.dim))) * volx
        return float(((inner ** (q / p)).sum() * ht) ** (1.0 / q))
    inner = (v ** q).sum(axis=0) * ht
    return float(((inner ** (p / q)).sum() * volx) ** (1.0 / p))


def slashed_mixed_norm(field, p, q, structure, reversed_order=False):
    """Per-anchor slashed mixed norms over every cylinder in the family;
    helper used by the Morrey mixed kinds (full windows only)."""
    raise NotImplementedError("use _mixed_morrey_sup")


def _window_sums(arr, wlen):
    """Sliding sums over axis 0 with window wlen at every valid anchor."""
    c = np.cumsum(arr, axis=0)
    pad = np.zeros((1,) + arr.shape[1:])
    c = np.concatenate([pad, c], axis=0)
    return c[wlen:] - c[:-wlen]


def _mixed_morrey_sup(field, p, q, beta, structure, radii, reversed_order=False,
                      return_profile=False):
    """sup over cylinders C_rho of rho^beta * slashed mixed norm.

    Standard order: inner x with exponent p, outer t with exponent q.
    Reversed: inner t with exponent q, outer x with exponent p.
    """
    grid = field.grid
    ht = grid.h[0]
    best = 0.0
    profile = []
    inner_p = p if not reversed_order else q
    arr, inf_mask = power_integrand(field, inner_p, structure)
    dens = structure.density_on(grid) + np.zeros(grid.cells)
    x_axes = tuple(range(1, grid.dim))
    for rho in radii:
        wlen = max(1, int(round(rho ** 2 / ht)))
        if wlen > grid.cells[0]:
            continue
        stencil, origin = member_offsets(grid, structure, rho, "ball_x")
        if not reversed_order:
            # X(t,c) = slashed L_p over the ball at (t, c)
            num = _xcorrelate(arr, stencil, origin, x_axes)
            den = _xcorrelate(dens, stencil, origin, x_axes)
            with np.errstate(invalid="ignore", divide="ignore"):
                X = np.where(den > 0, num / den, 0.0)
            if inf_mask.any():
                hit = _xcorrelate(inf_mask.astype(float), stencil, origin, x_axes) > 0.5
            Y = _window_sums(np.maximum(X, 0.0) ** (q / p), wlen) / wlen
            val = rho ** beta * np.maximum(Y, 0.0) ** (1.0 / q)
            if inf_mask.any():
                hits = _window_sums(hit.astype(float), wlen) > 0.5
                val = np.where(hits, np.inf, val)
        else:
            # U(tau, x) = slashed t-window average of |f|^q
            U = np.maximum(_window_sums(arr / dens.clip(min=1e-300), wlen) / wlen, 0.0)
            num = _xcorrelate(U ** (p / q) * dens[: U.shape[0]], stencil, origin, x_axes)
            den = _xcorrelate(dens[: U.shape[0]] + np.zeros_like(U), stencil, origin, x_axes)
            with np.errstate(invalid="ignore", divide="ignore"):
                V = np.where(den > 0, num / den, 0.0)
            val = rho ** beta * np.maximum(V, 0.0) ** (1.0 / p)
            if inf_mask.any():
                hit = _window_sums(inf_mask.astype(float), wlen) > 0.5
                hit2 = _xcorrelate(hit.astype(float), stencil, origin, x_axes) > 0.5
                val = np.where(hit2, np.inf, val)
        m = float(val.max())
        profile.append((rho, m))
        best = max(best, m)
    if return_profile:
        return best, profile
    return best


def _xcorrelate(arr, stencil, origin, x_axes):
    """Cross-correlate along the space axes only (kernel has no t extent)."""
    ker = np.flip(stencil.astype(float))
    ker = ker.reshape((1,) + ker.shape)
    full = fftconvolve(arr, ker, mode="full", axes=(0,) + x_axes)
    sl = [slice(0, arr.shape[0])]
    for s, o, n in zip(stencil.shape, origin, arr.shape[1:]):
        sl.append(slice(s - 1 - o, s - 1 - o + n))
    return full[tuple(sl)]


def _family_radii(grid, r_cap=None, gamma=2 ** 0.25, rho_min=None):
    hs = grid.h
    if rho_min is None:
        rho_min = 2.0 * max(hs)
    rho_max = min(grid.half_extent) if r_cap is None else min(r_cap, min(grid.half_extent))
    radii = []
    r = float(rho_min)
    while r <= rho_max * (1 + 1e-12):
        radii.append(r)
        r *= gamma
    if not radii:
        radii = [rho_min]
    if radii[-1] < rho_max * (1 - 1e-12):
        radii.append(float(rho_max))  # the cap scale itself is always a member
    return tuple(radii)


def evaluate_norm(field, spec, structure, radii=None, interior_only=False,
                  return_profile=False):
    """Evaluate the norm described by `spec` on `field`.

    Morrey kinds sup over the finite scale family (rho <= spec.r for the
    inhomogeneous kinds, up to the truncation radius for the homogeneous
    ones); mixed kinds use iterated integrals in the declared order.
    """
    grid = field.grid
    spec.advisory(structure, grid)
    kind = spec.kind
    if kind == "Lp":
        return lp_norm(field, spec.p, structure=structure)
    if kind == "LpW":
        return lp_norm(field, spec.p, structure=structure, weight=spec.weight)
    if kind == "Lpq":
        return mixed_norm(field, spec.p, spec.q, structure)
    if kind == "Lqp_reversed":
        return mixed_norm(field, spec.p, spec.q, structure, reversed_order=True)
    # Morrey kinds
    if kind in ("Epbr", "EpbDot"):
        cap = spec.r if kind == "Epbr" else None
        rr = radii if radii is not None else _family_radii(grid, cap)
        if kind == "Epbr":
            rr = tuple(r for r in rr if r <= spec.r * (1 + 1e-12)) or rr[:1]
        if structure.parabolic:
            shape = "cylinder"
        elif all(k == 1 for k in structure.anisotropy):
            shape = "ball"
        else:
            shape = "ellipsoid"
        return _morrey_sup(field, spec.p, spec.beta, structure, rr, shape,
                           interior_only, return_profile)
    if kind in ("Epqb", "EpqbDot", "Lqpb_reversed_morrey"):
        cap = spec.r if kind == "Epqb" else None
        rr = radii if radii is not None else _family_radii(grid, cap)
        if kind == "Epqb":
            rr = tuple(r for r in rr if r <= spec.r * (1 + 1e-12)) or rr[:1]
        return _mixed_morrey_sup(field, spec.p, spec.q, spec.beta, structure, rr,
                                 reversed_order=(kind == "Lqpb_reversed_morrey"),
                                 return_profile=return_profile)
    raise AssertionError


def drift_seminorm(b, p_b, rho_b, structure, q_b=None, reversed_order=False,
                   radii=None, return_profile=False):
    """sup_{rho <= rho_b} rho * sup over rho-members of the slashed norm of b.

    Elliptic: slashed L_{p_b} over balls.  Parabolic/mixed (set q_b): the
    slashed mixed norm over cylinders, standard or reversed order.
    """
    grid = b.grid
    if radii is None:
        radii = _family_radii(grid, rho_b)
    radii = tuple(r for r in radii if r <= rho_b * (1 + 1e-12)) or radii[:1]
    if q_b is None:
        if structure.parabolic:
            shape = "cylinder"
        elif all(k == 1 for k in structure.anisotropy):
            shape = "ball"
        else:
            shape = "ellipsoid"
        return _morrey_sup(b, p_b, 1.0, structure, radii, shape,
                           return_profile=return_profile)
    return _mixed_morrey_sup(b, p_b, q_b, 1.0, structure, radii,
                             reversed_order=reversed_order,
                             return_profile=return_profile)


def bmo_seminorms(a_entries, rho, structure, stride=4):
    """(a_sharp_rho, a_sharpsharp_rho) for a bounded (matrix-valued) field.

    a_sharp_rho: sup over balls of radius <= rho of the mean oscillation.
    a_sharpsharp: sup over cylinders of the mean deviation from the
    x-average profile  a~_C(t)  (parabolic structures only).
    """
    if isinstance(a_entries, Field):
        a_entries = [a_entries]
    grid = a_entries[0].grid
    dens = structure.density_on(grid) + np.zeros(grid.cells)
    radii = _family_radii(grid, rho)
    sharp = 0.0
    shape = "ball" if all(k == 1 for k in structure.anisotropy) else "ellipsoid"
    for a in a_entries:
        for r in radii:
            stencil, origin = member_offsets(grid, structure, r, shape)
            offs = np.argwhere(stencil) - np.asarray(origin)
            anchors = np.meshgrid(*[np.arange(0, n, stride) for n in grid.cells],
                                  indexing="ij")
            anchors = np.stack([x.ravel() for x in anchors], axis=1)
            lim = np.asarray(grid.cells)
            for anchor in anchors:
                idx = anchor + offs
                ok = np.all((idx >= 0) & (idx < lim), axis=1)
                if not ok.any():
                    continue
                lin = tuple(idx[ok].T)
                g = a.values[lin]
                mu = dens[lin]
                mean = float((g * mu).sum() / mu.sum())
                osc = float((np.abs(g - mean) * mu).sum() / mu.sum())
                sharp = max(sharp, osc)
    sharpsharp = 0.0
    if structure.parabolic:
        ht = grid.h[0]
        x_axes = tuple(range(1, grid.dim))
        for a in a_entries:
            for r in radii:
                wlen = max(1, int(round(r ** 2 / ht)))
                if wlen > grid.cells[0]:
                    continue
                stencil, origin = member_offsets(grid, structure, r, "ball_x")
                num = _xcorrelate(a.values * dens, stencil, origin, x_axes)
                den = _xcorrelate(dens, stencil, origin, x_axes)
                with np.errstate(invalid="ignore", divide="ignore"):
                    prof = np.where(den > 0, num / den, 0.0)  # x-average at (t, c)
                # deviation |a(t,x) - prof(t,c)| averaged over the cylinder,
                # evaluated on the decimated anchor set
                offs = np.argwhere(stencil) - np.asarray(origin)
                xl = [np.arange(0, n, stride) for n in grid.cells[1:]]
                tl = np.arange(0, grid.cells[0] - wlen + 1, max(1, stride))
                lim = np.asarray(grid.cells[1:])
                for c in np.stack([x.ravel() for x in np.meshgrid(*xl, indexing="ij")],
                                  axis=1):
                    idx = c + offs
                    ok = np.all((idx >= 0) & (idx < lim), axis=1)
                    if not ok.any():
                        continue
                    lin = tuple(idx[ok].T)
                    block = a.values[(slice(None),) + lin]  # (nt, cells_in_ball)
                    profc = prof[(slice(None),) + tuple(c)][:, None]
                    dev = np.abs(block - profc).mean(axis=1)
                    csum = np.cumsum(np.concatenate([[0.0], dev]))
                    wins = (csum[wlen:] - csum[:-wlen]) / wlen
                    if len(wins):
                        sharpsharp = max(sharpsharp, float(wins.max()))
    return sharp, sharpsharp


def morrey_product(f, g, p, beta, structure, p0=None, s=None, homogeneous=True):
    """Holder-type Morrey product bound:

        ||f g||_{E_{p,beta}} <= ||f||_{E_{p0,1}} ||g||_{E_{s,beta-1}}

    with p0 = beta p and s = p0/(p0 - p) so that p0 = s (beta - 1).
    Returns (lhs, norm_f, norm_g).
    """
    if beta <= 1:
        raise ValueError("need beta > 1")
    if p0 is None:
        p0 = beta * p
    if s is None:
        s = p * p0 / (p0 - p)
    if abs(p0 - s * (beta - 1.0)) > 1e-9 * p0:
        raise ValueError("exponent relation p0 = beta p = s (beta - 1) violated")
    kind = "EpbDot" if homogeneous else "Epbr"
    prod = Field(f.grid, f.values * g.values, list(f.singular) + list(g.singular))
    n_fg = evaluate_norm(prod, NormSpec(kind, p=p, beta=beta), structure)
    n_f = evaluate_norm(f, NormSpec(kind, p=p0, beta=1.0), structure)
    n_g = evaluate_norm(g, NormSpec(kind, p=s, beta=beta - 1.0), structure)
    return n_fg, n_f, n_g
