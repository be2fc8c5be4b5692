"""Classical maximal operators over ball/ellipsoid/cylinder families, the
Euclidean sharp function, and the weighted maximal operator.

Every sup over the (continuum) family is approximated by a finite family:
geometric radii rho_j = rho_min * gamma^j and anchor points on a decimated
sublattice whose stride scales with the radius.  Every reported maximal
value is therefore a certified lower bound; checks compare ratios, which
converge as the family is refined (the `density` knob).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import grey_dilation
from scipy.signal import fftconvolve

from .grid import Field

__all__ = [
    "BallFamily",
    "member_offsets",
    "member_averages",
    "classical_maximal",
    "classical_sharp",
    "weighted_maximal",
    "mixed_maximal_check",
]


@dataclass(frozen=True)
class BallFamily:
    """Finite family of members (balls / ellipsoids / cylinders / cubes).

    radii are geometric: rho_min * gamma^j up to rho_max; anchors sit on a
    sublattice of stride ~ rho/(density*h) cells, so larger members are
    anchored more sparsely at equal covering quality.
    """

    radii: tuple
    shape: str  # 'ball' | 'ellipsoid' | 'cylinder' | 'cube'
    density: float = 4.0

    @staticmethod
    def for_structure(structure, grid, gamma=2 ** 0.25, rho_min=None, rho_max=None,
                      density=4.0, shape=None):
        hs = grid.h
        if rho_min is None:
            rho_min = 2.0 * max(hs)
        if rho_max is None:
            rho_max = min(grid.half_extent)
        if shape is None:
            if all(k == 1 for k in structure.anisotropy):
                shape = "ball"
            elif structure.parabolic:
                shape = "cylinder"
            else:
                shape = "ellipsoid"
        radii = []
        r = float(rho_min)
        while r <= rho_max * (1 + 1e-12):
            radii.append(r)
            r *= gamma
        if not radii:
            raise ValueError("empty radius family")
        return BallFamily(tuple(radii), shape, float(density))


def member_offsets(grid, structure, rho, shape):
    """Boolean stencil of cell offsets in one member, plus the origin index.

    'ball': |o| < rho.          'ellipsoid': sum (o_i/(rho^{k_i} nu0^{k_i}))^2 < 1.
    'cylinder': o_t in [0, rho^2), |o_x| < rho (axis 0 is t).
    'cube': |o_i| < rho^{k_i}/2.
    """
    hs = grid.h
    ks = structure.anisotropy
    if shape == "ball_x":
        # x-only ball stencil for (t, x) grids: offsets over axes 1..d
        hx = hs[1:]
        half = [max(1, int(np.ceil(rho / h)) + 1) for h in hx]
        axes = [(np.arange(-hc, hc + 1)) * h for hc, h in zip(half, hx)]
        mesh = np.meshgrid(*axes, indexing="ij")
        mask = sum(m ** 2 for m in mesh) < rho ** 2
        return mask, tuple(half)
    if shape == "ball":
        ext = [rho] * grid.dim
    elif shape == "ellipsoid":
        ext = [rho ** k * structure.nu0 ** k for k in ks]
    elif shape == "cylinder":
        ext = [rho ** 2] + [rho] * (grid.dim - 1)
    elif shape == "cube":
        ext = [rho ** k / 2.0 for k in ks]
    else:
        raise ValueError(f"unknown member shape {shape!r}")
    half_cells = [max(1, int(np.ceil(e / h)) + 1) for e, h in zip(ext, hs)]
    axes = []
    for i, hc in enumerate(half_cells):
        if shape == "cylinder" and i == 0:
            axes.append(np.arange(0, hc + 1) * hs[0])
        else:
            axes.append((np.arange(-hc, hc + 1)) * hs[i])
    mesh = np.meshgrid(*axes, indexing="ij")
    if shape == "ball":
        mask = sum(m ** 2 for m in mesh) < rho ** 2
    elif shape == "ellipsoid":
        mask = sum((m / e) ** 2 for m, e in zip(mesh, ext)) < 1.0
    elif shape == "cylinder":
        xmask = sum(m ** 2 for m in mesh[1:]) < rho ** 2 if grid.dim > 1 else True
        mask = (mesh[0] >= 0) & (mesh[0] < rho ** 2) & xmask
    else:
        mask = np.ones(mesh[0].shape, dtype=bool)
        for m, e in zip(mesh, ext):
            mask &= np.abs(m) < e
    origin = tuple(0 if (shape == "cylinder" and i == 0) else hc
                   for i, hc in enumerate(half_cells))
    return mask, origin


def _correlate(values, stencil, origin):
    """corr(c) = sum_{o in stencil} values(c + o), zero outside the domain."""
    ker = np.flip(stencil.astype(float))
    full = fftconvolve(values, ker, mode="full")
    # alignment: corr(c) sits at index c + (shape-1) - origin in 'full'
    sl = tuple(
        slice(s - 1 - o, s - 1 - o + n)
        for s, o, n in zip(stencil.shape, origin, values.shape)
    )
    return full[sl]


def member_averages(field, structure, rho, shape, power_integrand=None):
    """(averages, counts): member mu-averages of |f| (or of a supplied
    per-cell integrand) at every anchor cell, members clipped to the domain
    with their measure recomputed.
    """
    grid = field.grid
    stencil, origin = member_offsets(grid, structure, rho, shape)
    dens = structure.density_on(grid)
    integrand = np.abs(field.values) * dens if power_integrand is None else power_integrand
    num = _correlate(integrand, stencil, origin)
    den = _correlate(dens + np.zeros(grid.cells), stencil, origin)
    with np.errstate(invalid="ignore", divide="ignore"):
        avg = np.where(den > 0, num / den, 0.0)
    return avg, den


def _scatter_max(vals, grid, structure, rho, shape, density):
    """out(z) = max over anchors c on the stride lattice with z in member(c).

    Large members use a conservatively shrunken coarse footprint so the
    result stays a true lower bound for the family sup.
    """
    hs = grid.h
    stride = max(1, int(min(rho / (density * h) for h in hs)))
    if stride == 1:
        stencil, origin = member_offsets(grid, structure, rho, shape)
        foot = np.flip(stencil)  # reflected: z - c in member <=> c in z - member
        return grey_dilation(vals, footprint=foot, mode="constant", cval=-np.inf)
    sub = tuple(slice(None, None, stride) for _ in range(grid.dim))
    coarse = vals[sub]
    margin = math.sqrt(sum((stride * h) ** 2 for h in hs))
    rho_eff = max(rho - margin, min(hs))
    cg = _CoarseGrid(grid, stride)
    stencil, origin = member_offsets(cg, structure, rho_eff, shape)
    foot = np.flip(stencil)
    dil = grey_dilation(coarse, footprint=foot, mode="constant", cval=-np.inf)
    out = dil
    for ax in range(grid.dim):
        out = np.repeat(out, stride, axis=ax)
    sl = tuple(slice(0, n) for n in grid.cells)
    out = out[sl]
    pad = [(0, n - s) for n, s in zip(grid.cells, out.shape)]
    if any(p[1] for p in pad):
        out = np.pad(out, pad, mode="edge")
    return out


class _CoarseGrid:
    """Just enough grid interface for member_offsets on a strided lattice."""

    def __init__(self, grid, stride):
        self.h = tuple(h * stride for h in grid.h)
        self.dim = grid.dim
        self.cells = tuple(max(1, n // stride) for n in grid.cells)


def classical_maximal(field, structure, beta=0.0, family=None, power_integrand=None,
                      interior_only=False):
    """M_beta f(x) = sup over family members E containing x of
    rho(E)^beta * average_E |f|.

    beta omitted means the plain Hardy-Littlewood maximal function.
    """
    grid = field.grid
    if family is None:
        family = BallFamily.for_structure(structure, grid)
    out = np.full(grid.cells, -np.inf)
    for rho in family.radii:
        avg, den = member_averages(field, structure, rho, family.shape, power_integrand)
        vals = rho ** beta * avg
        scattered = _scatter_max(vals, grid, structure, rho, family.shape, family.density)
        out = np.maximum(out, scattered)
    out[out == -np.inf] = 0.0
    if interior_only:
        mask = _interior_mask(grid, family.radii[-1])
        out = np.where(mask, out, 0.0)
    return Field(grid, out)


def _interior_mask(grid, margin):
    xs = grid.mesh()
    mask = np.ones(grid.cells, dtype=bool)
    for i in range(grid.dim):
        mask &= np.abs(xs[i]) < grid.half_extent[i] - margin
    return mask


def classical_sharp(field, structure, family=None, anchor_stride=None):
    """g^sharp(x) = sup over members containing x of the mean oscillation
    of g there; satisfies g^sharp <= 2 M g by the triangle inequality.
    """
    grid = field.grid
    if family is None:
        family = BallFamily.for_structure(structure, grid)
    dens = structure.density_on(grid) + np.zeros(grid.cells)
    out = np.zeros(grid.cells)
    for rho in family.radii:
        stencil, origin = member_offsets(grid, structure, rho, family.shape)
        stride = anchor_stride or max(1, int(min(rho / (family.density * h) for h in grid.h)))
        anchors = np.meshgrid(
            *[np.arange(0, n, stride) for n in grid.cells], indexing="ij"
        )
        anchors = np.stack([a.ravel() for a in anchors], axis=1)
        offs = np.argwhere(stencil) - np.asarray(origin)
        vals_at_anchor = np.full(len(anchors), 0.0)
        for a_i, anchor in enumerate(anchors):
            idx = anchor + offs
            ok = np.all((idx >= 0) & (idx < np.asarray(grid.cells)), axis=1)
            if not ok.any():
                continue
            lin = tuple(idx[ok].T)
            g = field.values[lin]
            mu = dens[lin]
            m = float((g * mu).sum() / mu.sum())
            vals_at_anchor[a_i] = float((np.abs(g - m) * mu).sum() / mu.sum())
        vgrid = np.zeros(tuple(len(np.arange(0, n, stride)) for n in grid.cells))
        vgrid.ravel()[:] = vals_at_anchor
        # scatter: member(c) contains z if z - c in member offsets
        full = np.full(grid.cells, -np.inf)
        coarse_idx = tuple(
            np.minimum(np.arange(n) // stride, s - 1)
            for n, s in zip(grid.cells, vgrid.shape)
        )
        # conservative: accept when |z - c| within shrunken member
        margin = math.sqrt(sum((stride * h) ** 2 for h in grid.h))
        cg = _CoarseGrid(grid, stride)
        rho_eff = max(rho - margin, min(grid.h))
        st_c, or_c = member_offsets(cg, structure, rho_eff, family.shape)
        dil = grey_dilation(vgrid, footprint=np.flip(st_c), mode="constant", cval=-np.inf)
        full = dil[np.ix_(*coarse_idx)]
        out = np.maximum(out, np.where(np.isfinite(full), full, 0.0))
    return Field(grid, out)


def weighted_maximal(field, weight, structure, family=None):
    """M_w f(x) = sup over cubes Q containing x of w(Q)^{-1} int_Q |f| w dmu.

    `weight` may be a Field or a weights.Weight wrapper.
    """
    grid = field.grid
    if family is None:
        family = BallFamily.for_structure(structure, grid, shape="cube")
    dens = structure.density_on(grid)
    wvals = weight.field.values if hasattr(weight, "field") else weight.values
    wmu = wvals * dens
    out = np.full(grid.cells, -np.inf)
    for rho in family.radii:
        stencil, origin = member_offsets(grid, structure, rho, family.shape)
        num = _correlate(np.abs(field.values) * wmu, stencil, origin)
        den = _correlate(wmu + np.zeros(grid.cells), stencil, origin)
        with np.errstate(invalid="ignore", divide="ignore"):
            avg = np.where(den > 0, num / den, 0.0)
        scattered = _scatter_max(avg, grid, structure, rho, family.shape, family.density)
        out = np.maximum(out, scattered)
    out[out == -np.inf] = 0.0
    return Field(grid, out)


def mixed_maximal_check(field, structure, p, q, beta=None, family=None):
    """Ratios ||M f|| / ||f|| in L_{p,q}, reversed L_{q,p}, and (optionally)
    the homogeneous mixed Morrey norm of exponent beta.
    """
    from . import norms  # local import: norms builds on this module

    mf = classical_maximal(field, structure, 0.0, family)
    out = {}
    for kind in ("Lpq", "Lqp_reversed"):
        spec = norms.NormSpec(kind=kind, p=p, q=q)
        nf = norms.evaluate_norm(field, spec, structure)
        nmf = norms.evaluate_norm(mf, spec, structure)
        out[kind] = nmf / nf if nf > 0 else math.inf
    if beta is not None:
        spec = norms.NormSpec(kind="EpqbDot", p=p, q=q, beta=beta)
        nf = norms.evaluate_norm(field, spec, structure)
        nmf = norms.evaluate_norm(mf, spec, structure)
        out["EpqbDot"] = nmf / nf if nf > 0 else math.inf
    return out
