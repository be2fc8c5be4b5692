"""Discretized real-analytic structures on R^d / R^{d+1} and sampled fields.

Everything downstream (dyadic partitions, maximal operators, weights, norms,
potentials, solvers) works on a `Field`: a real array sampled at the cell
centers of a uniform grid over a centered box, together with a `Structure`
fixing the anisotropy exponents and the background measure.

All "R^d" objects live on a truncated box; operations that are sensitive to
the truncation radius accept the grid so callers can sweep it.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field as dfield
from pathlib import Path

import numpy as np
from scipy.special import gamma as _gamma

__all__ = [
    "GridSpec",
    "Structure",
    "Field",
    "RadialPower",
    "SubspacePower",
    "ParabolicPower",
    "ShellPower",
    "make_structure",
    "make_grid",
    "integrate",
    "average",
    "lp_norm",
    "mollify",
    "differentiate",
    "laplacian",
    "gradient",
    "hessian",
    "save_field",
    "load_field",
    "save_field_csv",
    "load_field_csv",
    "unit_sphere_area",
]

MAX_TOTAL_CELLS = 2 ** 24


def unit_sphere_area(d):
    """Surface area of the unit sphere S^{d-1} in R^d."""
    return 2.0 * math.pi ** (d / 2.0) / _gamma(d / 2.0)


@dataclass(frozen=True)
class GridSpec:
    """Uniform grid of cells over the centered box prod_i [-L_i, L_i].

    Samples live at cell centers; cell widths are h_i = 2 L_i / n_i.
    """

    half_extent: tuple
    cells: tuple
    periodic: bool = False

    def __post_init__(self):
        he = tuple(float(x) for x in self.half_extent)
        n = tuple(int(x) for x in self.cells)
        if len(he) != len(n):
            raise ValueError("half_extent and cells must have equal length")
        if any(x <= 0 for x in he):
            raise ValueError("half_extent entries must be positive")
        if any(x <= 0 or x % 2 for x in n):
            raise ValueError("cells entries must be positive even integers")
        total = 1
        for x in n:
            total *= x
        if total > MAX_TOTAL_CELLS:
            raise ValueError(f"total cell count {total} exceeds cap {MAX_TOTAL_CELLS}")
        object.__setattr__(self, "half_extent", he)
        object.__setattr__(self, "cells", n)

    @property
    def dim(self):
        return len(self.cells)

    @property
    def h(self):
        return tuple(2.0 * L / n for L, n in zip(self.half_extent, self.cells))

    @property
    def cell_volume(self):
        v = 1.0
        for h in self.h:
            v *= h
        return v

    def axis(self, i):
        """Cell-center coordinates along axis i."""
        L, n = self.half_extent[i], self.cells[i]
        h = 2.0 * L / n
        return -L + (np.arange(n) + 0.5) * h

    def axes(self):
        return [self.axis(i) for i in range(self.dim)]

    def mesh(self):
        return np.meshgrid(*self.axes(), indexing="ij")

    def radius(self, center=None):
        """Euclidean distance of every cell center from `center` (default 0)."""
        xs = self.mesh()
        if center is None:
            center = [0.0] * self.dim
        r2 = sum((x - c) ** 2 for x, c in zip(xs, center))
        return np.sqrt(r2)

    def refine(self, factor=2):
        return GridSpec(self.half_extent, tuple(n * factor for n in self.cells), self.periodic)


def make_grid(dim, half_extent, cells, periodic=False):
    if np.isscalar(half_extent):
        half_extent = (float(half_extent),) * dim
    if np.isscalar(cells):
        cells = (int(cells),) * dim
    return GridSpec(tuple(half_extent), tuple(cells), periodic)


# ---------------------------------------------------------------------------
# Singular features: closed-form local models attached to sampled fields.
#
# Center sampling of |x|^{-gamma} at the origin is undefined, so the cell
# containing a declared singular point stores the exact cell average from
# radial closed-form integration (equal-volume ball rule).  When a requested
# power of the field is not locally integrable the exact mass is +inf, which
# propagates into norms; that is the honest value, not an overflow.
# ---------------------------------------------------------------------------


class RadialPower:
    """Local model amp * |x - center|^{-gamma} near an isolated point."""

    def __init__(self, center, gamma, amp=1.0):
        self.center = tuple(float(c) for c in center)
        self.gamma = float(gamma)
        self.amp = float(amp)

    def cell_index(self, grid):
        idx = []
        for i, c in enumerate(self.center):
            L, n = grid.half_extent[i], grid.cells[i]
            h = 2.0 * L / n
            j = int(np.floor((c + L) / h))
            if j < 0 or j >= n:
                return None
            idx.append(j)
        return tuple(idx)

    def exact_power_mass(self, grid, p):
        """Exact integral of |f|^p over the singular cell (ball rule).

        The cell is replaced by the ball of equal volume centered at the
        singular point; the radial integral is then elementary.  Returns
        +inf when gamma*p >= d (non-integrable power).
        """
        d = grid.dim
        g = self.gamma * p
        vol = grid.cell_volume
        if g >= d:
            return math.inf
        s = unit_sphere_area(d)
        r_eq = (vol * d / s) ** (1.0 / d)
        return abs(self.amp) ** p * s * r_eq ** (d - g) / (d - g)


class SubspacePower:
    """Local model amp * |x'|^{-gamma} where x' = coordinates in `axes`.

    Singular on the coordinate subspace {x' = 0}; every cell crossed by the
    subspace gets the exact transverse mass (ball rule in the x' plane).
    """

    def __init__(self, axes, gamma, amp=1.0):
        self.axes = tuple(int(a) for a in axes)
        self.gamma = float(gamma)
        self.amp = float(amp)

    def cell_indices(self, grid):
        """Multi-indices of all cells whose x'-projection contains 0."""
        sel = []
        for i in range(grid.dim):
            if i in self.axes:
                L, n = grid.half_extent[i], grid.cells[i]
                h = 2.0 * L / n
                j = int(np.floor(L / h))
                if j < 0 or j >= n:
                    return []
                sel.append([j])
            else:
                sel.append(list(range(grid.cells[i])))
        out = [()]
        for choices in sel:
            out = [t + (c,) for t in out for c in choices]
        return out

    def exact_power_mass(self, grid, p):
        m = len(self.axes)
        g = self.gamma * p
        if g >= m:
            return math.inf
        tv = 1.0
        rest = 1.0
        for i in range(grid.dim):
            h = grid.h[i]
            if i in self.axes:
                tv *= h
            else:
                rest *= h
        s = unit_sphere_area(m)
        r_eq = (tv * m / s) ** (1.0 / m)
        return abs(self.amp) ** p * s * r_eq ** (m - g) / (m - g) * rest


class ParabolicPower:
    """Local model amp * (|x| + sqrt|t|)^{-alpha} near the origin of R^{1+1}.

    Exact cell mass by closed-form integration of (x + sqrt t)^{-alpha*p}
    over the four quadrant cells touching (0, 0); t is axis 0.  The power is
    locally integrable iff alpha*p < d + 2 (parabolic dimension), here d=1.
    """

    def __init__(self, alpha, amp=1.0):
        self.alpha = float(alpha)
        self.amp = float(amp)

    def cell_indices(self, grid):
        if grid.dim != 2:
            raise ValueError("ParabolicPower exact masses implemented for d=1 (+t) only")
        out = []
        jt = int(np.floor(grid.half_extent[0] / grid.h[0]))
        jx = int(np.floor(grid.half_extent[1] / grid.h[1]))
        for dt in (-1, 0):
            for dx in (-1, 0):
                if 0 <= jt + dt < grid.cells[0] and 0 <= jx + dx < grid.cells[1]:
                    out.append((jt + dt, jx + dx))
        return out

    @staticmethod
    def _quadrant_mass(ht, hx, g):
        """integral_0^ht integral_0^hx (x + sqrt t)^{-g} dx dt, g != 1,2,3."""
        # substitute t = s^2: dt = 2 s ds
        # I = int_0^X int_0^S (x+s)^(-g) 2 s ds dx with X=hx, S=sqrt(ht)
        if g >= 3.0:
            return math.inf
        X, S = hx, math.sqrt(ht)

        def anti_xs(x, s):
            # int (x+s)^(-g) * 2s ds = 2 [ (x+s)^{1-g}*(x+s)/(2-g) ... ]
            # computed via u = x+s: 2 int (u - x) u^{-g} du
            u = x + s
            if abs(g - 2.0) < 1e-12:
                a = math.log(u)
            else:
                a = u ** (2.0 - g) / (2.0 - g)
            if abs(g - 1.0) < 1e-12:
                b = math.log(u)
            else:
                b = u ** (1.0 - g) / (1.0 - g)
            return 2.0 * (a - x * b)

        # integrate the s-antiderivative over x numerically (smooth in x);
        # 64-point midpoint is plenty since the x-dependence is mild
        n = 256
        xs = (np.arange(n) + 0.5) * (X / n)
        tot = 0.0
        for x in xs:
            tot += anti_xs(x, S) - anti_xs(x, 0.0) if x > 0 else 0.0
        return tot * (X / n)

    def exact_power_mass(self, grid, p):
        """Mass over one of the four corner cells meeting at (0, 0)."""
        g = self.alpha * p
        if g >= 3.0:  # d + 2 with d = 1
            return math.inf
        ht, hx = grid.h[0], grid.h[1]
        m = self._quadrant_mass(ht, hx, g)
        return abs(self.amp) ** p * m


class ShellPower:
    """Model amp * |dist to shell|^{-gamma} across a codimension-1 set.

    Used for integrands that blow up on a hypersurface (e.g. the moving
    sphere |x| = sqrt t).  Cells crossed by the shell get the exact
    transverse 1-d mass; non-integrable transverse powers give +inf.
    """

    def __init__(self, cell_mask_fn, gamma, amp_field=None, transverse_h=None):
        self.cell_mask_fn = cell_mask_fn  # grid -> boolean mask of crossed cells
        self.gamma = float(gamma)
        self.amp_field = amp_field  # ndarray of local amplitudes or None
        self.transverse_h = transverse_h

    def exact_power_mass_array(self, grid, p):
        """(mask, masses) of exact |f|^p cell masses on crossed cells."""
        mask = self.cell_mask_fn(grid)
        g = self.gamma * p
        hmin = self.transverse_h if self.transverse_h else min(grid.h)
        vol = grid.cell_volume
        if g >= 1.0:
            masses = np.full(int(mask.sum()), math.inf)
        else:
            # transverse average of |s|^{-g} over a width-hmin slab, times
            # the cell volume (area of the shell slice folded into vol/hmin)
            avg = 2.0 * (hmin / 2.0) ** (1.0 - g) / ((1.0 - g) * hmin)
            masses = np.full(int(mask.sum()), avg * vol)
        if self.amp_field is not None:
            amps = np.abs(self.amp_field[mask]) ** p
            masses = masses * amps
        return mask, masses


@dataclass
class Field:
    """Sampled real-valued function: one value per cell, at cell centers."""

    grid: GridSpec
    values: np.ndarray
    singular: list = dfield(default_factory=list)
    meta: dict = dfield(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != tuple(self.grid.cells):
            raise ValueError(
                f"values shape {self.values.shape} != grid cells {self.grid.cells}"
            )
        if not self.singular and not np.all(np.isfinite(self.values)):
            raise ValueError("non-finite values in a field not flagged singular")

    def copy(self):
        return Field(self.grid, self.values.copy(), list(self.singular), dict(self.meta))

    def __add__(self, other):
        ov = other.values if isinstance(other, Field) else other
        return Field(self.grid, self.values + ov, list(self.singular))

    def __sub__(self, other):
        ov = other.values if isinstance(other, Field) else other
        return Field(self.grid, self.values - ov, list(self.singular))

    def __mul__(self, other):
        ov = other.values if isinstance(other, Field) else other
        return Field(self.grid, self.values * ov, list(self.singular))

    __rmul__ = __mul__

    def __abs__(self):
        return Field(self.grid, np.abs(self.values), list(self.singular))

    def power_mass_cells(self, p):
        """Exact per-cell masses of |f|^p at singular cells.

        Yields (index, mass) pairs; a mass of +inf means the power is not
        locally integrable there (the continuum integral diverges).
        """
        out = []
        for feat in self.singular:
            if isinstance(feat, RadialPower):
                idx = feat.cell_index(self.grid)
                if idx is not None:
                    out.append((idx, feat.exact_power_mass(self.grid, p)))
            elif isinstance(feat, (SubspacePower, ParabolicPower)):
                for idx in feat.cell_indices(self.grid):
                    out.append((idx, feat.exact_power_mass(self.grid, p)))
            elif isinstance(feat, ShellPower):
                mask, masses = feat.exact_power_mass_array(self.grid, p)
                for idx, m in zip(map(tuple, np.argwhere(mask)), masses):
                    out.append((idx, float(m)))
            else:
                raise TypeError(f"unknown singular feature {feat!r}")
        return out

    def power_cell_masses(self, p):
        """Aggregate exact singular masses of |f|^p.

        Returns (extra, naive): scalars such that the exact integral of
        |f|^p over the domain is  midpoint_total - naive + extra.
        """
        if not self.singular:
            return 0.0, 0.0
        vol = self.grid.cell_volume
        extra = 0.0
        naive = 0.0
        for idx, mass in self.power_mass_cells(p):
            extra += mass
            naive += abs(self.values[idx]) ** p * vol
        return extra, naive

    def singular_cell_mask(self):
        mask = np.zeros(self.grid.cells, dtype=bool)
        for feat in self.singular:
            if isinstance(feat, RadialPower):
                idx = feat.cell_index(self.grid)
                if idx is not None:
                    mask[idx] = True
            elif isinstance(feat, (SubspacePower, ParabolicPower)):
                for idx in feat.cell_indices(self.grid):
                    mask[idx] = True
            elif isinstance(feat, ShellPower):
                mask |= feat.cell_mask_fn(self.grid)
        return mask


@dataclass(frozen=True)
class Structure:
    """Real-analytic structure: anisotropy exponents, measure, doubling data.

    nu0 solves nu^(-2 k_1) + ... + nu^(-2 k_d) = 4; doubling_n0 is an
    empirical estimate of sup mu(Q_2l)/mu(Q_l), never an assumption.
    """

    dim: int
    anisotropy: tuple
    measure_density: object  # Field or None for the uniform density
    doubling_n0: float
    nu0: float

    @property
    def uniform(self):
        return self.measure_density is None

    @property
    def parabolic(self):
        return self.anisotropy[0] == 2 and all(k == 1 for k in self.anisotropy[1:]) \
            and len(self.anisotropy) > 1

    def density_on(self, grid):
        if self.measure_density is None:
            return np.ones(grid.cells)
        if self.measure_density.grid != grid:
            raise ValueError("measure density sampled on a different grid")
        return self.measure_density.values


def _solve_nu0(anisotropy):
    ks = np.asarray(anisotropy, dtype=float)

    def f(nu):
        return float(np.sum(nu ** (-2.0 * ks))) - 4.0

    lo, hi = 1e-8, 1e8
    # f decreases in nu; bisect
    for _ in range(200):
        mid = math.sqrt(lo * hi)
        if f(mid) > 0:
            lo = mid
        else:
            hi = mid
    nu = math.sqrt(lo * hi)
    assert abs(f(nu)) < 1e-10
    return nu


def _estimate_doubling(anisotropy, density_field):
    """Empirical sup of mu(Q_2l)/mu(Q_l) over a deterministic (x, l) lattice."""
    ks = tuple(anisotropy)
    if density_field is None:
        return float(2 ** sum(ks))
    grid = density_field.grid
    dens = density_field.values
    ratio_max = 1.0
    ls = []
    lmax = min(L ** (1.0 / k) for L, k in zip(grid.half_extent, ks)) / 2.0
    lmin = 8.0 * max(grid.h)  # below this the discrete cubes degenerate
    l = lmax
    for _ in range(6):
        if l < lmin:
            break
        ls.append(l)
        l /= 2.0
    # centers: every 8th cell per axis
    centers = np.meshgrid(*[g[:: max(1, len(g) // 8)] for g in grid.axes()], indexing="ij")
    centers = np.stack([c.ravel() for c in centers], axis=1)
    xs = grid.mesh()
    vol = grid.cell_volume
    for l in ls:
        for c in centers:
            m_small = None
            for fac in (1.0, 2.0):
                inside = np.ones(grid.cells, dtype=bool)
                ok = True
                for i, k in enumerate(ks):
                    half = (fac * l) ** k / 2.0
                    if abs(c[i]) + half > grid.half_extent[i]:
                        ok = False
                        break
                    inside &= np.abs(xs[i] - c[i]) < half
                if not ok:
                    m_small = None
                    break
                m = float(dens[inside].sum()) * vol
                if fac == 1.0:
                    m_small = m
                else:
                    if m_small and m_small > 0:
                        ratio_max = max(ratio_max, m / m_small)
    return float(ratio_max)


def make_structure(dim, anisotropy=None, density=None):
    """Build a Structure; density None means the uniform (Lebesgue) measure."""
    if anisotropy is None:
        anisotropy = (1,) * dim
    anisotropy = tuple(int(k) for k in anisotropy)
    if len(anisotropy) != dim:
        raise ValueError("anisotropy length != dim")
    if any(k < 1 for k in anisotropy):
        raise ValueError("anisotropy entries must be >= 1")
    if density is not None:
        if np.any(density.values <= 0):
            raise ValueError("measure density must be positive at every sample")
    nu0 = _solve_nu0(anisotropy)
    n0 = _estimate_doubling(anisotropy, density)
    return Structure(dim, anisotropy, density, n0, nu0)


# ---------------------------------------------------------------------------
# Quadrature
# ---------------------------------------------------------------------------


def _region_mask(grid, region):
    if region is None:
        return np.ones(grid.cells, dtype=bool)
    lo, hi = region
    xs = grid.mesh()
    mask = np.ones(grid.cells, dtype=bool)
    for i in range(grid.dim):
        mask &= (xs[i] >= lo[i]) & (xs[i] <= hi[i])
    return mask


def integrate(field, region=None, structure=None, weight=None):
    """Midpoint quadrature of f (optionally times a weight) against d(mu).

    region is (lo, hi) per axis; cells whose centers lie inside count.
    """
    grid = field.grid
    mask = _region_mask(grid, region)
    dens = structure.density_on(grid) if structure is not None else 1.0
    w = weight.values if weight is not None else 1.0
    vals = field.values * w * dens
    total = float(vals[mask].sum()) * grid.cell_volume
    if field.singular and np.all(field.values >= 0):
        extra, naive = field.power_cell_masses(1.0)
        smask = field.singular_cell_mask() & mask
        if smask.any():
            total += extra - naive
    return total


def average(field, region=None, structure=None):
    """mu-average over the region with the convention 0/0 := 0."""
    grid = field.grid
    mask = _region_mask(grid, region)
    if not mask.any():
        return 0.0
    dens = structure.density_on(grid) if structure is not None else np.ones(grid.cells)
    if np.isscalar(dens):
        dens = np.full(grid.cells, dens)
    denom = float(dens[mask].sum()) * grid.cell_volume
    if denom == 0.0:
        return 0.0
    num = float((field.values * dens)[mask].sum()) * grid.cell_volume
    return num / denom


def lp_norm(field, p, region=None, structure=None, weight=None, slashed=False):
    """(integral over region of |f|^p w dmu)^(1/p); p = inf -> max over samples.

    slashed=True divides the measure of the region first ("slash norm").
    Singular fields contribute exact closed-form cell masses for |f|^p.
    """
    grid = field.grid
    mask = _region_mask(grid, region)
    dens = structure.density_on(grid) if structure is not None else np.ones(grid.cells)
    wv = weight.values if weight is not None else np.ones(grid.cells)
    if p == math.inf or p == "inf":
        if not mask.any():
            return 0.0
        return float(np.abs(field.values[mask]).max())
    p = float(p)
    integrand = np.abs(field.values) ** p * wv * dens
    total = float(integrand[mask].sum()) * grid.cell_volume
    if field.singular:
        # weight/density assumed smooth at the singular cells
        extra, naive = field.power_cell_masses(p)
        smask = field.singular_cell_mask() & mask
        if smask.any():
            corr = wv * dens
            scale = float(corr[smask].mean()) if np.ndim(corr) else float(corr)
            total += (extra - naive) * scale
    if weight is not None and getattr(weight, "singular", None):
        # weighted integral with singular weight: f smooth, w carries masses
        extraw, naivew = weight.power_cell_masses(1.0)
        smask = weight.singular_cell_mask() & mask
        if smask.any():
            f_here = float((np.abs(field.values[smask]) ** p).mean())
            total += (extraw - naivew) * f_here
    if slashed:
        mu = float(dens[mask].sum()) * grid.cell_volume
        if mu == 0.0:
            return 0.0
        total /= mu
    if total == math.inf:
        return math.inf
    return total ** (1.0 / p)


# ---------------------------------------------------------------------------
# Mollification
# ---------------------------------------------------------------------------


def _bump(r):
    out = np.zeros_like(r)
    inside = np.abs(r) < 1.0
    out[inside] = np.exp(-1.0 / (1.0 - r[inside] ** 2))
    return out


def mollifier_kernel(grid, eps, parabolic=False):
    """Discrete samples of the scaled bump zeta_eps, normalized to unit mass."""
    if parabolic:
        # anisotropic scaling with support in C_1(-1, 0): t in (-eps^2, 0)
        sizes = [max(3, 2 * int(np.ceil(eps ** 2 / grid.h[0])) + 1)]
        sizes += [max(3, 2 * int(np.ceil(eps / grid.h[i])) + 1) for i in range(1, grid.dim)]
        offs = [
            (np.arange(n) - n // 2) * h for n, h in zip(sizes, grid.h)
        ]
        t = offs[0]
        tprof = _bump(2.0 * (t / eps ** 2) + 1.0) * (t <= 0)
        r2 = 0.0
        mesh = np.meshgrid(*offs[1:], indexing="ij")
        for m in mesh:
            r2 = r2 + (m / eps) ** 2
        xprof = _bump(np.sqrt(r2)) if grid.dim > 1 else np.ones(())
        ker = tprof.reshape((-1,) + (1,) * (grid.dim - 1)) * xprof
    else:
        sizes = [max(3, 2 * int(np.ceil(eps / h)) + 1) for h in grid.h]
        offs = [(np.arange(n) - n // 2) * h for n, h in zip(sizes, grid.h)]
        mesh = np.meshgrid(*offs, indexing="ij")
        r = np.sqrt(sum((m / eps) ** 2 for m in mesh))
        ker = _bump(r)
    s = ker.sum() * grid.cell_volume
    if s <= 0:
        raise ValueError("degenerate mollifier: eps below grid resolution")
    return ker / s


def mollify(field, eps, structure=None):
    """Convolution with the scaled unit-mass bump zeta_eps.

    For parabolic structures the anisotropic scaling (t/eps^2, x/eps) with
    support in C_1(-1,0) is used, so the output at time t only sees earlier
    inputs.
    """
    grid = field.grid
    if eps > min(grid.half_extent) / 4.0:
        raise ValueError("mollification width eps exceeds half_extent / 4")
    parab = structure is not None and structure.parabolic
    ker = mollifier_kernel(grid, eps, parabolic=parab)
    from scipy.signal import fftconvolve

    if grid.periodic:
        padded = field.values
        # circular convolution via explicit wrap-pad then 'same'
        pads = [(s // 2, s // 2) for s in ker.shape]
        wrapped = np.pad(padded, pads, mode="wrap")
        out = fftconvolve(wrapped, ker, mode="valid") * grid.cell_volume
    else:
        out = fftconvolve(field.values, ker, mode="same") * grid.cell_volume
    return Field(grid, out)


# ---------------------------------------------------------------------------
# Differentiation
# ---------------------------------------------------------------------------


def _wavenumbers(grid, axis):
    n = grid.cells[axis]
    h = grid.h[axis]
    return 2.0 * np.pi * np.fft.fftfreq(n, d=h)


def _spectral_derivative(values, grid, axis, order):
    k = _wavenumbers(grid, axis)
    shape = [1] * grid.dim
    shape[axis] = -1
    k = k.reshape(shape)
    f_hat = np.fft.fftn(values)
    out = np.fft.ifftn(f_hat * (1j * k) ** order).real
    return out

_FD4_D1 = np.array([1.0, -8.0, 0.0, 8.0, -1.0]) / 12.0
_FD4_D2 = np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / 12.0


def _fd_derivative(values, grid, axis, order):
    h = grid.h[axis]
    stencil = _FD4_D1 / h if order == 1 else _FD4_D2 / h ** 2
    pad = [(0, 0)] * grid.dim
    pad[axis] = (2, 2)
    padded = np.pad(values, pad, mode="edge" if not grid.periodic else "wrap")
    out = np.zeros_like(values)
    sl_all = [slice(None)] * grid.dim
    for j, c in enumerate(stencil):
        if c == 0.0:
            continue
        sl = list(sl_all)
        sl[axis] = slice(j, j + values.shape[axis])
        out += c * padded[tuple(sl)]
    return out


def differentiate(field, axes, structure=None, spectral=None):
    """Derivative field for the multi-derivative given by `axes`.

    `axes` is a tuple of axis indices, one per differentiation, e.g. (0,)
    for D_0, (0, 1) for D_01, (1, 1) for D_11.  Spatial order <= 2 and time
    order <= 1 (for parabolic structures axis 0 is t).  Periodic grids use
    spectral derivatives (exact on band-limited inputs); otherwise 4th-order
    centered differences.
    """
    axes = tuple(int(a) for a in axes)
    grid = field.grid
    counts = {}
    for a in axes:
        counts[a] = counts.get(a, 0) + 1
    parab = structure is not None and structure.parabolic
    spatial_order = 0
    for a, c in counts.items():
        if parab and a == 0:
            if c > 1:
                raise ValueError("time derivatives of order > 1 are unsupported")
        else:
            spatial_order += c
    if spatial_order > 2:
        raise ValueError("spatial derivatives of order > 2 are unsupported")
    use_spectral = grid.periodic if spectral is None else spectral
    vals = field.values
    for a, c in sorted(counts.items()):
        if use_spectral:
            vals = _spectral_derivative(vals, grid, a, c)
        else:
            vals = _fd_derivative(vals, grid, a, c)
    return Field(grid, vals)


def gradient(field, structure=None, spectral=None):
    grid = field.grid
    first = 1 if (structure is not None and structure.parabolic) else 0
    return [differentiate(field, (a,), structure, spectral) for a in range(first, grid.dim)]


def laplacian(field, structure=None, spectral=None):
    grid = field.grid
    first = 1 if (structure is not None and structure.parabolic) else 0
    out = np.zeros(grid.cells)
    for a in range(first, grid.dim):
        out += differentiate(field, (a, a), structure, spectral).values
    return Field(grid, out)


def hessian(field, structure=None, spectral=None):
    grid = field.grid
    first = 1 if (structure is not None and structure.parabolic) else 0
    axes = range(first, grid.dim)
    return [[differentiate(field, (i, j), structure, spectral) for j in axes] for i in axes]


# ---------------------------------------------------------------------------
# Field I/O: JSON sidecar + raw little-endian float64 (row-major); CSV d<=2.
# ---------------------------------------------------------------------------


def save_field(field, path, anisotropy=None):
    path = Path(path)
    meta = {
        "dim": field.grid.dim,
        "anisotropy": list(anisotropy) if anisotropy else [1] * field.grid.dim,
        "shape": list(field.grid.cells),
        "half_extent": list(field.grid.half_extent),
        "periodic": field.grid.periodic,
        "singular_points": [
            list(f.center) for f in field.singular if isinstance(f, RadialPower)
        ],
    }
    path.with_suffix(".json").write_text(json.dumps(meta, indent=2))
    field.values.astype("<f8").tofile(path.with_suffix(".f64"))


def load_field(path):
    path = Path(path)
    meta = json.loads(path.with_suffix(".json").read_text())
    grid = GridSpec(tuple(meta["half_extent"]), tuple(meta["shape"]), meta["periodic"])
    raw = np.fromfile(path.with_suffix(".f64"), dtype="<f8").reshape(meta["shape"])
    return Field(grid, raw)


def save_field_csv(field, path):
    if field.grid.dim > 2:
        raise ValueError("CSV export supported for d <= 2 only")
    header = json.dumps(
        {
            "shape": list(field.grid.cells),
            "half_extent": list(field.grid.half_extent),
            "periodic": field.grid.periodic,
        }
    )
    np.savetxt(path, np.atleast_2d(field.values), delimiter=",", header=header)


def load_field_csv(path):
    with open(path) as fh:
        header = fh.readline().lstrip("# ").strip()
    meta = json.loads(header)
    vals = np.loadtxt(path, delimiter=",", skiprows=1).reshape(meta["shape"])
    grid = GridSpec(tuple(meta["half_extent"]), tuple(meta["shape"]), meta["periodic"])
    return Field(grid, vals)
