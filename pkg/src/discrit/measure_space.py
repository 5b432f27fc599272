"""Discrete measure spaces over cubes and balls in R^d (d >= 3).

Cubes Q_r(y) = y + [-r, r]^d use the half-side convention throughout: r is
half the side.  Ball grids clip bounding-cube cells: a cell fully inside
keeps its exact volume, a boundary cell gets a deterministic 4^d-point
subsample estimate, outside cells are dropped.

The slab rank of a point is the normalized measure of the ball slab left of
its first coordinate, evaluated by the closed-form spherical-cap volume (a
regularized incomplete beta function), not by summing cells.  The slab
density measure re-weights Lebesgue measure by f'(slab rank) with
f(t) = t^((d-2)/d), normalized so its total mass is the harmonic capacity of
the ball.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.special import betainc

SLAB_RANK_FLOOR = 1e-12  # f' has an integrable singularity at rank 0
_SUBSAMPLE_PER_AXIS = 4


def ball_volume(d: int, r: float) -> float:
    return math.pi ** (d / 2) / math.gamma(d / 2 + 1) * r**d


def sphere_area_unit(d: int) -> float:
    """Surface measure of the unit sphere S^(d-1)."""
    return 2 * math.pi ** (d / 2) / math.gamma(d / 2)


def harmonic_cap_ball(d: int, r: float) -> float:
    """Harmonic capacity of a ball of radius r, raw Dirichlet-integral normalization.

    The equilibrium potential (r/|x|)^(d-2) has Dirichlet energy
    (d-2) * area(S^(d-1)) * r^(d-2).
    """
    if d < 3:
        raise ValueError("harmonic capacity needs d >= 3")
    if r <= 0:
        raise ValueError("radius must be positive")
    return (d - 2) * sphere_area_unit(d) * r ** (d - 2)


@dataclass(frozen=True)
class DiscreteMeasureSpace:
    """Finite weighted cell decomposition of a cube or ball."""

    dimension: int
    centers: np.ndarray      # (m, d)
    half_sides: np.ndarray   # (m,)
    weights: np.ndarray      # (m,) Lebesgue masses
    domain: str              # 'cube' | 'ball'
    origin: np.ndarray       # domain center y
    size: float              # half-side (cube) or radius (ball)

    def __post_init__(self):
        if self.dimension < 3:
            raise ValueError("dimension must be >= 3")
        if self.domain not in ("cube", "ball"):
            raise ValueError("domain must be 'cube' or 'ball'")
        if self.centers.shape != (len(self.weights), self.dimension):
            raise ValueError("centers shape mismatch")
        if len(self.half_sides) != len(self.weights):
            raise ValueError("half_sides length mismatch")
        if np.any(self.weights < 0) or not np.all(np.isfinite(self.weights)):
            raise ValueError("weights must be finite and >= 0")
        if not self.weights.sum() > 0:
            raise ValueError("total mass must be positive")

    def __len__(self) -> int:
        return len(self.weights)

    @property
    def total_mass(self) -> float:
        return float(self.weights.sum())


@dataclass(frozen=True)
class DensityMeasure:
    """Absolutely continuous re-weighting of a space's Lebesgue cell masses."""

    base: DiscreteMeasureSpace
    multipliers: np.ndarray
    label: str = "custom"

    def __post_init__(self):
        if len(self.multipliers) != len(self.base):
            raise ValueError("one multiplier per cell required")
        if np.any(self.multipliers < 0):
            raise ValueError("multipliers must be >= 0")

    @property
    def cell_masses(self) -> np.ndarray:
        return self.base.weights * self.multipliers

    @property
    def total_mass(self) -> float:
        return float(self.cell_masses.sum())


def lebesgue_measure(space: DiscreteMeasureSpace) -> DensityMeasure:
    return DensityMeasure(space, np.ones(len(space)), label="lebesgue")


def _grid_centers(y: np.ndarray, r: float, n: int, d: int) -> tuple[np.ndarray, float]:
    h = r / n
    axes = [y[k] - r + h * (2 * np.arange(n) + 1) for k in range(d)]
    mesh = np.meshgrid(*axes, indexing="ij")
    centers = np.stack([m.ravel() for m in mesh], axis=1)
    return centers, h


def build_cube_grid(y, r: float, n_per_axis: int) -> DiscreteMeasureSpace:
    """Uniform n^d tiling of Q_r(y); every cell carries its exact volume."""
    y = np.asarray(y, dtype=float)
    d = len(y)
    if d < 3:
        raise ValueError("dimension must be >= 3")
    if r <= 0 or n_per_axis < 1:
        raise ValueError("need r > 0 and n_per_axis >= 1")
    centers, h = _grid_centers(y, float(r), int(n_per_axis), d)
    m = len(centers)
    weights = np.full(m, (2 * h) ** d)
    return DiscreteMeasureSpace(
        d, centers, np.full(m, h), weights, "cube", y, float(r)
    )


def _clip_fractions(centers: np.ndarray, h: float, y: np.ndarray, r: float):
    """Fraction of each cubic cell inside the ball B_r(y), 4^d-point subsampling
    for boundary cells; also returns the inside-subsample centroids (the
    quadrature point representing the clipped region)."""
    d = centers.shape[1]
    dist = np.linalg.norm(centers - y, axis=1)
    half_diag = h * math.sqrt(d)
    frac = np.zeros(len(centers))
    frac[dist + half_diag <= r] = 1.0
    nodes = centers.copy()
    boundary = (dist + half_diag > r) & (dist - half_diag < r)
    if boundary.any():
        k = _SUBSAMPLE_PER_AXIS
        step = 2 * h / k
        offsets_1d = -h + step * (np.arange(k) + 0.5)
        mesh = np.meshgrid(*([offsets_1d] * d), indexing="ij")
        offsets = np.stack([m.ravel() for m in mesh], axis=1)  # (k^d, d)
        pts = centers[boundary][:, None, :] + offsets[None, :, :]
        inside = np.linalg.norm(pts - y, axis=2) <= r
        frac[boundary] = inside.mean(axis=1)
        counts = np.maximum(inside.sum(axis=1), 1)
        sums = np.where(inside[:, :, None], pts, 0.0).sum(axis=1)
        nodes[boundary] = sums / counts[:, None]
    return frac, nodes


def build_ball_grid(y, r: float, n_per_axis: int) -> DiscreteMeasureSpace:
    """Clipped bounding-cube grid over B_r(y); keeps cells with positive clipped volume.

    Boundary cells store the centroid of their inside subsample instead of the
    raw cell center, so every stored center lies in the ball and represents
    the clipped mass it carries.  Within each first-coordinate slab the
    subsampled weights are rescaled to the exact spherical-zone volume, which
    pins the total mass to the ball volume and keeps the slab marginals exact
    (the subsample alone quantizes thin polar slivers too coarsely).
    """
    y = np.asarray(y, dtype=float)
    d = len(y)
    if d < 3:
        raise ValueError("dimension must be >= 3")
    if r <= 0 or n_per_axis < 1:
        raise ValueError("need r > 0 and n_per_axis >= 1")
    r = float(r)
    n = int(n_per_axis)
    centers, h = _grid_centers(y, r, n, d)
    frac, nodes = _clip_fractions(centers, h, y, r)
    weights = frac * (2 * h) ** d
    slab_of = np.rint((centers[:, 0] - (y[0] - r + h)) / (2 * h)).astype(int)
    bounds = y[0] - r + 2 * h * np.arange(n + 1)
    zone = ball_volume(d, r) * np.diff(_cap_fraction(d, (bounds - y[0]) / r))
    for i in range(n):
        members = slab_of == i
        got = weights[members].sum()
        if got > 0:
            weights[members] *= zone[i] / got
    keep = weights > 0
    return DiscreteMeasureSpace(
        d, nodes[keep], np.full(int(keep.sum()), h), weights[keep], "ball", y, r
    )


def slab_rank(space: DiscreteMeasureSpace, x) -> float:
    """Normalized ball measure of {s in B_r(y) : s_1 <= x_1}.

    Closed form: the spherical-cap volume fraction, a regularized incomplete
    beta function of the normalized first coordinate.
    """
    if space.domain != "ball":
        raise ValueError("slab rank is defined on ball domains")
    x = np.asarray(x, dtype=float)
    if np.linalg.norm(x - space.origin) > space.size * (1 + 1e-12):
        raise ValueError("point outside the closed ball")
    return float(_cap_fraction(space.dimension, (x[0] - space.origin[0]) / space.size))


def _cap_fraction(d: int, a) -> np.ndarray:
    a = np.clip(np.asarray(a, dtype=float), -1.0, 1.0)
    half = (d + 1) / 2
    return betainc(half, half, (a + 1) / 2)


def slab_rank_values(space: DiscreteMeasureSpace) -> np.ndarray:
    """Slab rank at every cell center (vectorized)."""
    if space.domain != "ball":
        raise ValueError("slab rank is defined on ball domains")
    a = (space.centers[:, 0] - space.origin[0]) / space.size
    return _cap_fraction(space.dimension, a)


def rank_power_density(d: int, s) -> np.ndarray:
    """f'(s) for f(t) = t^((d-2)/d): ((d-2)/d) * s^(-2/d)."""
    s = np.maximum(np.asarray(s, dtype=float), SLAB_RANK_FLOOR)
    return (d - 2) / d * s ** (-2.0 / d)


def rank_power_density_slab_average(d: int, s_lo, s_hi) -> np.ndarray:
    """Average of f' over a rank interval: (f(s_hi) - f(s_lo)) / (s_hi - s_lo).

    Exact by the fundamental theorem; finite even when the interval touches
    the f' singularity at rank 0.  Degenerate intervals fall back to the
    floored pointwise density.
    """
    s_lo = np.asarray(s_lo, dtype=float)
    s_hi = np.asarray(s_hi, dtype=float)
    gap = s_hi - s_lo
    power = (d - 2) / d
    with np.errstate(divide="ignore", invalid="ignore"):
        avg = (s_hi**power - s_lo**power) / gap
    fallback = rank_power_density(d, (s_lo + s_hi) / 2)
    return np.where(gap > SLAB_RANK_FLOOR, avg, fallback)


def slab_density_measure(space: DiscreteMeasureSpace) -> DensityMeasure:
    """Density measure cap(B_r) * avg f'(slab rank over the cell) / vol(B_r).

    f' is averaged over each cell's first-coordinate slab through the
    antiderivative f, which keeps the total mass at cap(B_r(0)) up to the
    clipped-volume error alone (pointwise sampling of f' near its rank-0
    singularity cannot certify that identity at practical resolutions).
    """
    if space.domain != "ball":
        raise ValueError("slab density lives on ball domains")
    d, r = space.dimension, space.size
    h = space.half_sides
    # snap to the slab lattice: centroids stay inside their original cell
    left_edge = space.origin[0] - r + h
    slab_centers = left_edge + 2 * h * np.rint((space.centers[:, 0] - left_edge) / (2 * h))
    s_lo = _cap_fraction(d, (slab_centers - h - space.origin[0]) / r)
    s_hi = _cap_fraction(d, (slab_centers + h - space.origin[0]) / r)
    mult = harmonic_cap_ball(d, r) * rank_power_density_slab_average(d, s_lo, s_hi) / ball_volume(d, r)
    return DensityMeasure(space, mult, label="slab")


def rank_pushforward_ks(space: DiscreteMeasureSpace) -> float:
    """Kolmogorov-Smirnov distance of the weight-pushforward of the slab rank
    from the uniform law on [0, 1]."""
    s = slab_rank_values(space)
    order = np.argsort(s)
    s_sorted = s[order]
    cum = np.cumsum(space.weights[order]) / space.total_mass
    before = np.concatenate([[0.0], cum[:-1]])
    return float(np.max(np.maximum(np.abs(cum - s_sorted), np.abs(before - s_sorted))))


# -- CSV schema: cell_index, c1..cd, half_side, weight, density_multiplier -----

def save_space_csv(space: DiscreteMeasureSpace, path, density: Optional[DensityMeasure] = None) -> None:
    mult = density.multipliers if density is not None else np.ones(len(space))
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(
            ["cell_index"]
            + [f"c{k+1}" for k in range(space.dimension)]
            + ["half_side", "weight", "density_multiplier"]
        )
        for i in range(len(space)):
            writer.writerow(
                [i]
                + [repr(float(c)) for c in space.centers[i]]
                + [repr(float(space.half_sides[i])), repr(float(space.weights[i])), repr(float(mult[i]))]
            )


def load_space_csv(path, domain: str, origin, size: float) -> tuple[DiscreteMeasureSpace, np.ndarray]:
    """Read a grid back; returns (space, density multipliers)."""
    centers, halves, weights, mults = [], [], [], []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        coord_cols = [c for c in reader.fieldnames if c.startswith("c") and c[1:].isdigit()]
        coord_cols.sort(key=lambda c: int(c[1:]))
        for rec in reader:
            centers.append([float(rec[c]) for c in coord_cols])
            halves.append(float(rec["half_side"]))
            weights.append(float(rec["weight"]))
            mults.append(float(rec["density_multiplier"]))
    space = DiscreteMeasureSpace(
        len(coord_cols),
        np.asarray(centers),
        np.asarray(halves),
        np.asarray(weights),
        domain,
        np.asarray(origin, dtype=float),
        float(size),
    )
    return space, np.asarray(mults)
