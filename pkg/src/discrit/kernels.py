"""Radial kernels and their compositions on balls.

The Bessel kernel of order 1 (Fourier symbol (1 + |xi|^2)^(-1/2)) is evaluated
through the heat-semigroup subordination integral

    G1(x) = (4 pi)^(-1/2) / Gamma(1/2) * Int_0^inf exp(-pi |x|^2 / t - t / (4 pi))
            t^((1-d)/2) dt / t,

computed on a log axis with a fixed trapezoid rule (the integrand decays
double-exponentially both ways, so node doubling converges fast and the node
count is an explicit accuracy knob).  Near zero G1(x) ~ c_d |x|^(1-d) with
c_d = Gamma((d-1)/2) / (2 pi^((d+1)/2)).

A pure power ("riesz") kernel |x|^(-q) with q defaulting to d-1 mirrors the
small-scale behaviour and is two orders of magnitude cheaper; criteria use it
by default with the Bessel kernel as a verification mode.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional

import numpy as np

from .measure_space import (
    DensityMeasure,
    DiscreteMeasureSpace,
    build_ball_grid,
    _SUBSAMPLE_PER_AXIS,
)

COINCIDENT_TOL = 1e-14


@dataclass(frozen=True)
class KernelSpec:
    """Kernel choice plus quadrature settings."""

    kind: str                      # 'bessel1' | 'riesz'
    dimension: int
    exponent: Optional[float] = None   # riesz power; defaults to d - 1
    nodes: int = 256                   # subordination quadrature nodes
    profile_points: int = 600          # cached radial table resolution
    profile_range: tuple = (1e-4, 6.0)

    def __post_init__(self):
        if self.dimension < 3:
            raise ValueError("dimension must be >= 3")
        if self.kind not in ("bessel1", "riesz"):
            raise ValueError("kind must be 'bessel1' or 'riesz'")
        if self.kind == "riesz":
            q = self.exponent if self.exponent is not None else self.dimension - 1
            if not 0 < q < self.dimension:
                raise ValueError("riesz exponent must lie in (0, d)")

    @property
    def riesz_power(self) -> float:
        return self.exponent if self.exponent is not None else self.dimension - 1


def small_argument_constant(d: int) -> float:
    """Leading coefficient of G1 near zero: G1(x) ~ c_d |x|^(1-d)."""
    return math.gamma((d - 1) / 2) / (2 * math.pi ** ((d + 1) / 2))


def _g1_quadrature(rho: np.ndarray, d: int, nodes: int) -> np.ndarray:
    """Subordination integral on the log axis, trapezoid with `nodes` points.

    The exponent -pi rho^2 e^(-u) - e^u / (4 pi) peaks near u0 = log(2 pi rho);
    the window [u0 - espan, log(4 pi * espan)] keeps the dropped tails below
    exp(-espan) relative.
    """
    rho = np.asarray(rho, dtype=float)
    if np.any(rho <= 0):
        raise ValueError("kernel is singular at zero separation")
    espan = 46.0
    lo = np.log(math.pi * rho**2 / espan)
    hi = math.log(4 * math.pi * espan)
    lo = np.minimum(lo, hi - 1.0)
    u = lo[..., None] + (hi - lo)[..., None] * np.linspace(0.0, 1.0, nodes)
    t = np.exp(u)
    expo = -math.pi * rho[..., None] ** 2 / t - t / (4 * math.pi)
    integrand = np.exp(expo) * t ** ((1 - d) / 2)
    widths = (hi - lo) / (nodes - 1)
    core = np.sum(integrand, axis=-1) - 0.5 * (integrand[..., 0] + integrand[..., -1])
    # prefactor (4 pi)^(-1/2) / Gamma(1/2) = 1 / (2 pi)
    return core * widths / (2 * math.pi)


def bessel_g1(spec: KernelSpec, x) -> float:
    """Bessel kernel of order 1 at the point x (radial; x != 0)."""
    x = np.asarray(x, dtype=float)
    rho = float(np.linalg.norm(x))
    if rho == 0:
        raise ValueError("kernel is singular at zero separation")
    return float(_g1_quadrature(np.asarray([rho]), spec.dimension, spec.nodes)[0])


class RadialProfile:
    """Cubic log-log interpolant of a radial kernel, with exact fallback outside."""

    def __init__(self, spec: KernelSpec):
        from scipy.interpolate import CubicSpline

        self.spec = spec
        lo, hi = spec.profile_range
        self.lo, self.hi = lo, hi
        radii = np.geomspace(lo, hi, spec.profile_points)
        vals = _g1_quadrature(radii, spec.dimension, spec.nodes)
        self._spline = CubicSpline(np.log(radii), np.log(vals))

    def __call__(self, rho: np.ndarray) -> np.ndarray:
        rho = np.asarray(rho, dtype=float)
        out = np.empty_like(rho)
        inside = (rho >= self.lo) & (rho <= self.hi)
        out[inside] = np.exp(self._spline(np.log(rho[inside])))
        if np.any(~inside):
            outside = rho[~inside]
            if np.any(outside <= 0):
                raise ValueError("kernel is singular at zero separation")
            out[~inside] = _g1_quadrature(outside, self.spec.dimension, self.spec.nodes)
        return out


@lru_cache(maxsize=8)
def _profile_for(spec: KernelSpec) -> RadialProfile:
    return RadialProfile(spec)


def kernel_values(spec: KernelSpec, rho: np.ndarray) -> np.ndarray:
    """Vectorized radial kernel evaluation (profile-backed for bessel1)."""
    rho = np.asarray(rho, dtype=float)
    if np.any(rho <= 0):
        raise ValueError("kernel is singular at zero separation")
    if spec.kind == "riesz":
        return rho ** (-spec.riesz_power)
    return _profile_for(spec)(rho)


def g1_profile_table(spec: KernelSpec, r_min: float, r_max: float, n: int) -> np.ndarray:
    """(|x|, kernel) table for plotting; rows sorted by radius."""
    radii = np.geomspace(r_min, r_max, n)
    return np.column_stack([radii, kernel_values(spec, radii)])


# -- composition over a ball -----------------------------------------------------


def _cell_average_kernel(
    spec: KernelSpec, point: np.ndarray, center: np.ndarray, h: float, depth: int = 2
) -> float:
    """Average kernel over a cubic cell containing (or near) a singular point.

    4^d-point subsample of the cell; subcells holding the point are recursed
    into (down to `depth`), the innermost one is dropped (integrable
    singularity, vanishing volume share).
    """
    d = spec.dimension
    k = _SUBSAMPLE_PER_AXIS
    step = 2 * h / k
    offsets_1d = -h + step * (np.arange(k) + 0.5)
    mesh = np.meshgrid(*([offsets_1d] * d), indexing="ij")
    sub = center + np.stack([m.ravel() for m in mesh], axis=1)
    maxdist = np.max(np.abs(sub - point), axis=1)
    keep = maxdist > step / 2
    total = 0.0
    if keep.any():
        dist = np.linalg.norm(sub[keep] - point, axis=1)
        total += float(kernel_values(spec, dist).sum()) / k**d
    if depth > 0:
        for idx in np.nonzero(~keep)[0]:
            total += _cell_average_kernel(spec, point, sub[idx], step / 2, depth - 1) / k**d
    return total


def compose_kernels_on_ball(
    spec: KernelSpec,
    x,
    t,
    y,
    r: float,
    n_grid: int = 32,
    space: Optional[DiscreteMeasureSpace] = None,
) -> float:
    """Integral of kernel(x - s) * kernel(s - t) over the ball B_r(y).

    Grid quadrature over the clipped ball with cell-average treatment of the
    cells containing x or t; symmetric in (x, t) by construction.
    """
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.allclose(x, t, atol=COINCIDENT_TOL):
        raise ValueError("composition is singular at coincident points")
    for p in (x, t):
        if np.linalg.norm(p - y) > r * (1 + 1e-12):
            raise ValueError("points must lie in the closed ball")
    if space is None:
        space = build_ball_grid(y, r, n_grid)
    h = float(space.half_sides[0])
    d = spec.dimension
    dist_x = np.linalg.norm(space.centers - x, axis=1)
    dist_t = np.linalg.norm(space.centers - t, axis=1)
    # cells near a singular point are subsampled, not just the containing one:
    # the midpoint-rule error of the 1/|.|^(d-1) factors concentrates there
    near = 3.0 * h * math.sqrt(d)
    sing_x = dist_x <= near
    sing_t = dist_t <= near
    regular = ~(sing_x | sing_t)
    gx = np.zeros(len(space))
    gt = np.zeros(len(space))
    gx[regular] = kernel_values(spec, dist_x[regular])
    gt[regular] = kernel_values(spec, dist_t[regular])
    total = float(np.sum(gx[regular] * gt[regular] * space.weights[regular]))
    for idx in np.nonzero(~regular)[0]:
        c = space.centers[idx]
        fx = (
            _cell_average_kernel(spec, x, c, h)
            if sing_x[idx]
            else float(kernel_values(spec, np.asarray([dist_x[idx]]))[0])
        )
        ft = (
            _cell_average_kernel(spec, t, c, h)
            if sing_t[idx]
            else float(kernel_values(spec, np.asarray([dist_t[idx]]))[0])
        )
        total += fx * ft * float(space.weights[idx])
    return total


@dataclass(frozen=True)
class BandCheckResult:
    low: float
    high: float
    ratios: tuple
    separations: tuple

    @property
    def spread(self) -> float:
        return self.high / self.low if self.low > 0 else math.inf


def kernel_band_check(
    spec: KernelSpec,
    y,
    r: float,
    r0: float,
    n_pairs: int,
    rng_seed: int = 0,
    n_grid: int = 32,
    min_separation_factor: float = 0.15,
) -> BandCheckResult:
    """Sample point pairs in B_r(y) and measure X(x,t) * |x - t|^(d-2).

    Pairs closer than min_separation_factor * r are redrawn (the quadrature
    cannot resolve them); the returned band is measured, never asserted.
    Deterministic for a fixed seed.
    """
    if not 0 < r <= r0:
        raise ValueError("need 0 < r <= r0")
    y = np.asarray(y, dtype=float)
    d = spec.dimension
    rng = np.random.default_rng(rng_seed)
    space = build_ball_grid(y, r, n_grid)
    min_sep = min_separation_factor * r

    def draw_point() -> np.ndarray:
        while True:
            p = y + rng.uniform(-r, r, size=d)
            if np.linalg.norm(p - y) < r:
                return p

    ratios = []
    seps = []
    for _ in range(n_pairs):
        x = draw_point()
        t = draw_point()
        while np.linalg.norm(x - t) < min_sep:
            t = draw_point()
        sep = float(np.linalg.norm(x - t))
        val = compose_kernels_on_ball(spec, x, t, y, r, space=space)
        ratios.append(val * sep ** (d - 2))
        seps.append(sep)
    return BandCheckResult(min(ratios), max(ratios), tuple(ratios), tuple(seps))


# -- Gram-type kernel matrices ----------------------------------------------------


@dataclass(frozen=True)
class KernelMatrix:
    """Dense symmetric kernel matrix over the cells of a measure space."""

    entries: np.ndarray
    row_space: DiscreteMeasureSpace
    col_space: DiscreteMeasureSpace

    def __post_init__(self):
        if self.entries.shape != (len(self.row_space), len(self.col_space)):
            raise ValueError("entry shape mismatch")
        if not np.all(np.isfinite(self.entries)) or np.any(self.entries < 0):
            raise ValueError("entries must be finite and >= 0")


def _pairwise_kernel(spec: KernelSpec, space: DiscreteMeasureSpace) -> np.ndarray:
    """Kernel at all pairs of cell centers, cell-averaged on coincident pairs."""
    diff = space.centers[:, None, :] - space.centers[None, :, :]
    dist = np.linalg.norm(diff, axis=2)
    g = np.zeros_like(dist)
    off = dist > COINCIDENT_TOL
    g[off] = kernel_values(spec, dist[off])
    for i, j in zip(*np.nonzero(~off)):
        g[i, j] = _cell_average_kernel(
            spec, space.centers[j], space.centers[i], float(space.half_sides[i])
        )
    return g


def k_mu_matrix(spec: KernelSpec, space: DiscreteMeasureSpace, mu: DensityMeasure) -> KernelMatrix:
    """Gram matrix K[i,j] = sum_k kernel(x_k - s_i) kernel(x_k - s_j) mu_k.

    Quadrature nodes are the cells themselves; diagonal (coincident) kernel
    values are cell averages, which keeps the matrix symmetric and
    positive-semidefinite up to round-off.
    """
    if len(mu.base) != len(space):
        raise ValueError("density measure does not match the space")
    g = _pairwise_kernel(spec, space)
    masses = mu.cell_masses
    entries = (g * masses[None, :]) @ g
    entries = 0.5 * (entries + entries.T)
    return KernelMatrix(entries, space, space)


def x_mu_matrix(
    spec: KernelSpec,
    potential,
    space: DiscreteMeasureSpace,
    mu: DensityMeasure,
) -> KernelMatrix:
    """Weighted kernel matrix sqrt(V) alpha K_mu alpha sqrt(V) at cell centers.

    alpha is the Lebesgue-vs-mu density, i.e. the reciprocal of the density
    multiplier (floored away from zero like the multiplier itself).
    """
    from .potentials import evaluate_on_centers

    v_vals = evaluate_on_centers(potential, space)
    if np.any(v_vals < 0):
        raise ValueError("potential values must be >= 0")
    k = k_mu_matrix(spec, space, mu)
    alpha = 1.0 / np.maximum(mu.multipliers, 1e-12)
    w = np.sqrt(v_vals) * alpha
    entries = w[:, None] * k.entries * w[None, :]
    return KernelMatrix(entries, space, space)


def save_profile_dat(spec: KernelSpec, path, r_min: float = 1e-3, r_max: float = 4.0, n: int = 200) -> None:
    """Two-column `|x| value` plot file."""
    table = g1_profile_table(spec, r_min, r_max, n)
    with open(path, "w") as fh:
        for rho, val in table:
            fh.write(f"{rho!r} {val!r}\n")


def save_kernel_matrix_csv(matrix: KernelMatrix, path) -> None:
    """Rows `row,col,value` for every entry."""
    import csv

    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["row", "col", "value"])
        for i in range(matrix.entries.shape[0]):
            for j in range(matrix.entries.shape[1]):
                writer.writerow([i, j, repr(float(matrix.entries[i, j]))])


def load_kernel_entries_csv(path) -> np.ndarray:
    import csv

    cells = {}
    with open(path, newline="") as fh:
        for rec in csv.DictReader(fh):
            cells[(int(rec["row"]), int(rec["col"]))] = float(rec["value"])
    nr = 1 + max(i for i, _ in cells)
    nc = 1 + max(j for _, j in cells)
    out = np.zeros((nr, nc))
    for (i, j), v in cells.items():
        out[i, j] = v
    return out
