"""Discreteness-criterion evaluators and divergence sweeps.

Every evaluator reduces to a rearrangement of a potential (or of the two-point
matrix sqrt(V) |x-t|^(2-d) sqrt(V)) over cubes at mass psi = gamma(r) *
volume.  Closed-form Cantor-window potentials take the exact-distribution
route (uniform grids alias their oscillation); grid potentials take the
uniform-grid route.  'Divergence' of a criterion along a sequence of centers
is operationalized as strictly increasing window minima over at least three
windows: a falsifiable desk-scale trend, never a proof.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional, Sequence

import numpy as np

from ._util import Number, common_denominator, is_exact, pmap
from .kernels import KernelSpec, k_mu_matrix, x_mu_matrix
from .measure_space import DensityMeasure, DiscreteMeasureSpace, build_cube_grid
from .partitions import DenseSystem, xi_admissible_union
from .potentials import (
    AtomSet,
    PotentialSpec,
    SENTINEL_FACTOR,
    box_value_distribution,
    evaluate_on_centers,
    riesz_potential_matrix,
    window_atoms,
)
from .rearrange import Matrix2D, WeightedSample, rearrange_dec, repeated_rearrange

DEFAULT_GRID_SINGLE = 24
DEFAULT_GRID_REPEATED = 12


@dataclass(frozen=True)
class GammaFunction:
    """Mass-fraction profile gamma(r) in (0, 1).

    The power profile r^alpha with alpha in (0, 2) satisfies the divergence
    requirement limsup r^(-2) gamma(r) = infinity (r^(alpha-2) blows up), which
    is checked symbolically; custom profiles are the caller's responsibility.
    """

    kind: str = "power"
    alpha: Number = 1
    fn: Optional[Callable] = None

    def __post_init__(self):
        if self.kind == "power":
            if not 0 < self.alpha < 2:
                raise ValueError("power profile needs alpha in (0, 2)")
        elif self.kind == "custom":
            if self.fn is None:
                raise ValueError("custom profile needs a callable")
        else:
            raise ValueError(f"unknown gamma kind {self.kind!r}")

    def is_admissible(self) -> Optional[bool]:
        if self.kind == "power":
            return self.alpha < 2
        return None

    def __call__(self, r):
        if self.kind == "custom":
            val = self.fn(r)
        elif is_exact(r) and is_exact(self.alpha) and Fraction(self.alpha).denominator == 1:
            val = Fraction(r) ** int(self.alpha)
        else:
            val = float(r) ** float(self.alpha)
        if not 0 < val < 1:
            raise ValueError(f"gamma({r!r}) = {val!r} outside (0, 1)")
        return val


def cube_mass(d: int, r) -> Number:
    if is_exact(r):
        return (2 * Fraction(r)) ** d
    return (2.0 * float(r)) ** d


def rearrangement_mass(gamma: GammaFunction, d: int, r) -> Number:
    return gamma(r) * cube_mass(d, r)


# -- single rearrangement ----------------------------------------------------------


def _cantor_cube_sample(V: PotentialSpec, lo, hi, tail_as_value: bool):
    pairs, zero_mass, tail_bound, tail_value = box_value_distribution(V, lo, hi)
    values = [v for v, _ in pairs]
    weights = [m for _, m in pairs]
    if tail_bound:
        if tail_as_value:
            values.append(tail_value)
            weights.append(tail_bound)
            zero = zero_mass
        else:
            zero = zero_mass + tail_bound
    else:
        zero = zero_mass
    values.append(0.0)
    weights.append(zero)
    return WeightedSample(values, weights)


def single_rearrangement_bounds(
    V: PotentialSpec, y, r, gamma: GammaFunction, grid_n: int = DEFAULT_GRID_SINGLE
) -> tuple[float, float]:
    """Lower and upper evaluations of V*(gamma(r) vol; Q_r(y)).

    The two differ only for closed-form potentials with a deep-level tail: the
    lower bound counts unresolved tail mass as zero-valued, the upper bound at
    the tail's value bound.  Grid potentials return identical bounds.
    """
    psi = rearrangement_mass(gamma, V.dimension, r)
    if V.kind == "cantor_window":
        lo = [Fraction(c) - Fraction(r) for c in y]
        hi = [Fraction(c) + Fraction(r) for c in y]
        low = rearrange_dec(_cantor_cube_sample(V, lo, hi, tail_as_value=False), psi)
        high = rearrange_dec(_cantor_cube_sample(V, lo, hi, tail_as_value=True), psi)
        return float(low), float(high)
    grid = build_cube_grid(np.asarray(y, dtype=float), float(r), grid_n)
    vals = evaluate_on_centers(V, grid)
    sample = WeightedSample(vals.tolist(), grid.weights.tolist())
    val = float(rearrange_dec(sample, float(psi)))
    return val, val


def single_rearrangement_value(
    V: PotentialSpec, y, r, gamma: GammaFunction, grid_n: int = DEFAULT_GRID_SINGLE
) -> float:
    """V*(gamma(r) vol(Q_r); Q_r(y)); the conservative (lower) evaluation."""
    return single_rearrangement_bounds(V, y, r, gamma, grid_n)[0]


def single_rearrangement_bracket(
    V: PotentialSpec, y, r, gamma: GammaFunction, grid_n: int
) -> tuple[float, float, float]:
    """(value, value at psi + one cell mass, value at psi - one cell mass).

    The bracket quantifies the one-mass-quantum sensitivity of the grid
    evaluation; refining the grid should stay within it for tame potentials.
    """
    psi = float(rearrangement_mass(gamma, V.dimension, r))
    grid = build_cube_grid(np.asarray(y, dtype=float), float(r), grid_n)
    vals = evaluate_on_centers(V, grid)
    sample = WeightedSample(vals.tolist(), grid.weights.tolist())
    q = float(grid.weights.max())
    total = float(grid.weights.sum())
    val = float(rearrange_dec(sample, psi))
    hi_mass = min(psi + q, total)
    lo_mass = max(psi - q, q / 2)
    return val, float(rearrange_dec(sample, hi_mass)), float(rearrange_dec(sample, lo_mass))


# -- repeated rearrangement --------------------------------------------------------


def _uniform_count(psi, cell_mass) -> int:
    """Smallest k with k * cell_mass >= psi, computed exactly."""
    ratio = Fraction(psi) / Fraction(cell_mass)
    return max(1, -(-ratio.numerator // ratio.denominator))


def _atom_matrix(rows: AtomSet, cols: AtomSet) -> np.ndarray:
    """sqrt-value kernel matrix between two atom sets with coincident sentinels."""
    d = rows.positions.shape[1]
    sr = np.sqrt(np.asarray(rows.values))
    sc = np.sqrt(np.asarray(cols.values))
    diff = rows.positions[:, None, :] - cols.positions[None, :, :]
    dist = np.linalg.norm(diff, axis=2)
    kern = np.zeros_like(dist)
    nz = dist > 0
    kern[nz] = dist[nz] ** (2.0 - d)
    entries = sr[:, None] * kern * sc[None, :]
    coincident = ~nz
    if coincident.any():
        finite_max = float(entries[nz].max()) if nz.any() else 1.0
        entries[coincident] = SENTINEL_FACTOR * finite_max
    return entries


def _cube_atoms(V: PotentialSpec, lo, hi, n_axis: int, n_cross: int) -> AtomSet:
    """Atom decomposition of a cube: window-adapted for the closed form,
    uniform-grid otherwise (zero-valued cells lumped)."""
    if V.kind == "cantor_window":
        return window_atoms(V, lo, hi, n_axis=n_axis, n_cross=n_cross)
    d = V.dimension
    center = [float((a + b) / 2) for a, b in zip(lo, hi)]
    r = float(hi[0] - lo[0]) / 2
    grid = build_cube_grid(center, r, n_axis)
    vals = evaluate_on_centers(V, grid)
    cell_mass = Fraction(float(grid.weights[0]))
    positive = vals > 0
    positions = grid.centers[positive]
    masses = tuple(cell_mass for _ in range(int(positive.sum())))
    values = tuple(float(v) for v in vals[positive])
    zero = cell_mass * int((~positive).sum())
    return AtomSet(positions, masses, values, zero, cell_mass * len(grid))


def _repeated_from_atoms(rows: AtomSet, cols: AtomSet, psi) -> float:
    """Repeated rearrangement of the two-point matrix over two atom sets at mass psi.

    Exact superlevel masses: rational atom masses are scaled to a common
    integer denominator so cumulative sums stay exact in int64.
    """
    if len(rows) == 0 or len(cols) == 0:
        return 0.0
    entries = _atom_matrix(rows, cols)
    row_masses = list(rows.masses) + ([rows.zero_mass] if rows.zero_mass else [])
    col_masses = list(cols.masses) + ([cols.zero_mass] if cols.zero_mass else [])
    nr, nc = len(rows), len(cols)
    full = np.zeros((len(row_masses), len(col_masses)))
    full[:nr, :nc] = entries
    psi = Fraction(psi)
    den = common_denominator([Fraction(m) for m in row_masses + col_masses] + [psi])
    row_int = [int(Fraction(m) * den) for m in row_masses]
    col_int = [int(Fraction(m) * den) for m in col_masses]
    t_int = int(psi * den)
    if max(sum(row_int), sum(col_int)) >= 1 << 62:
        matrix = Matrix2D(full, row_masses, col_masses)
        return float(repeated_rearrange(matrix, psi, psi))
    matrix = Matrix2D(full, row_int, col_int)
    return float(repeated_rearrange(matrix, t_int, t_int))


def repeated_rearrangement_value(
    V: PotentialSpec,
    y,
    r,
    gamma: GammaFunction,
    grid_n: int = DEFAULT_GRID_REPEATED,
    n_axis: int = 6,
    n_cross: int = 6,
) -> float:
    """(Y*)*(gamma(r) vol; Q_r(y)) for Y = sqrt(V(x)) |x-t|^(2-d) sqrt(V(t))."""
    psi = rearrangement_mass(gamma, V.dimension, r)
    if V.kind == "cantor_window":
        lo = [Fraction(c) - Fraction(r) for c in y]
        hi = [Fraction(c) + Fraction(r) for c in y]
        atoms = window_atoms(V, lo, hi, n_axis=n_axis, n_cross=n_cross)
        return _repeated_from_atoms(atoms, atoms, psi)
    grid = build_cube_grid(np.asarray(y, dtype=float), float(r), grid_n)
    km = riesz_potential_matrix(V, grid, grid)
    count = _uniform_count(psi, Fraction(float(grid.weights[0])))
    n_cells = len(grid)
    matrix = Matrix2D(km.entries, (1,) * n_cells, (1,) * n_cells)
    return float(repeated_rearrange(matrix, count, count))


# -- m-adic criteria ---------------------------------------------------------------


def _madic_mass(gamma: GammaFunction, d: int, m: int, n: int) -> Number:
    h = Fraction(1, m**n)
    return rearrangement_mass(gamma, d, h)


def madic_single_value(
    V: PotentialSpec,
    ell: Sequence[int],
    n: int,
    system: DenseSystem,
    gamma: GammaFunction,
    grid_n: int = DEFAULT_GRID_SINGLE,
) -> float:
    """Min over admissible m-adic cubes of the single-rearrangement value.

    `system` is the untranslated dense system; it is shifted to the lattice
    cell l.  Raises when no cube of level at most n is admissible.
    """
    sys_l = system.translate(tuple(Fraction(int(c)) for c in ell))
    admissible = xi_admissible_union(sys_l, n)
    if not admissible:
        raise ValueError("no admissible m-adic cube at this level")
    h = Fraction(1, system.m**n)
    psi = _madic_mass(gamma, V.dimension, system.m, n)
    best = None
    for xi in admissible:
        if V.kind == "cantor_window":
            lo = [c - h for c in xi]
            hi = [c + h for c in xi]
            val = float(rearrange_dec(_cantor_cube_sample(V, lo, hi, tail_as_value=False), psi))
        else:
            val = single_rearrangement_value(V, [float(c) for c in xi], float(h), gamma, grid_n)
        if best is None or val < best:
            best = val
    return best


def _pair_within_distance(xi, eta, bound_sq: Fraction) -> bool:
    return sum((a - b) ** 2 for a, b in zip(xi, eta)) <= bound_sq


def _canonical_shift(xi, eta):
    """Pair-class key: first-axis offset signed, cross offsets as sorted magnitudes.

    Valid when the window pattern is cube-translation invariant (period at
    least as coarse as the cube lattice): cross axes are symmetric under
    reflection and permutation, the oscillating first axis is not.
    """
    delta = tuple(a - b for a, b in zip(xi, eta))
    return (delta[0], tuple(sorted(abs(c) for c in delta[1:])))


def madic_double_value(
    V: PotentialSpec,
    ell: Sequence[int],
    n: int,
    system: DenseSystem,
    gamma: GammaFunction,
    n_axis: int = 6,
    n_cross: int = 6,
    return_pairs: bool = False,
):
    """Min over admissible close m-adic cube pairs of the repeated rearrangement.

    Pairs obey |xi - eta| <= (sqrt(d)/theta) m^(-(n-2)) (exact squared-norm
    comparison).  For the closed-form potential with period exponent >= n the
    value depends only on the pair's lattice offset, so offset classes are
    evaluated once.
    """
    d = V.dimension
    sys_l = system.translate(tuple(Fraction(int(c)) for c in ell))
    admissible = sorted(xi_admissible_union(sys_l, n))
    if not admissible:
        raise ValueError("no admissible m-adic cube at this level")
    h = Fraction(1, system.m**n)
    psi = _madic_mass(gamma, V.dimension, system.m, n)
    bound_sq = Fraction(d) / Fraction(system.theta) ** 2 * Fraction(1, system.m ** (2 * (n - 2)))

    p = max(abs(int(c)) for c in ell) + 1
    shareable = V.kind == "cantor_window" and p >= n

    atom_cache: dict = {}

    def atoms_for(xi) -> AtomSet:
        if xi not in atom_cache:
            lo = [c - h for c in xi]
            hi = [c + h for c in xi]
            atom_cache[xi] = _cube_atoms(V, lo, hi, n_axis, n_cross)
        return atom_cache[xi]

    value_cache: dict = {}
    best = None
    best_pair = None
    evaluated = []
    for i, xi in enumerate(admissible):
        for eta in admissible[i:]:
            if not _pair_within_distance(xi, eta, bound_sq):
                continue
            key = _canonical_shift(xi, eta) if shareable else (xi, eta)
            val = value_cache.get(key)
            if val is None:
                val = _repeated_from_atoms(atoms_for(xi), atoms_for(eta), psi)
                value_cache[key] = val
            evaluated.append(((xi, eta), val))
            if best is None or val < best:
                best = val
                best_pair = (xi, eta)
    if best is None:
        raise ValueError("no admissible cube pair within the distance constraint")
    if return_pairs:
        return best, best_pair, evaluated
    return best


# -- capacitary brute-force check ----------------------------------------------------


def capacitary_bruteforce_check(
    V: PotentialSpec,
    space: DiscreteMeasureSpace,
    mu: DensityMeasure,
    gamma: Number,
    theta: Number,
    kernel_spec: Optional[KernelSpec] = None,
    cell_limit: int = 12,
) -> tuple[float, float]:
    """Exhaustive lower route vs rearrangement upper route of the capacitary chain.

    lhs: exact min over subsets F with mu(F) <= (gamma/theta) mu(X) of the
    quadratic form sum_{i,j not in F} sqrt(V_i) sqrt(V_j) K_mu[i,j] les_i les_j.
    rhs: ((theta-1) psi / theta)^2 times the repeated mu-rearrangement of
    sqrt(V) alpha K_mu alpha sqrt(V) at psi = gamma mu(X).

    The removal budget gamma/theta (not gamma) is what makes lhs >= rhs an
    identity-backed inequality; with budget gamma it is false already for
    indicator potentials of mass exactly gamma mu(X).
    """
    if not 0 < gamma < 1:
        raise ValueError("gamma must lie in (0, 1)")
    if not theta > 1:
        raise ValueError("theta must exceed 1")
    m = len(space)
    if m > cell_limit:
        raise ValueError(f"too many cells for subset enumeration: {m} > {cell_limit}")
    if kernel_spec is None:
        kernel_spec = KernelSpec("riesz", space.dimension)

    kmat = k_mu_matrix(kernel_spec, space, mu).entries
    sv = np.sqrt(evaluate_on_centers(V, space))
    w = sv * space.weights
    quad = w[:, None] * kmat * w[None, :]

    mu_masses = mu.cell_masses
    total_mu = float(mu_masses.sum())
    budget = float(gamma) / float(theta) * total_mu
    lhs = None
    for mask in range(1 << m):
        removed = [i for i in range(m) if mask >> i & 1]
        if float(mu_masses[removed].sum()) > budget * (1 + 1e-12):
            continue
        kept = [i for i in range(m) if not mask >> i & 1]
        val = float(quad[np.ix_(kept, kept)].sum())
        if lhs is None or val < lhs:
            lhs = val

    psi = float(gamma) * total_mu
    xmat = x_mu_matrix(kernel_spec, V, space, mu).entries
    matrix = Matrix2D(xmat, mu_masses.tolist(), mu_masses.tolist())
    rep = float(repeated_rearrange(matrix, psi, psi))
    factor = (float(theta) - 1) * psi / float(theta)
    return lhs, factor**2 * rep


# -- divergence sweeps ----------------------------------------------------------------


@dataclass
class CriterionReport:
    criterion_id: str
    centers: list
    values: list
    window_of: list            # window index per center
    window_minima: list
    diverging: bool
    params: dict = field(default_factory=dict)


def _window_minima(values: Sequence[float], n_windows: int) -> tuple[list, list]:
    m = len(values)
    sizes = [m // n_windows + (1 if k < m % n_windows else 0) for k in range(n_windows)]
    minima = []
    window_of = []
    pos = 0
    for k, size in enumerate(sizes):
        chunk = values[pos : pos + size]
        minima.append(min(chunk))
        window_of.extend([k] * size)
        pos += size
    return window_of, minima


def divergence_sweep(
    criterion: str,
    V: PotentialSpec,
    centers: Sequence,
    params: dict,
    n_windows: int = 3,
    threads: int = 1,
) -> CriterionReport:
    """Evaluate a criterion along centers of strictly increasing sup-norm.

    The diverging flag is true iff the per-window minima strictly increase
    over at least three windows.
    """
    if len(centers) < n_windows or n_windows < 3:
        raise ValueError("need at least three windows and one center per window")
    norms = [max(abs(float(c)) for c in center) for center in centers]
    if any(a >= b for a, b in zip(norms, norms[1:])):
        raise ValueError("centers must strictly increase in sup-norm")

    def evaluate_center(center):
        if criterion == "single":
            return single_rearrangement_value(
                V, center, params["r"], params["gamma"], params.get("grid_n", DEFAULT_GRID_SINGLE)
            )
        if criterion == "single_upper":
            return single_rearrangement_bounds(
                V, center, params["r"], params["gamma"], params.get("grid_n", DEFAULT_GRID_SINGLE)
            )[1]
        if criterion == "repeated":
            return repeated_rearrangement_value(
                V, center, params["r"], params["gamma"], params.get("grid_n", DEFAULT_GRID_REPEATED)
            )
        if criterion == "madic_single":
            return madic_single_value(
                V, center, params["n"], params["system"], params["gamma"],
                params.get("grid_n", DEFAULT_GRID_SINGLE),
            )
        if criterion == "madic_double":
            return madic_double_value(
                V, center, params["n"], params["system"], params["gamma"],
                params.get("n_axis", 6), params.get("n_cross", 6),
            )
        raise ValueError(f"unknown criterion {criterion!r}")

    values = [float(v) for v in pmap(evaluate_center, centers, threads)]
    window_of, minima = _window_minima(values, n_windows)
    diverging = all(a < b for a, b in zip(minima, minima[1:]))
    public_params = {k: v for k, v in params.items() if k not in ("system", "gamma")}
    if "gamma" in params:
        g = params["gamma"]
        public_params["gamma_kind"] = g.kind
        public_params["gamma_alpha"] = str(g.alpha)
    return CriterionReport(
        criterion, [tuple(c) for c in centers], values, window_of, minima, diverging, public_params
    )


def sweep_centers_varying_radius(
    criterion: str,
    V: PotentialSpec,
    centers_and_radii: Sequence,
    gamma: GammaFunction,
    n_windows: int = 3,
    upper: bool = True,
) -> CriterionReport:
    """Single-rearrangement sweep with a per-center radius (shrinking-cube trails)."""
    values = []
    for center, r in centers_and_radii:
        lo, hi = single_rearrangement_bounds(V, center, r, gamma)
        values.append(hi if upper else lo)
    norms = [max(abs(float(c)) for c in center) for center, _ in centers_and_radii]
    if any(a >= b for a, b in zip(norms, norms[1:])):
        raise ValueError("centers must strictly increase in sup-norm")
    window_of, minima = _window_minima(values, n_windows)
    diverging = all(a < b for a, b in zip(minima, minima[1:]))
    return CriterionReport(
        criterion,
        [tuple(c) for c, _ in centers_and_radii],
        values,
        window_of,
        minima,
        diverging,
        {"radii": [str(r) for _, r in centers_and_radii], "gamma_alpha": str(gamma.alpha)},
    )
