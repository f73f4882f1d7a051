"""Maximal-type operators, the Riesz potential, BMO machinery, and commutators.

Every operator is a pure map from a grid function to new pointwise values.
Suprema over ball radii are discretized to a finite radius set; ball
integrals are midpoint sums over the cells whose centers fall in the ball,
normalized by the exact Euclidean ball volume (so balls clipped at the grid
boundary behave as if the function were extended by zero).

All operators evaluate either at the grid's own sample points (returning a
GridFunction) or at explicit probe coordinates via ``points=``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Callable, Sequence

import numpy as np

from .grid import GridFunction, sample

__all__ = [
    "OperatorKind",
    "OperatorSpec",
    "BmoSymbol",
    "ball_volume",
    "default_radius_set",
    "hl_maximal",
    "fractional_maximal",
    "riesz_potential",
    "commutator_mb",
    "commutator_mbl",
    "bmo_seminorm",
    "dyadic_cube_family",
    "log_abs_symbol",
    "apply_operator",
    "size_condition_profile",
    "verify_size_condition",
    "pointwise_kernel_constant",
]

_SPHERE_AREA = {2: 2.0 * math.pi, 3: 4.0 * math.pi}


def ball_volume(n: int, r: float) -> float:
    """Exact volume of the Euclidean ball of radius r in dimension n <= 3."""
    if n == 1:
        return 2.0 * r
    if n == 2:
        return math.pi * r * r
    if n == 3:
        return 4.0 * math.pi * r ** 3 / 3.0
    raise ValueError(f"unsupported dimension {n}")


def default_radius_set(f: GridFunction, per_octave: int = 4) -> np.ndarray:
    """Geometric radii 2^(i/per_octave) from half the smallest cell width to the grid diameter.

    The sequence is anchored at integer powers of two, so dyadic radii appear
    exactly; starting at half the smallest width keeps the small-ball average
    at a sample point equal to the sample value.
    """
    if per_octave < 1:
        raise ValueError("need per_octave >= 1")
    r_min = min(float(np.min(ax.widths)) for ax in f.axes) / 2.0
    lo, hi = f.bounding_box()
    r_max = float(np.sqrt(np.sum((hi - lo) ** 2)))
    i_lo = math.floor(per_octave * math.log2(r_min))
    i_hi = math.ceil(per_octave * math.log2(r_max))
    return 2.0 ** (np.arange(i_lo, i_hi + 1) / per_octave)


@dataclass(eq=False)
class BmoSymbol:
    """A BMO symbol b: its samples, an optional closed form, and a seminorm estimate.

    ``fn`` (broadcastable coordinate arrays -> values) is required only to
    evaluate commutators at off-grid probe points.
    """

    values: GridFunction
    fn: Callable[..., np.ndarray] | None = None
    seminorm_estimate: float | None = None


def log_abs_symbol(skeleton: GridFunction) -> BmoSymbol:
    """The canonical unbounded BMO symbol b(x) = log|x| sampled on the grid."""

    def fn(*coords):
        sq = sum(np.asarray(c, dtype=float) ** 2 for c in coords)
        return 0.5 * np.log(sq)

    return BmoSymbol(values=sample(fn, skeleton), fn=fn)


def _eval_points(f: GridFunction, points) -> tuple[np.ndarray, bool]:
    """Normalize the evaluation-point argument; True means 'the grid itself'."""
    if points is None:
        return f.flat_points, True
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts.reshape(-1, 1) if f.dim == 1 else pts.reshape(1, -1)
    if pts.ndim != 2 or pts.shape[1] != f.dim:
        raise ValueError(f"points must have shape (m, {f.dim})")
    return pts, False


def _distances(src: np.ndarray, x: np.ndarray, dim: int) -> np.ndarray:
    if dim == 1:
        return np.abs(src[:, 0] - x[0])
    return np.sqrt(np.sum((src - x) ** 2, axis=1))


def _radius_array(f: GridFunction, radius_set) -> np.ndarray:
    radii = default_radius_set(f) if radius_set is None else np.asarray(radius_set, dtype=float)
    if radii.size == 0:
        raise ValueError("empty radius set")
    if np.any(radii <= 0) or not np.all(np.isfinite(radii)):
        raise ValueError("radii must be positive and finite")
    return radii


def _ball_maxima(
    f: GridFunction,
    radii: np.ndarray,
    pts: np.ndarray,
    summand_for,
    vol_exponent: float | None,
) -> np.ndarray:
    """max over r of sum(summand within B(x,r)) times |B|^vol_exponent.

    ``vol_exponent=None`` divides by the ball volume instead of multiplying
    by a power, keeping plain averages bitwise identical to s/volume.
    """
    src = f.flat_points
    out = np.empty(pts.shape[0])
    for i in range(pts.shape[0]):
        d = _distances(src, pts[i], f.dim)
        g = summand_for(i, pts[i])
        best = 0.0
        for r in radii:
            s = float(np.sum(g[d <= r]))
            if s == 0.0:
                continue
            vol = ball_volume(f.dim, float(r))
            v = s / vol if vol_exponent is None else s * vol ** vol_exponent
            if v > best:
                best = v
        out[i] = best
    return out


def fractional_maximal(
    f: GridFunction,
    l: float,
    radius_set: Sequence[float] | None = None,
    points=None,
):
    """Fractional maximal operator: sup over r of |B(x,r)|^(l/n - 1) * int_B |f|.

    ``l = 0`` is the Hardy-Littlewood maximal operator (and shares its exact
    arithmetic: the average is computed as sum/volume).
    """
    l = float(l)
    if not 0.0 <= l < f.dim:
        raise ValueError(f"need 0 <= l < n = {f.dim}, got l = {l}")
    radii = _radius_array(f, radius_set)
    pts, as_grid = _eval_points(f, points)
    g = np.abs(f.values).ravel() * f.weights.ravel()
    exponent = None if l == 0.0 else l / f.dim - 1.0
    out = _ball_maxima(f, radii, pts, lambda i, x: g, exponent)
    return f.with_values(out.reshape(f.shape)) if as_grid else out


def hl_maximal(
    f: GridFunction,
    radius_set: Sequence[float] | None = None,
    points=None,
):
    """Hardy-Littlewood maximal operator: sup over r of the ball average of |f|."""
    return fractional_maximal(f, 0.0, radius_set=radius_set, points=points)


def _self_kernel_averages(f: GridFunction, l: float) -> np.ndarray:
    """Average of |x - y|^(l-n) over each cell, for a target at the cell center.

    In 1-D this is the exact integral mean (h/2)^(l-1) / l.  For n >= 2 the
    cell average splits into the closed-form radial integral over the
    inscribed ball plus the kernel at the inscribed radius on the remainder.
    """
    hw = f.cell_halfwidths
    if f.dim == 1:
        h2 = hw[:, 0]
        return h2 ** (l - 1.0) / l
    vol = np.prod(2.0 * hw, axis=1)
    rho = np.min(hw, axis=1)
    sigma = _SPHERE_AREA[f.dim]
    vball = np.array([ball_volume(f.dim, float(r)) for r in rho])
    return (sigma * rho ** l / l + (vol - vball) * rho ** (l - f.dim)) / vol


def riesz_potential(f: GridFunction, l: float, points=None):
    """Riesz potential: cellwise quadrature of the kernel |x - y|^(l - n), 0 < l < n.

    Off-cell targets use the kernel at the source cell center; a target
    falling inside a source cell uses the analytically averaged kernel for
    that cell, which is finite because the kernel is locally integrable.
    """
    l = float(l)
    if not 0.0 < l < f.dim:
        raise ValueError(f"need 0 < l < n = {f.dim}, got l = {l}")
    pts, as_grid = _eval_points(f, points)
    src = f.flat_points
    contrib = f.values.ravel() * f.weights.ravel()
    diff = pts[:, None, :] - src[None, :, :]
    if f.dim == 1:
        dist = np.abs(diff[:, :, 0])
    else:
        dist = np.sqrt(np.sum(diff ** 2, axis=2))
    with np.errstate(divide="ignore"):
        kernel = dist ** (l - f.dim)
    inside = np.all(np.abs(diff) <= f.cell_halfwidths[None, :, :], axis=2)
    if np.any(inside):
        kernel = np.where(inside, _self_kernel_averages(f, l)[None, :], kernel)
    out = kernel @ contrib
    return f.with_values(out.reshape(f.shape)) if as_grid else out


def _symbol_at(symbol: BmoSymbol, f: GridFunction, pts: np.ndarray, as_grid: bool) -> np.ndarray:
    if as_grid:
        return symbol.values.values.ravel()
    if symbol.fn is None:
        raise ValueError("off-grid evaluation needs a symbol with a callable form")
    vals = np.asarray(symbol.fn(*(pts[:, a] for a in range(f.dim))), dtype=float)
    return np.broadcast_to(vals, (pts.shape[0],))


def commutator_mb(
    f: GridFunction,
    symbol: BmoSymbol,
    radius_set: Sequence[float] | None = None,
    points=None,
):
    """Maximal commutator: sup over r of |B(x,r)|^(-1) int_B |b(x)-b(y)| |f(y)| dy."""
    if not symbol.values.same_grid(f):
        raise ValueError("symbol must be sampled on the function's grid")
    radii = _radius_array(f, radius_set)
    pts, as_grid = _eval_points(f, points)
    b_src = symbol.values.values.ravel()
    b_at = _symbol_at(symbol, f, pts, as_grid)
    fw = np.abs(f.values).ravel() * f.weights.ravel()

    def summand(i, x):
        return np.abs(b_at[i] - b_src) * fw

    out = _ball_maxima(f, radii, pts, summand, None)
    return f.with_values(out.reshape(f.shape)) if as_grid else out


def commutator_mbl(
    f: GridFunction,
    symbol: BmoSymbol,
    l: float,
    radius_set: Sequence[float] | None = None,
    points=None,
):
    """Fractional maximal commutator with normalization |B(x,r)|^(-1/l'), 1/l + 1/l' = 1.

    Requires l > 1; as l grows the normalization tends to |B|^(-1) and the
    output approaches the plain maximal commutator.
    """
    l = float(l)
    if not l > 1.0:
        raise ValueError(f"need l > 1, got {l}")
    if not symbol.values.same_grid(f):
        raise ValueError("symbol must be sampled on the function's grid")
    radii = _radius_array(f, radius_set)
    pts, as_grid = _eval_points(f, points)
    b_src = symbol.values.values.ravel()
    b_at = _symbol_at(symbol, f, pts, as_grid)
    fw = np.abs(f.values).ravel() * f.weights.ravel()

    def summand(i, x):
        return np.abs(b_at[i] - b_src) * fw

    out = _ball_maxima(f, radii, pts, summand, 1.0 / l - 1.0)
    return f.with_values(out.reshape(f.shape)) if as_grid else out


def bmo_seminorm(b: GridFunction, cube_family: Sequence[tuple]) -> float:
    """Largest mean oscillation of b over a finite family of axis-aligned cubes.

    Each cube is a ``(center, side)`` pair and must lie inside the grid.
    Cube means use the quadrature mass of the member cells, so a cube whose
    faces fall between cell centers is averaged over exactly the sampled
    cells it contains.
    """
    cubes = list(cube_family)
    if not cubes:
        raise ValueError("empty cube family")
    pts = b.flat_points
    vals = b.values.ravel()
    w = b.weights.ravel()
    lo, hi = b.bounding_box()
    span = float(np.max(hi - lo))
    best = 0.0
    for center, side in cubes:
        c = np.atleast_1d(np.asarray(center, dtype=float))
        side = float(side)
        if c.shape != (b.dim,):
            raise ValueError(f"cube center must have {b.dim} coordinates")
        if side <= 0:
            raise ValueError("cube side must be positive")
        if np.any(c - side / 2 < lo - 1e-12 * span) or np.any(c + side / 2 > hi + 1e-12 * span):
            raise ValueError("cube extends outside the grid")
        member = np.all(np.abs(pts - c) <= side / 2, axis=1)
        mass = float(np.sum(w[member]))
        if mass == 0.0:
            raise ValueError("cube contains no sample points")
        mean = float(np.sum(vals[member] * w[member])) / mass
        osc = float(np.sum(np.abs(vals[member] - mean) * w[member])) / mass
        best = max(best, osc)
    return best


def dyadic_cube_family(
    f: GridFunction, k_lo: int, k_hi: int, offsets: Sequence[float] = (0.0, 0.5, 1.0, 2.0)
) -> list[tuple[np.ndarray, float]]:
    """Axis-aligned cubes at dyadic sides 2^k, centered near the origin and shifted along x1.

    Cubes that would stick out of the grid are dropped.
    """
    lo, hi = f.bounding_box()
    span = float(np.max(hi - lo))
    cubes = []
    for k in range(k_lo, k_hi + 1):
        side = 2.0 ** k
        for off in offsets:
            for sign in (1.0, -1.0) if off != 0.0 else (1.0,):
                c = np.zeros(f.dim)
                c[0] = sign * off * side
                if np.all(c - side / 2 >= lo - 1e-12 * span) and np.all(
                    c + side / 2 <= hi + 1e-12 * span
                ):
                    cubes.append((c, side))
    return cubes


class OperatorKind(str, Enum):
    HL_MAXIMAL = "hl_maximal"
    FRACTIONAL_MAXIMAL = "fractional_maximal"
    RIESZ_POTENTIAL = "riesz_potential"
    COMMUTATOR_MB = "commutator_mb"
    COMMUTATOR_MBL = "commutator_mbl"


_MAXIMAL_KINDS = {
    OperatorKind.HL_MAXIMAL,
    OperatorKind.FRACTIONAL_MAXIMAL,
    OperatorKind.COMMUTATOR_MB,
    OperatorKind.COMMUTATOR_MBL,
}


@dataclass(frozen=True)
class OperatorSpec:
    """Which operator to apply, with its order, BMO symbol, and radius set."""

    kind: OperatorKind
    l: float | None = None
    symbol: BmoSymbol | None = None
    radius_set: tuple[float, ...] | None = None

    def __post_init__(self):
        kind = OperatorKind(self.kind)
        object.__setattr__(self, "kind", kind)
        if kind in (OperatorKind.FRACTIONAL_MAXIMAL, OperatorKind.RIESZ_POTENTIAL,
                    OperatorKind.COMMUTATOR_MBL) and self.l is None:
            raise ValueError(f"{kind.value} requires the order l")
        if kind is OperatorKind.COMMUTATOR_MBL and self.l is not None and self.l <= 1.0:
            raise ValueError("commutator_mbl requires l > 1")
        if kind in (OperatorKind.COMMUTATOR_MB, OperatorKind.COMMUTATOR_MBL) and self.symbol is None:
            raise ValueError(f"{kind.value} requires a BMO symbol")

    def describe(self) -> str:
        extra = "" if self.l is None else f"(l={self.l!r})"
        return f"{self.kind.value}{extra}"


def apply_operator(spec: OperatorSpec, f: GridFunction, points=None, radius_set=None):
    """Dispatch an OperatorSpec; ``radius_set`` overrides the spec's own set."""
    radii = radius_set if radius_set is not None else spec.radius_set
    kind = spec.kind
    if kind is OperatorKind.HL_MAXIMAL:
        return hl_maximal(f, radius_set=radii, points=points)
    if kind is OperatorKind.FRACTIONAL_MAXIMAL:
        return fractional_maximal(f, spec.l, radius_set=radii, points=points)
    if kind is OperatorKind.RIESZ_POTENTIAL:
        return riesz_potential(f, spec.l, points=points)
    if kind is OperatorKind.COMMUTATOR_MB:
        return commutator_mb(f, spec.symbol, radius_set=radii, points=points)
    if kind is OperatorKind.COMMUTATOR_MBL:
        return commutator_mbl(f, spec.symbol, spec.l, radius_set=radii, points=points)
    raise ValueError(f"unknown operator kind {kind!r}")


def _decay_order(spec: OperatorSpec) -> float:
    if spec.kind is OperatorKind.HL_MAXIMAL:
        return 0.0
    if spec.kind in (OperatorKind.FRACTIONAL_MAXIMAL, OperatorKind.RIESZ_POTENTIAL):
        return float(spec.l)
    raise ValueError(
        "size conditions are certified for the maximal, fractional maximal, and "
        "Riesz potential kinds only"
    )


def size_condition_profile(
    spec: OperatorSpec,
    j: int,
    f: GridFunction,
    probe_points,
    zone: str,
) -> np.ndarray:
    """Per-probe empirical constants of the far/near size conditions.

    For f supported in the annulus A_j the far-zone constant at a probe x
    with |x| >= 2^(j+1) is |Tf(x)| |x|^(n-l) / ||f||_L1, and the near-zone
    constant at |x| <= 2^(j-2) is |Tf(x)| 2^(j(n-l)) / ||f||_L1 (l = 0 for
    the plain maximal operator).  A refinement-stable profile certifies the
    condition empirically.
    """
    if zone not in ("far", "near"):
        raise ValueError("zone must be 'far' or 'near'")
    l_eff = _decay_order(spec)
    support = np.abs(f.values) > 0
    pts, _ = _eval_points(f, probe_points)
    probe_r = np.abs(pts[:, 0]) if f.dim == 1 else np.sqrt(np.sum(pts ** 2, axis=1))
    if not np.any(support):
        return np.zeros(pts.shape[0])
    r_sup = f.radii[support]
    if np.any(r_sup < 2.0 ** (j - 1)) or np.any(r_sup >= 2.0 ** j):
        raise ValueError(f"function is not supported in the annulus A_{j}")
    if zone == "far":
        if np.any(probe_r < 2.0 ** (j + 1)):
            raise ValueError("far-zone probes need |x| >= 2^(j+1); one lies in the excluded middle")
    else:
        if np.any(probe_r > 2.0 ** (j - 2)):
            raise ValueError("near-zone probes need |x| <= 2^(j-2); one lies in the excluded middle")
    radii = None
    if spec.kind in _MAXIMAL_KINDS:
        base = _radius_array(f, spec.radius_set)
        # Add the exact ball radii at which a probe's ball meets the annulus
        # edges: the maximal average of an annulus indicator peaks there.
        extras = []
        for rp in probe_r:
            for edge in (2.0 ** (j - 1), 2.0 ** j):
                extras.extend([abs(rp - edge), rp + edge])
        extras = [r for r in extras if r > 0]
        radii = np.unique(np.concatenate([base, np.asarray(extras)]))
    values = np.abs(apply_operator(spec, f, points=pts, radius_set=radii))
    fnorm1 = float(np.sum(np.abs(f.values) * f.weights))
    if zone == "far":
        factor = probe_r ** (f.dim - l_eff)
    else:
        factor = 2.0 ** (j * (f.dim - l_eff))
    return values * factor / fnorm1


def verify_size_condition(
    spec: OperatorSpec, j: int, f: GridFunction, probe_points, zone: str
) -> float:
    """Empirical size-condition constant: the max of :func:`size_condition_profile`."""
    profile = size_condition_profile(spec, j, f, probe_points, zone)
    return float(np.max(profile)) if profile.size else 0.0


def pointwise_kernel_constant(
    spec: OperatorSpec, f: GridFunction, probe_points, l: float = 0.0
) -> float:
    """Empirical constant in |Tf(x)| <= C int |f(y)| |x-y|^(l-n) dy at off-support probes.

    Certifies the pointwise kernel-domination hypothesis satisfied by the
    maximal operator (l = 0) and by the fractional family (0 < l < n).
    """
    pts, _ = _eval_points(f, probe_points)
    support = np.abs(f.values).ravel() > 0
    if not np.any(support):
        return 0.0
    src = f.flat_points[support]
    fw = (np.abs(f.values).ravel() * f.weights.ravel())[support]
    best = 0.0
    tvals = np.abs(apply_operator(spec, f, points=pts))
    for i in range(pts.shape[0]):
        d = _distances(src, pts[i], f.dim)
        if np.any(d == 0.0):
            raise ValueError("probe points must lie off the support of f")
        denom = float(np.sum(fw * d ** (l - f.dim)))
        best = max(best, float(tvals[i]) / denom)
    return best
