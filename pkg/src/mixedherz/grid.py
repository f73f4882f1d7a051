"""Sampled functions on tensor-product grids with dyadic annulus structure.

Grids are axis-aligned tensor products of 1-D midpoint-rule cell layouts.
The dyadic constructor tiles each half-axis with one uniform block per
octave [2^(m-1), 2^m), so indicator functions of dyadic annuli integrate
exactly and the origin is never a sample point.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "GridError",
    "AxisGrid",
    "GridFunction",
    "DyadicDecomposition",
    "make_dyadic_grid",
    "uniform_axis",
    "sample",
    "restrict",
    "save_gridfunction",
    "load_gridfunction",
]

_SUPPORTED_DIMS = (1, 2, 3)


class GridError(ValueError):
    """A grid or grid function violates its construction contract."""


@dataclass(frozen=True)
class AxisGrid:
    """One coordinate axis: strictly increasing cell midpoints plus widths.

    ``points[i]`` is the midpoint of a cell of width ``widths[i]``; the sum
    of the widths must equal the covered interval length (midpoint-rule
    tiling, checked to 1e-12 relative).
    """

    points: np.ndarray
    widths: np.ndarray

    def __post_init__(self):
        pts = np.ascontiguousarray(self.points, dtype=float)
        wid = np.ascontiguousarray(self.widths, dtype=float)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "widths", wid)
        if pts.ndim != 1 or pts.size == 0 or wid.shape != pts.shape:
            raise GridError("points and widths must be 1-D arrays of equal, nonzero length")
        if not np.all(np.isfinite(pts)) or not np.all(np.isfinite(wid)):
            raise GridError("axis points and widths must be finite")
        if pts.size > 1 and not np.all(np.diff(pts) > 0):
            raise GridError("axis points must be strictly increasing")
        if not np.all(wid > 0):
            raise GridError("every cell width must be positive")
        covered = (pts[-1] + wid[-1] / 2.0) - (pts[0] - wid[0] / 2.0)
        total = float(np.sum(wid))
        if not math.isclose(total, covered, rel_tol=1e-12):
            raise GridError(
                f"cell widths sum to {total!r} but the covered interval has length {covered!r}"
            )
        pts.setflags(write=False)
        wid.setflags(write=False)

    def __len__(self) -> int:
        return self.points.size

    @property
    def lo(self) -> float:
        """Left edge of the covered interval."""
        return float(self.points[0] - self.widths[0] / 2.0)

    @property
    def hi(self) -> float:
        """Right edge of the covered interval."""
        return float(self.points[-1] + self.widths[-1] / 2.0)


def uniform_axis(lo: float, hi: float, cells: int) -> AxisGrid:
    """Axis with ``cells`` equal midpoint-rule cells covering [lo, hi]."""
    if not hi > lo:
        raise GridError("need hi > lo")
    if cells < 1:
        raise GridError("need at least one cell")
    h = (hi - lo) / cells
    points = lo + (np.arange(cells) + 0.5) * h
    return AxisGrid(points=points, widths=np.full(cells, h))


@dataclass(eq=False)
class GridFunction:
    """Real-valued samples on a tensor grid, one value per cell midpoint.

    ``values`` has shape ``(len(axes[0]), ..., len(axes[n-1]))`` with axis 0
    of the tensor corresponding to the first integration variable x1.
    Instances are treated as immutable; operations return new objects.
    """

    axes: tuple[AxisGrid, ...]
    values: np.ndarray

    def __post_init__(self):
        axes = tuple(self.axes)
        if len(axes) not in _SUPPORTED_DIMS:
            raise GridError(f"dimension must be one of {_SUPPORTED_DIMS}, got {len(axes)}")
        if not all(isinstance(ax, AxisGrid) for ax in axes):
            raise GridError("axes must be AxisGrid instances")
        vals = np.ascontiguousarray(self.values, dtype=float)
        expected = tuple(len(ax) for ax in axes)
        if vals.shape != expected:
            raise GridError(f"values shape {vals.shape} does not match axes {expected}")
        if not np.all(np.isfinite(vals)):
            raise GridError("values must be finite (no NaN/Inf)")
        vals.setflags(write=False)
        object.__setattr__(self, "axes", axes)
        object.__setattr__(self, "values", vals)

    @property
    def dim(self) -> int:
        return len(self.axes)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.values.shape

    @cached_property
    def weights(self) -> np.ndarray:
        """Tensor of per-cell quadrature weights (product of axis widths)."""
        w = self.axes[0].widths
        for ax in self.axes[1:]:
            w = np.multiply.outer(w, ax.widths)
        w.setflags(write=False)
        return w

    @cached_property
    def radii(self) -> np.ndarray:
        """Euclidean norm |x| of the full coordinate vector at every sample."""
        if self.dim == 1:
            r = np.abs(self.axes[0].points)
        else:
            sq = np.zeros(self.shape)
            for i, ax in enumerate(self.axes):
                shape = [1] * self.dim
                shape[i] = len(ax)
                sq = sq + (ax.points.reshape(shape)) ** 2
            r = np.sqrt(sq)
        r.setflags(write=False)
        return r

    @cached_property
    def flat_points(self) -> np.ndarray:
        """All sample coordinates as an (N, dim) array in C order."""
        mesh = np.meshgrid(*(ax.points for ax in self.axes), indexing="ij")
        pts = np.stack([m.ravel() for m in mesh], axis=1)
        pts.setflags(write=False)
        return pts

    @cached_property
    def cell_halfwidths(self) -> np.ndarray:
        """Per-sample half cell widths, shape (N, dim), matching flat_points."""
        mesh = np.meshgrid(*(ax.widths for ax in self.axes), indexing="ij")
        hw = np.stack([m.ravel() for m in mesh], axis=1) / 2.0
        hw.setflags(write=False)
        return hw

    def bounding_box(self) -> tuple[np.ndarray, np.ndarray]:
        lo = np.array([ax.lo for ax in self.axes])
        hi = np.array([ax.hi for ax in self.axes])
        return lo, hi

    def with_values(self, values: np.ndarray) -> "GridFunction":
        return GridFunction(axes=self.axes, values=values)

    def same_grid(self, other: "GridFunction") -> bool:
        return self.dim == other.dim and all(
            np.array_equal(a.points, b.points) and np.array_equal(a.widths, b.widths)
            for a, b in zip(self.axes, other.axes)
        )

    def __add__(self, other: "GridFunction") -> "GridFunction":
        if not isinstance(other, GridFunction) or not self.same_grid(other):
            raise GridError("can only add grid functions on identical grids")
        return self.with_values(self.values + other.values)

    def __mul__(self, c: float) -> "GridFunction":
        return self.with_values(self.values * float(c))

    __rmul__ = __mul__


_OUTSIDE = np.iinfo(np.int64).min


@dataclass(eq=False)
class DyadicDecomposition:
    """Annulus labels for a grid: sample x belongs to A_k iff 2^(k-1) <= |x| < 2^k.

    Labels are stored per sample; masks for distinct k are disjoint by
    construction and their union covers exactly the samples with
    2^(k_min-1) <= |x| < 2^k_max.
    """

    k_min: int
    k_max: int
    labels: np.ndarray

    def __post_init__(self):
        if self.k_min > self.k_max:
            raise GridError("need k_min <= k_max")
        lab = np.ascontiguousarray(self.labels, dtype=np.int64)
        lab.setflags(write=False)
        object.__setattr__(self, "labels", lab)

    @classmethod
    def from_grid(cls, grid: GridFunction, k_min: int, k_max: int) -> "DyadicDecomposition":
        if k_min > k_max:
            raise GridError("need k_min <= k_max")
        boundaries = 2.0 ** np.arange(k_min - 1, k_max + 1)
        # searchsorted keeps the half-open convention consistent with direct
        # comparisons: index i means 2^(k_min-2+i) <= r < 2^(k_min-1+i).
        idx = np.searchsorted(boundaries, grid.radii, side="right")
        labels = (k_min - 1 + idx).astype(np.int64)
        labels[(idx == 0) | (idx == boundaries.size)] = _OUTSIDE
        return cls(k_min=k_min, k_max=k_max, labels=labels)

    @property
    def annuli(self) -> range:
        return range(self.k_min, self.k_max + 1)

    def mask(self, k: int) -> np.ndarray:
        if not self.k_min <= k <= self.k_max:
            raise GridError(f"annulus index {k} outside [{self.k_min}, {self.k_max}]")
        return self.labels == k

    @property
    def coverage_mask(self) -> np.ndarray:
        """Union of all annulus masks."""
        return self.labels != _OUTSIDE


def _dyadic_axis(k_min: int, k_max: int, cells_per_block: int) -> AxisGrid:
    """Symmetric axis over [-2^k_max, 2^k_max], uniform cells within each octave.

    The positive half is the central block [0, 2^(k_min-1)) followed by the
    octaves [2^(m-1), 2^m) for m = k_min..k_max, each split into
    ``cells_per_block`` equal cells.
    """
    edges = [0.0] + [2.0 ** m for m in range(k_min - 1, k_max + 1)]
    pos_points = []
    pos_widths = []
    for left, right in zip(edges[:-1], edges[1:]):
        h = (right - left) / cells_per_block
        if right + h == right:  # resolution below float64 granularity at this scale
            raise GridError(
                "dyadic range too wide: 2^(k_min-1) underflows the grid resolution"
            )
        pos_points.append(left + (np.arange(cells_per_block) + 0.5) * h)
        pos_widths.append(np.full(cells_per_block, h))
    pp = np.concatenate(pos_points)
    pw = np.concatenate(pos_widths)
    if 2.0 ** k_max + pw[0] == 2.0 ** k_max:
        raise GridError("dyadic range too wide: 2^(k_min-1) underflows the grid resolution")
    points = np.concatenate([-pp[::-1], pp])
    widths = np.concatenate([pw[::-1], pw])
    return AxisGrid(points=points, widths=widths)


def make_dyadic_grid(
    n: int, k_min: int, k_max: int, samples_per_octave: int
) -> tuple[GridFunction, DyadicDecomposition]:
    """Build a zero-valued grid skeleton plus its dyadic annulus decomposition.

    Each axis covers [-2^k_max, 2^k_max] with per-octave uniform cells; the
    per-octave cell count starts at ``samples_per_octave`` and is doubled (at
    most a few times) until every annulus A_k, k in [k_min, k_max], holds at
    least ``samples_per_octave**n`` samples.

    Parameters
    ----------
    n : int
        Dimension, one of 1, 2, 3.
    k_min, k_max : int
        Annulus index range (k_min <= k_max).
    samples_per_octave : int
        Per-octave resolution, at least 2.

    Returns
    -------
    (GridFunction, DyadicDecomposition)
        The skeleton has all-zero values; sample expressions onto it with
        :func:`sample`.
    """
    if n not in _SUPPORTED_DIMS:
        raise GridError(f"dimension must be one of {_SUPPORTED_DIMS}, got {n}")
    if k_min > k_max:
        raise GridError("need k_min <= k_max")
    if samples_per_octave < 2:
        raise GridError("need samples_per_octave >= 2")
    required = samples_per_octave ** n
    cells = int(samples_per_octave)
    for _ in range(8):
        axis = _dyadic_axis(k_min, k_max, cells)
        grid = GridFunction(axes=(axis,) * n, values=np.zeros((len(axis),) * n))
        decomp = DyadicDecomposition.from_grid(grid, k_min, k_max)
        counts = [int(np.count_nonzero(decomp.mask(k))) for k in decomp.annuli]
        if min(counts) >= required:
            return grid, decomp
        cells *= 2
    raise GridError("could not reach the requested per-annulus sample count")


def sample(expr: Callable[..., np.ndarray], skeleton: GridFunction) -> GridFunction:
    """Evaluate a pointwise expression on every grid point of the skeleton.

    ``expr`` receives one broadcastable coordinate array per axis and must
    return finite values (the dyadic grid never places a sample at the
    origin, so |x|^(-beta) and log|x| are safe).
    """
    mesh = np.meshgrid(*(ax.points for ax in skeleton.axes), indexing="ij")
    vals = np.asarray(expr(*mesh), dtype=float)
    vals = np.broadcast_to(vals, skeleton.shape)
    if not np.all(np.isfinite(vals)):
        raise GridError("sampled expression produced non-finite values")
    return skeleton.with_values(np.array(vals))


def restrict(f: GridFunction, mask: np.ndarray) -> GridFunction:
    """Zero out f outside the mask (multiplication by a characteristic function)."""
    mask = np.asarray(mask)
    if mask.shape != f.shape:
        raise GridError(f"mask shape {mask.shape} does not match values shape {f.shape}")
    return f.with_values(np.where(mask, f.values, 0.0))


# -- serialization ------------------------------------------------------------
#
# Layout (documented contract): a text CSV whose first line is the comment
#   # mixedherz-gridfunction v1 dim=<n>
# followed by a header row x1..xn,w1..wn,value and one row per sample in C
# order of the value tensor.  Floats are written with repr(), which is
# round-trip lossless for 64-bit floats.


def save_gridfunction(f: GridFunction, path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(f"# mixedherz-gridfunction v1 dim={f.dim}\n")
        writer = csv.writer(fh)
        names = [f"x{i + 1}" for i in range(f.dim)] + [f"w{i + 1}" for i in range(f.dim)]
        writer.writerow(names + ["value"])
        pts = f.flat_points
        hws = f.cell_halfwidths * 2.0
        flat = f.values.ravel()
        for i in range(flat.size):
            row = [repr(x) for x in pts[i]] + [repr(w) for w in hws[i]] + [repr(flat[i])]
            writer.writerow(row)


def load_gridfunction(path) -> GridFunction:
    with open(path, newline="") as fh:
        head = fh.readline()
        if not head.startswith("# mixedherz-gridfunction v1"):
            raise GridError("not a mixedherz gridfunction file")
        dim = int(head.strip().rsplit("dim=", 1)[1])
        reader = csv.reader(fh)
        next(reader)  # header row
        rows = [[float(x) for x in row] for row in reader if row]
    data = np.asarray(rows)
    if data.shape[1] != 2 * dim + 1:
        raise GridError("unexpected column count for declared dimension")
    axes = []
    for i in range(dim):
        pts, first = np.unique(data[:, i], return_index=True)
        widths = data[first, dim + i]
        axes.append(AxisGrid(points=pts, widths=widths))
    shape = tuple(len(ax) for ax in axes)
    if int(np.prod(shape)) != data.shape[0]:
        raise GridError("row count does not form a full tensor grid")
    idx = tuple(
        np.searchsorted(axes[i].points, data[:, i]) for i in range(dim)
    )
    values = np.empty(shape)
    values[idx] = data[:, -1]
    return GridFunction(axes=tuple(axes), values=values)
