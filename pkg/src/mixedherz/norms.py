"""Mixed Lebesgue, mixed Morrey, mixed Herz, and mixed Herz-Morrey norms.

All norms are computed by iterated 1-D midpoint quadrature with the first
coordinate innermost:

    ||f||_q = ( int ... ( int ( int |f|^q1 dx1 )^(q2/q1) dx2 )^(q3/q2) ... dxn )^(1/qn)

The Herz-type norms weight annulus restrictions f*chi_k by 2^(k*alpha),
combine them in the discrete l^p sense, and (for the Herz-Morrey variant)
take a supremum of 2^(-k0*lambda)-damped partial sums over a finite k0 range.
Infinite exponents are not supported.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .grid import DyadicDecomposition, GridFunction, restrict

__all__ = [
    "SupportError",
    "HerzMorreyParams",
    "mixed_lebesgue_norm",
    "weighted_mixed_norm",
    "annulus_norm_terms",
    "herz_norm",
    "herz_morrey_norm",
    "mixed_morrey_norm",
    "quasi_triangle_defect",
    "quasi_triangle_constant",
    "dyadic_radii",
]


class SupportError(ValueError):
    """The function is nonzero outside the decomposition's covered shell."""


def _check_exponents(q: Sequence[float], dim: int) -> tuple[float, ...]:
    q = tuple(float(v) for v in np.atleast_1d(np.asarray(q, dtype=float)))
    if len(q) != dim:
        raise ValueError(f"exponent vector has length {len(q)}, expected {dim}")
    for v in q:
        if not math.isfinite(v) or v <= 0:
            raise ValueError(f"exponents must be finite and positive, got {v}")
    return q


def _iterated_norm(values: np.ndarray, axes, q: tuple[float, ...]) -> float:
    """Iterated quadrature norm of nonnegative values, x1 innermost."""
    a = values ** q[0]
    for i, ax in enumerate(axes):
        a = np.tensordot(ax.widths, a, axes=(0, 0))
        if i + 1 < len(axes):
            a = a ** (q[i + 1] / q[i])
    return float(a) ** (1.0 / q[-1])


def mixed_lebesgue_norm(f: GridFunction, q: Sequence[float]) -> float:
    """Mixed Lebesgue norm ||f||_q with one exponent per axis.

    Returns 0 for the zero function; rejects non-positive or infinite
    exponents and dimension mismatches.
    """
    q = _check_exponents(q, f.dim)
    return _iterated_norm(np.abs(f.values), f.axes, q)


def weighted_mixed_norm(f: GridFunction, q: Sequence[float], alphas: Sequence[float]) -> float:
    """Mixed norm with the axis-i integrand carrying the weight |x_i|^(alpha_i * q_i).

    Equivalently the mixed Lebesgue norm of f * prod_i |x_i|^alpha_i, since
    the per-axis power weights pass through the iterated integrations.
    """
    q = _check_exponents(q, f.dim)
    alphas = tuple(float(a) for a in alphas)
    if len(alphas) != f.dim:
        raise ValueError(f"got {len(alphas)} weight exponents for dimension {f.dim}")
    vals = np.abs(f.values)
    for i, (ax, al) in enumerate(zip(f.axes, alphas)):
        if al != 0.0:
            shape = [1] * f.dim
            shape[i] = len(ax)
            vals = vals * np.abs(ax.points).reshape(shape) ** al
    return _iterated_norm(vals, f.axes, q)


@dataclass(frozen=True)
class HerzMorreyParams:
    """Parameters (alpha, p, lambda, q) of a mixed Herz-Morrey norm.

    ``k0_range`` bounds the outer supremum; ``None`` means the full annulus
    range of the decomposition, which loses nothing for compactly supported
    functions and lambda >= 0.
    """

    alpha: float
    p: float
    lam: float
    q: tuple[float, ...]
    k0_range: tuple[int, int] | None = None

    def __post_init__(self):
        if not (math.isfinite(self.p) and self.p > 0):
            raise ValueError("need 0 < p < inf")
        if not (math.isfinite(self.lam) and self.lam >= 0):
            raise ValueError("need 0 <= lambda < inf")
        if self.k0_range is not None:
            lo, hi = self.k0_range
            if lo > hi:
                raise ValueError("empty k0_range")


def annulus_norm_terms(
    f: GridFunction,
    q: Sequence[float],
    decomp: DyadicDecomposition,
    check_support: bool = True,
) -> np.ndarray:
    """Per-annulus mixed norms ||f*chi_k||_q for k = k_min..k_max.

    With ``check_support`` the function must vanish outside the covered
    shell 2^(k_min-1) <= |x| < 2^k_max; escaping mass is an error, never a
    silent truncation (truncate explicitly with restrict + coverage_mask).
    """
    q = _check_exponents(q, f.dim)
    if decomp.labels.shape != f.shape:
        raise ValueError("decomposition does not match the function's grid")
    if check_support and np.any(f.values[~decomp.coverage_mask] != 0.0):
        raise SupportError(
            "function has support outside the decomposition's covered shell; "
            "restrict(f, decomp.coverage_mask) truncates explicitly"
        )
    return np.array(
        [_iterated_norm(np.abs(f.values) * decomp.mask(k), f.axes, q) for k in decomp.annuli]
    )


def herz_norm(
    f: GridFunction,
    alpha: float,
    p: float,
    q: Sequence[float],
    decomp: DyadicDecomposition,
) -> float:
    """Mixed Herz norm: l^p combination of 2^(k*alpha)-weighted annulus norms."""
    if not p > 0:
        raise ValueError("need p > 0")
    terms = annulus_norm_terms(f, q, decomp)
    ks = np.arange(decomp.k_min, decomp.k_max + 1)
    weighted = (2.0 ** (ks * alpha) * terms) ** p
    return float(np.sum(weighted)) ** (1.0 / p)


def herz_morrey_norm(
    f: GridFunction, params: HerzMorreyParams, decomp: DyadicDecomposition
) -> float:
    """Mixed Herz-Morrey norm: sup over k0 of 2^(-k0*lambda)-damped Herz partial sums.

    The supremum runs over ``params.k0_range`` (default: the full decomposition
    range), with the inner sum over k = k_min..k0.
    """
    lo, hi = params.k0_range if params.k0_range is not None else (decomp.k_min, decomp.k_max)
    if lo > hi:
        raise ValueError("empty k0_range")
    if lo < decomp.k_min or hi > decomp.k_max:
        raise ValueError("k0_range must lie within the decomposition's annulus range")
    terms = annulus_norm_terms(f, params.q, decomp)
    ks = np.arange(decomp.k_min, decomp.k_max + 1)
    weighted = (2.0 ** (ks * params.alpha) * terms) ** params.p
    best = 0.0
    for k0 in range(lo, hi + 1):
        partial = float(np.sum(weighted[: k0 - decomp.k_min + 1]))
        value = 2.0 ** (-k0 * params.lam) * partial ** (1.0 / params.p)
        best = max(best, value)
    return best


def dyadic_radii(f: GridFunction) -> np.ndarray:
    """Dyadic radii 2^k spanning the grid's cell scale to its outer radius."""
    lo = min(float(np.min(ax.widths)) for ax in f.axes)
    hi = float(np.max(f.radii))
    k_lo = math.floor(math.log2(lo))
    k_hi = math.ceil(math.log2(hi))
    return 2.0 ** np.arange(k_lo, k_hi + 1)


def mixed_morrey_norm(
    f: GridFunction,
    lam: float,
    q: Sequence[float],
    radius_set: Sequence[float] | None = None,
) -> float:
    """Mixed Morrey norm: sup over r of r^(-lambda) ||f restricted to |x| <= r||_q.

    The supremum is over a finite radius set, by default the dyadic radii
    2^k matching the annulus decomposition.
    """
    if not (math.isfinite(lam) and lam >= 0):
        raise ValueError("need 0 <= lambda < inf")
    radii = dyadic_radii(f) if radius_set is None else np.asarray(radius_set, dtype=float)
    if radii.size == 0:
        raise ValueError("empty radius set")
    if np.any(radii <= 0):
        raise ValueError("radii must be positive")
    best = 0.0
    for r in radii:
        ball = restrict(f, f.radii <= r)
        best = max(best, float(r) ** (-lam) * mixed_lebesgue_norm(ball, q))
    return best


def quasi_triangle_constant(q: Sequence[float]) -> float:
    """Quasi-triangle constant max(1, 2^(sum_i (1-q_i)/q_i)); equals 1 when all q_i >= 1."""
    s = sum((1.0 - v) / v for v in q)
    return max(1.0, 2.0 ** s)


def quasi_triangle_defect(
    f: GridFunction,
    g: GridFunction,
    params: HerzMorreyParams,
    decomp: DyadicDecomposition,
) -> float:
    """||f+g|| / (||f|| + ||g||) in the Herz-Morrey norm; 0 when both areas zero."""
    nf = herz_morrey_norm(f, params, decomp)
    ng = herz_morrey_norm(g, params, decomp)
    if nf + ng == 0.0:
        return 0.0
    return herz_morrey_norm(f + g, params, decomp) / (nf + ng)
