"""Decidable admissibility checks for the boundedness guarantees.

Each theorem id names one entry of the toolkit's guarantee catalog (see the
README table): a set of strict/non-strict inequalities over
(n, alpha, lambda, p or (p1, p2), q or (q1, q2), l) under which the paired
operator is bounded between mixed Herz-Morrey spaces.  The checker evaluates
every clause exactly as printed in the catalog, reports per-clause margins,
and renders admissible (alpha, lambda) regions as polygon boundaries.

The three fractional entries couple the order l to the exponent vectors in
three different ways; the conventions are kept verbatim per entry and a
caveat flags parameter sets that satisfy one convention but not another.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

import numpy as np

__all__ = [
    "TheoremId",
    "AdmissibilityVerdict",
    "check",
    "implied_fractional_order",
    "region_boundary",
    "classify_points",
    "region_to_csv",
    "ONE_SPACE_THEOREMS",
    "TWO_SPACE_THEOREMS",
]

_COUPLING_TOL = 1e-9


class TheoremId(str, Enum):
    THM3_1 = "thm3_1"
    COR3_1 = "cor3_1"
    THM3_2 = "thm3_2"
    COR3_2 = "cor3_2"
    THM4_1 = "thm4_1"
    THM4_2 = "thm4_2"
    THM4_3 = "thm4_3"
    COR4_1 = "cor4_1"
    THM4_4_COMMUTATOR_FRACTIONAL = "thm4_4_commutator_fractional"
    COR4_2 = "cor4_2"


#: guarantees stated on a single space (source exponents = target exponents)
ONE_SPACE_THEOREMS = frozenset(
    {TheoremId.THM3_1, TheoremId.COR3_1, TheoremId.THM4_1, TheoremId.THM4_3, TheoremId.COR4_1}
)
#: guarantees mapping between two spaces with coupled exponent vectors
TWO_SPACE_THEOREMS = frozenset(
    {
        TheoremId.THM3_2,
        TheoremId.COR3_2,
        TheoremId.THM4_2,
        TheoremId.THM4_4_COMMUTATOR_FRACTIONAL,
        TheoremId.COR4_2,
    }
)

# coupling convention per fractional entry:
#   "direct":   l  = sum(1/q1) - sum(1/q2)          (0 < l < n,  q1 < 1/l)
#   "inverse":  1/l = (sum(1/q1) - sum(1/q2)) / n   (1 < l < inf, q1 < l)
#   "averaged": l  = (sum(1/q1) - sum(1/q2)) / n    (0 < l < n,  q1 < 1/l)
_COUPLING = {
    TheoremId.THM3_2: "direct",
    TheoremId.COR3_2: "direct",
    TheoremId.THM4_2: "inverse",
    TheoremId.THM4_4_COMMUTATOR_FRACTIONAL: "averaged",
    TheoremId.COR4_2: "averaged",
}


@dataclass
class AdmissibilityVerdict:
    """Outcome of a clause-by-clause admissibility check.

    ``margins`` maps each clause id to its slack: positive means strictly
    satisfied, zero sits on a (strict, hence failing) boundary; coupling
    equalities record the negated residual -|l - implied|.
    """

    theorem: TheoremId
    admissible: bool
    failed_clauses: list[str]
    margins: dict[str, float]
    caveats: list[str] = field(default_factory=list)

    def to_json(self) -> str:
        payload = {
            "theorem": self.theorem.value,
            "admissible": self.admissible,
            "failed_clauses": self.failed_clauses,
            "margins": {k: repr(v) for k, v in self.margins.items()},
            "caveats": self.caveats,
        }
        return json.dumps(payload, sort_keys=True, indent=2)


@dataclass(frozen=True)
class _Clause:
    ident: str
    margin: float
    strict: bool = True
    involves: frozenset = frozenset()

    @property
    def satisfied(self) -> bool:
        return self.margin > 0 if self.strict else self.margin >= 0


def _vec(q, name: str, n: int) -> tuple[float, ...]:
    if q is None:
        raise ValueError(f"missing parameter '{name}'")
    vec = tuple(float(v) for v in np.atleast_1d(np.asarray(q, dtype=float)))
    if len(vec) != n:
        raise ValueError(f"parameter '{name}' must have {n} components, got {len(vec)}")
    if any(not math.isfinite(v) or v <= 0 for v in vec):
        raise ValueError(f"parameter '{name}' must be positive and finite")
    return vec


def _need(value, name: str) -> float:
    if value is None:
        raise ValueError(f"missing parameter '{name}'")
    return float(value)


def implied_fractional_order(
    theorem: TheoremId, n: int, q1: Sequence[float], q2: Sequence[float]
) -> float:
    """The order l that the theorem's coupling clause forces for (q1, q2)."""
    theorem = TheoremId(theorem)
    gap = sum(1.0 / v for v in _vec(q1, "q1", n)) - sum(1.0 / v for v in _vec(q2, "q2", n))
    mode = _COUPLING.get(theorem)
    if mode is None:
        raise ValueError(f"{theorem.value} has no fractional coupling")
    if mode == "direct":
        return gap
    if mode == "averaged":
        return gap / n
    if gap == 0.0:
        return math.inf
    return n / gap


def _coupling_residual(mode: str, n: int, l: float, s1: float, s2: float) -> tuple[str, float]:
    gap = s1 - s2
    if mode == "direct":
        return "l = sum(1/q1) - sum(1/q2)", l - gap
    if mode == "averaged":
        return "l = (1/n)*(sum(1/q1) - sum(1/q2))", l - gap / n
    return "1/l = (1/n)*(sum(1/q1) - sum(1/q2))", 1.0 / l - gap / n


def _one_space_clauses(n, alpha, lam, p, q) -> list[_Clause]:
    s = sum(1.0 / v for v in q)
    return [
        _Clause("0 <= lambda", lam, strict=False, involves=frozenset({"lam"})),
        _Clause("0 < p", p),
        _Clause("1 < q_i", min(q) - 1.0),
        _Clause(
            "lambda - sum(1/q) < alpha",
            alpha - (lam - s),
            involves=frozenset({"alpha", "lam"}),
        ),
        _Clause(
            "alpha < n*(1 - (1/n)*sum(1/q))",
            n * (1.0 - s / n) - alpha,
            involves=frozenset({"alpha"}),
        ),
    ]


def _two_space_clauses(theorem, n, alpha, lam, p1, p2, q1, q2, l) -> list[_Clause]:
    s1 = sum(1.0 / v for v in q1)
    s2 = sum(1.0 / v for v in q2)
    mode = _COUPLING[theorem]
    clauses = [
        _Clause("0 <= lambda", lam, strict=False, involves=frozenset({"lam"})),
        _Clause("0 < p1", p1),
        _Clause("p1 <= p2", p2 - p1, strict=False),
        _Clause("1 < q1_i", min(q1) - 1.0),
    ]
    if mode == "inverse":
        clauses.append(_Clause("1 < l", l - 1.0))
        clauses.append(_Clause("q1_i < l", l - max(q1)))
    else:
        clauses.append(_Clause("0 < l", l))
        clauses.append(_Clause("l < n", n - l))
        clauses.append(_Clause("q1_i < 1/l", 1.0 / l - max(q1) if l > 0 else -math.inf))
    ident, residual = _coupling_residual(mode, n, l, s1, s2)
    clauses.append(_Clause(ident, -abs(residual) + 0.0, strict=False))
    clauses.append(
        _Clause(
            "lambda - sum(1/q2) < alpha",
            alpha - (lam - s2),
            involves=frozenset({"alpha", "lam"}),
        )
    )
    clauses.append(
        _Clause("alpha < n - sum(1/q1)", (n - s1) - alpha, involves=frozenset({"alpha"}))
    )
    return clauses


def _build_clauses(
    theorem: TheoremId,
    *,
    n: int,
    alpha: float,
    lam: float,
    p=None,
    p1=None,
    p2=None,
    q=None,
    q1=None,
    q2=None,
    l=None,
) -> list[_Clause]:
    if theorem in ONE_SPACE_THEOREMS:
        return _one_space_clauses(n, alpha, lam, _need(p, "p"), _vec(q, "q", n))
    return _two_space_clauses(
        theorem,
        n,
        alpha,
        lam,
        _need(p1, "p1"),
        _need(p2, "p2"),
        _vec(q1, "q1", n),
        _vec(q2, "q2", n),
        _need(l, "l"),
    )


def _coupling_caveats(theorem, n, q1, q2, l) -> list[str]:
    notes = []
    own = _COUPLING[theorem]
    matches = {}
    s1 = sum(1.0 / v for v in _vec(q1, "q1", n))
    s2 = sum(1.0 / v for v in _vec(q2, "q2", n))
    for mode in ("direct", "inverse", "averaged"):
        _, res = _coupling_residual(mode, n, float(l), s1, s2)
        matches[mode] = abs(res) <= _COUPLING_TOL
    if not matches[own]:
        others = [m for m, ok in matches.items() if ok]
        if others:
            notes.append(
                f"coupling fails under this entry's '{own}' convention but matches "
                f"the {', '.join(repr(m) for m in others)} convention of other entries"
            )
    elif n > 1 and not all(matches.values()):
        notes.append(
            f"coupling conventions disagree here: satisfied under '{own}', "
            "not under every fractional entry"
        )
    return notes


def check(theorem: TheoremId | str, **params) -> AdmissibilityVerdict:
    """Evaluate every admissibility clause of the named guarantee.

    One-space entries take ``n, alpha, lam, p, q``; two-space entries take
    ``n, alpha, lam, p1, p2, q1, q2, l``.  All printed "<" comparisons are
    strict, so boundary points are inadmissible with zero margin.
    """
    theorem = TheoremId(theorem)
    n = int(_need(params.get("n"), "n"))
    alpha = _need(params.get("alpha"), "alpha")
    lam = _need(params.get("lam"), "lam")
    clauses = _build_clauses(theorem, n=n, alpha=alpha, lam=lam, **{
        k: params.get(k) for k in ("p", "p1", "p2", "q", "q1", "q2", "l")
    })
    failed = [c.ident for c in clauses if not c.satisfied]
    margins = {c.ident: c.margin for c in clauses}
    caveats = []
    if lam == 0.0:
        caveats.append(
            "lambda = 0 is the plain Herz-space limit; the partial-sum damping "
            "argument behind this guarantee needs lambda > 0"
        )
    if theorem in TWO_SPACE_THEOREMS:
        caveats.extend(
            _coupling_caveats(theorem, n, params.get("q1"), params.get("q2"), params.get("l"))
        )
    return AdmissibilityVerdict(
        theorem=theorem,
        admissible=not failed,
        failed_clauses=failed,
        margins=margins,
        caveats=caveats,
    )


# -- (alpha, lambda) region rendering -----------------------------------------


def _clip_halfplane(poly: list[tuple[float, float]], a: float, b: float, c: float):
    """Sutherland-Hodgman clip of a polygon by a*x + b*y + c >= 0."""
    if not poly:
        return []
    out = []
    m = len(poly)
    for i in range(m):
        px, py = poly[i]
        qx, qy = poly[(i + 1) % m]
        fp = a * px + b * py + c
        fq = a * qx + b * qy + c
        if fp >= 0:
            out.append((px, py))
            if fq < 0:
                t = fp / (fp - fq)
                out.append((px + t * (qx - px), py + t * (qy - py)))
        elif fq >= 0:
            t = fp / (fp - fq)
            out.append((px + t * (qx - px), py + t * (qy - py)))
    return out


def _polygon_area(poly) -> float:
    area = 0.0
    m = len(poly)
    for i in range(m):
        x0, y0 = poly[i]
        x1, y1 = poly[(i + 1) % m]
        area += x0 * y1 - x1 * y0
    return 0.5 * area


def region_boundary(
    theorem: TheoremId | str,
    fixed: dict,
    free: tuple[str, str] = ("alpha", "lam"),
    window: tuple[tuple[float, float], tuple[float, float]] = ((-1.0, 1.0), (0.0, 1.0)),
) -> list[np.ndarray]:
    """Boundary of the admissible region over a bounded (alpha, lambda) window.

    Returns a list of closed polygons, each an (m, 2) vertex array in
    (alpha, lambda) coordinates (empty list when the window misses the
    region).  The clauses are linear in alpha and lambda, so the region is
    the window rectangle clipped by half-planes and the polygon is exact to
    rounding; only the (alpha, lambda) axis pair is supported.
    """
    theorem = TheoremId(theorem)
    if tuple(free) != ("alpha", "lam"):
        raise ValueError("only the free axis pair ('alpha', 'lam') is supported")
    (a_lo, a_hi), (l_lo, l_hi) = window
    if not (a_hi > a_lo and l_hi > l_lo):
        raise ValueError("window must have positive extent on both axes")
    probe = dict(fixed)
    probe["alpha"] = 0.5 * (a_lo + a_hi)
    probe["lam"] = max(0.0, 0.5 * (l_lo + l_hi))
    clauses = _build_clauses(theorem, **{
        k: probe.get(k) for k in ("n", "alpha", "lam", "p", "p1", "p2", "q", "q1", "q2", "l")
    })
    for c in clauses:
        if not c.involves and not c.satisfied:
            return []
    if theorem in ONE_SPACE_THEOREMS:
        s_low = sum(1.0 / v for v in _vec(fixed.get("q"), "q", int(fixed["n"])))
        upper = fixed["n"] - s_low
    else:
        s_low = sum(1.0 / v for v in _vec(fixed.get("q2"), "q2", int(fixed["n"])))
        s1 = sum(1.0 / v for v in _vec(fixed.get("q1"), "q1", int(fixed["n"])))
        upper = fixed["n"] - s1
    poly = [(a_lo, l_lo), (a_hi, l_lo), (a_hi, l_hi), (a_lo, l_hi)]
    poly = _clip_halfplane(poly, 0.0, 1.0, 0.0)            # lambda >= 0
    poly = _clip_halfplane(poly, 1.0, -1.0, s_low)          # alpha > lambda - s
    poly = _clip_halfplane(poly, -1.0, 0.0, upper)          # alpha < upper bound
    if len(poly) < 3 or abs(_polygon_area(poly)) == 0.0:
        return []
    return [np.asarray(poly)]


def classify_points(polylines: Sequence[np.ndarray], points) -> np.ndarray:
    """Even-odd ray-casting membership test against closed polygons."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    out = np.zeros(pts.shape[0], dtype=bool)
    for poly in polylines:
        poly = np.asarray(poly)
        m = poly.shape[0]
        inside = np.zeros(pts.shape[0], dtype=bool)
        for i in range(m):
            x0, y0 = poly[i]
            x1, y1 = poly[(i + 1) % m]
            if y0 == y1:
                continue
            cond = ((y0 > pts[:, 1]) != (y1 > pts[:, 1])) & (
                pts[:, 0] < x0 + (pts[:, 1] - y0) * (x1 - x0) / (y1 - y0)
            )
            inside ^= cond
        out |= inside
    return out


def region_to_csv(polylines: Sequence[np.ndarray], fh=None) -> str:
    """Serialize region polygons as CSV rows (polyline, vertex, alpha, lambda)."""
    buf = fh if fh is not None else io.StringIO()
    buf.write("# mixedherz-region v1\n")
    writer = csv.writer(buf)
    writer.writerow(["polyline", "vertex", "alpha", "lambda"])
    for p, poly in enumerate(polylines):
        for v, (a, lam) in enumerate(np.asarray(poly)):
            writer.writerow([p, v, repr(float(a)), repr(float(lam))])
    return buf.getvalue() if fh is None else ""
