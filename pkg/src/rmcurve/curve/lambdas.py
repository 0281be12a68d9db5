"""lambda-functions (primitives of the sheets), the phase function h and the ordering check."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .branch import branch_points
from .cuts import cut_structure
from .density import xi0
from .primitive import primitive
from .sheets import reference_roots, xi_sheets
from .spec import CurveSpec

__all__ = [
    "LambdaValue",
    "OrderingPoint",
    "OrderingReport",
    "resolve_sheet",
    "lambda_constants",
    "lambda_values",
    "lambda_fn",
    "lambda0",
    "h_fn",
    "check_ordering",
    "standard_lattice",
]

SheetLabel = int | tuple[int, int]


@dataclass(frozen=True)
class LambdaValue:
    branch: SheetLabel
    at: complex
    value: complex
    side: int


def resolve_sheet(spec: CurveSpec, label: SheetLabel) -> int:
    """Map a label to a sheet index 0..k.

    ``(0, 0)`` and ``0`` are the physical sheet; ``(i, m)`` is the m-th sheet
    (0-based) glued along cut i (1-based); plain integers are asymptotic order.
    """
    if isinstance(label, tuple):
        i, m = label
        if (i, m) == (0, 0):
            return 0
        groups = cut_structure(spec).sheet_groups
        if not (1 <= i <= len(groups) and 0 <= m < len(groups[i - 1])):
            raise ValueError(f"no sheet {label}")
        return groups[i - 1][m]
    s = int(label)
    if not 0 <= s <= spec.k:
        raise ValueError(f"sheet must be in 0..{spec.k}")
    return s


@lru_cache(maxsize=256)
def _constants(spec: CurveSpec):
    bps = branch_points(spec)
    c0 = -primitive(spec, complex(bps.y_real[-1]), 1).real
    y_far = reference_roots(spec).real
    plus = np.full(spec.k + 1, c0, dtype=complex)
    minus = np.full(spec.k + 1, c0, dtype=complex)
    # Sheets s >= 1 live in the lower y half-plane above the axis and the upper one below;
    # continuity through the real point x_far fixes the upper constant from the lower one.
    for s in range(1, spec.k + 1):
        yv = complex(y_far[s])
        plus[s] = c0 + primitive(spec, yv, 1) - primitive(spec, yv, -1)
    return tuple(plus), tuple(minus)


def lambda_constants(spec: CurveSpec) -> tuple[np.ndarray, np.ndarray]:
    """Integration constants (upper, lower) per sheet.

    lambda_0 vanishes at the rightmost edge; every lower boundary value
    lambda_{s-} coincides with lambda_{0+} where sheet s is glued to sheet 0;
    lambda_{s+} continues lambda_{s-} through the real axis right of all cuts.
    """
    plus, minus = _constants(spec)
    return np.array(plus), np.array(minus)


def _sigma(z: np.ndarray, side: int | None) -> np.ndarray:
    default = 1 if side is None else int(np.sign(side))
    return np.where(z.imag > 0, 1, np.where(z.imag < 0, -1, default))


def _sheet_values(spec: CurveSpec, z: np.ndarray, side: int | None):
    """Tracked sheet roots and lambda values for flat ``z``."""
    sig = _sigma(z, side)
    xi = np.empty((z.size, spec.k + 1), dtype=complex)
    lam = np.empty_like(xi)
    plus, minus = lambda_constants(spec)
    for s in (1, -1):
        sel = np.flatnonzero(sig == s)
        if not sel.size:
            continue
        xi[sel] = xi_sheets(spec, z[sel], s)
        lam[sel, 0] = primitive(spec, xi[sel, 0], s)
        lam[sel, 1:] = primitive(spec, xi[sel, 1:], -s)
        lam[sel] += plus if s > 0 else minus
    return xi, lam


def lambda_values(spec: CurveSpec, z, side: int | None = None) -> np.ndarray:
    """All lambda_s(z), s = 0..k; shape ``z.shape + (k+1,)``.

    Real ``z`` gives boundary values from the side selected by ``side``
    (default from above).
    """
    z = np.asarray(z, dtype=complex)
    _, lam = _sheet_values(spec, z.reshape(-1), side)
    return lam.reshape(z.shape + (spec.k + 1,))


def lambda_fn(spec: CurveSpec, branch: SheetLabel, z: complex, side: int | None = None) -> LambdaValue:
    """lambda on one sheet at a single point, see :func:`lambda_values`."""
    s = resolve_sheet(spec, branch)
    z = complex(z)
    sig = int(_sigma(np.array([z]), side)[0])
    if s == 0:
        value = primitive(spec, xi0(spec, z, sig), sig) + lambda_constants(spec)[0 if sig > 0 else 1][0]
    else:
        value = lambda_values(spec, np.array([z]), sig)[0, s]
    return LambdaValue(branch=branch, at=z, value=complex(value), side=sig)


def lambda0(spec: CurveSpec, z, side: int = 1):
    """lambda_0 alone; needs no sheet tracking."""
    z = np.asarray(z, dtype=complex)
    sig = _sigma(z, side)
    c0 = lambda_constants(spec)[0][0]
    y = xi0(spec, z, side)
    out = np.where(sig > 0, primitive(spec, y, 1), primitive(spec, y, -1)) + c0
    return out if out.ndim else out[()]


def h_fn(spec: CurveSpec, x):
    """h(x) = -x^2/4 + Re lambda_{0+}(x) on the real line."""
    x = np.asarray(x, dtype=float)
    out = -(x**2) / 4 + lambda0(spec, x.astype(complex), 1).real
    return out if out.ndim else out[()]


@dataclass(frozen=True)
class OrderingPoint:
    at: complex
    cut: int | None
    partner: int | None
    margin: float
    passed: bool


@dataclass(frozen=True)
class OrderingReport:
    points: tuple[OrderingPoint, ...]

    @property
    def passed(self) -> bool:
        return all(p.passed for p in self.points)

    @property
    def min_margin(self) -> float:
        return min((p.margin for p in self.points), default=float("inf"))


def check_ordering(spec: CurveSpec, samples, exempt_neighbours: bool = True) -> OrderingReport:
    """Check the real-part ordering of the lambda-functions at sample points.

    Near cut i (off the real axis) the required order is
    Re lambda_j < Re lambda_0 < Re lambda_g for the sheet g glued to sheet 0 at
    the sample and every other sheet j. Where complex branch points merged
    several sheets into one cut, the sheets next to g in that cut's group
    change places with g across the imaginary cuts and are left out of the
    lower bound when ``exempt_neighbours`` is set. On the real axis the
    requirement is Re lambda_{j+} < Re lambda_0 for every sheet j not glued to
    sheet 0 at that point (real parts of lambda_0 agree on both sides).

    The margin is the smallest of the gaps that must be positive.
    """
    cs = cut_structure(spec)
    z = np.atleast_1d(np.asarray(samples, dtype=complex))
    xi, lam = _sheet_values(spec, z, 1)
    lam = lam.real
    points = []
    for n, p in enumerate(z):
        cut = cs.cut_of(p.real)
        others = list(range(1, spec.k + 1))
        on_cut = cut is not None and cs.cuts[cut][0] < p.real < cs.cuts[cut][1]
        if p.imag == 0 and not on_cut:
            margin = lam[n, 0] - lam[n, others].max() if others else np.inf
            points.append(OrderingPoint(complex(p), None, None, float(margin), bool(margin > 0)))
            continue
        if cut is None:
            margin = lam[n, 0] - lam[n, others].max() if others else np.inf
            points.append(OrderingPoint(complex(p), None, None, float(margin), bool(margin > 0)))
            continue
        # The partner continues xi_0 across the cut: its value is close to conj(xi_0).
        partner = int(np.argmin(np.abs(xi[n, 1:] - np.conj(xi[n, 0])))) + 1
        rest = [j for j in others if j != partner]
        if exempt_neighbours:
            group = cs.sheet_groups[cut]
            if partner in group:
                m = group.index(partner)
                near = {group[q] for q in (m - 1, m + 1) if 0 <= q < len(group)}
                rest = [j for j in rest if j not in near]
        lower = lam[n, 0] - lam[n, rest].max() if rest else np.inf
        # On the cut itself only the comparison with the other sheets is meaningful.
        upper = np.inf if p.imag == 0 else lam[n, partner] - lam[n, 0]
        margin = float(min(upper, lower))
        points.append(OrderingPoint(complex(p), cut + 1, partner, margin, bool(margin > 0)))
    return OrderingReport(points=tuple(points))


def standard_lattice(spec: CurveSpec, offset: float = 0.01) -> np.ndarray:
    """Sample points at 10%, 20%, ..., 90% of every cut, ``offset`` cut lengths
    above and below the axis, plus real points left of, right of and between the cuts."""
    cs = cut_structure(spec)
    pts = []
    for lo, hi in cs.cuts:
        length = hi - lo
        for f in np.arange(1, 10) / 10:
            x = lo + f * length
            pts += [x + 1j * offset * length, x - 1j * offset * length]
    span = cs.cuts[-1][1] - cs.cuts[0][0]
    pts += [cs.cuts[0][0] - 0.25 * span, cs.cuts[-1][1] + 0.25 * span]
    for (_, hi), (lo, _) in zip(cs.cuts, cs.cuts[1:]):
        pts.append(0.5 * (hi + lo))
    return np.array(pts, dtype=complex)
