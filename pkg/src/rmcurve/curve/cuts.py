"""Support intervals, their sheet groups, masses, edge constants and crossing points."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq

from ..errors import DegenerateCurveError, UnsupportedConfigurationError
from .branch import BranchPointSet, branch_points
from .density import cut_mass, xi0
from .primitive import primitive
from .spec import CurveSpec, d2x_dz2

__all__ = [
    "CutStructure",
    "cut_structure",
    "edge_constants",
    "gamma_crossing_points",
    "mass_between",
    "MASS_TOL",
]

MASS_TOL = 1e-6
EDGE_CURVATURE_TOL = 1e-8


@dataclass(frozen=True)
class CutStructure:
    """The l cuts [z_{2i-1}, z_{2i}] with per-cut data.

    ``sheet_groups[i]`` lists the sheets (1..k, in asymptotic order) glued to
    sheet 0 along cut i; sheet ``sheet_groups[i][m]`` is the sheet (i+1, m).
    ``pairs[i]`` are the complex branch points (Im w > 0) whose real part lies in
    cut i, ordered like ``gamma_crossings[i]``.
    """

    cuts: tuple[tuple[float, float], ...]
    sheet_groups: tuple[tuple[int, ...], ...]
    masses: tuple[float, ...]
    edge_constants: tuple[float, ...]
    gamma_crossings: tuple[tuple[float, ...], ...]
    pairs: tuple[tuple[complex, ...], ...]

    @property
    def l(self) -> int:
        return len(self.cuts)

    @property
    def b(self) -> tuple[int, ...]:
        return tuple(len(g) - 1 for g in self.sheet_groups)

    def cut_of(self, x: float) -> int | None:
        for i, (lo, hi) in enumerate(self.cuts):
            if lo <= x <= hi:
                return i
        return None


def edge_constants(spec: CurveSpec, bps: BranchPointSet | None = None) -> tuple[float, ...]:
    """rho_j = sqrt(2 / |x''(y_j)|) at every real branch point, in endpoint order.

    Near the edge z_j the density behaves as (rho_j / pi) |x - z_j|^(1/2).
    """
    bps = bps or branch_points(spec)
    curv = np.abs(d2x_dz2(spec, np.array(bps.y_real)))
    if np.any(curv < EDGE_CURVATURE_TOL):
        raise DegenerateCurveError("vanishing curvature at an edge; the curve is near-critical")
    return tuple(float(v) for v in np.sqrt(2.0 / curv))


def mass_between(spec: CurveSpec, lo_index: int, x) -> np.ndarray:
    """Mass of rho between the real endpoint z_{lo_index} (0-based) and ``x``.

    Evaluated from the imaginary part of the primitive on the lower boundary
    value of xi_0, whose derivative in x is -pi rho(x).
    """
    bps = branch_points(spec)
    y_lo = bps.y_real[lo_index]
    base = primitive(spec, complex(y_lo), -1).imag
    x = np.asarray(x, dtype=float)
    val = primitive(spec, xi0(spec, x.astype(complex), side=-1), -1).imag
    return (base - val) / np.pi


def gamma_crossing_points(spec: CurveSpec, cut_index: int, group: tuple[int, ...]) -> tuple[float, ...]:
    """Real crossings r^(1) < ... < r^(b) of the imaginary cuts attached to one cut.

    The cut leaving the complex branch point w^(m) follows the curve on which
    the two sheets exchanged there have equal Re lambda; it meets the real axis
    where the lambda-difference is real, i.e. where the mass of rho to the left
    of the crossing equals the filling fractions of the sheets (i, 0..m-1).
    That difference is strictly monotone along the cut, so the crossing is
    found by bracketed root finding.
    """
    bps = branch_points(spec)
    lo, hi = bps.x_real[2 * cut_index], bps.x_real[2 * cut_index + 1]
    fractions = spec.eps_array[np.array(group) - 1]
    out = []
    for m in range(1, len(group)):
        target = float(fractions[:m].sum())

        def f(x, target=target):
            if x <= lo:
                return -target
            return float(mass_between(spec, 2 * cut_index, x)) - target

        f_hi = float(fractions.sum()) - target
        if not (f(lo) < 0 < f_hi):
            raise UnsupportedConfigurationError(f"no crossing sign change inside cut {cut_index + 1}")
        out.append(brentq(lambda x: f(x) if x < hi else f_hi, lo, hi, xtol=1e-14, rtol=1e-15))
    return tuple(out)


@lru_cache(maxsize=256)
def cut_structure(spec: CurveSpec, bps: BranchPointSet | None = None) -> CutStructure:
    """Assemble the cut structure of a non-critical spec.

    Raises
    ------
    UnsupportedConfigurationError
        A complex branch point whose real part lies outside every cut, or cut
        masses that disagree with the filling fractions of their sheet groups.
    """
    bps = bps or branch_points(spec)
    z = bps.x_real
    cuts = tuple(zip(z[::2], z[1::2]))
    pairs = [[] for _ in cuts]
    for w, _ in bps.x_pairs:
        hits = [i for i, (lo, hi) in enumerate(cuts) if lo < w.real < hi]
        if not hits:
            raise UnsupportedConfigurationError(f"complex branch point {w:.6g} lies over no cut")
        pairs[hits[0]].append(w)

    groups, s = [], 1
    for p in pairs:
        groups.append(tuple(range(s, s + len(p) + 1)))
        s += len(p) + 1
    if s - 1 != spec.k:
        raise UnsupportedConfigurationError("sheet count does not match the branch point structure")

    masses = tuple(cut_mass(spec, lo, hi) for lo, hi in cuts)
    for i, (m, g) in enumerate(zip(masses, groups)):
        expected = float(sum(spec.eps[j - 1] for j in g))
        if abs(m - expected) > MASS_TOL:
            raise UnsupportedConfigurationError(
                f"cut {i + 1} carries mass {m:.9f} but its sheets carry {expected:.9f}"
            )

    crossings = tuple(gamma_crossing_points(spec, i, g) for i, g in enumerate(groups))
    return CutStructure(
        cuts=tuple((float(a), float(b)) for a, b in cuts),
        sheet_groups=tuple(groups),
        masses=masses,
        edge_constants=edge_constants(spec, bps),
        gamma_crossings=crossings,
        pairs=tuple(tuple(sorted(p, key=lambda v: v.real)) for p in pairs),
    )
