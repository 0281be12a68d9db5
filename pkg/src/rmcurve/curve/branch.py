"""Branch points of the spectral curve and their classification."""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial import polynomial as npoly

from ..errors import DegenerateCurveError
from .spec import CurveSpec, d2x_dz2, dx_dz, x_of_z

__all__ = [
    "BranchPointSet",
    "branch_points",
    "count_real_branch_points",
    "REAL_TOL",
    "CRITICAL_TOL",
]

REAL_TOL = 1e-9
CRITICAL_TOL = 1e-6


@dataclass(frozen=True)
class BranchPointSet:
    """Roots of the branch polynomial and their x-plane images.

    ``x_real`` are the support endpoints z_1 < ... < z_{2l} with matching
    y-plane points ``y_real``. ``x_pairs`` holds (w, conj w) with Im w > 0,
    sorted by Re w, and ``y_pairs`` the y-plane points that map onto them.
    """

    y_roots: tuple[complex, ...]
    y_real: tuple[float, ...]
    x_real: tuple[float, ...]
    y_pairs: tuple[tuple[complex, complex], ...]
    x_pairs: tuple[tuple[complex, complex], ...]
    min_separation: float

    @property
    def l(self) -> int:
        return len(self.x_real) // 2

    @property
    def is_real(self) -> bool:
        """True when every branch point is real (the large-time configuration l = k)."""
        return not self.x_pairs

    @property
    def x_images(self) -> np.ndarray:
        pts = list(self.x_real)
        for w, wb in self.x_pairs:
            pts += [w, wb]
        return np.array(pts, dtype=complex)


def _raw_roots(spec: CurveSpec) -> np.ndarray:
    y = npoly.polyroots(spec.branch_poly).astype(complex)
    # Newton on x'(y) = 0 is much better conditioned than on the expanded polynomial.
    for _ in range(3):
        g = dx_dz(spec, y)
        gp = d2x_dz2(spec, y)
        with np.errstate(divide="ignore", invalid="ignore"):
            y_new = y - g / gp
        finite = np.isfinite(y_new)
        y_new = np.where(finite, y_new, y)
        better = finite & (np.abs(dx_dz(spec, y_new)) < np.abs(g))
        y = np.where(better, y_new, y)
    return y


def _is_real(y) -> np.ndarray:
    return np.abs(y.imag) < REAL_TOL * (1.0 + np.abs(y))


def count_real_branch_points(spec: CurveSpec) -> int:
    """Number of real branch points; never raises on critical curves."""
    return int(np.count_nonzero(_is_real(_raw_roots(spec))))


@lru_cache(maxsize=256)
def branch_points(spec: CurveSpec) -> BranchPointSet:
    """Compute and classify the 2k branch points.

    Raises
    ------
    DegenerateCurveError
        If two x-images are closer than ``CRITICAL_TOL * spread(a)`` or the
        real/complex classification is inconsistent.
    """
    y = _raw_roots(spec)
    real = _is_real(y)
    yr = y[real].real
    if yr.size % 2:
        raise DegenerateCurveError("odd number of real branch points; curve is at or near a transition")
    xr = x_of_z(spec, yr)
    order = np.argsort(xr)
    yr, xr = yr[order], xr[order]

    yc = y[~real]
    wc = x_of_z(spec, yc)
    upper = np.flatnonzero(wc.imag > 0)
    lower = list(np.flatnonzero(wc.imag < 0))
    y_pairs, x_pairs = [], []
    for u in upper:
        if not lower:
            raise DegenerateCurveError("unpaired complex branch point")
        j = min(lower, key=lambda v: abs(wc[v] - np.conj(wc[u])))
        lower.remove(j)
        y_pairs.append((complex(yc[u]), complex(yc[j])))
        x_pairs.append((complex(wc[u]), complex(wc[j])))
    if lower:
        raise DegenerateCurveError("unpaired complex branch point")
    idx = sorted(range(len(x_pairs)), key=lambda i: x_pairs[i][0].real)
    y_pairs = [y_pairs[i] for i in idx]
    x_pairs = [x_pairs[i] for i in idx]

    images = np.concatenate([xr.astype(complex), wc])
    if images.size > 1:
        sep = np.abs(images[:, None] - images[None, :])
        sep[np.diag_indices_from(sep)] = np.inf
        min_sep = float(sep.min())
    else:
        min_sep = float("inf")
    if min_sep < CRITICAL_TOL * spec.spread:
        raise DegenerateCurveError(
            f"branch points within {min_sep:.3g} of each other; the curve is critical", min_sep
        )
    return BranchPointSet(
        y_roots=tuple(complex(v) for v in y),
        y_real=tuple(float(v) for v in yr),
        x_real=tuple(float(v) for v in xr),
        y_pairs=tuple(y_pairs),
        x_pairs=tuple(x_pairs),
        min_separation=min_sep,
    )
