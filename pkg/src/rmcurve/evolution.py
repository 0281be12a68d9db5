"""Non-intersecting Brownian bridges seen through the external-source matrix model.

At time t the bridge particles are distributed like the eigenvalues of the
matrix model with source eigenvalues a_i(t) = a_i(1) sqrt(t / (1 - t)),
up to a spatial rescaling. Tracking the number of cuts l(t) over t locates the
times at which the support splits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from ._parallel import ordered_map
from .curve import CurveSpec, branch_points, count_real_branch_points, density, validate_spec
from .curve.spec import as_fraction
from .errors import DegenerateCurveError, ScanResolutionError, SpecError

__all__ = [
    "BridgeSpec",
    "CriticalTime",
    "Timeline",
    "eigenvalues_at",
    "spec_at",
    "scan_grid",
    "cut_count_timeline",
    "critical_times",
    "bridge_density",
    "rescaling",
    "CONVENTIONS",
]

CONVENTIONS = ("paper", "sqrt")
SCAN_POINTS = 64
SCAN_MARGIN = 1e-3


@dataclass(frozen=True)
class BridgeSpec:
    """Final positions a_i(1), their fractions and the particle count N.

    Pairs are sorted by endpoint. ``N`` defaults to the least common multiple
    of the fraction denominators.
    """

    endpoints: tuple[float, ...]
    fractions: tuple[Fraction, ...]
    N: int | None = None

    def __post_init__(self):
        base = validate_spec(self.endpoints, self.fractions)
        object.__setattr__(self, "endpoints", base.a)
        object.__setattr__(self, "fractions", base.eps)
        lcm = math.lcm(*(f.denominator for f in base.eps))
        n = lcm if self.N is None else self.N
        if isinstance(n, bool) or int(n) != n or n < 1:
            raise SpecError(f"N must be a positive integer, got {self.N!r}")
        n = int(n)
        if n % lcm:
            raise SpecError(f"N = {n} is not a multiple of {lcm}")
        object.__setattr__(self, "N", n)

    @property
    def k(self) -> int:
        return len(self.endpoints)

    @classmethod
    def from_values(cls, endpoints, fractions, N=None) -> "BridgeSpec":
        return cls(tuple(float(v) for v in endpoints), tuple(as_fraction(f) for f in fractions), N)


def _check_time(t) -> float:
    t = float(t)
    if not 0.0 < t < 1.0:
        raise ValueError(f"time must lie in the open interval (0, 1), got {t}")
    return t


def eigenvalues_at(bridge: BridgeSpec, t: float) -> np.ndarray:
    """a_i(t) = a_i(1) sqrt(t / (1 - t)), in endpoint order."""
    t = _check_time(t)
    return np.asarray(bridge.endpoints) * math.sqrt(t / (1.0 - t))


def spec_at(bridge: BridgeSpec, t: float) -> CurveSpec:
    """The curve of the matrix model at time ``t``."""
    return validate_spec(eigenvalues_at(bridge, t), bridge.fractions)


def scan_grid(n: int = SCAN_POINTS, margin: float = SCAN_MARGIN) -> np.ndarray:
    """``n`` times uniform in logit(t) between ``margin`` and ``1 - margin``.

    The grid is symmetric under t -> 1 - t and denser toward both ends.
    """
    if n < 2:
        raise ValueError("a scan needs at least 2 points")
    if not 0.0 < margin < 0.5:
        raise ValueError("margin must lie in (0, 1/2)")
    u = np.linspace(math.log(margin / (1 - margin)), math.log((1 - margin) / margin), n)
    return 1.0 / (1.0 + np.exp(-u))


@dataclass(frozen=True)
class CriticalTime:
    """A change of the cut count: ``before`` cuts left of ``time``, ``after`` to its right."""

    time: float
    bracket: tuple[float, float]
    before: int
    after: int


@dataclass(frozen=True)
class Timeline:
    """Cut counts on a time grid.

    ``cut_counts[j]`` is None where the curve at ``times[j]`` was too close to
    critical to classify; those times are also listed in ``skipped``.
    """

    times: tuple[float, ...]
    cut_counts: tuple[int | None, ...]
    critical_times: tuple[CriticalTime, ...] = ()
    skipped: tuple[float, ...] = field(default=())

    @property
    def monotone_violations(self) -> tuple[tuple[float, float], ...]:
        """Consecutive classified times where the cut count decreases."""
        known = [(t, l) for t, l in zip(self.times, self.cut_counts) if l is not None]
        return tuple((t0, t1) for (t0, l0), (t1, l1) in zip(known, known[1:]) if l1 < l0)

    @property
    def is_monotone(self) -> bool:
        return not self.monotone_violations


def _cut_count(bridge: BridgeSpec, t: float) -> int | None:
    try:
        return branch_points(spec_at(bridge, t)).l
    except DegenerateCurveError:
        return None


def _real_count(bridge: BridgeSpec, t: float) -> int:
    return count_real_branch_points(spec_at(bridge, t))


def _refine(bridge, lo, hi, c_lo, c_hi, tol, out):
    """Bisect [lo, hi] on the count of real branch points until it is narrower than ``tol``."""
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        c_mid = _real_count(bridge, mid)
        if c_mid == c_lo:
            lo = mid
        elif c_mid == c_hi:
            hi = mid
        elif min(c_lo, c_hi) < c_mid < max(c_lo, c_hi):
            # Two separate transitions inside the bracket.
            _refine(bridge, lo, mid, c_lo, c_mid, tol, out)
            _refine(bridge, mid, hi, c_mid, c_hi, tol, out)
            return
        else:
            raise ScanResolutionError(
                f"cut count is not monotone inside [{lo}, {hi}]; refine the scan", (lo, hi)
            )
    out.append(CriticalTime(0.5 * (lo + hi), (lo, hi), c_lo // 2, c_hi // 2))


def cut_count_timeline(bridge: BridgeSpec, t_grid, tol: float | None = None) -> Timeline:
    """Count the cuts l(t) at every grid time.

    Consecutive classified times with different counts bracket a critical
    time. With ``tol`` the brackets are bisected to width ``tol``; otherwise
    the bracket midpoint is reported.

    Raises
    ------
    ScanResolutionError
        If bisection meets a count outside the range spanned by its bracket,
        i.e. the scan is too coarse to separate neighbouring transitions.
    """
    times = [_check_time(t) for t in np.atleast_1d(np.asarray(t_grid, dtype=float))]
    if any(b <= a for a, b in zip(times, times[1:])):
        raise ValueError("time grid must be strictly increasing")
    counts = ordered_map(lambda t: _cut_count(bridge, t), times)
    skipped = tuple(t for t, c in zip(times, counts) if c is None)
    known = [(t, c) for t, c in zip(times, counts) if c is not None]
    crit: list[CriticalTime] = []
    for (t0, c0), (t1, c1) in zip(known, known[1:]):
        if c0 == c1:
            continue
        if tol is None:
            crit.append(CriticalTime(0.5 * (t0 + t1), (t0, t1), c0, c1))
        else:
            _refine(bridge, t0, t1, 2 * c0, 2 * c1, tol, crit)
    return Timeline(tuple(times), tuple(counts), tuple(crit), skipped)


def critical_times(bridge: BridgeSpec, tol: float = 1e-9, t_grid=None) -> tuple[float, ...]:
    """Sorted times where the number of cuts changes, each located to within ``tol``.

    The default scan is :func:`scan_grid`; transitions closer to 0 or 1 than
    its margin are not seen.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    grid = scan_grid() if t_grid is None else t_grid
    timeline = cut_count_timeline(bridge, grid, tol)
    return tuple(sorted(c.time for c in timeline.critical_times))


def rescaling(t: float, convention: str = "paper") -> float:
    """Spatial scale s(t): t (1 - t) for ``"paper"``, sqrt(t (1 - t)) for ``"sqrt"``."""
    t = _check_time(t)
    if convention == "paper":
        return t * (1.0 - t)
    if convention == "sqrt":
        return math.sqrt(t * (1.0 - t))
    raise ValueError(f"convention must be one of {CONVENTIONS}, got {convention!r}")


def bridge_density(bridge: BridgeSpec, t: float, x, convention: str = "paper"):
    """Limiting particle density at position ``x`` and time ``t``.

    Particles at x correspond to eigenvalues x / s(t), so the density is
    rho_t(x / s) / s and integrates to 1 in x.
    """
    s = rescaling(t, convention)
    x = np.asarray(x, dtype=float)
    return density(spec_at(bridge, t), x / s) / s
