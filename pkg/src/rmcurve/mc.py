"""Finite-N sampling of M = A + H and the statistics compared against the limiting curve.

H is drawn from the Gaussian unitary ensemble with weight exp(-(N/2) Tr H^2):
real diagonal entries of variance 1/N and off-diagonal entries whose real and
imaginary parts each have variance 1/(2N). A is diagonal with a_i repeated
N eps_i times.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

import numpy as np
from scipy import stats
from scipy.special import erf

from ._parallel import ordered_map
from .curve import CurveSpec, DensityProfile, branch_points, cut_structure
from .errors import SampleSizeError, SpecError
from .rh import sine_kernel

__all__ = [
    "EnsembleSample",
    "KernelStats",
    "Histogram",
    "MomentSummary",
    "source_diagonal",
    "sample_matrix",
    "draw_matrix",
    "trace_moments",
    "empirical_density",
    "density_distance",
    "cut_occupancy",
    "default_bulk_window",
    "unfold",
    "unfold_draws",
    "bulk_statistics",
    "edge_statistics",
    "ks_distance",
    "wigner_surmise_cdf",
    "wigner_surmise_pdf",
    "sine_pair_correlation",
    "tracy_widom_reference",
    "MAX_N",
    "MIN_SPACINGS",
    "MIN_EDGE_DRAWS",
]

MAX_N = 2048
MIN_SPACINGS = 1000
MIN_EDGE_DRAWS = 50
_CHUNK = 16


def source_diagonal(spec: CurveSpec, N: int) -> np.ndarray:
    """Diagonal of A: a_i repeated N eps_i times, ascending.

    Raises
    ------
    SpecError
        If some N eps_i is not an integer.
    """
    if isinstance(N, bool) or int(N) != N or N < 1:
        raise SpecError(f"N must be a positive integer, got {N!r}")
    counts = []
    for e in spec.eps:
        c = e * int(N)
        if c.denominator != 1:
            raise SpecError(f"N = {N} is not a multiple of {e.denominator}")
        counts.append(int(c))
    return np.repeat(spec.a_array, counts)


def _rng(seed: int, draw: int) -> np.random.Generator:
    # The stream of a draw depends only on (seed, draw), never on scheduling.
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(int(draw),)))


def draw_matrix(spec: CurveSpec, N: int, seed: int, draw: int) -> np.ndarray:
    """The matrix M = A + H of one draw; Hermitian bit for bit."""
    diag = source_diagonal(spec, N)
    rng = _rng(seed, draw)
    g = rng.standard_normal((N, N)) + 1j * rng.standard_normal((N, N))
    h = (g + g.conj().T) / (2.0 * math.sqrt(N))
    h[np.diag_indices(N)] += diag
    return h


@dataclass(frozen=True, eq=False)
class EnsembleSample:
    """Sorted eigenvalues of ``draws`` independent matrices, one row per draw."""

    N: int
    spec: CurveSpec
    seed: int
    draws: int
    eigenvalues: np.ndarray

    @property
    def pooled(self) -> np.ndarray:
        return self.eigenvalues.reshape(-1)


def sample_matrix(spec: CurveSpec, N: int, seed: int, draws: int, max_n: int = MAX_N) -> EnsembleSample:
    """Draw ``draws`` matrices M = A + H and store their sorted eigenvalues.

    Draws run in parallel chunks (see ``RMCURVE_THREADS``); the result is
    identical for any thread count.
    """
    source_diagonal(spec, N)
    if N > max_n:
        raise ValueError(f"N = {N} exceeds the cap {max_n}")
    if isinstance(draws, bool) or int(draws) != draws or draws < 1:
        raise ValueError("draws must be a positive integer")
    draws = int(draws)
    seed = int(seed)
    if not 0 <= seed < 2**64:
        raise ValueError("seed must be an unsigned 64-bit integer")

    def chunk(start):
        stop = min(start + _CHUNK, draws)
        return [np.linalg.eigvalsh(draw_matrix(spec, N, seed, d)) for d in range(start, stop)]

    rows = [row for part in ordered_map(chunk, range(0, draws, _CHUNK)) for row in part]
    eig = np.vstack(rows)
    eig.sort(axis=1)
    return EnsembleSample(N=int(N), spec=spec, seed=seed, draws=draws, eigenvalues=eig)


@dataclass(frozen=True)
class MomentSummary:
    """Means and standard errors of (1/N) Tr M and (1/N) Tr M^2 over draws, with their limits."""

    mean_first: float
    se_first: float
    expected_first: float
    mean_second: float
    se_second: float
    expected_second: float


def trace_moments(sample: EnsembleSample) -> MomentSummary:
    """First two normalized trace moments; their expectations are exact at every N."""
    e = sample.eigenvalues
    m1 = e.mean(axis=1)
    m2 = (e**2).mean(axis=1)
    n = sample.draws
    se = (lambda v: float(v.std(ddof=1) / math.sqrt(n)) if n > 1 else float("inf"))
    a = sample.spec.a_array
    w = sample.spec.eps_array
    return MomentSummary(
        mean_first=float(m1.mean()),
        se_first=se(m1),
        expected_first=float(w @ a),
        mean_second=float(m2.mean()),
        se_second=se(m2),
        expected_second=float(w @ a**2 + 1.0),
    )


@dataclass(frozen=True, eq=False)
class Histogram:
    """Normalized histogram: ``density`` integrates to 1 over ``edges``."""

    edges: np.ndarray
    density: np.ndarray
    counts: np.ndarray
    outside: int

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.edges[1:] + self.edges[:-1])


def empirical_density(sample: EnsembleSample, bins: int = 100, range: tuple[float, float] | None = None) -> Histogram:
    """Pooled eigenvalue histogram normalized to unit mass over ``range``.

    The default range spans the smallest and largest sampled eigenvalue.
    Eigenvalues outside the range are counted in ``outside`` and left out of
    the normalization.
    """
    if isinstance(bins, bool) or int(bins) != bins or bins < 1:
        raise ValueError("bins must be a positive integer")
    x = sample.pooled
    lo, hi = (float(x.min()), float(x.max())) if range is None else (float(range[0]), float(range[1]))
    if not hi > lo:
        raise ValueError("histogram range is empty")
    counts, edges = np.histogram(x, bins=int(bins), range=(lo, hi))
    total = counts.sum()
    if total == 0:
        raise ValueError("no eigenvalues inside the histogram range")
    dens = counts / (total * np.diff(edges))
    return Histogram(edges=edges, density=dens, counts=counts, outside=int(x.size - total))


def density_distance(hist: Histogram, profile: DensityProfile) -> float:
    """Sup-norm distance between the histogram and the bin averages of rho."""
    mass = np.diff(profile.cdf(hist.edges))
    return float(np.max(np.abs(hist.density - mass / np.diff(hist.edges))))


def _cut_bounds(spec: CurveSpec) -> np.ndarray:
    """Gap midpoints separating the cuts, padded with -inf and +inf."""
    z = branch_points(spec).x_real
    mids = [0.5 * (hi + lo) for hi, lo in zip(z[1:-1:2], z[2::2])]
    return np.array([-np.inf, *mids, np.inf])


def cut_occupancy(sample: EnsembleSample) -> tuple[np.ndarray, np.ndarray]:
    """Mean fraction of eigenvalues nearest each cut and its standard error over draws.

    Each eigenvalue is assigned to the cut between the neighbouring gap midpoints.
    """
    bounds = _cut_bounds(sample.spec)
    idx = np.searchsorted(bounds, sample.eigenvalues, side="right") - 1
    ncut = bounds.size - 1
    frac = np.stack([(idx == c).mean(axis=1) for c in np.arange(ncut)], axis=1)
    se = frac.std(axis=0, ddof=1) / math.sqrt(sample.draws) if sample.draws > 1 else np.full(ncut, np.inf)
    return frac.mean(axis=0), se


def default_bulk_window(spec: CurveSpec) -> tuple[float, float]:
    """The central quarter of the cut carrying the most mass."""
    cs = cut_structure(spec)
    lo, hi = cs.cuts[int(np.argmax(cs.masses))]
    c, h = 0.5 * (lo + hi), 0.125 * (hi - lo)
    return (c - h, c + h)


def _check_window(profile: DensityProfile, window) -> tuple[float, float]:
    lo, hi = float(window[0]), float(window[1])
    for a, b in profile.cuts:
        margin = 0.1 * (b - a)
        if a + margin <= lo and hi <= b - margin:
            return lo, hi
    raise ValueError(
        f"window [{lo}, {hi}] must lie inside one cut, at least 10% of its length from both edges"
    )


def unfold_draws(sample: EnsembleSample, profile: DensityProfile, window) -> list[np.ndarray]:
    """Unfolded spacings inside ``window``, one array per draw.

    An eigenvalue lambda maps to N F(lambda) with F the limiting cumulative
    mass, so the mean spacing is 1.
    """
    lo, hi = float(window[0]), float(window[1])
    if not hi > lo:
        return [np.empty(0) for _ in range(sample.draws)]
    _check_window(profile, (lo, hi))
    out = []
    for row in sample.eigenvalues:
        inside = row[(row >= lo) & (row <= hi)]
        out.append(np.diff(sample.N * profile.cdf(inside)) if inside.size > 1 else np.empty(0))
    return out


def unfold(sample: EnsembleSample, profile: DensityProfile, window) -> np.ndarray:
    """Unfolded spacings inside ``window`` pooled over draws in draw order.

    Raises
    ------
    ValueError
        If the window is not inside one cut with 10% clearance from its edges.
    """
    parts = unfold_draws(sample, profile, window)
    return np.concatenate(parts) if parts else np.empty(0)


def wigner_surmise_pdf(s):
    """(32 / pi^2) s^2 exp(-4 s^2 / pi), the unitary-class spacing surmise."""
    s = np.asarray(s, dtype=float)
    out = np.where(s > 0, 32.0 / np.pi**2 * s**2 * np.exp(-4.0 * s**2 / np.pi), 0.0)
    return out if out.ndim else out[()]


def wigner_surmise_cdf(s):
    """erf(2 s / sqrt(pi)) - (4 / pi) s exp(-4 s^2 / pi) for s > 0, else 0."""
    s = np.asarray(s, dtype=float)
    val = erf(2.0 * s / math.sqrt(math.pi)) - 4.0 / math.pi * s * np.exp(-4.0 * s**2 / math.pi)
    out = np.where(s > 0, val, 0.0)
    return out if out.ndim else out[()]


def ks_distance(empirical, reference_cdf) -> float:
    """Kolmogorov-Smirnov sup distance between a sorted sample and a continuous CDF.

    Raises
    ------
    ValueError
        On empty or unsorted input.
    """
    x = np.asarray(empirical, dtype=float).reshape(-1)
    if x.size == 0:
        raise ValueError("empty sample")
    if np.any(np.diff(x) < 0):
        raise ValueError("sample must be sorted ascending")
    return float(stats.kstest(x, reference_cdf).statistic)


@dataclass(frozen=True, eq=False)
class KernelStats:
    """Bulk and/or edge statistics of a sample.

    Bulk fields are filled by :func:`bulk_statistics` and edge fields by
    :func:`edge_statistics`; the others stay None.
    """

    spacings: np.ndarray | None = None
    ks_bulk: float | None = None
    mean_spacing: float | None = None
    pair_r: np.ndarray | None = None
    pair_correlation: np.ndarray | None = None
    edge_values: np.ndarray | None = None
    edge_mean: float | None = None
    edge_var: float | None = None
    edge_index: int | None = None


def _pair_correlation(segments, r_max: float, bins: int):
    """Histogram estimate of the unfolded two-point function on (0, r_max].

    Distances between the m-th neighbours within each draw are accumulated for
    all m whose distance can fall below ``r_max``.
    """
    edges = np.linspace(0.0, r_max, bins + 1)
    counts = np.zeros(bins)
    points = 0
    for seg in segments:
        pos = np.concatenate([[0.0], np.cumsum(seg)])
        if pos.size < 2:
            continue
        # Points whose full r_max neighbourhood to the right is observed.
        usable = pos[pos <= pos[-1] - r_max]
        points += usable.size
        for i, p in enumerate(usable):
            d = pos[i + 1 : np.searchsorted(pos, p + r_max, side="right")] - p
            counts += np.histogram(d, bins=edges)[0]
    centers = 0.5 * (edges[1:] + edges[:-1])
    with np.errstate(invalid="ignore", divide="ignore"):
        r2 = counts / (points * np.diff(edges)) if points else np.full(bins, np.nan)
    return centers, r2


def bulk_statistics(spacings, r_max: float = 3.0, bins: int = 60) -> KernelStats:
    """KS distance of the spacing law to the surmise and a two-point function estimate.

    ``spacings`` is either one pooled array or a list of per-draw arrays; the
    two-point function (compare with 1 - sine_kernel(0, r)^2) is only
    estimated from per-draw arrays.

    Raises
    ------
    SampleSizeError
        With fewer than 1000 spacings.
    """
    segments = None
    if isinstance(spacings, (list, tuple)) and spacings and np.ndim(spacings[0]) == 1:
        segments = [np.asarray(s, dtype=float) for s in spacings]
        pooled = np.concatenate(segments)
    else:
        pooled = np.asarray(spacings, dtype=float).reshape(-1)
    if pooled.size < MIN_SPACINGS:
        raise SampleSizeError(f"need at least {MIN_SPACINGS} spacings, got {pooled.size}")
    ks = ks_distance(np.sort(pooled), wigner_surmise_cdf)
    r, r2 = (None, None) if segments is None else _pair_correlation(segments, r_max, bins)
    return KernelStats(
        spacings=pooled,
        ks_bulk=ks,
        mean_spacing=float(pooled.mean()),
        pair_r=r,
        pair_correlation=r2,
    )


def sine_pair_correlation(r):
    """1 - sine_kernel(0, r)^2, the limiting unfolded two-point function."""
    return 1.0 - sine_kernel(0.0, r) ** 2


def edge_statistics(
    sample: EnsembleSample,
    edge_index: int,
    edge_x: float | None = None,
    rho_i: float | None = None,
) -> KernelStats:
    """Rescaled extreme eigenvalue at edge z_i (1-based ``edge_index``).

    Per draw the eigenvalue closest to z_i from the cut side is taken among
    those between the neighbouring gap midpoints, and mapped to
    u = (-1)^i (rho_i N)^(2/3) (lambda - z_i), so that u follows the largest
    point of the Airy process. ``edge_x`` and ``rho_i`` default to the
    curve's values.

    Raises
    ------
    SampleSizeError
        With fewer than 50 draws.
    ValueError
        If the edge index is out of range or the neighbouring gap is narrower
        than ten edge fluctuation scales.
    """
    if sample.draws < MIN_EDGE_DRAWS:
        raise SampleSizeError(f"need at least {MIN_EDGE_DRAWS} draws, got {sample.draws}")
    cs = cut_structure(sample.spec)
    n_edges = 2 * cs.l
    if not 1 <= edge_index <= n_edges:
        raise ValueError(f"edge index must be in 1..{n_edges}")
    z = branch_points(sample.spec).x_real
    zi = float(z[edge_index - 1]) if edge_x is None else float(edge_x)
    rho = float(cs.edge_constants[edge_index - 1]) if rho_i is None else float(rho_i)
    scale = (rho * sample.N) ** (2.0 / 3.0)
    bounds = _cut_bounds(sample.spec)
    cut = (edge_index - 1) // 2
    lo, hi = bounds[cut], bounds[cut + 1]
    right = edge_index % 2 == 0
    neighbour = z[edge_index] if right and edge_index < n_edges else (z[edge_index - 2] if not right and edge_index > 1 else None)
    if neighbour is not None and abs(neighbour - zi) * scale < 10.0:
        raise ValueError("the neighbouring cut is within the edge fluctuation scale")
    sign = 1.0 if right else -1.0
    values = []
    for row in sample.eigenvalues:
        inside = row[(row > lo) & (row < hi)]
        if inside.size == 0:
            continue
        lam = inside[-1] if right else inside[0]
        values.append(sign * scale * (lam - zi))
    values = np.array(values)
    return KernelStats(
        edge_values=values,
        edge_mean=float(values.mean()),
        edge_var=float(values.var(ddof=1)),
        edge_index=int(edge_index),
    )


@lru_cache(maxsize=1)
def _tracy_widom_data() -> str:
    return resources.files("rmcurve").joinpath("data/tracy_widom_gue.json").read_text(encoding="utf-8")


def tracy_widom_reference() -> dict:
    """Largest-eigenvalue moments of large GUE matrices, produced by ``scripts/tracy_widom_oracle.py``."""
    return json.loads(_tracy_widom_data())
