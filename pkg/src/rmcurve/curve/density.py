"""The physical branch xi_0 and the limiting eigenvalue density."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import PchipInterpolator

from .branch import branch_points
from .spec import CurveSpec, dx_dz, fiber_roots

__all__ = [
    "xi0",
    "density",
    "in_support",
    "cut_mass",
    "DensityProfile",
    "density_profile",
    "GL_NODES",
]

GL_NODES = 64


def in_support(spec: CurveSpec, x) -> np.ndarray:
    """Boolean mask of real points strictly inside a cut."""
    x = np.asarray(x, dtype=float)
    z = branch_points(spec).x_real
    inside = np.zeros(x.shape, dtype=bool)
    for lo, hi in zip(z[::2], z[1::2]):
        inside |= (x > lo) & (x < hi)
    return inside


def xi0(spec: CurveSpec, x, side: int = 1):
    """The branch xi_0 ~ x - 1/x.

    Off the real axis this is the unique root in the same y half-plane as ``x``.
    On the real axis ``side`` selects the boundary value from above (+1) or
    below (-1): inside a cut it is the member of the conjugate pair on that
    side, elsewhere it is the real root on which x(y) is increasing.
    """
    x = np.asarray(x, dtype=complex)
    roots = fiber_roots(spec, x)
    up = np.take_along_axis(roots, np.argmax(roots.imag, -1)[..., None], -1)[..., 0]
    down = np.take_along_axis(roots, np.argmin(roots.imag, -1)[..., None], -1)[..., 0]
    on_axis = x.imag == 0
    inside = on_axis & in_support(spec, x.real)
    slope = dx_dz(spec, roots).real
    increasing = np.take_along_axis(roots, np.argmax(slope, -1)[..., None], -1)[..., 0].real
    pick_up = (x.imag > 0) | (inside & (side > 0))
    pick_down = (x.imag < 0) | (inside & (side < 0))
    out = np.where(pick_up, up, np.where(pick_down, down, increasing + 0j))
    return out if out.ndim else out[()]


def density(spec: CurveSpec, x):
    """Limiting eigenvalue density rho(x) = Im xi_0+(x) / pi (exactly 0 off the support)."""
    x = np.asarray(x, dtype=float)
    inside = in_support(spec, x)
    out = np.zeros(x.shape)
    if inside.any():
        out[inside] = np.abs(xi0(spec, x[inside].astype(complex)).imag) / np.pi
    return out if out.ndim else out[()]


def _panel(spec, lo, length, a, b, t, w):
    half = 0.5 * (b - a)
    th = a + half * (t + 1.0)
    f = density(spec, lo + length * np.sin(th) ** 2) * length * np.sin(2 * th)
    return half * (w @ f)


def cut_mass(
    spec: CurveSpec,
    lo: float,
    hi: float,
    theta0: float = 0.0,
    theta1: float = np.pi / 2,
    nodes: int = GL_NODES,
    tol: float = 1e-13,
):
    """Mass of rho over the part of [lo, hi] with x = lo + (hi - lo) sin^2(theta), theta in [theta0, theta1].

    The substitution turns the square-root edges into a smooth integrand.
    Gauss-Legendre panels of ``nodes`` points are bisected until a panel agrees
    with its two halves to ``tol``; a single panel suffices unless a complex
    branch point sits close to the cut.
    """
    t, w = np.polynomial.legendre.leggauss(nodes)
    length = hi - lo
    total = 0.0
    stack = [(theta0, theta1, _panel(spec, lo, length, theta0, theta1, t, w), 0)]
    while stack:
        a, b, whole, depth = stack.pop()
        mid = 0.5 * (a + b)
        left = _panel(spec, lo, length, a, mid, t, w)
        right = _panel(spec, lo, length, mid, b, t, w)
        if abs(left + right - whole) <= tol * (b - a) / (theta1 - theta0) or depth >= 40:
            total += left + right
        else:
            stack += [(a, mid, left, depth + 1), (mid, b, right, depth + 1)]
    return float(total)


@dataclass(frozen=True, eq=False)
class DensityProfile:
    """Sampled density with cumulative mass.

    ``cumulative[j]`` is the mass to the left of ``grid[j]``.
    """

    grid: np.ndarray
    rho: np.ndarray
    total_mass: float
    cut_masses: tuple[float, ...]
    cuts: tuple[tuple[float, float], ...]
    cumulative: np.ndarray

    def cdf(self, x):
        """Interpolated cumulative mass (monotone cubic in x)."""
        interp = PchipInterpolator(self.grid, self.cumulative, extrapolate=False)
        out = interp(np.asarray(x, dtype=float))
        x = np.asarray(x, dtype=float)
        out = np.where(x <= self.grid[0], 0.0, np.where(x >= self.grid[-1], self.cumulative[-1], out))
        return out if out.ndim else out[()]


def density_profile(spec: CurveSpec, points_per_cut: int = 200, margin: float = 0.05) -> DensityProfile:
    """Sample rho on a grid refined toward the edges of every cut.

    Each cut gets ``points_per_cut`` points uniform in theta (x = lo + L sin^2 theta),
    the gaps and the two outer margins (``margin`` times the support span) get a
    few points where rho is exactly 0.
    """
    if points_per_cut < 2:
        raise ValueError("points_per_cut must be at least 2")
    z = branch_points(spec).x_real
    cuts = list(zip(z[::2], z[1::2]))
    span = z[-1] - z[0]
    n_ext = max(2, points_per_cut // 20)
    sub_nodes = 8

    xs, cum, masses = [], [], []
    offset = 0.0
    left = np.linspace(z[0] - margin * span, z[0], n_ext, endpoint=False)
    xs.append(left)
    cum.append(np.zeros_like(left))
    for i, (lo, hi) in enumerate(cuts):
        th = np.linspace(0.0, np.pi / 2, points_per_cut)
        pieces = [cut_mass(spec, lo, hi, a, b, sub_nodes, 1e-12 / points_per_cut) for a, b in zip(th[:-1], th[1:])]
        xs.append(lo + (hi - lo) * np.sin(th) ** 2)
        cum.append(offset + np.concatenate([[0.0], np.cumsum(pieces)]))
        mass = cut_mass(spec, lo, hi)
        masses.append(mass)
        offset += mass
        if i + 1 < len(cuts):
            gap = np.linspace(hi, cuts[i + 1][0], n_ext + 2)[1:-1]
            xs.append(gap)
            cum.append(np.full_like(gap, offset))
    right = np.linspace(z[-1], z[-1] + margin * span, n_ext + 1)[1:]
    xs.append(right)
    cum.append(np.full_like(right, offset))

    grid = np.concatenate(xs)
    cumulative = np.concatenate(cum)
    return DensityProfile(
        grid=grid,
        rho=density(spec, grid),
        total_mass=float(sum(masses)),
        cut_masses=tuple(masses),
        cuts=tuple((float(a), float(b)) for a, b in cuts),
        cumulative=cumulative,
    )
