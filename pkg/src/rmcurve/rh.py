"""Reference kernels, rotated Airy solutions and the model Riemann-Hilbert solution."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import airy as _scipy_airy

from .curve import CurveSpec, branch_points, cut_structure, xi_sheets
from .errors import UnsupportedConfigurationError

__all__ = [
    "airy",
    "y_alpha",
    "sine_kernel",
    "airy_kernel",
    "ModelRHMatrix",
    "model_rh_matrix",
    "RHReport",
    "verify_model_rh",
    "jump_matrix",
]

SINE_DIAGONAL = 1e-8
AIRY_DIAGONAL = 1e-6
# Ai decays like exp(-2/3 z^{3/2}); beyond this it underflows and Ai' overflows on the other side.
_AIRY_LIMIT = 100.0
# Fiber roots of a real point that are real up to rounding.
_REAL_ROOT_TOL = 1e-12


def airy(z):
    """Return ``(Ai(z), Ai'(z))`` for real or complex ``z``.

    Raises
    ------
    OverflowError
        For |z| beyond the range where the values stay finite in double precision.
    """
    z = np.asarray(z)
    if np.any(np.abs(z) > _AIRY_LIMIT):
        raise OverflowError(f"|z| > {_AIRY_LIMIT} is outside the supported Airy range")
    ai, aip, _, _ = _scipy_airy(z)
    if ai.ndim == 0:
        return ai[()], aip[()]
    return ai, aip


def y_alpha(alpha: int, z):
    """Rotated Airy solution e^{2 alpha pi i/3} Ai(e^{2 alpha pi i/3} z), alpha in {0, 1, 2}."""
    if alpha not in (0, 1, 2):
        raise ValueError("alpha must be 0, 1 or 2")
    if alpha == 0:
        return airy(z)[0]
    omega = np.exp(2j * np.pi * alpha / 3)
    return omega * airy(omega * np.asarray(z, dtype=complex))[0]


def sine_kernel(u, v):
    """sin(pi (u - v)) / (pi (u - v)), equal to 1 when |u - v| < 1e-8."""
    d = np.asarray(u, dtype=float) - np.asarray(v, dtype=float)
    near = np.abs(d) < SINE_DIAGONAL
    safe = np.where(near, 1.0, d)
    out = np.where(near, 1.0, np.sin(np.pi * safe) / (np.pi * safe))
    return out if out.ndim else out[()]


def airy_kernel(u, v):
    """(Ai(u) Ai'(v) - Ai'(u) Ai(v)) / (u - v), with the diagonal Ai'(u)^2 - u Ai(u)^2."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    au, apu = airy(u)
    av, apv = airy(v)
    d = u - v
    near = np.abs(d) < AIRY_DIAGONAL
    safe = np.where(near, 1.0, d)
    off = (au * apv - apu * av) / safe
    m = 0.5 * (u + v)
    am, apm = airy(m)
    diag = apm**2 - m * am**2
    out = np.where(near, diag, off)
    return out if out.ndim else out[()]


@dataclass(frozen=True, eq=False)
class ModelRHMatrix:
    """M(x) with entries M[i, j] = phi_i(xi_j(x)).

    ``p_images`` are the 2k real branch points of the curve in the y-plane, the
    zeros of R in the square-root denominator.
    """

    at: complex
    entries: np.ndarray
    spec: CurveSpec
    p_images: tuple[float, ...]
    side: int


def _require_real(spec: CurveSpec):
    bps = branch_points(spec)
    if not bps.is_real:
        raise UnsupportedConfigurationError(
            "the model solution is implemented only when every branch point is real (l = k)"
        )
    return np.sort(np.array(bps.y_real))


def _sqrt_r(p: np.ndarray, y: np.ndarray, flip: np.ndarray) -> np.ndarray:
    """sqrt(prod_j (y - p_j)) continued from +infinity with cuts on the upper arcs.

    Each pair (p_{2i-1}, p_{2i}) contributes (y - c) sqrt(1 - (h / (y - c))^2),
    analytic off the real segment [p_{2i-1}, p_{2i}] and ~ y at infinity.
    The product is the correct branch everywhere except under the arc of the
    sheet glued along cut s, which sheet s reaches from the lower x half-plane;
    there the factor of pair s changes sign (``flip``).

    Real roots strictly inside a segment lie in the interior of that sheet's
    region, where the correct value is the limit from below (the same as the
    flipped limit from above), whatever ``flip`` says.
    """
    out = np.ones(y.shape, dtype=complex)
    on_segment = np.zeros(y.shape, dtype=bool)
    for lo, hi in zip(p[::2], p[1::2]):
        c, h = 0.5 * (lo + hi), 0.5 * (hi - lo)
        t = y - c
        inside = (np.abs(y.imag) <= _REAL_ROOT_TOL * (1.0 + np.abs(y))) & (y.real > lo) & (y.real < hi)
        below = -1j * np.sqrt(np.abs((y.real - lo) * (hi - y.real)))
        with np.errstate(divide="ignore", invalid="ignore"):
            factor = np.where(inside, below, t * np.sqrt(1.0 - (h / t) ** 2))
        out = out * factor
        on_segment |= inside
    return np.where(flip & ~on_segment, -out, out)


def _phi(spec: CurveSpec, y: np.ndarray, root: np.ndarray) -> np.ndarray:
    """Rows phi_0..phi_k evaluated at ``y`` (any shape); result shape (k+1,) + y.shape."""
    a = spec.a_array
    c = -1j * np.sqrt(spec.eps_array)
    diff = y[None, ...] - a.reshape((-1,) + (1,) * y.ndim)
    num = np.prod(diff, axis=0)
    rows = [num / root]
    for i in range(spec.k):
        rows.append(c[i] * np.prod(np.delete(diff, i, axis=0), axis=0) / root)
    return np.stack(rows)


def _model_entries(spec: CurveSpec, x: np.ndarray, side: int) -> np.ndarray:
    p = _require_real(spec)
    xi = xi_sheets(spec, x, side)
    sig = np.where(x.imag > 0, 1, np.where(x.imag < 0, -1, side))
    flip = np.zeros(xi.shape, dtype=bool)
    flip[:, 1:] = (sig < 0)[:, None]
    root = _sqrt_r(p, xi, flip)
    phi = _phi(spec, xi, root)  # (k+1 rows, n points, k+1 sheets)
    return np.moveaxis(phi, 1, 0)


def model_rh_matrix(spec: CurveSpec, x: complex, side: int | None = None) -> ModelRHMatrix:
    """Evaluate the model RH solution at ``x``; real ``x`` needs ``side`` (+1/-1, default +1).

    Raises
    ------
    UnsupportedConfigurationError
        If the curve has complex branch points.
    """
    x = complex(x)
    if x.imag != 0:
        s = 1 if x.imag > 0 else -1
    else:
        s = 1 if side is None else int(np.sign(side))
    entries = _model_entries(spec, np.array([x]), s)[0]
    return ModelRHMatrix(
        at=x, entries=entries, spec=spec, p_images=tuple(_require_real(spec)), side=s
    )


def jump_matrix(k: int, cut: int) -> np.ndarray:
    """Identity except the block [[0, 1], [-1, 0]] on rows/columns (0, cut)."""
    j = np.eye(k + 1, dtype=complex)
    j[0, 0] = j[cut, cut] = 0
    j[0, cut] = 1
    j[cut, 0] = -1
    return j


@dataclass(frozen=True)
class RHReport:
    max_residual: float
    residual_per_cut: tuple[float, ...]
    decay_slope: float
    det_spread: float
    points_per_cut: int


def verify_model_rh(
    spec: CurveSpec,
    points_per_cut: int = 50,
    ray_angle: float = np.pi / 3,
    radii=None,
) -> RHReport:
    """Check M+ = M- j_S on every cut, the 1/x decay of M - I and constancy of det M.

    Interior points are Chebyshev-like (away from the edges); the decay slope
    is a least-squares fit of log||M - I|| against log|x| along a ray.
    """
    _require_real(spec)
    cs = cut_structure(spec)
    residuals = []
    dets = []
    for i, (lo, hi) in enumerate(cs.cuts):
        th = (np.arange(points_per_cut) + 0.5) / points_per_cut * np.pi
        x = lo + (hi - lo) * 0.5 * (1 - np.cos(th)) + 0j
        m_plus = _model_entries(spec, x, 1)
        m_minus = _model_entries(spec, x, -1)
        # sheet glued along cut i
        j = jump_matrix(spec.k, cs.sheet_groups[i][0])
        res = np.abs(m_plus - m_minus @ j).max(axis=(1, 2))
        residuals.append(float(res.max()))
        dets += list(np.linalg.det(m_plus)) + list(np.linalg.det(m_minus))
    if radii is None:
        span = max(abs(cs.cuts[0][0]), abs(cs.cuts[-1][1]), 1.0)
        radii = span * np.logspace(1, 3, 9)
    radii = np.asarray(radii, dtype=float)
    ray = radii * np.exp(1j * ray_angle)
    m_ray = _model_entries(spec, ray, 1)
    dist = np.linalg.norm(m_ray - np.eye(spec.k + 1), axis=(1, 2), ord=2)
    slope = float(np.polyfit(np.log(radii), np.log(dist), 1)[0])
    dets += list(np.linalg.det(m_ray))
    dets = np.array(dets)
    return RHReport(
        max_residual=max(residuals),
        residual_per_cut=tuple(residuals),
        decay_slope=slope,
        det_spread=float(np.abs(dets - dets[0]).max()),
        points_per_cut=points_per_cut,
    )
