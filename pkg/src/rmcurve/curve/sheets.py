"""Sheet labelling of the fiber roots by homotopy continuation.

Sheet 0 behaves like x - 1/x at infinity and sheet s (1 <= s <= k) like
a_s + eps_s / x. Labels are fixed at a real reference point x_far to the right
of every branch point, where all k+1 roots are real and their order is the
asymptotic order, and are carried to the target by Newton continuation along
the path

    x_far -> x_far + iH -> Re(x) + iH -> x        (H above every branch point)

in the half-plane of the requested boundary value. The path alone places the
sheet cuts of complex branch points on vertical segments; these are moved onto
straight segments from w to its real crossing point r by exchanging the two
labels that meet at w inside the triangle (w, Re w, r). Descents that would
pass under a complex branch point are shifted sideways without crossing the
vertical line through it.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from ..errors import SheetTrackingError
from .branch import branch_points
from .spec import CurveSpec, fiber_roots

__all__ = [
    "xi_sheets",
    "xi_branch",
    "reference_point",
    "reference_roots",
    "MAX_STEPS",
]

MAX_STEPS = 2**12
_STEP_FRACTION = 0.3


def _geometry(spec: CurveSpec):
    bps = branch_points(spec)
    images = bps.x_images
    scale = max(float(np.ptp(images.real)) if images.size else 0.0, 1.0)
    x_far = float(images.real.max()) + 10.0 * scale
    height = float(np.abs(images.imag).max()) + 0.5 * scale
    return x_far, height


def reference_point(spec: CurveSpec) -> float:
    """The real starting point x_far of every continuation path."""
    return _geometry(spec)[0]


@lru_cache(maxsize=256)
def _reference_roots(spec: CurveSpec) -> tuple[complex, ...]:
    x_far = reference_point(spec)
    y = np.sort(fiber_roots(spec, np.array([x_far]), polish=3)[0].real)
    # All roots are real here: one just right of each a_s and the largest near x_far.
    guess = np.concatenate([spec.a_array + spec.eps_array / x_far, [x_far - 1.0 / x_far]])
    if not np.all(np.diff(y) > 0):
        raise SheetTrackingError("reference fiber has repeated roots")
    gaps = np.diff(np.concatenate([[-np.inf], guess, [np.inf]]))
    if np.any(np.abs(y - guess) > 0.5 * np.minimum(gaps[:-1], gaps[1:])):
        raise SheetTrackingError("reference roots do not match their asymptotic sheets")
    return tuple(complex(v) for v in np.concatenate([[y[-1]], y[:-1]]))


def reference_roots(spec: CurveSpec) -> np.ndarray:
    """Roots at x_far in sheet order [xi_0, xi_1, ..., xi_k]."""
    return np.array(_reference_roots(spec))


def _parts(spec: CurveSpec, y):
    inv = 1.0 / (y[..., None] - spec.a_array)
    e = spec.eps_array
    return y + inv @ e, 1.0 - (inv**2) @ e


def _nearest_gap(y):
    """Distance from every root to its nearest neighbour in the same fiber."""
    d = np.abs(y[:, :, None] - y[:, None, :])
    n = y.shape[1]
    d[:, np.arange(n), np.arange(n)] = np.inf
    return d.min(axis=2)


def _correct(spec, y, x, iters=8):
    for _ in range(iters):
        xv, dx = _parts(spec, y)
        with np.errstate(divide="ignore", invalid="ignore"):
            step = (xv - x[:, None]) / dx
        if not np.all(np.isfinite(step)):
            return y, False
        y = y - step
        if np.all(np.abs(step) <= 1e-14 * (1.0 + np.abs(y))):
            return y, True
    xv, _ = _parts(spec, y)
    ok = np.all(np.abs(xv - x[:, None]) <= 1e-11 * (1.0 + np.abs(x[:, None])))
    return y, bool(ok)


def _follow(spec, y, start, end, budget):
    """Continue roots ``y`` (n, k+1) along straight segments start -> end (each shape (n,))."""
    delta = end - start
    length = np.abs(delta)
    if not np.any(length > 0):
        return y, budget
    u, h = 0.0, 1.0
    while u < 1.0:
        x = start + u * delta
        _, dx = _parts(spec, y)
        gap = _nearest_gap(y)
        speed = np.abs(1.0 / dx) * length[:, None]
        with np.errstate(divide="ignore", invalid="ignore"):
            h_safe = np.min(np.where(speed > 0, _STEP_FRACTION * gap / speed, np.inf))
        h = min(2.0 * h, h_safe, 1.0 - u)
        while True:
            budget -= 1
            if budget < 0 or h <= 0 or not np.isfinite(h):
                raise SheetTrackingError(
                    "continuation exhausted its step budget; the path passes too close to a branch point"
                )
            x_new = start + (u + h) * delta
            guess = y + (x_new - x)[:, None] / dx
            y_new, ok = _correct(spec, guess, x_new)
            if (
                ok
                and np.all(np.abs(y_new - guess) < _STEP_FRACTION * gap)
                and np.all(_nearest_gap(y_new) > 0.25 * gap)
            ):
                break
            h *= 0.5
        y, u = y_new, u + h
        if 1.0 - u < 1e-15:
            u = 1.0
    return y, budget


def _descent_abscissa(spec: CurveSpec, x: np.ndarray, sigma: int) -> np.ndarray:
    """Real part of the descending leg; moved sideways when it would pass under a complex branch point."""
    col = x.real.copy()
    for w, wb in branch_points(spec).x_pairs:
        apex = w if sigma > 0 else wb
        gap = 0.05 * abs(apex.imag)
        below = np.abs(x.imag) < abs(apex.imag)
        near = below & (np.abs(x.real - apex.real) < gap)
        # Stay on the same side of the vertical line through the apex as the target.
        col = np.where(near, apex.real + np.where(x.real >= apex.real, gap, -gap), col)
    return col


def _track(spec: CurveSpec, x: np.ndarray, sigma: int) -> np.ndarray:
    x_far, height = _geometry(spec)
    height = sigma * max(height, float(np.abs(x.imag).max(initial=0.0)) * 1.05)
    budget = MAX_STEPS
    y0 = reference_roots(spec)[None, :]
    top = np.array([x_far + 1j * height])
    y1, budget = _follow(spec, y0, np.array([x_far + 0j]), top, budget)
    n = x.size
    col = _descent_abscissa(spec, x, sigma)
    corner = col + 1j * height
    knee = col + 1j * x.imag
    y = np.repeat(y1, n, axis=0)
    y, budget = _follow(spec, y, np.repeat(top, n), corner, budget)
    y, budget = _follow(spec, y, corner, knee, budget)
    y, budget = _follow(spec, y, knee, x, budget)
    return y


def _swap_region(x: np.ndarray, apex: complex, r: float) -> np.ndarray:
    """Points between the vertical line under ``apex`` and the segment apex -> r.

    Points on the vertical line carry the labels of its right-hand side, so the
    line belongs to the region only when the segment leans to the right.
    """
    t = x.imag / apex.imag
    inside_height = (t >= 0) & (t < 1)
    g = r + (apex.real - r) * t
    v = apex.real
    if r > v:
        hit = (x.real >= v) & (x.real < g)
    elif r < v:
        hit = (x.real > g) & (x.real < v)
    else:
        hit = np.zeros(x.shape, dtype=bool)
    return inside_height & hit


@lru_cache(maxsize=256)
def _meeting_sheets(spec: CurveSpec, sigma: int) -> tuple[tuple[int, int], ...]:
    """For each complex branch point (upper for sigma=+1), the two sheets that meet there."""
    bps = branch_points(spec)
    out = []
    for (w, wb), (yw, ywb) in zip(bps.x_pairs, bps.y_pairs):
        pt, yp = (w, yw) if sigma > 0 else (wb, ywb)
        probe = pt + sigma * 1j * 1e-3 * max(abs(pt.imag), 1e-3)
        roots = _track(spec, np.array([probe]), sigma)[0]
        near = np.argsort(np.abs(roots - yp))[:2]
        out.append((int(min(near)), int(max(near))))
    return tuple(out)


def _relabel(spec: CurveSpec, x: np.ndarray, y: np.ndarray, sigma: int) -> np.ndarray:
    bps = branch_points(spec)
    if bps.is_real:
        return y
    from .cuts import cut_structure

    crossings = [r for group in cut_structure(spec).gamma_crossings for r in group]
    pairs = _meeting_sheets(spec, sigma)
    y = y.copy()
    for (w, wb), r, (s1, s2) in zip(bps.x_pairs, crossings, pairs):
        apex = w if sigma > 0 else wb
        mask = _swap_region(x, apex, r)
        y[mask, s1], y[mask, s2] = y[mask, s2], y[mask, s1].copy()
    return y


def xi_sheets(spec: CurveSpec, x, side: int | None = None) -> np.ndarray:
    """Values of every sheet xi_0..xi_k at ``x``; result has shape ``x.shape + (k+1,)``.

    Points with Im x != 0 use their own half-plane. Real points use ``side``
    (+1 from above, -1 from below; default +1) and give boundary values on cuts.

    Raises
    ------
    SheetTrackingError
        If a continuation path comes too close to a branch point.
    """
    x = np.asarray(x, dtype=complex)
    flat = x.reshape(-1)
    sig = np.where(flat.imag > 0, 1, np.where(flat.imag < 0, -1, 1 if side is None else int(np.sign(side))))
    if side is not None and np.any(sig * np.sign(side) < 0):
        raise ValueError("side contradicts the half-plane of a non-real point")
    out = np.empty(flat.shape + (spec.k + 1,), dtype=complex)
    for s in (1, -1):
        sel = np.flatnonzero(sig == s)
        if sel.size:
            pts = flat[sel]
            out[sel] = _relabel(spec, pts, _track(spec, pts, s), s)
    return out.reshape(x.shape + (spec.k + 1,))


def xi_branch(spec: CurveSpec, x, sheet: int, side: int | None = None):
    """Root of the curve over ``x`` on sheet ``sheet`` (0..k), see :func:`xi_sheets`."""
    if not 0 <= sheet <= spec.k:
        raise ValueError(f"sheet must be in 0..{spec.k}")
    out = xi_sheets(spec, x, side)[..., sheet]
    return out if out.ndim else out[()]
