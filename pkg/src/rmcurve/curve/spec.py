"""Curve parameters (source eigenvalues and filling fractions) and the rational parametrization of the spectral curve.

The curve is

    (x - y) * prod_j (y - a_j) - sum_j eps_j * prod_{i != j} (y - a_i) = 0,

which is uniformized by ``y``:  x(y) = y + sum_j eps_j / (y - a_j).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from numbers import Rational, Real

import numpy as np
from numpy.polynomial import polynomial as npoly

from ..errors import PoleError, SpecError

__all__ = [
    "CurveSpec",
    "validate_spec",
    "as_fraction",
    "x_of_z",
    "dx_dz",
    "d2x_dz2",
    "fiber_roots",
]


@dataclass(frozen=True)
class CurveSpec:
    """Source eigenvalues ``a`` (strictly increasing) and exact filling fractions ``eps``."""

    a: tuple[float, ...]
    eps: tuple[Fraction, ...]

    @property
    def k(self) -> int:
        return len(self.a)

    @cached_property
    def a_array(self) -> np.ndarray:
        return np.array(self.a, dtype=float)

    @cached_property
    def eps_array(self) -> np.ndarray:
        return np.array([float(e) for e in self.eps])

    @property
    def spread(self) -> float:
        return self.a[-1] - self.a[0]

    @cached_property
    def source_poly(self) -> np.ndarray:
        """Coefficients (ascending) of prod_j (y - a_j)."""
        return npoly.polyfromroots(self.a_array).real

    @cached_property
    def fiber_shift_poly(self) -> np.ndarray:
        """Coefficients of y * prod_j (y - a_j) + sum_j eps_j prod_{i != j} (y - a_i).

        The fiber over ``x`` is the monic polynomial ``fiber_shift_poly - x * source_poly``.
        """
        a, e = self.a_array, self.eps_array
        q = np.zeros(self.k)
        for j in range(self.k):
            q = npoly.polyadd(q, e[j] * npoly.polyfromroots(np.delete(a, j)).real)
        return npoly.polyadd(npoly.polymulx(self.source_poly), q)

    @cached_property
    def branch_poly(self) -> np.ndarray:
        """Coefficients of prod (y - a_j)^2 - sum_i eps_i prod_{j != i} (y - a_j)^2.

        Its roots are the critical points of x(y), i.e. the branch points in the y-plane.
        """
        a, e = self.a_array, self.eps_array
        out = npoly.polymul(self.source_poly, self.source_poly)
        for i in range(self.k):
            r = npoly.polyfromroots(np.delete(a, i)).real
            out = npoly.polysub(out, e[i] * npoly.polymul(r, r))
        return out


def as_fraction(value) -> Fraction:
    """Convert ``value`` to an exact fraction.

    Accepts ``Fraction``/int, strings such as ``"1/3"``, ``(num, den)`` pairs and
    ``{"num": .., "den": ..}`` mappings. Floats are converted exactly, so ``1/3``
    given as a float will not sum to one with its siblings.
    """
    if isinstance(value, Rational):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value.strip())
    if isinstance(value, dict):
        return Fraction(int(value["num"]), int(value["den"]))
    if isinstance(value, (tuple, list)) and len(value) == 2:
        return Fraction(int(value[0]), int(value[1]))
    if isinstance(value, Real):
        return Fraction(float(value))
    raise SpecError(f"cannot interpret {value!r} as a rational fraction")


def validate_spec(a, eps) -> CurveSpec:
    """Build a :class:`CurveSpec`, sorting (a_i, eps_i) pairs jointly by a_i.

    Raises
    ------
    SpecError
        On length mismatch, duplicate eigenvalues, non-positive fractions or
        fractions whose exact sum is not 1.
    """
    a = [float(v) for v in a]
    eps = [as_fraction(v) for v in eps]
    if len(a) == 0 or len(a) != len(eps):
        raise SpecError(f"need k >= 1 eigenvalues with matching fractions, got {len(a)} and {len(eps)}")
    if not all(np.isfinite(a)):
        raise SpecError("eigenvalues must be finite")
    if any(e <= 0 for e in eps):
        raise SpecError("fractions must be positive")
    if sum(eps) != 1:
        raise SpecError(f"fractions sum to {sum(eps)}, not 1")
    pairs = sorted(zip(a, eps), key=lambda p: p[0])
    a_sorted = tuple(p[0] for p in pairs)
    if any(x == y for x, y in zip(a_sorted, a_sorted[1:])):
        raise SpecError("duplicate eigenvalues")
    return CurveSpec(a=a_sorted, eps=tuple(p[1] for p in pairs))


def _poles(spec: CurveSpec, z):
    z = np.asarray(z, dtype=complex)
    d = z[..., None] - spec.a_array
    if np.any(d == 0):
        raise PoleError("x(z) has a pole at z = a_i")
    return z, 1.0 / d


def x_of_z(spec: CurveSpec, z):
    """Evaluate x(z) = z + sum eps_i / (z - a_i); real input gives real output."""
    real_in = np.isrealobj(z)
    z, inv = _poles(spec, z)
    out = z + inv @ spec.eps_array
    if real_in:
        out = out.real
    return out if out.ndim else out[()]


def dx_dz(spec: CurveSpec, z):
    z, inv = _poles(spec, z)
    return 1.0 - (inv**2) @ spec.eps_array


def d2x_dz2(spec: CurveSpec, z):
    z, inv = _poles(spec, z)
    return 2.0 * ((inv**3) @ spec.eps_array)


def fiber_roots(spec: CurveSpec, x, polish: int = 2) -> np.ndarray:
    """All k+1 roots y of the curve over each ``x`` (shape ``x.shape + (k+1,)``).

    Batched companion-matrix eigenvalues followed by ``polish`` Newton steps on
    x(y) - x, which is better conditioned than the expanded polynomial.
    """
    x = np.asarray(x, dtype=complex)
    flat = x.reshape(-1)
    d = spec.k + 1
    coeffs = spec.fiber_shift_poly[None, :].astype(complex).repeat(flat.size, 0)
    coeffs[:, : spec.k + 1] -= flat[:, None] * spec.source_poly[None, :]
    comp = np.zeros((flat.size, d, d), dtype=complex)
    if d > 1:
        comp[:, np.arange(1, d), np.arange(d - 1)] = 1.0
    comp[:, :, -1] = -coeffs[:, :d]
    y = np.linalg.eigvals(comp)
    for _ in range(polish):
        y = newton_polish(spec, y, flat[:, None])
    return y.reshape(x.shape + (d,))


def newton_polish(spec: CurveSpec, y, x):
    """One guarded Newton step on x(y) = x; a root is only moved if its residual shrinks."""
    e = spec.eps_array
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = 1.0 / (y[..., None] - spec.a_array)
        res = y + inv @ e - x
        y_new = y - res / (1.0 - (inv**2) @ e)
        res_new = y_new + (1.0 / (y_new[..., None] - spec.a_array)) @ e - x
    better = np.isfinite(res_new) & (np.abs(res_new) < np.abs(res))
    return np.where(better, y_new, y)
