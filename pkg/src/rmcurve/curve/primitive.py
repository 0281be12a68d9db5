"""Closed-form primitive of xi dx in the uniformizing coordinate.

Along any sheet, d(lambda) = xi dx = y x'(y) dy, and

    Lam(y) = y^2/2 - sum_j eps_j [log(y - a_j) - a_j / (y - a_j)]

satisfies Lam'(y) = y x'(y). Sheet values of the lambda-functions are Lam at
the sheet's root plus a constant. The log branch is fixed by the y half-plane
the sheet lives in: ``half=+1`` uses arguments in (-pi/2, 3pi/2], ``half=-1``
arguments in (-3pi/2, pi/2]. Both are continuous up to the real axis from their
own half-plane, including across the poles' left rays.
"""

from __future__ import annotations

import numpy as np

from .spec import CurveSpec

__all__ = ["primitive", "log_half"]


def log_half(w, half: int):
    w = np.asarray(w, dtype=complex)
    lg = np.log(w)
    ang = lg.imag
    if half > 0:
        lg = np.where(ang <= -np.pi / 2, lg + 2j * np.pi, lg)
    else:
        lg = np.where(ang > np.pi / 2, lg - 2j * np.pi, lg)
    return lg


def primitive(spec: CurveSpec, y, half: int):
    y = np.asarray(y, dtype=complex)
    d = y[..., None] - spec.a_array
    terms = log_half(d, half) - spec.a_array / d
    out = 0.5 * y**2 - terms @ spec.eps_array
    return out if out.ndim else out[()]
