"""Adaptive quadrature helpers and cancellation-safe integrand building blocks.

All integrals against a jump density run through :func:`integrate`, a thin
wrapper over adaptive Gauss-Kronrod panels (scipy's QUADPACK) with explicit
handling of infinite endpoints and user-supplied interior break points.

The ``*_stable`` helpers evaluate the small-|z| combinations that appear in
drift and moment integrands.  Near the origin these expressions lose all
significant digits if evaluated literally, so they switch to truncated
series below a fixed threshold; the truncation error there is below 1e-15
relative.
"""

from __future__ import annotations

import numpy as np
from scipy.integrate import quad

from .errors import QuadratureError

DEFAULT_TOL = 1e-10

# Series switch-over: |argument| below this uses the Taylor form.
_SERIES_CUT = 1e-3


def expm1_minus_z(z):
    """e^z - 1 - z, accurate near 0 (value ~ z^2/2)."""
    z = np.asarray(z, dtype=float)
    small = np.abs(z) < _SERIES_CUT
    out = np.empty_like(z)
    zs = np.where(small, z, 0.0)
    out[...] = np.where(
        small,
        zs * zs * (0.5 + zs * (1.0 / 6.0 + zs * (1.0 / 24.0 + zs * (1.0 / 120.0 + zs / 720.0)))),
        np.expm1(np.where(small, 0.0, z)) - np.where(small, 0.0, z),
    )
    return out if out.ndim else float(out)


def w_minus_log1pw(w):
    """w - ln(1 + w), accurate near 0 (value ~ w^2/2)."""
    w = np.asarray(w, dtype=float)
    small = np.abs(w) < _SERIES_CUT
    ws = np.where(small, w, 0.0)
    series = ws * ws * (0.5 + ws * (-1.0 / 3.0 + ws * (0.25 + ws * (-0.2 + ws / 6.0))))
    wb = np.where(small, 0.0, w)
    out = np.where(small, series, wb - np.log1p(wb))
    return out if out.ndim else float(out)


def quartic_gain_defect(w):
    """(1 + w)^4 - 1 - w - 3 ln(1 + w), accurate near 0 (value ~ 7.5 w^2)."""
    w = np.asarray(w, dtype=float)
    small = np.abs(w) < _SERIES_CUT
    ws = np.where(small, w, 0.0)
    series = ws * ws * (7.5 + ws * (3.0 + ws * (1.75 + ws * (-0.6 + ws * 0.5))))
    wb = np.where(small, 0.0, w)
    exact = (1.0 + wb) ** 4 - 1.0 - wb - 3.0 * np.log1p(wb)
    out = np.where(small, series, exact)
    return out if out.ndim else float(out)


def _quad_piece(f, lo, hi, tol):
    val, err = quad(f, lo, hi, epsabs=tol, epsrel=1e-11, limit=400)[:2]
    if not np.isfinite(val):
        raise QuadratureError(f"integral over ({lo}, {hi}) is not finite")
    if err > max(50.0 * tol, 1e-8 * abs(val)):
        raise QuadratureError(
            f"quadrature error estimate {err:.3e} over ({lo}, {hi}) "
            f"exceeds tolerance {tol:.3e}"
        )
    return val


def integrate(f, lo, hi, *, tol=DEFAULT_TOL, points=()):
    """Integrate ``f`` over (lo, hi) to absolute tolerance ``tol``.

    ``lo``/``hi`` may be ``-inf``/``inf``.  ``points`` lists interior
    locations where the integrand has kinks; the integral is split there so
    each adaptive panel sees a smooth function.
    """
    if lo == hi:
        return 0.0
    if lo > hi:
        raise ValueError(f"empty interval ({lo}, {hi})")
    cuts = [lo] + sorted(p for p in points if lo < p < hi) + [hi]
    tol_piece = tol / max(len(cuts) - 1, 1)
    return sum(_quad_piece(f, a, b, tol_piece) for a, b in zip(cuts[:-1], cuts[1:]))
