"""Explicit constants of the small-maturity error decomposition.

The first-order price approximation has error O(t^{3/2}); tracking its
sources needs a smooth truncation c_eps separating small from big jumps
(c_eps = 1 on [-eps/2, eps/2], 0 outside [-eps, eps], C^2 ramps between) and
the constants

    beta_eps   = ln(|beta| (e^eps - 1) + 1)
    lambda_eps = integral over A of (1 - c_eps) h          (big-jump intensity)
    d_eps      = nu(A^c) - integral over A of beta (e^z - 1)(1 - c_eps) h
    c          = 3 beta^2 ||sigma||^2 + 1/2 * integral over A of
                 ((1 + w)^4 - 1 - w - 3 u_beta(z)) c_eps h,  w = beta (e^z - 1)
    C2_hat     = sqrt(c) + nu(A^c) + |beta| int_{A, |z| >= eps} |e^z - 1| h
    C3_hat     = max(1, exp(nu(A^c) - beta int_{A, |z| >= eps} (e^z - 1) h))

From these, the computable part of the one-big-jump error term is

    |price(t)/t - b1|  <~  (3/2) C2_hat E[e^{u_beta(J)}] (e^x / K) C3_hat sqrt(t)
                           + a t-linear term whose constant depends on bounds
                             that have no explicit value and is not reported.

E[e^{u_beta(J)}] averages over the big-jump size density (1 - c_eps) h / lambda_eps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .levy import LeverageMap, LevyModel, default_intensity
from .model import LocalVol, MarketSpec
from .quadrature import DEFAULT_TOL, integrate, quartic_gain_defect
from .levy import integrate_origin


@dataclass(frozen=True)
class TruncationFn:
    """Quintic-smoothstep truncation: 1 on [-eps/2, eps/2], 0 outside
    [-eps, eps], monotone C^2 ramps in between."""

    eps: float

    def __post_init__(self):
        if not 0.0 < self.eps < 1.0:
            raise ValidationError(f"truncation level must lie in (0, 1), got {self.eps}")

    def __call__(self, z):
        a = np.abs(np.asarray(z, dtype=float))
        half, full = 0.5 * self.eps, self.eps
        u = np.clip((a - half) / (full - half), 0.0, 1.0)
        ramp = u * u * u * (10.0 + u * (-15.0 + 6.0 * u))
        out = 1.0 - ramp
        return out if out.ndim else float(out)

    def validate_for(self, leverage: LeverageMap) -> None:
        bound = min(1.0, abs(leverage.boundary))
        if not self.eps < bound:
            raise ValidationError(
                f"eps={self.eps} must stay below min(1, |ln(1-1/beta)|) = {bound} "
                f"for beta={leverage.beta}"
            )


@dataclass(frozen=True)
class ErrorConstants:
    beta: float
    eps: float
    beta_eps: float
    lambda_eps: float
    d_eps: float
    c_const: float
    c2_hat: float
    c3_hat: float
    nu_ac: float


def _integrate_big(model: LevyModel, leverage: LeverageMap, trunc: TruncationFn,
                   f, *, tol: float = DEFAULT_TOL) -> float:
    """integral over A of f(z) (1 - c_eps(z)) h(z) dz.

    The weight vanishes on [-eps/2, eps/2], so the integrand never sees the
    origin; pieces are split at the ramp edges where c_eps has curvature
    kinks.
    """
    eps = trunc.eps
    lo, hi = leverage.a_lower, leverage.a_upper

    def integrand(z):
        hv = model.density(z)
        if hv == 0.0:
            return 0.0
        w = 1.0 - float(trunc(z))
        return 0.0 if w == 0.0 else f(z) * w * hv

    pts = [-eps, -0.5 * eps, 0.5 * eps, eps, 0.0]
    total = 0.0
    if lo < -0.5 * eps:
        total += integrate(integrand, lo, -0.5 * eps, tol=tol,
                           points=[p for p in pts if p < -0.5 * eps])
    if hi > 0.5 * eps:
        total += integrate(integrand, 0.5 * eps, hi, tol=tol,
                           points=[p for p in pts if p > 0.5 * eps])
    return total


def error_constants(model: LevyModel, leverage: LeverageMap, vol: LocalVol,
                    trunc: TruncationFn, *, tol: float = DEFAULT_TOL) -> ErrorConstants:
    """All explicitly defined constants for one (beta, eps) pair."""
    trunc.validate_for(leverage)
    beta = leverage.beta
    eps = trunc.eps
    nu_ac = default_intensity(model, leverage)
    beta_eps = math.log1p(abs(beta) * math.expm1(eps))
    lambda_eps = _integrate_big(model, leverage, trunc, lambda z: 1.0, tol=tol)
    d_eps = nu_ac - _integrate_big(model, leverage, trunc,
                                   lambda z: beta * math.expm1(z), tol=tol)

    def defect_over_absz(z):
        w = max(beta * np.expm1(z), -1.0 + 1e-12)
        cz = float(trunc(z))
        return 0.0 if cz == 0.0 else quartic_gain_defect(w) * cz / abs(z)

    lo = max(leverage.a_lower, -eps)
    hi = min(leverage.a_upper, eps)
    quart = integrate_origin(model, defect_over_absz, lo, hi, tol=tol)
    c_const = 3.0 * beta * beta * vol.sup**2 + 0.5 * quart

    # the last two constants use the hard |z| >= eps cutoff, not the smooth ramp
    gain_tail = _hard_tail(model, leverage, eps, lambda z: math.expm1(z), tol=tol)
    abs_gain_tail = _hard_tail(model, leverage, eps, lambda z: abs(math.expm1(z)), tol=tol)
    c2_hat = math.sqrt(c_const) + nu_ac + abs(beta) * abs_gain_tail
    c3_hat = max(1.0, math.exp(nu_ac - beta * gain_tail))
    return ErrorConstants(beta=beta, eps=eps, beta_eps=beta_eps,
                          lambda_eps=lambda_eps, d_eps=d_eps, c_const=c_const,
                          c2_hat=c2_hat, c3_hat=c3_hat, nu_ac=nu_ac)


def _hard_tail(model: LevyModel, leverage: LeverageMap, eps: float, f, *,
               tol: float = DEFAULT_TOL) -> float:
    """integral over A intersect {|z| >= eps} of f(z) h(z) dz."""
    def integrand(z):
        hv = model.density(z)
        return 0.0 if hv == 0.0 else f(z) * hv

    lo, hi = leverage.a_lower, leverage.a_upper
    total = 0.0
    if lo < -eps:
        total += integrate(integrand, lo, -eps, tol=tol)
    if hi > eps:
        total += integrate(integrand, eps, hi, tol=tol)
    return total


def i2_error_bound(constants: ErrorConstants, spec: MarketSpec, model: LevyModel,
                   leverage: LeverageMap, trunc: TruncationFn, *,
                   tol: float = DEFAULT_TOL) -> float:
    """Computable sqrt(t) part of the one-big-jump error term:
    (3/2) C2_hat E[e^{u_beta(J)}] (e^x / K) C3_hat sqrt(t).

    The t-linear companion term needs a constant with no explicit value, so
    only this square-root part is reported.
    """
    if constants.lambda_eps <= 0.0:
        raise ValidationError("no big-jump mass: the bound is undefined")
    exp_u = _integrate_big(
        model, leverage, trunc,
        lambda z: math.exp(float(leverage.u_clamped(z))), tol=tol,
    ) / constants.lambda_eps
    return (1.5 * constants.c2_hat * exp_u * math.exp(spec.x) / spec.strike
            * constants.c3_hat * math.sqrt(spec.t))
