"""Local volatility, risk-neutral drifts, and the market/contract spec.

The reference fund's log price diffuses with state-dependent volatility
sigma(x) = a + b tanh(cx), bounded between a - |b| and a + |b|.  The drifts
that make both the fund and its leveraged version martingales are

    mu(u)    = -sigma^2(u)/2 - integral (e^z - 1 - z) h(z) dz
    gamma(u) = nu(A^c) - beta^2 sigma^2(u)/2
               - integral over A of (beta (e^z - 1) - u_beta(z)) h(z) dz

The jump integrals do not depend on u, so they are evaluated once per model
and cached; the per-step cost of a drift evaluation is one tanh.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import kou_exact
from .errors import ValidationError
from .levy import INF, LeverageMap, LevyModel, default_intensity, integrate_origin
from .quadrature import DEFAULT_TOL, expm1_minus_z, w_minus_log1pw


@dataclass(frozen=True)
class LocalVol:
    """Bounded local volatility sigma(x) = a + b tanh(cx).

    Requires a > |b| >= 0 so the volatility stays strictly positive.  The
    exact zero function (a = b = 0) is also accepted as a degenerate
    diagnostic case for deterministic simulation tests.
    """

    a: float
    b: float
    c: float

    def __post_init__(self):
        if self.a == 0.0 and self.b == 0.0:
            return
        if not self.a > abs(self.b):
            raise ValidationError(
                f"need a > |b| for positive bounded volatility, got a={self.a}, b={self.b}"
            )

    def sigma(self, x):
        return self.a + self.b * np.tanh(self.c * np.asarray(x, dtype=float))

    def __call__(self, x):
        return self.sigma(x)

    @property
    def sup(self) -> float:
        return self.a + abs(self.b)

    @property
    def inf(self) -> float:
        return self.a - abs(self.b)


def sigma(vol: LocalVol, x):
    return vol.sigma(x)


@dataclass(frozen=True)
class MarketSpec:
    """Contract coordinates: log spot x (both funds start at e^x), strike,
    maturity in years, and the leverage map of the traded fund."""

    x: float
    strike: float
    t: float
    leverage: LeverageMap

    def __post_init__(self):
        if not self.strike > 0:
            raise ValidationError(f"strike must be positive, got {self.strike}")
        if not self.t >= 0:
            raise ValidationError(f"maturity must be nonnegative, got {self.t}")

    @property
    def spot(self) -> float:
        return math.exp(self.x)

    @property
    def log_moneyness(self) -> float:
        return math.log(self.strike) - self.x

    def moneyness(self) -> str:
        """'otm_call' when strike > spot, 'otm_put' when strike < spot, else 'atm'."""
        if self.strike > self.spot:
            return "otm_call"
        if self.strike < self.spot:
            return "otm_put"
        return "atm"


def jump_drift_term(model: LevyModel, *, tol: float = DEFAULT_TOL) -> float:
    """integral of (e^z - 1 - z) h(z) dz, the u-independent part of mu."""
    if model.kind == "none":
        return 0.0
    if model.kind == "kou":
        return kou_exact.exp_compensator(model.kou_params)
    return integrate_origin(
        model, lambda z: expm1_minus_z(z) / abs(z), -INF, INF, tol=tol
    )


def leveraged_jump_drift_term(model: LevyModel, leverage: LeverageMap, *,
                              tol: float = DEFAULT_TOL) -> float:
    """integral over A of (beta (e^z - 1) - u_beta(z)) h(z) dz.

    The integrand behaves like beta^2 z^2 / 2 at the origin, so the
    origin-stable route applies for infinite-activity models.  At beta = 1
    this coincides with :func:`jump_drift_term` and is short-circuited to it
    so the two drifts collapse exactly.
    """
    beta = leverage.beta
    if model.kind == "none":
        return 0.0
    if beta == 1.0:
        return jump_drift_term(model, tol=tol)

    def f_over_absz(z):
        w = max(beta * np.expm1(z), -1.0 + 1e-12)
        return w_minus_log1pw(w) / abs(z)

    return integrate_origin(model, f_over_absz, leverage.a_lower, leverage.a_upper, tol=tol)


@dataclass(frozen=True)
class DriftPair:
    """Cached drift functions of the log fund (mu) and log leveraged fund (gamma)."""

    vol: LocalVol
    leverage: LeverageMap
    jump_mu: float
    jump_gamma: float
    nu_ac: float
    mu: Callable = field(init=False)
    gamma: Callable = field(init=False)

    def __post_init__(self):
        vol, beta = self.vol, self.leverage.beta
        jm, jg, nac = self.jump_mu, self.jump_gamma, self.nu_ac

        def mu(u):
            s = vol.sigma(u)
            return -0.5 * s * s - jm

        def gamma(u):
            s = vol.sigma(u)
            return nac - 0.5 * beta * beta * s * s - jg

        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "gamma", gamma)


def make_drifts(vol: LocalVol, model: LevyModel, leverage: LeverageMap, *,
                tol: float = DEFAULT_TOL) -> DriftPair:
    """Build the drift pair with the jump integrals evaluated once."""
    jm = jump_drift_term(model, tol=tol)
    if leverage.beta == 1.0:
        jg, nac = jm, 0.0
    else:
        jg = leveraged_jump_drift_term(model, leverage, tol=tol)
        nac = default_intensity(model, leverage, tol=tol)
    return DriftPair(vol=vol, leverage=leverage, jump_mu=jm, jump_gamma=jg, nu_ac=nac)


def drift_mu(vol: LocalVol, model: LevyModel, u, *, tol: float = DEFAULT_TOL):
    """One-shot mu(u); use :func:`make_drifts` in loops."""
    s = vol.sigma(u)
    return -0.5 * s * s - jump_drift_term(model, tol=tol)


def drift_gamma(vol: LocalVol, model: LevyModel, leverage: LeverageMap, u, *,
                tol: float = DEFAULT_TOL):
    """One-shot gamma(u); use :func:`make_drifts` in loops."""
    pair = make_drifts(vol, model, leverage, tol=tol)
    return pair.gamma(u)
