"""Black-Scholes pricing, numerical inversion, and the short-maturity
implied-variance expansion.

With zero rates the call price is
    C(x, K, t, s) = e^x N(d+) - K N(d-),   d+- = (x - ln K)/(s sqrt t) +- s sqrt(t)/2.

Off the money and for small t the implied variance of a leveraged fund
option with leading price coefficient b (call side for K > e^x, put side for
K < e^x) expands as

    sigma_hat^2(t) ~ sigma1 (1 + sigma2),
    sigma1 = (ln K - x)^2 / (2 t ln(1/t)),
    sigma2 = ln( 4 sqrt(pi) b e^{(ln K - x)/2} (ln(1/t))^{3/2} / (K |ln K - x|) ) / ln(1/t).

sigma1 does not involve the leverage ratio at all; leverage enters only
through b inside sigma2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr

from .asymptotics import LeadingOrder
from .errors import DomainError, NoSolutionError, ValidationError
from .model import MarketSpec

_SQRT_PI = math.sqrt(math.pi)


def bs_call_price(x: float, strike: float, t: float, sigma: float) -> float:
    """Zero-rate Black-Scholes call price.  The normal CDF goes through the
    complementary error function, so deep tails keep relative accuracy."""
    if not (strike > 0 and t > 0 and sigma > 0):
        raise ValidationError("strike, maturity, and volatility must be positive")
    st = sigma * math.sqrt(t)
    d1 = (x - math.log(strike)) / st + 0.5 * st
    d2 = d1 - st
    return math.exp(x) * float(ndtr(d1)) - strike * float(ndtr(d2))


def bs_vega(x: float, strike: float, t: float, sigma: float) -> float:
    st = sigma * math.sqrt(t)
    d1 = (x - math.log(strike)) / st + 0.5 * st
    return math.exp(x) * math.sqrt(t) * math.exp(-0.5 * d1 * d1) / math.sqrt(2.0 * math.pi)


def bs_invert(x: float, strike: float, t: float, price: float, *,
              price_tol: float = 1e-10) -> float:
    """The unique volatility whose call price equals ``price``.

    Prices must lie strictly between the arbitrage bounds (e^x - K)^+ and
    e^x.  Bisection first shrinks a bracket to width 1e-12 (it cannot
    diverge even where vega underflows), then a few bracket-guarded Newton
    steps polish the root in price space.
    """
    spot = math.exp(x)
    intrinsic = max(spot - strike, 0.0)
    if not (intrinsic < price < spot):
        raise NoSolutionError(
            f"price {price!r} is outside the open arbitrage bounds "
            f"({intrinsic!r}, {spot!r})"
        )
    lo, hi = 1e-12, 1.0
    while bs_call_price(x, strike, t, hi) < price:
        hi *= 2.0
        if hi > 1e9:  # unreachable for admissible prices
            raise NoSolutionError("failed to bracket the implied volatility")
    while hi - lo > 1e-12:
        mid = 0.5 * (lo + hi)
        if bs_call_price(x, strike, t, mid) < price:
            lo = mid
        else:
            hi = mid
    sig = 0.5 * (lo + hi)
    for _ in range(8):
        diff = bs_call_price(x, strike, t, sig) - price
        if abs(diff) <= price_tol:
            break
        vega = bs_vega(x, strike, t, sig)
        if vega <= 0.0 or not math.isfinite(vega):
            break
        step = diff / vega
        nxt = sig - step
        if not (lo <= nxt <= hi):
            break
        sig = nxt
    return sig


def bs_expansion(x: float, strike: float, t: float, sigma: float) -> float:
    """Small-maturity approximation of the not-at-the-money call price:
    intrinsic + K s^3 t^{3/2} / (sqrt(2 pi) k^2) * exp(-k^2/(2 s^2 t) - k/2)
    with k = ln K - x.  A test oracle for bs_call_price, not a pricing path.
    """
    if strike == math.exp(x):
        raise DomainError("the expansion is undefined at the money")
    k = math.log(strike) - x
    intrinsic = max(math.exp(x) - strike, 0.0)
    lead = (strike * sigma**3 * t**1.5 / (math.sqrt(2.0 * math.pi) * k * k)
            * math.exp(-k * k / (2.0 * sigma * sigma * t) - 0.5 * k))
    return intrinsic + lead


@dataclass(frozen=True)
class IvExpansion:
    """Two-term implied-variance expansion.  ``iv_sq = sigma1 * (1 + sigma2)``
    and ``iv = sqrt(max(iv_sq, 0))``.  ``valid`` is False when the expansion
    regime breaks down: degenerate coefficient or sigma2 <= -1."""

    sigma1: float
    sigma2: float
    iv_sq: float
    iv: float
    valid: bool


def iv_expansion(spec: MarketSpec, coefficient: LeadingOrder) -> IvExpansion:
    """Expand the implied variance from a leading price coefficient.

    Pass the call-side coefficient for K > e^x and the put-side coefficient
    for K < e^x (implied volatility is a strike property, shared by both
    option sides through parity).
    """
    if not 0.0 < spec.t < 1.0:
        raise DomainError(f"the expansion needs 0 < t < 1, got t={spec.t}")
    k = spec.log_moneyness
    if k == 0.0:
        raise DomainError("at-the-money expansion is unsupported")
    log_inv_t = math.log(1.0 / spec.t)
    sigma1 = k * k / (2.0 * spec.t * log_inv_t)
    b = coefficient.coefficient
    if coefficient.degenerate or b <= 0.0:
        return IvExpansion(sigma1, -math.inf, -math.inf, 0.0, False)
    sigma2 = math.log(
        4.0 * _SQRT_PI * b * math.exp(0.5 * k) * log_inv_t**1.5 / (spec.strike * abs(k))
    ) / log_inv_t
    iv_sq = sigma1 * (1.0 + sigma2)
    iv = math.sqrt(max(iv_sq, 0.0))
    return IvExpansion(sigma1, sigma2, iv_sq, iv, sigma2 > -1.0)
