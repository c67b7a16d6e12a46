"""First-order small-maturity coefficients of off-the-money option prices.

For short maturities the price of an off-the-money European option on the
leveraged fund is intrinsic value plus a term linear in t.  The slope is
driven purely by jumps:

    out-of-the-money call (K > e^x):
        b1 = integral over A of (S0 beta e^z - (beta - 1) S0 - K)^+ h(z) dz

    out-of-the-money put (K < e^x):
        bt1 = K nu(A^c)
              + integral over A of (K - S0 beta e^z + (beta - 1) S0)^+ h(z) dz

The positive part restricts the call integral to (z0, inf) for beta >= 1 and
to (-inf, z0) for beta <= -1, with z0 = ln(1 + (K e^{-x} - 1)/beta).  For
beta <= -1 the leveraged fund cannot jump above (1 - beta) S0, so when
K e^{-x} >= 2 and beta >= 1 - K e^{-x} the call coefficient vanishes
identically; the result is then flagged degenerate (the true price is of
higher order in t).  The put coefficient never degenerates this way.

In-the-money prices follow from put-call parity with zero rates:
put - call = K - S0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from . import kou_exact
from .errors import AtTheMoneyError, MoneynessError, ValidationError
from .levy import INF, LevyModel, default_intensity, integrate_payoff
from .model import MarketSpec
from .quadrature import DEFAULT_TOL


@dataclass(frozen=True)
class LeadingOrder:
    """Leading small-maturity behavior: price(t) = intrinsic + coefficient * t.

    ``default_part`` and ``jump_part`` decompose the coefficient (the former
    is K nu(A^c), nonzero only for put-side coefficients); ``degenerate``
    marks the structurally vanishing call case, where the true leading order
    is higher than t.
    """

    coefficient: float
    intrinsic: float
    degenerate: bool = False
    default_part: float = 0.0
    jump_part: float = 0.0

    def price(self, t: float) -> float:
        return self.intrinsic + self.coefficient * t


def _z0(spec: MarketSpec) -> float:
    # log1p form avoids cancellation when the strike sits near the spot
    return math.log1p((spec.strike * math.exp(-spec.x) - 1.0) / spec.leverage.beta)


def _call_degenerate(spec: MarketSpec) -> bool:
    beta = spec.leverage.beta
    return beta <= -1.0 and beta >= 1.0 - spec.strike / spec.spot


def b1_call(spec: MarketSpec, model: LevyModel, *, method: str = "auto",
            tol: float = DEFAULT_TOL) -> LeadingOrder:
    """Out-of-the-money call coefficient; requires K > e^x."""
    if spec.strike <= spec.spot:
        raise MoneynessError(
            "call coefficient needs strike > spot; use b1_put / leading_price "
            "for the other moneyness side"
        )
    beta = spec.leverage.beta
    if _call_degenerate(spec):
        return LeadingOrder(0.0, 0.0, degenerate=True)
    if method not in ("auto", "closed", "quadrature"):
        raise ValueError(f"unknown method {method!r}")
    if model.kind == "kou" and method in ("auto", "closed"):
        val = kou_exact.b1_call(model.kou_params, spec.x, spec.strike, beta)
    elif method == "closed":
        raise ValidationError(f"no closed form for model kind {model.kind!r}")
    else:
        s0, strike = spec.spot, spec.strike
        z0 = _z0(spec)
        payoff = lambda z: beta * s0 * math.exp(z) + (1.0 - beta) * s0 - strike
        lo, hi = (z0, INF) if beta >= 1.0 else (-INF, z0)
        val = integrate_payoff(model, payoff, lo, hi, tol=tol)
    return LeadingOrder(val, 0.0, jump_part=val)


def b1_put(spec: MarketSpec, model: LevyModel, *, method: str = "auto",
           tol: float = DEFAULT_TOL) -> LeadingOrder:
    """Out-of-the-money put coefficient; requires K < e^x."""
    if spec.strike >= spec.spot:
        raise MoneynessError(
            "put coefficient needs strike < spot; use b1_call / leading_price "
            "for the other moneyness side"
        )
    beta = spec.leverage.beta
    if method not in ("auto", "closed", "quadrature"):
        raise ValueError(f"unknown method {method!r}")
    if model.kind == "kou" and method in ("auto", "closed"):
        default_part, jump_part = kou_exact.b1_put(model.kou_params, spec.x, spec.strike, beta)
    elif method == "closed":
        raise ValidationError(f"no closed form for model kind {model.kind!r}")
    else:
        s0, strike = spec.spot, spec.strike
        z0 = _z0(spec)
        payoff = lambda z: strike - beta * s0 * math.exp(z) + (beta - 1.0) * s0
        lo, hi = (spec.leverage.boundary, z0) if beta >= 1.0 else (z0, spec.leverage.boundary)
        jump_part = integrate_payoff(model, payoff, lo, hi, tol=tol)
        default_part = strike * default_intensity(model, spec.leverage, tol=tol)
    coeff = default_part + jump_part
    return LeadingOrder(coeff, 0.0, default_part=default_part, jump_part=jump_part)


def leading_price(spec: MarketSpec, model: LevyModel, side: str, *,
                  method: str = "auto", tol: float = DEFAULT_TOL) -> LeadingOrder:
    """Leading-order price for either side, dispatching on moneyness.

    Out-of-the-money prices are coefficient * t; in-the-money prices add the
    intrinsic value via parity and reuse the complementary coefficient.
    """
    if side not in ("call", "put"):
        raise ValueError(f"side must be 'call' or 'put', got {side!r}")
    m = spec.moneyness()
    if m == "atm":
        raise AtTheMoneyError("strike equals spot; at-the-money asymptotics are unsupported")
    if m == "otm_call":
        base = b1_call(spec, model, method=method, tol=tol)
        intrinsic = 0.0 if side == "call" else spec.strike - spec.spot
    else:
        base = b1_put(spec, model, method=method, tol=tol)
        intrinsic = 0.0 if side == "put" else spec.spot - spec.strike
    return LeadingOrder(base.coefficient, intrinsic, degenerate=base.degenerate,
                        default_part=base.default_part, jump_part=base.jump_part)


def db1_dbeta(spec: MarketSpec, model: LevyModel, *, tol: float = DEFAULT_TOL) -> float:
    """Sensitivity of the call coefficient to beta: positive for beta >= 1,
    negative for beta <= -1, zero in the degenerate case."""
    if spec.strike <= spec.spot:
        raise MoneynessError("leverage sensitivity is defined for strike > spot")
    beta = spec.leverage.beta
    if _call_degenerate(spec):
        return 0.0
    if model.kind == "kou":
        return kou_exact.db1_dbeta(model.kou_params, spec.x, spec.strike, beta)
    z0 = _z0(spec)
    payoff = lambda z: math.expm1(z)
    lo, hi = (z0, INF) if beta >= 1.0 else (-INF, z0)
    return spec.spot * integrate_payoff(model, payoff, lo, hi, tol=tol)


def default_probability(spec: MarketSpec, model: LevyModel, *, tol: float = DEFAULT_TOL) -> float:
    """P(default by t) = 1 - e^{-t nu(A^c)}."""
    if spec.t < 0:
        raise ValidationError("maturity must be nonnegative")
    nac = default_intensity(model, spec.leverage, tol=tol)
    return -math.expm1(-spec.t * nac)
