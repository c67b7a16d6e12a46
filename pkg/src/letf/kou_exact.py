"""Closed-form integrals for the double-exponential jump density.

Every quantity the pricing layer needs from a Kou density reduces to
exponential tail integrals, so it has an elementary antiderivative.  These
forms serve two purposes: they are the fast path for Kou models, and they
are the independent cross-check for the adaptive quadrature route (the test
suite compares the two at tight absolute tolerance).

Conventions: c0 = ln(1 - 1/beta) is the finite endpoint of the predefault
domain, z0 = ln(1 + (K e^{-x} - 1)/beta) the log-jump that moves the
leveraged fund exactly to the strike.
"""

from __future__ import annotations

import math

from .levy import KouParams

INF = float("inf")


def _z0(x: float, strike: float, beta: float) -> float:
    return math.log1p((strike * math.exp(-x) - 1.0) / beta)


def up_tail(k: KouParams, lo: float, hi: float = INF) -> float:
    """integral of h over (lo, hi) with 0 <= lo."""
    e_hi = 0.0 if hi == INF else math.exp(-k.eta1 * hi)
    return k.lam * k.p * (math.exp(-k.eta1 * lo) - e_hi)


def down_tail(k: KouParams, hi: float, lo: float = -INF) -> float:
    """integral of h over (lo, hi) with hi <= 0."""
    e_lo = 0.0 if lo == -INF else math.exp(k.eta2 * lo)
    return k.lam * k.q * (math.exp(k.eta2 * hi) - e_lo)


def up_exp_tail(k: KouParams, lo: float, hi: float = INF) -> float:
    """integral of e^z h over (lo, hi) with 0 <= lo (finite because eta1 > 1)."""
    r = k.eta1 - 1.0
    e_hi = 0.0 if hi == INF else math.exp(-r * hi)
    return k.lam * k.p * (k.eta1 / r) * (math.exp(-r * lo) - e_hi)


def down_exp_tail(k: KouParams, hi: float, lo: float = -INF) -> float:
    """integral of e^z h over (lo, hi) with hi <= 0."""
    r = k.eta2 + 1.0
    e_lo = 0.0 if lo == -INF else math.exp(r * lo)
    return k.lam * k.q * (k.eta2 / r) * (math.exp(r * hi) - e_lo)


def mean_jump(k: KouParams) -> float:
    """integral of z h(z) dz over the whole line."""
    return k.lam * (k.p / k.eta1 - k.q / k.eta2)


def exp_compensator(k: KouParams) -> float:
    """integral of (e^z - 1 - z) h(z) dz; the drift correction of the log fund."""
    return k.lam * (k.p / (k.eta1 * (k.eta1 - 1.0)) + k.q / (k.eta2 * (k.eta2 + 1.0)))


def nu_ac(k: KouParams, beta: float) -> float:
    """Mass of jumps outside the predefault domain.

    Written as a direct power of 1 - 1/beta rather than exp(eta ln(.)), which
    is exact when 1 - 1/beta is a power of two (the common beta = 2 case).
    """
    if beta == 1.0:
        return 0.0
    edge = 1.0 - 1.0 / beta
    if beta > 1.0:
        # lam - lam p loses less than lam (1 - p) when p is a rounded fraction
        return (k.lam - k.lam * k.p) * edge**k.eta2
    return k.lam * k.p * edge**-k.eta1


def b1_call(k: KouParams, x: float, strike: float, beta: float) -> float:
    """First-order coefficient of the out-of-the-money call (strike > e^x).

    Returns 0 in the structurally degenerate case beta in [1 - K e^{-x}, -1].
    """
    s0 = math.exp(x)
    z0 = _z0(x, strike, beta)
    const = (1.0 - beta) * s0 - strike
    if beta >= 1.0:
        # z0 > 0: only the positive tail contributes
        return beta * s0 * up_exp_tail(k, z0) + const * up_tail(k, z0)
    if beta < 1.0 - strike / s0:
        # z0 < 0: only the negative tail contributes
        return beta * s0 * down_exp_tail(k, z0) + const * down_tail(k, z0)
    return 0.0


def b1_put(k: KouParams, x: float, strike: float, beta: float) -> tuple[float, float]:
    """(default part, jump part) of the out-of-the-money put coefficient
    (strike < e^x).  The default part is K nu(A^c)."""
    s0 = math.exp(x)
    z0 = _z0(x, strike, beta)
    const = strike + (beta - 1.0) * s0
    default_part = strike * nu_ac(k, beta)
    if beta >= 1.0:
        c0 = -INF if beta == 1.0 else math.log1p(-1.0 / beta)
        # c0 < z0 < 0: negative tail
        jump_part = const * down_tail(k, z0, c0) - beta * s0 * down_exp_tail(k, z0, c0)
    else:
        c0 = math.log1p(-1.0 / beta)
        # 0 < z0 < c0: positive tail
        jump_part = const * up_tail(k, z0, c0) - beta * s0 * up_exp_tail(k, z0, c0)
    return default_part, jump_part


def db1_dbeta(k: KouParams, x: float, strike: float, beta: float) -> float:
    """Sensitivity of the call coefficient to the leverage ratio."""
    s0 = math.exp(x)
    z0 = _z0(x, strike, beta)
    if beta >= 1.0:
        return s0 * (up_exp_tail(k, z0) - up_tail(k, z0))
    if beta < 1.0 - strike / s0:
        return s0 * (down_exp_tail(k, z0) - down_tail(k, z0))
    return 0.0


def mass_on_domain(k: KouParams, beta: float) -> float:
    """Total jump mass on the predefault domain A."""
    return k.lam - nu_ac(k, beta)
