"""Jump measures, the leverage transform, and integration against them.

The log price of the reference fund jumps with a Levy density h on R\\{0}.
Two parametric families are built in, plus a user-supplied density:

    Kou double exponential
        h(z) = lam * (p 1{z>0} eta1 e^{-eta1 z} + q 1{z<0} eta2 e^{eta2 z})

    variance gamma
        h(z) = exp(A z - B |z|) / (kappa |z|),
        A = theta / sigma^2,  B = sqrt(A^2 + 2 / (kappa sigma^2))

A leverage ratio beta in (-inf,-1] u [1,inf) maps a log-jump z of the
reference fund to the log-jump of the leveraged fund

    u_beta(z) = ln(beta (e^z - 1) + 1),

defined on the predefault domain A = {z : beta (e^z - 1) + 1 > 0}.  A jump
outside A wipes the leveraged fund out; the total rate of such jumps,
nu(A^c), is the default intensity.  For beta >= 1 the domain is
(ln(1 - 1/beta), inf) (all of R when beta = 1); for beta <= -1 it is
(-inf, ln(1 - 1/beta)) and the image u_beta(A) is capped at ln(1 - beta).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.special import exp1

from .errors import DefaultJumpError, DomainError, ValidationError
from .quadrature import DEFAULT_TOL, integrate

INF = float("inf")


@dataclass(frozen=True)
class KouParams:
    """Double-exponential jump parameters.

    ``lam`` is the total jump intensity per year.  A jump is positive with
    probability ``p`` and negative with probability ``q = 1 - p``; the
    magnitudes are exponential with rates ``eta1`` (up) and ``eta2`` (down).
    ``eta1 > 1`` keeps e^{jump} integrable, so the fund price has finite mean.
    """

    lam: float
    p: float
    q: float
    eta1: float
    eta2: float

    def __post_init__(self):
        if not self.lam > 0:
            raise ValidationError(f"jump intensity must be positive, got lam={self.lam}")
        if not (0 < self.p < 1) or not (0 < self.q < 1):
            raise ValidationError(f"jump sign probabilities must lie in (0,1), got p={self.p}, q={self.q}")
        if abs(self.p + self.q - 1.0) > 1e-12:
            raise ValidationError(f"p + q must equal 1, got {self.p + self.q!r}")
        if not self.eta1 > 1:
            raise ValidationError(f"eta1 must exceed 1 for a finite exponential moment, got {self.eta1}")
        if not self.eta2 > 0:
            raise ValidationError(f"eta2 must be positive, got {self.eta2}")
        # store the exact complement so p + q == 1 holds to the last bit
        object.__setattr__(self, "q", 1.0 - self.p)

    @property
    def delta(self) -> float:
        """Margin in the exponential-moment condition: e^{(1+delta) z} stays integrable."""
        return 0.5 * (self.eta1 - 1.0)


@dataclass(frozen=True)
class VgParams:
    """Variance gamma parameters: Brownian motion with drift ``theta`` and
    volatility ``sigma``, time changed by a gamma subordinator with variance
    rate ``kappa``.  The density decays like e^{-(B-A)z} on the right tail and
    e^{-(B+A)|z|} on the left; ``B - A > 1`` is required so that e^{jump} has
    a finite mean with some margin."""

    kappa: float
    theta: float
    sigma: float
    A: float = field(init=False)
    B: float = field(init=False)

    def __post_init__(self):
        if not self.kappa > 0 or not self.sigma > 0:
            raise ValidationError(f"kappa and sigma must be positive, got kappa={self.kappa}, sigma={self.sigma}")
        a = self.theta / self.sigma**2
        b = math.sqrt(a * a + 2.0 / (self.kappa * self.sigma**2))
        object.__setattr__(self, "A", a)
        object.__setattr__(self, "B", b)
        if not b - a > 1.0:
            raise ValidationError(
                f"right-tail decay rate B - A = {b - a:.6g} must exceed 1 "
                "(exponential moment of the positive jumps)"
            )

    @property
    def delta(self) -> float:
        return min(0.5, 0.5 * (self.B - self.A - 1.0))


@dataclass(frozen=True, eq=False)
class LevyModel:
    """A jump specification: density, activity flag, and tail margin delta.

    Use the factories :meth:`kou`, :meth:`variance_gamma`, :meth:`custom`,
    or :meth:`none` (no jumps).  ``total_intensity`` is the mass of h for
    finite-activity models and ``None`` for infinite activity.
    """

    kind: str
    kou_params: Optional[KouParams] = None
    vg_params: Optional[VgParams] = None
    density_fn: Optional[Callable] = None
    finite_activity: bool = True
    delta: float = 0.5
    total_intensity: Optional[float] = None

    @classmethod
    def kou(cls, params: KouParams | None = None, **kwargs) -> "LevyModel":
        params = params or KouParams(**kwargs)
        return cls(kind="kou", kou_params=params, finite_activity=True,
                   delta=params.delta, total_intensity=params.lam)

    @classmethod
    def variance_gamma(cls, params: VgParams | None = None, **kwargs) -> "LevyModel":
        params = params or VgParams(**kwargs)
        return cls(kind="vg", vg_params=params, finite_activity=False,
                   delta=params.delta, total_intensity=None)

    @classmethod
    def custom(cls, density: Callable, *, finite_activity: bool,
               delta: float = 0.5, total_intensity: float | None = None) -> "LevyModel":
        """Wrap a user density h(z).  Smoothness and tail conditions cannot be
        proven from a callback, so they are spot checked and only warned about."""
        model = cls(kind="custom", density_fn=density, finite_activity=finite_activity,
                    delta=delta, total_intensity=total_intensity)
        zs = np.array([-2.0, -0.5, -0.01, 0.01, 0.5, 2.0])
        try:
            vals = np.asarray([density(z) for z in zs], dtype=float)
            if np.any(vals < 0):
                raise ValidationError("custom density is negative on the spot-check grid")
            if not np.all(np.isfinite(vals)):
                warnings.warn("custom density is not finite on the spot-check grid")
        except ValidationError:
            raise
        except Exception:
            warnings.warn("custom density could not be spot checked")
        return model

    @classmethod
    def none(cls) -> "LevyModel":
        """Jump-free model (h identically zero); useful as a diffusion-only baseline."""
        return cls(kind="none", finite_activity=True, total_intensity=0.0)

    # -- evaluation ---------------------------------------------------------

    def density(self, z):
        """h(z) for z != 0 (scalar or array)."""
        scalar = np.ndim(z) == 0
        z = np.atleast_1d(np.asarray(z, dtype=float))
        if np.any(z == 0.0):
            raise DomainError("jump density is not defined at z = 0")
        out = np.zeros_like(z)
        if self.kind == "kou":
            k = self.kou_params
            pos = z > 0
            out[pos] = k.lam * k.p * k.eta1 * np.exp(-k.eta1 * z[pos])
            neg = ~pos
            out[neg] = k.lam * k.q * k.eta2 * np.exp(k.eta2 * z[neg])
        elif self.kind == "vg":
            v = self.vg_params
            out = np.exp(v.A * z - v.B * np.abs(z)) / (v.kappa * np.abs(z))
        elif self.kind == "custom":
            out = np.vectorize(self.density_fn, otypes=[float])(z)
        # "none": stays zero
        return float(out[0]) if scalar else out

    def density_times_absz(self, z):
        """|z| h(z); bounded and continuous through 0 for the built-in
        infinite-activity family.  Used to integrate across the origin."""
        scalar = np.ndim(z) == 0
        z = np.atleast_1d(np.asarray(z, dtype=float))
        if self.kind == "vg":
            v = self.vg_params
            out = np.exp(v.A * z - v.B * np.abs(z)) / v.kappa
        else:
            safe = np.where(z == 0.0, 1.0, z)
            out = np.where(z == 0.0, 0.0, np.abs(z) * self.density(safe))
        return float(out[0]) if scalar else out


@dataclass(frozen=True)
class LeverageMap:
    """Leverage ratio beta with its predefault domain and log-jump transform."""

    beta: float

    def __post_init__(self):
        if not (self.beta <= -1.0 or self.beta >= 1.0):
            raise ValidationError(f"leverage ratio must satisfy |beta| >= 1, got {self.beta}")

    @property
    def boundary(self) -> float:
        """Finite endpoint ln(1 - 1/beta) of the predefault domain (-inf at beta = 1)."""
        if self.beta == 1.0:
            return -INF
        return math.log1p(-1.0 / self.beta)

    @property
    def a_lower(self) -> float:
        return self.boundary if self.beta >= 1.0 else -INF

    @property
    def a_upper(self) -> float:
        return INF if self.beta >= 1.0 else self.boundary

    @property
    def u_lower(self) -> float:
        return -INF

    @property
    def u_upper(self) -> float:
        """Upper edge of the image u_beta(A): +inf for beta >= 1, ln(1 - beta) otherwise."""
        return INF if self.beta >= 1.0 else math.log1p(-self.beta)

    def contains(self, z) -> bool | np.ndarray:
        """Strict membership of z in the predefault domain A."""
        z = np.asarray(z, dtype=float)
        out = (z > self.a_lower) & (z < self.a_upper)
        return out if out.ndim else bool(out)

    def u(self, z):
        """The log-jump transform u_beta(z) = ln(beta (e^z - 1) + 1) for z in A."""
        z = np.asarray(z, dtype=float)
        if not np.all(self.contains(z)):
            raise DefaultJumpError(
                f"jump size outside the predefault domain of beta={self.beta}: "
                "the leveraged fund defaults"
            )
        return self.u_unchecked(z)

    def u_unchecked(self, z):
        """u_beta on arrays without the domain check (callers mask A^c themselves).

        For beta > 1 the equivalent form z + ln(1 + (beta - 1)(1 - e^{-z}))
        stays accurate uniformly in beta, including beta barely above 1 where
        the literal form loses all digits.
        """
        z = np.asarray(z, dtype=float)
        if self.beta == 1.0:
            return z
        if self.beta > 1.0:
            out = z + np.log1p((self.beta - 1.0) * (-np.expm1(-z)))
        else:
            out = np.log1p(self.beta * np.expm1(z))
        return out if np.ndim(out) else float(out)

    def u_clamped(self, z):
        """u_beta with the argument of the log floored just above 0.

        Quadrature nodes one rounding error away from the domain boundary can
        push beta (e^z - 1) + 1 to or below 0; the floor (at 1e-12) turns the
        resulting NaN into a large negative value.  The affected neighborhood
        is a few ulps wide, so integrals are unchanged at tolerance.
        """
        z = np.asarray(z, dtype=float)
        if self.beta == 1.0:
            return z
        floor = -1.0 + 1e-12
        if self.beta > 1.0:
            arg = (self.beta - 1.0) * (-np.expm1(-z))
            return z + np.log1p(np.maximum(arg, floor))
        return np.log1p(np.maximum(self.beta * np.expm1(z), floor))

    def u_inv(self, w):
        """Inverse transform: the z in A with u_beta(z) = w, for w in u_beta(A)."""
        w = np.asarray(w, dtype=float)
        if not np.all((w > self.u_lower) & (w < self.u_upper)):
            raise DomainError(
                f"value outside the image of the leverage transform for beta={self.beta}"
            )
        if self.beta == 1.0:
            out = w
        elif self.beta > 1.0:
            # mirror of the forward form with ratio 1/beta; the clamp keeps
            # e^{-w} representable, and below it z equals the domain edge
            # to double precision anyway
            we = np.maximum(w, -700.0)
            out = we + np.log1p((1.0 / self.beta - 1.0) * (-np.expm1(-we)))
        else:
            out = np.log1p(np.expm1(w) / self.beta)
        return out if np.ndim(out) else float(out)


# -- module-level operations -------------------------------------------------

def density(model: LevyModel, z):
    return model.density(z)


def u_beta(leverage: LeverageMap, z):
    return leverage.u(z)


def u_beta_inv(leverage: LeverageMap, w):
    return leverage.u_inv(w)


def transformed_density(model: LevyModel, leverage: LeverageMap, w):
    """Density g of the leveraged fund's log-jumps:
    g(w) = h(u_beta^{-1}(w)) e^w / |beta + e^w - 1| on u_beta(A)\\{0}, else 0."""
    scalar = np.ndim(w) == 0
    w_arr = np.atleast_1d(np.asarray(w, dtype=float))
    if not model.finite_activity and np.any(w_arr == 0.0):
        raise DomainError("transformed density is singular at 0 for infinite-activity jumps")
    inside = (w_arr > leverage.u_lower) & (w_arr < leverage.u_upper) & (w_arr != 0.0)
    out = np.zeros_like(w_arr)
    if np.any(inside):
        wi = w_arr[inside]
        if leverage.beta == 1.0:
            out[inside] = model.density(wi)
        else:
            z = leverage.u_inv(wi)
            jac = np.exp(wi) / np.abs(leverage.beta + np.expm1(wi))
            out[inside] = model.density(z) * jac
    return float(out[0]) if scalar else out


def default_intensity(model: LevyModel, leverage: LeverageMap, *, tol=DEFAULT_TOL) -> float:
    """nu(A^c): the rate of jumps that default the leveraged fund."""
    beta = leverage.beta
    if beta == 1.0 or model.kind == "none":
        return 0.0
    c0 = leverage.boundary
    if model.kind == "kou":
        from . import kou_exact
        return kou_exact.nu_ac(model.kou_params, beta)
    if model.kind == "vg":
        v = model.vg_params
        if beta > 1.0:
            return float(exp1((v.B + v.A) * (-c0))) / v.kappa
        return float(exp1((v.B - v.A) * c0)) / v.kappa
    if beta > 1.0:
        return integrate_payoff(model, lambda z: 1.0, -INF, c0, tol=tol)
    return integrate_payoff(model, lambda z: 1.0, c0, INF, tol=tol)


def _against_density(model: LevyModel, f):
    """Compose f(z) h(z) evaluating f only where h > 0 (tails underflow first)."""
    def integrand(z):
        hv = model.density(z)
        return 0.0 if hv == 0.0 else f(z) * hv
    return integrand


def integrate_payoff(model: LevyModel, payoff, lo: float, hi: float, *,
                     tol: float = DEFAULT_TOL, points=()) -> float:
    """Integral of payoff(z) h(z) dz over (lo, hi) by adaptive quadrature.

    The interval must not cross the origin for infinite-activity models; such
    integrals may diverge and are rejected.
    """
    if lo >= hi:
        return 0.0
    if not model.finite_activity and lo < 0.0 < hi:
        raise DomainError(
            "integration interval crosses the origin of an infinite-activity density; "
            "restrict to one side or use a finite-activity model"
        )
    if model.kind == "none":
        return 0.0
    pts = list(points)
    if model.kind == "kou" and lo < 0.0 < hi:
        pts.append(0.0)  # the two exponential branches meet with a kink
    return integrate(_against_density(model, payoff), lo, hi, tol=tol, points=pts)


def integrate_origin(model: LevyModel, f_over_absz, lo: float, hi: float, *,
                     tol: float = DEFAULT_TOL) -> float:
    """Integral of f(z) h(z) dz across the origin, given f(z)/|z| in stable form.

    For the infinite-activity family h(z) = m(z)/|z| with m bounded, so the
    integrand becomes f_over_absz(z) * m(z), which is regular through 0.  The
    caller guarantees f = O(z^2) at the origin.
    """
    if lo >= hi:
        return 0.0
    if model.kind == "none":
        return 0.0

    def integrand(z):
        mv = model.density_times_absz(z)
        return 0.0 if mv == 0.0 else f_over_absz(z) * mv

    return integrate(integrand, lo, hi, tol=tol, points=(0.0,) if lo < 0.0 < hi else ())


# -- jump sampling ------------------------------------------------------------

def vg_tail_masses(params: VgParams, eps: float) -> tuple[float, float]:
    """(left, right) jump mass of the variance gamma density beyond the cutoff:
    integral of h over (-inf, -eps) and (eps, inf)."""
    if not eps > 0:
        raise ValidationError("truncation level must be positive")
    left = float(exp1((params.B + params.A) * eps)) / params.kappa
    right = float(exp1((params.B - params.A) * eps)) / params.kappa
    return left, right


def sample_jump(model: LevyModel, rng: np.random.Generator, *,
                eps: float | None = None, size: int | None = None):
    """Draw jump sizes from h (finite activity) or from h restricted to
    |z| > eps (variance gamma).

    Kou draws by inverse CDF: sign +1 with probability p, magnitude
    exponential.  The variance gamma tails use rejection with a shifted
    exponential proposal matched to the tail decay rate; the acceptance
    ratio is eps/|z| <= 1, so the sampler is exact.
    """
    n = 1 if size is None else int(size)
    if model.kind == "kou":
        k = model.kou_params
        pos = rng.random(n) < k.p
        rate = np.where(pos, k.eta1, k.eta2)
        mag = rng.exponential(1.0, n) / rate
        out = np.where(pos, mag, -mag)
        return out if size is not None else float(out[0])
    if model.kind == "vg":
        if eps is None:
            raise ValidationError(
                "variance gamma has infinite activity: a truncation level eps is required"
            )
        v = model.vg_params
        mass_l, mass_r = vg_tail_masses(v, eps)
        right = rng.random(n) < mass_r / (mass_l + mass_r)
        rate = np.where(right, v.B - v.A, v.B + v.A)
        mag = np.empty(n)
        todo = np.ones(n, dtype=bool)
        while todo.any():
            m = int(todo.sum())
            prop = eps + rng.exponential(1.0, m) / rate[todo]
            accept = rng.random(m) < eps / prop
            idx = np.flatnonzero(todo)[accept]
            mag[idx] = prop[accept]
            todo[idx] = False
        out = np.where(right, mag, -mag)
        return out if size is not None else float(out[0])
    raise ValidationError(f"no jump sampler for model kind {model.kind!r}")
