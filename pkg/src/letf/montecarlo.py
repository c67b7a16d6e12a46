"""Jump-adapted Euler simulation of the coupled fund / leveraged-fund logs.

Between jumps both logs share one Brownian increment (the leveraged fund
scales it by beta); jump times of the compound big-jump component are drawn
exactly from a Poisson process and merged into the uniform time grid, so
jumps are applied at their exact times rather than rounded to grid nodes.
At a big jump of size z the fund log moves by z; the leveraged log moves by
u_beta(z) when z stays in the predefault domain and the path defaults
otherwise (the leveraged value is zero from then on, the fund keeps going).

For infinite-activity jumps the compensated small-jump remainder (|z| <= eps)
is replaced by a correlated Gaussian pair whose covariance matches the exact
second moments (integrals of z^2, z u_beta(z), u_beta(z)^2 against the
density over |z| <= eps).  The alternative ``grid_increment`` scheme draws
exact variance gamma increments per uniform step and pushes the aggregated
increment through u_beta; it is kept as a replication mode since the
aggregation biases the leveraged leg when |beta| > 1.

Randomness: a counter-based Philox generator keyed by (seed, chunk index),
where paths are assigned to fixed-size chunks by path index.  All draws
inside a chunk follow a fixed order, and chunk results are reduced in chunk
order, so results are bit-identical no matter how many worker threads run.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import kou_exact
from .errors import ConfigError, NoSolutionError, ValidationError
from .asymptotics import leading_price
from .impliedvol import bs_invert, iv_expansion
from .levy import INF, LeverageMap, LevyModel, VgParams, default_intensity, sample_jump, vg_tail_masses
from .model import LocalVol, MarketSpec, jump_drift_term, leveraged_jump_drift_term
from .quadrature import integrate
from .levy import integrate_origin

CHUNK = 1 << 14  # paths per random stream; fixed so results never depend on scheduling

SCHEMES = ("jump_adapted", "grid_increment")


@dataclass(frozen=True)
class McConfig:
    """Simulation protocol: path count, uniform steps per maturity, small-jump
    truncation (infinite-activity models), seed, and scheme."""

    paths: int
    steps: int = 100
    eps: Optional[float] = None
    seed: int = 0
    scheme: str = "jump_adapted"
    antithetic: bool = False

    def __post_init__(self):
        if self.paths < 1:
            raise ConfigError(f"paths must be >= 1, got {self.paths}")
        if self.steps < 1:
            raise ConfigError(f"steps must be >= 1, got {self.steps}")
        if self.scheme not in SCHEMES:
            raise ConfigError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if self.antithetic and self.paths % 2:
            raise ConfigError("antithetic sampling needs an even path count")


@dataclass(frozen=True)
class McResult:
    """Estimate of one option price: sample mean, standard error, fraction of
    defaulted paths, and the Black-Scholes inversion of the price when it
    lies inside the arbitrage bounds."""

    price: float
    stderr: float
    default_fraction: float
    implied_vol: Optional[float]
    paths: int


@dataclass
class PathState:
    """Terminal state of one path; once defaulted, y stays frozen at its
    pre-default value and the leveraged fund value is zero."""

    x: float
    y: float
    defaulted: bool
    time: float

    @property
    def fund(self) -> float:
        return math.exp(self.x)

    @property
    def leveraged_fund(self) -> float:
        return 0.0 if self.defaulted else math.exp(self.y)


def n_threads() -> int:
    env = os.environ.get("LETF_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


# -- engine setup -------------------------------------------------------------

@dataclass(frozen=True)
class _Engine:
    vol: LocalVol
    model: LevyModel
    leverage: LeverageMap
    cfg: McConfig
    t: float
    x0: float
    lam_big: float        # intensity of explicitly simulated jumps
    c_mu: float           # u-free part of the fund drift incl. big-jump compensator
    c_gamma: float        # u-free part of the leveraged drift incl. compensator
    chol: Optional[tuple] # small-jump Gaussian substitution (l11, l21, l22), per unit time
    eps: float


def _vg_big_mean(v: VgParams, eps: float) -> float:
    """integral of z h(z) over |z| > eps (variance gamma)."""
    right = math.exp(-(v.B - v.A) * eps) / (v.kappa * (v.B - v.A))
    left = -math.exp(-(v.B + v.A) * eps) / (v.kappa * (v.B + v.A))
    return right + left


def _build_engine(spec: MarketSpec, vol: LocalVol, model: LevyModel, cfg: McConfig) -> _Engine:
    lev = spec.leverage
    beta = lev.beta
    if spec.t <= 0:
        raise ConfigError("simulation needs a positive maturity")
    if cfg.scheme == "grid_increment" and model.kind != "vg":
        raise ConfigError("the grid_increment scheme draws exact variance gamma "
                          "increments and supports only that model")

    mu_jump = jump_drift_term(model)
    gamma_jump = leveraged_jump_drift_term(model, lev)
    nu_ac = default_intensity(model, lev)

    if cfg.scheme == "grid_increment":
        v = model.vg_params
        # exact increments carry all jumps: compensate with the full means
        m1x = v.theta  # integral of z h(z) dz for the variance gamma density
        if beta == 1.0:
            m1y = m1x
        else:
            m1y = integrate_origin(
                model, lambda z: lev.u_clamped(z) / abs(z), lev.a_lower, lev.a_upper
            )
        return _Engine(vol, model, lev, cfg, spec.t, spec.x,
                       lam_big=0.0,
                       c_mu=-mu_jump - m1x,
                       c_gamma=nu_ac - gamma_jump - m1y,
                       chol=None, eps=0.0)

    if model.kind in ("kou", "none"):
        if model.kind == "kou":
            k = model.kou_params
            lam_big = k.lam
            m1x = kou_exact.mean_jump(k)
            if beta == 1.0:
                m1y = m1x
            else:
                m1y = integrate(
                    lambda z: (0.0 if model.density(z) == 0.0
                               else float(lev.u_clamped(z)) * model.density(z)),
                    lev.a_lower, lev.a_upper, points=(0.0,),
                )
        else:
            lam_big, m1x, m1y = 0.0, 0.0, 0.0
        return _Engine(vol, model, lev, cfg, spec.t, spec.x,
                       lam_big=lam_big,
                       c_mu=-mu_jump - m1x,
                       c_gamma=nu_ac - gamma_jump - m1y,
                       chol=None, eps=0.0)

    if model.kind != "vg":
        raise ConfigError(f"no jump-adapted sampler for model kind {model.kind!r}")

    v = model.vg_params
    eps = cfg.eps if cfg.eps is not None else 1e-3
    bound = min(1.0, abs(lev.boundary))  # jumps below eps must never default
    if not 0.0 < eps < bound:
        raise ConfigError(
            f"truncation eps={eps} must lie in (0, {bound}) for beta={beta}"
        )
    mass_l, mass_r = vg_tail_masses(v, eps)
    lam_big = mass_l + mass_r
    m1x = _vg_big_mean(v, eps)
    if beta == 1.0:
        m1y = m1x
    else:
        pieces = []
        if lev.a_lower < -eps:
            pieces.append((lev.a_lower, -eps))
        if lev.a_upper > eps:
            pieces.append((eps, lev.a_upper))
        m1y = sum(
            integrate(lambda z: (0.0 if model.density(z) == 0.0
                                 else float(lev.u_clamped(z)) * model.density(z)), lo, hi)
            for lo, hi in pieces
        )
    # matched second moments of the compensated small-jump remainder
    v_x = integrate_origin(model, lambda z: abs(z), -eps, eps)
    if beta == 1.0:
        v_y, c_xy = v_x, v_x
    else:
        v_y = integrate_origin(model, lambda z: float(lev.u_clamped(z)) ** 2 / abs(z), -eps, eps)
        c_xy = integrate_origin(model, lambda z: math.copysign(1.0, z) * float(lev.u_clamped(z)), -eps, eps)
    l11 = math.sqrt(v_x)
    l21 = c_xy / l11 if l11 > 0 else 0.0
    l22 = math.sqrt(max(v_y - l21 * l21, 0.0))
    return _Engine(vol, model, lev, cfg, spec.t, spec.x,
                   lam_big=lam_big,
                   c_mu=-mu_jump - m1x,
                   c_gamma=nu_ac - gamma_jump - m1y,
                   chol=(l11, l21, l22), eps=eps)


def _chunk_rng(seed: int, chunk_idx: int) -> np.random.Generator:
    key = np.array([np.uint64(seed & (2**64 - 1)), np.uint64(chunk_idx)], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


def _draw_jump_sizes(eng: _Engine, rng: np.random.Generator, shape) -> np.ndarray:
    model = eng.model
    if model.kind == "kou":
        k = model.kou_params
        pos = rng.random(shape) < k.p
        mag = -np.log1p(-rng.random(shape)) / np.where(pos, k.eta1, k.eta2)
        return np.where(pos, mag, -mag)
    # variance gamma restricted to |z| > eps
    v = model.vg_params
    n = int(np.prod(shape))
    flat = np.asarray(sample_jump(model, rng, eps=eng.eps, size=n))
    return flat.reshape(shape)


def _simulate_chunk(eng: _Engine, chunk_idx: int, n_paths: int):
    """Simulate one chunk; returns terminal (x, y, defaulted) arrays."""
    rng = _chunk_rng(eng.cfg.seed, chunk_idx)
    cfg, lev, vol = eng.cfg, eng.leverage, eng.vol
    beta, t = lev.beta, eng.t
    anti = cfg.antithetic
    n_base = n_paths // 2 if anti else n_paths

    if eng.cfg.scheme == "grid_increment":
        return _simulate_chunk_grid(eng, rng, n_paths)

    S = cfg.steps
    grid = np.linspace(0.0, t, S + 1)

    if eng.lam_big > 0.0:
        n_jumps = rng.poisson(eng.lam_big * t, n_base)
        M = int(n_jumps.max())
    else:
        n_jumps = np.zeros(n_base, dtype=np.int64)
        M = 0
    if M > 0:
        valid = np.arange(M)[None, :] < n_jumps[:, None]
        jt = np.where(valid, rng.uniform(0.0, t, (n_base, M)), t)
        jz = _draw_jump_sizes(eng, rng, (n_base, M))
    n_int = S + M
    zn = rng.standard_normal((n_base, n_int))
    if eng.chol is not None:
        g1 = rng.standard_normal((n_base, n_int))
        g2 = rng.standard_normal((n_base, n_int))

    if anti:
        zn = np.concatenate([zn, -zn], axis=0)
        if eng.chol is not None:
            g1 = np.concatenate([g1, -g1], axis=0)
            g2 = np.concatenate([g2, -g2], axis=0)
        if M > 0:
            valid = np.concatenate([valid, valid], axis=0)
            jt = np.concatenate([jt, jt], axis=0)
            jz = np.concatenate([jz, jz], axis=0)
        n_jumps = np.concatenate([n_jumps, n_jumps])
    B = n_paths

    if M > 0:
        nodes = np.concatenate([np.broadcast_to(grid, (B, S + 1)), jt], axis=1)
        is_jump = np.concatenate([np.zeros((B, S + 1), dtype=bool), valid], axis=1)
        sizes = np.concatenate([np.zeros((B, S + 1)), jz], axis=1)
        order = np.argsort(nodes, axis=1, kind="stable")
        nodes = np.take_along_axis(nodes, order, axis=1)
        is_jump = np.take_along_axis(is_jump, order, axis=1)
        sizes = np.take_along_axis(sizes, order, axis=1)
    else:
        nodes = np.broadcast_to(grid, (B, S + 1))
        is_jump = None
        sizes = None

    x = np.full(B, eng.x0)
    y = np.full(B, eng.x0)
    dead = np.zeros(B, dtype=bool)
    c_mu, c_ga = eng.c_mu, eng.c_gamma
    b2 = beta * beta
    for i in range(nodes.shape[1] - 1):
        dt = nodes[:, i + 1] - nodes[:, i]
        sq = np.sqrt(dt)
        s = vol.sigma(x)
        s2 = s * s
        dx = (c_mu - 0.5 * s2) * dt + s * sq * zn[:, i]
        dy = (c_ga - 0.5 * b2 * s2) * dt + beta * s * sq * zn[:, i]
        if eng.chol is not None:
            l11, l21, l22 = eng.chol
            dx = dx + sq * l11 * g1[:, i]
            dy = dy + sq * (l21 * g1[:, i] + l22 * g2[:, i])
        x += dx
        y = np.where(dead, y, y + dy)
        if is_jump is not None:
            jm = is_jump[:, i + 1]
            if jm.any():
                zz = sizes[:, i + 1]
                in_a = (zz > lev.a_lower) & (zz < lev.a_upper)
                x = np.where(jm, x + zz, x)
                uz = lev.u_clamped(zz)
                survive_jump = jm & in_a & ~dead
                y = np.where(survive_jump, y + uz, y)
                dead = dead | (jm & ~in_a)
    return x, y, dead


def _simulate_chunk_grid(eng: _Engine, rng: np.random.Generator, n_paths: int):
    """Exact variance gamma increments on the uniform grid (replication mode)."""
    cfg, lev, vol = eng.cfg, eng.leverage, eng.vol
    beta, t = lev.beta, eng.t
    v = eng.model.vg_params
    anti = cfg.antithetic
    n_base = n_paths // 2 if anti else n_paths
    S = cfg.steps
    dt = t / S
    shape_g = (n_base, S)
    gam = rng.gamma(dt / v.kappa, v.kappa, shape_g)
    zj = rng.standard_normal(shape_g)
    zw = rng.standard_normal(shape_g)
    if anti:
        gam = np.concatenate([gam, gam], axis=0)
        zj = np.concatenate([zj, -zj], axis=0)
        zw = np.concatenate([zw, -zw], axis=0)
    B = n_paths
    dz = v.theta * gam + v.sigma * np.sqrt(gam) * zj
    x = np.full(B, eng.x0)
    y = np.full(B, eng.x0)
    dead = np.zeros(B, dtype=bool)
    sqdt = math.sqrt(dt)
    c_mu, c_ga = eng.c_mu, eng.c_gamma
    b2 = beta * beta
    for i in range(S):
        s = vol.sigma(x)
        s2 = s * s
        dzi = dz[:, i]
        in_a = (dzi > lev.a_lower) & (dzi < lev.a_upper)
        dy = (c_ga - 0.5 * b2 * s2) * dt + beta * s * sqdt * zw[:, i] + lev.u_clamped(dzi)
        x += (c_mu - 0.5 * s2) * dt + s * sqdt * zw[:, i] + dzi
        y = np.where(dead | ~in_a, y, y + dy)
        dead = dead | ~in_a
    return x, y, dead


def _chunk_ranges(paths: int):
    return [(idx, min(CHUNK, paths - start))
            for idx, start in enumerate(range(0, paths, CHUNK))]


def _run_chunks(eng: _Engine, reduce_chunk: Callable):
    """Apply ``reduce_chunk(x, y, dead)`` to every chunk and return the
    per-chunk payloads in chunk order, regardless of thread scheduling."""
    ranges = _chunk_ranges(eng.cfg.paths)
    workers = min(n_threads(), len(ranges))

    def job(arg):
        idx, n = arg
        return idx, reduce_chunk(*_simulate_chunk(eng, idx, n))

    results = [None] * len(ranges)
    if workers <= 1:
        for arg in ranges:
            idx, payload = job(arg)
            results[idx] = payload
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for idx, payload in pool.map(job, ranges):
                results[idx] = payload
    return results


def terminal_states(spec: MarketSpec, vol: LocalVol, model: LevyModel, cfg: McConfig):
    """Terminal (x, y, defaulted) arrays for all paths, in path order."""
    eng = _build_engine(spec, vol, model, cfg)
    parts = _run_chunks(eng, lambda x, y, d: (x, y, d))
    xs = np.concatenate([p[0] for p in parts])
    ys = np.concatenate([p[1] for p in parts])
    ds = np.concatenate([p[2] for p in parts])
    return xs, ys, ds


def _welford_merge(agg_list):
    n, mean, m2 = 0, 0.0, 0.0
    for nb, mb, m2b in agg_list:
        if nb == 0:
            continue
        delta = mb - mean
        tot = n + nb
        mean += delta * nb / tot
        m2 += m2b + delta * delta * n * nb / tot
        n = tot
    return n, mean, m2


def _payoff_terminal(y, dead, strike, side):
    lev_val = np.where(dead, 0.0, np.exp(y))
    if side == "call":
        return np.maximum(lev_val - strike, 0.0)
    return np.maximum(strike - lev_val, 0.0)


def _stats_from(parts):
    # with antithetics the entries are pair averages, so the same formula applies
    n, mean, m2 = _welford_merge(parts)
    var = m2 / (n - 1) if n > 1 else 0.0
    stderr = math.sqrt(var / n) if n > 0 else 0.0
    return mean, stderr


def estimate_price(spec: MarketSpec, vol: LocalVol, model: LevyModel, cfg: McConfig,
                   side: str = "call") -> McResult:
    """Monte Carlo price of a European option on the leveraged fund.

    A defaulted path pays nothing on a call and the full strike on a put.
    The implied_vol field holds the Black-Scholes inversion of the price
    (converted to the call side by parity) when inside arbitrage bounds.
    """
    if side not in ("call", "put"):
        raise ValueError(f"side must be 'call' or 'put', got {side!r}")
    eng = _build_engine(spec, vol, model, cfg)
    strike = spec.strike
    anti = cfg.antithetic

    def reduce_chunk(x, y, dead):
        pay = _payoff_terminal(y, dead, strike, side)
        if anti:
            half = pay.shape[0] // 2
            pay = 0.5 * (pay[:half] + pay[half:])
        n = pay.shape[0]
        mean = float(np.mean(pay))
        m2 = float(np.sum((pay - mean) ** 2))
        return (n, mean, m2), int(np.count_nonzero(dead))

    parts = _run_chunks(eng, reduce_chunk)
    mean, stderr = _stats_from([p[0] for p in parts])
    defaults = sum(p[1] for p in parts)
    call_price = mean if side == "call" else mean + spec.spot - strike
    try:
        iv = bs_invert(spec.x, strike, spec.t, call_price)
    except NoSolutionError:
        iv = None
    return McResult(price=mean, stderr=stderr,
                    default_fraction=defaults / cfg.paths,
                    implied_vol=iv, paths=cfg.paths)


@dataclass(frozen=True)
class SmileRow:
    """One strike of a Monte Carlo / asymptotic smile comparison."""

    strike: float
    log_moneyness: float
    side: str
    mc_price: float
    mc_stderr: float
    mc_iv: Optional[float]
    mc_iv_lo: Optional[float]
    mc_iv_hi: Optional[float]
    asym_iv: float
    asym_valid: bool
    valid: bool
    default_fraction: float


def smile(spec: MarketSpec, strikes, vol: LocalVol, model: LevyModel, cfg: McConfig,
          *, method: str = "auto"):
    """Implied-vol smile on a strike grid from one shared simulation.

    All strikes reuse the same paths (common random numbers).  Each strike is
    priced on its out-of-the-money side and converted to a call price by
    parity before inversion.  Strikes whose price falls outside the arbitrage
    bounds come back with valid=False rather than being dropped.
    """
    strikes = sorted(float(k) for k in strikes)
    spot = spec.spot
    for k in strikes:
        if k == spot:
            raise ValidationError("smile grids must exclude the at-the-money strike")
    eng = _build_engine(spec, vol, model, cfg)
    anti = cfg.antithetic

    def reduce_chunk(x, y, dead):
        out = []
        for k in strikes:
            side = "call" if k > spot else "put"
            pay = _payoff_terminal(y, dead, k, side)
            if anti:
                half = pay.shape[0] // 2
                pay = 0.5 * (pay[:half] + pay[half:])
            mean = float(np.mean(pay))
            out.append((pay.shape[0], mean, float(np.sum((pay - mean) ** 2))))
        return out, int(np.count_nonzero(dead))

    parts = _run_chunks(eng, reduce_chunk)
    defaults = sum(p[1] for p in parts)
    default_fraction = defaults / cfg.paths

    rows = []
    for j, k in enumerate(strikes):
        side = "call" if k > spot else "put"
        mean, stderr = _stats_from([p[0][j] for p in parts])
        parity_shift = 0.0 if side == "call" else spot - k
        ivs = []
        for price in (mean, mean - stderr, mean + stderr):
            try:
                ivs.append(bs_invert(spec.x, k, spec.t, price + parity_shift))
            except NoSolutionError:
                ivs.append(None)
        mc_iv, iv_lo, iv_hi = ivs
        strike_spec = MarketSpec(spec.x, k, spec.t, spec.leverage)
        coeff = leading_price(strike_spec, model, side, method=method)
        exp = iv_expansion(strike_spec, coeff)
        rows.append(SmileRow(
            strike=k, log_moneyness=math.log(k) - spec.x, side=side,
            mc_price=mean, mc_stderr=stderr,
            mc_iv=mc_iv, mc_iv_lo=iv_lo, mc_iv_hi=iv_hi,
            asym_iv=exp.iv, asym_valid=exp.valid,
            valid=mc_iv is not None,
            default_fraction=default_fraction,
        ))
    return rows


def sample_vg_increment(params: VgParams, dt: float, rng: np.random.Generator,
                        size: int | None = None):
    """Exact variance gamma increment over dt: theta G + sigma sqrt(G) Z with
    G ~ Gamma(dt/kappa, kappa) and Z standard normal."""
    if not dt > 0:
        raise ValidationError("dt must be positive")
    n = 1 if size is None else int(size)
    g = rng.gamma(dt / params.kappa, params.kappa, n)
    z = rng.standard_normal(n)
    out = params.theta * g + params.sigma * np.sqrt(g) * z
    return out if size is not None else float(out[0])


def simulate_path(spec: MarketSpec, vol: LocalVol, model: LevyModel, cfg: McConfig,
                  rng: np.random.Generator, *, record: bool = False):
    """Scalar reference implementation of one path (same scheme as the
    vectorized engine, python-loop form).  With record=True also returns the
    list of (time, x, y, defaulted) after every interval."""
    eng = _build_engine(spec, vol, model, cfg)
    lev, beta, t = eng.leverage, eng.leverage.beta, eng.t

    if cfg.scheme == "grid_increment":
        v = model.vg_params
        dt = t / cfg.steps
        x = y = eng.x0
        dead = False
        traj = [(0.0, x, y, dead)]
        sqdt = math.sqrt(dt)
        for i in range(cfg.steps):
            dz = float(sample_vg_increment(v, dt, rng))
            zw = float(rng.standard_normal())
            s = float(vol.sigma(x))
            x += (eng.c_mu - 0.5 * s * s) * dt + s * sqdt * zw + dz
            if not dead:
                if lev.contains(dz):
                    y += ((eng.c_gamma - 0.5 * beta * beta * s * s) * dt
                          + beta * s * sqdt * zw + float(lev.u(dz)))
                else:
                    dead = True
            traj.append(((i + 1) * dt, x, y, dead))
        state = PathState(x, y, dead, t)
        return (state, traj) if record else state

    # merged grid of uniform nodes and exact jump times
    events = [(float(s), None) for s in np.linspace(0.0, t, cfg.steps + 1)[1:]]
    if eng.lam_big > 0.0:
        n_jumps = int(rng.poisson(eng.lam_big * t))
        if n_jumps:
            times = rng.uniform(0.0, t, n_jumps)
            sizes = _draw_jump_sizes(eng, rng, (n_jumps,))
            events += [(float(ti), float(zi)) for ti, zi in zip(times, sizes)]
    events.sort(key=lambda e: e[0])

    x = y = eng.x0
    dead = False
    now = 0.0
    traj = [(0.0, x, y, dead)]
    for when, jump in events:
        dt = when - now
        now = when
        s = float(vol.sigma(x))
        zn = float(rng.standard_normal())
        sq = math.sqrt(dt)
        dx = (eng.c_mu - 0.5 * s * s) * dt + s * sq * zn
        dy = (eng.c_gamma - 0.5 * beta * beta * s * s) * dt + beta * s * sq * zn
        if eng.chol is not None:
            l11, l21, l22 = eng.chol
            e1 = float(rng.standard_normal())
            e2 = float(rng.standard_normal())
            dx += sq * l11 * e1
            dy += sq * (l21 * e1 + l22 * e2)
        x += dx
        if not dead:
            y += dy
        if jump is not None:
            x += jump
            if not dead:
                if lev.contains(jump):
                    y += float(lev.u(jump))
                else:
                    dead = True
        traj.append((now, x, y, dead))
    state = PathState(x, y, dead, t)
    return (state, traj) if record else state
