"""Command-line front end: JSON config in, schema-versioned CSV out.

Subcommands
    price     leading-order coefficients and prices per (beta, strike, side)
    density   jump density of the fund and of the leveraged fund on a z grid
    smile     Monte Carlo vs asymptotic implied-vol smiles per beta
    diagnose  error-bound constants per (beta, eps)
    selftest  closed-form vs quadrature oracle battery; nonzero exit on drift

Every CSV starts with a '# schema-version: 1' line, then '# key: value'
metadata lines, then a header row.  Floats are written with repr, the
shortest representation that round-trips, so identical runs produce
byte-identical files.  Exit codes: 0 success, 2 config error, 3 partial
success (some rows flagged), 4 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import dataclass, field

import numpy as np

from . import kou_exact
from .asymptotics import b1_call, b1_put, leading_price
from .errorbounds import TruncationFn, error_constants, i2_error_bound
from .errors import ConfigError, LetfError, ValidationError
from .impliedvol import iv_expansion
from .levy import (INF, LeverageMap, LevyModel, default_intensity, integrate_payoff,
                   transformed_density)
from .model import LocalVol, MarketSpec, jump_drift_term
from .montecarlo import McConfig, smile

SCHEMA_VERSION = 1


# -- configuration -------------------------------------------------------------

@dataclass
class RunConfig:
    model: LevyModel
    vol: LocalVol
    x: float
    t: float
    betas: list
    strikes: list
    mc: McConfig
    out_dir: str
    trunc_eps: list = field(default_factory=list)
    density_grid: dict = field(default_factory=dict)
    raw: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        """Re-serialize to a document equivalent to the parsed input."""
        return self.raw


def _section(doc: dict, name: str, required=True) -> dict:
    sec = doc.get(name)
    if sec is None:
        if required:
            raise ConfigError(f"missing config section {name!r}")
        return {}
    if not isinstance(sec, dict):
        raise ConfigError(f"config section {name!r} must be an object")
    return sec


def _get(sec: dict, section: str, key: str, kind=float, default=None):
    if key not in sec:
        if default is not None:
            return default
        raise ConfigError(f"missing key {section}.{key}")
    try:
        return kind(sec[key])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad value for {section}.{key}: {exc}") from exc


def _build_model(sec: dict) -> LevyModel:
    kind = sec.get("kind")
    try:
        if kind == "kou":
            return LevyModel.kou(lam=_get(sec, "model", "lam"),
                                 p=_get(sec, "model", "p"),
                                 q=_get(sec, "model", "q"),
                                 eta1=_get(sec, "model", "eta1"),
                                 eta2=_get(sec, "model", "eta2"))
        if kind == "vg":
            return LevyModel.variance_gamma(kappa=_get(sec, "model", "kappa"),
                                            theta=_get(sec, "model", "theta"),
                                            sigma=_get(sec, "model", "sigma"))
        if kind == "none":
            return LevyModel.none()
    except ValidationError as exc:
        raise ConfigError(f"model section: {exc}") from exc
    raise ConfigError(f"model.kind must be 'kou', 'vg', or 'none', got {kind!r}")


def _resolve_strikes(market: dict, x: float) -> list:
    if "strikes" in market:
        ks = market["strikes"]
        if not isinstance(ks, list):
            raise ConfigError("market.strikes must be a list of strikes")
        return [float(k) for k in ks]
    if "log_moneyness" in market:
        g = market["log_moneyness"]
        lo = _get(g, "market.log_moneyness", "lo")
        hi = _get(g, "market.log_moneyness", "hi")
        n = _get(g, "market.log_moneyness", "n", int)
        ks = [math.exp(x + k) for k in np.linspace(lo, hi, n) if abs(k) > 1e-12]
        return ks
    raise ConfigError("market needs either 'strikes' or a 'log_moneyness' grid")


def load_config(path: str) -> RunConfig:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("config root must be a JSON object")

    model = _build_model(_section(doc, "model"))
    lv = _section(doc, "localvol")
    try:
        vol = LocalVol(_get(lv, "localvol", "a"), _get(lv, "localvol", "b"),
                       _get(lv, "localvol", "c"))
    except ValidationError as exc:
        raise ConfigError(f"localvol section: {exc}") from exc

    market = _section(doc, "market")
    x = _get(market, "market", "x")
    t = _get(market, "market", "t")
    if not t > 0:
        raise ConfigError("market.t must be positive")
    betas = market.get("betas")
    if not isinstance(betas, list) or not betas:
        raise ConfigError("market.betas must be a nonempty list")
    for b in betas:
        try:
            LeverageMap(float(b))
        except ValidationError as exc:
            raise ConfigError(f"market.betas: {exc}") from exc
    strikes = _resolve_strikes(market, x)

    mcs = _section(doc, "mc")
    try:
        mc = McConfig(paths=_get(mcs, "mc", "paths", int),
                      steps=_get(mcs, "mc", "steps", int, default=100),
                      eps=(float(mcs["eps"]) if "eps" in mcs else None),
                      seed=_get(mcs, "mc", "seed", int, default=0),
                      scheme=str(mcs.get("scheme", "jump_adapted")),
                      antithetic=bool(mcs.get("antithetic", False)))
    except ConfigError:
        raise
    except LetfError as exc:
        raise ConfigError(f"mc section: {exc}") from exc

    out = _section(doc, "output", required=False)
    out_dir = str(out.get("directory", "."))
    fmt = str(out.get("format", "csv"))
    if fmt != "csv":
        raise ConfigError(f"output.format must be 'csv', got {fmt!r}")

    trunc = _section(doc, "trunc", required=False)
    trunc_eps = [float(e) for e in trunc.get("eps", [])]
    density_grid = _section(doc, "density", required=False)

    return RunConfig(model=model, vol=vol, x=x, t=t, betas=[float(b) for b in betas],
                     strikes=strikes, mc=mc, out_dir=out_dir, trunc_eps=trunc_eps,
                     density_grid=density_grid, raw=doc)


# -- CSV writing ----------------------------------------------------------------

def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_csv(path: str, header: list, rows: list, metadata: dict | None = None) -> None:
    lines = [f"# schema-version: {SCHEMA_VERSION}"]
    for key, val in (metadata or {}).items():
        lines.append(f"# {key}: {_fmt(val)}")
    lines.append(",".join(header))
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    text = "\n".join(lines) + "\n"
    if path == "-":
        sys.stdout.write(text)
        return
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)
    with open(path, "w", newline="\n") as fh:
        fh.write(text)


def read_csv(path: str):
    """Parse one of our CSVs back into (metadata, header, rows-of-strings)."""
    metadata, header, rows = {}, None, []
    with open(path) as fh:
        first = fh.readline().strip()
        if first != f"# schema-version: {SCHEMA_VERSION}":
            raise ConfigError(f"{path}: missing or wrong schema-version line")
        for line in fh:
            line = line.rstrip("\n")
            if line.startswith("# "):
                key, _, val = line[2:].partition(": ")
                metadata[key] = val
                continue
            if header is None:
                header = line.split(",")
            else:
                rows.append(line.split(","))
    return metadata, header, rows


# -- subcommands -----------------------------------------------------------------

def cmd_price(cfg: RunConfig, out_path: str) -> int:
    header = ["beta", "K", "side", "moneyness", "coefficient", "intrinsic",
              "leading_price", "degenerate"]
    rows, flagged = [], False
    for beta in sorted(cfg.betas):
        lev = LeverageMap(beta)
        for k in sorted(cfg.strikes):
            spec = MarketSpec(cfg.x, k, cfg.t, lev)
            m = spec.moneyness()
            for side in ("call", "put"):
                if m == "atm":
                    rows.append([beta, k, side, "atm", None, None, None, None])
                    flagged = True
                    continue
                lead = leading_price(spec, cfg.model, side)
                label = "otm" if (side == "call") == (m == "otm_call") else "itm"
                rows.append([beta, k, side, label, lead.coefficient, lead.intrinsic,
                             lead.price(cfg.t), lead.degenerate])
    write_csv(out_path, header, rows, {"t": cfg.t, "x": cfg.x})
    return 3 if flagged else 0


def _density_grid(cfg: RunConfig) -> np.ndarray:
    g = cfg.density_grid
    z_max = float(g.get("z_max", 1.5))
    n = int(g.get("n", 241))
    log_near_origin = bool(g.get("log_near_origin", cfg.model.kind == "vg"))
    if log_near_origin:
        z_min = float(g.get("z_min", 1e-3))
        mags = np.logspace(math.log10(z_min), math.log10(z_max), n // 2)
        return np.concatenate([-mags[::-1], mags])
    zs = np.linspace(-z_max, z_max, n)
    return zs[np.abs(zs) > 1e-12]


def cmd_density(cfg: RunConfig, out_path: str) -> int:
    zs = _density_grid(cfg)
    metadata = {"x": cfg.x}
    for beta in sorted(cfg.betas):
        if beta <= -1.0:
            metadata[f"support-endpoint beta={_fmt(beta)}"] = LeverageMap(beta).u_upper
    rows = []
    for beta in sorted(cfg.betas):
        lev = LeverageMap(beta)
        h = cfg.model.density(zs)
        g = transformed_density(cfg.model, lev, zs)
        for z, hv, gv in zip(zs, h, g):
            rows.append([beta, float(z), float(hv), float(gv)])
    write_csv(out_path, ["beta", "z", "h", "g"], rows, metadata)
    return 0


def cmd_smile(cfg: RunConfig, out_path: str) -> int:
    header = ["beta", "K", "log_moneyness", "mc_iv", "mc_iv_lo", "mc_iv_hi",
              "asym_iv", "valid"]
    metadata = {
        "seed": cfg.mc.seed, "paths": cfg.mc.paths, "steps": cfg.mc.steps,
        "scheme": cfg.mc.scheme, "eps": cfg.mc.eps, "t": cfg.t, "x": cfg.x,
    }
    rows, flagged = [], False
    for beta in sorted(cfg.betas):
        lev = LeverageMap(beta)
        spec = MarketSpec(cfg.x, math.exp(cfg.x), cfg.t, lev)  # strike unused by smile
        for row in smile(spec, cfg.strikes, cfg.vol, cfg.model, cfg.mc):
            rows.append([beta, row.strike, row.log_moneyness, row.mc_iv,
                         row.mc_iv_lo, row.mc_iv_hi, row.asym_iv, row.valid])
            flagged = flagged or not row.valid
    write_csv(out_path, header, rows, metadata)
    return 3 if flagged else 0


def cmd_diagnose(cfg: RunConfig, out_path: str) -> int:
    if not cfg.trunc_eps:
        raise ConfigError("diagnose needs a 'trunc' section with an 'eps' list")
    strike = sorted(cfg.strikes)[0]
    header = ["beta", "eps", "beta_eps", "lambda_eps", "d_eps", "c_const",
              "c2_hat", "c3_hat", "i2_bound", "K", "t", "valid"]
    rows, flagged = [], False
    for beta in sorted(cfg.betas):
        lev = LeverageMap(beta)
        for eps in cfg.trunc_eps:
            try:
                trunc = TruncationFn(eps)
                trunc.validate_for(lev)
            except ValidationError:
                rows.append([beta, eps] + [None] * 8 + [False])
                flagged = True
                continue
            const = error_constants(cfg.model, lev, cfg.vol, trunc)
            spec = MarketSpec(cfg.x, strike, cfg.t, lev)
            bound = i2_error_bound(const, spec, cfg.model, lev, trunc)
            rows.append([beta, eps, const.beta_eps, const.lambda_eps, const.d_eps,
                         const.c_const, const.c2_hat, const.c3_hat, bound,
                         strike, cfg.t, True])
    write_csv(out_path, header, rows, {"x": cfg.x})
    return 3 if flagged else 0


def cmd_selftest() -> int:
    """Closed-form vs quadrature battery on the double-exponential family,
    plus identity checks for the variance gamma forms."""
    kou = LevyModel.kou(lam=15.0, p=1.0 / 3.0, q=2.0 / 3.0, eta1=25.0, eta2=15.0)
    vg = LevyModel.variance_gamma(kappa=0.1083, theta=-0.3726, sigma=0.4344)
    failures = []

    def check(name, got, want, tol):
        ok = abs(got - want) <= tol
        print(f"{'ok  ' if ok else 'FAIL'} {name}: {got!r} vs {want!r} (tol {tol:g})")
        if not ok:
            failures.append(name)

    check("kou drift term closed vs quadrature",
          kou_exact.exp_compensator(kou.kou_params),
          integrate_payoff(kou, lambda z: math.expm1(z) - z, -INF, INF), 1e-10)
    for beta in (-3.0, -2.0, -1.0, 1.0, 2.0, 3.0):
        lev = LeverageMap(beta)
        got = kou_exact.nu_ac(kou.kou_params, beta)
        want = (0.0 if beta == 1.0 else
                integrate_payoff(kou, lambda z: 1.0, -INF, lev.boundary) if beta > 1.0
                else integrate_payoff(kou, lambda z: 1.0, lev.boundary, INF))
        check(f"nu(A^c) beta={beta:+g}", got, want, 1e-12)
        for k in (0.9, 1.1):
            spec = MarketSpec(0.0, k, 5.0 / 365.0, lev)
            fn = b1_call if k > 1 else b1_put
            got_c = fn(spec, kou, method="closed").coefficient
            want_c = fn(spec, kou, method="quadrature").coefficient
            check(f"coefficient beta={beta:+g} K={k}", got_c, want_c, 1e-9)
    lev2 = LeverageMap(2.0)
    check("vg default intensity closed vs quadrature",
          default_intensity(vg, lev2),
          integrate_payoff(vg, lambda z: 1.0, -INF, lev2.boundary), 1e-10)
    check("vg mean jump equals theta",
          vg.vg_params.theta,
          integrate_payoff(vg, lambda z: z, 1e-10, INF)
          + integrate_payoff(vg, lambda z: z, -INF, -1e-10), 1e-6)
    check("vg drift term quadrature stability", jump_drift_term(vg),
          0.09846172344996952, 1e-9)
    if failures:
        print(f"{len(failures)} self-test failures")
        return 4
    print("all self-tests passed")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="letf",
        description="Short-maturity asymptotics and Monte Carlo for leveraged ETF options",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("price", "density", "smile", "diagnose"):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True)
        p.add_argument("--out", default=None)
        if name == "smile":
            p.add_argument("--paths", type=int, default=None)
            p.add_argument("--seed", type=int, default=None)
    sub.add_parser("selftest")
    args = parser.parse_args(argv)

    if args.command == "selftest":
        return cmd_selftest()

    try:
        cfg = load_config(args.config)
        if args.command == "smile":
            overrides = {}
            if args.paths is not None:
                overrides["paths"] = args.paths
            if args.seed is not None:
                overrides["seed"] = args.seed
            if overrides:
                fields = {k: getattr(cfg.mc, k)
                          for k in ("paths", "steps", "eps", "seed", "scheme", "antithetic")}
                fields.update(overrides)
                cfg.mc = McConfig(**fields)
        out_path = args.out or os.path.join(cfg.out_dir, f"{args.command}.csv")
        handler = {"price": cmd_price, "density": cmd_density,
                   "smile": cmd_smile, "diagnose": cmd_diagnose}[args.command]
        return handler(cfg, out_path)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except LetfError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
