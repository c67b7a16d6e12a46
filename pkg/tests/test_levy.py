import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from letf import (DefaultJumpError, DomainError, LeverageMap, LevyModel,
                  ValidationError, default_intensity, integrate_payoff,
                  sample_jump, transformed_density)
from letf.levy import INF, KouParams, VgParams, vg_tail_masses

from oracles import kou_density, riemann, vg_density


# -- densities -----------------------------------------------------------------

def test_kou_density_point_values(kou_model):
    # 15 * (1/3) * 25 * e^{-2.5} and 15 * (2/3) * 15 * e^{-1.5}
    assert kou_model.density(0.1) == pytest.approx(125.0 * math.exp(-2.5), rel=1e-14)
    assert kou_model.density(-0.1) == pytest.approx(150.0 * math.exp(-1.5), rel=1e-14)
    assert kou_model.density(0.1) == pytest.approx(10.26062482798735, rel=1e-13)
    assert kou_model.density(-0.1) == pytest.approx(33.46952402226447, rel=1e-13)


def test_vg_density_algebraic_identity(vg_model):
    v = vg_model.vg_params
    for z in (-1.3, -0.2, -1e-4, 1e-4, 0.4, 2.0):
        h = vg_model.density(z)
        assert h * abs(z) * v.kappa * math.exp(-v.A * z + v.B * abs(z)) == pytest.approx(1.0, rel=1e-12)


def test_density_rejects_origin(kou_model, vg_model):
    for model in (kou_model, vg_model):
        with pytest.raises(DomainError):
            model.density(0.0)
        with pytest.raises(DomainError):
            model.density(np.array([0.5, 0.0]))


def test_density_matches_oracle_on_grid(kou_model, vg_model):
    zs = np.concatenate([np.linspace(-3, -1e-3, 101), np.linspace(1e-3, 3, 101)])
    np.testing.assert_allclose(kou_model.density(zs), kou_density(zs), rtol=1e-13)
    np.testing.assert_allclose(vg_model.density(zs), vg_density(zs), rtol=1e-12)


# -- parameter validation --------------------------------------------------------

def test_kou_validation():
    with pytest.raises(ValidationError):
        KouParams(lam=1.0, p=0.5, q=0.5, eta1=1.0, eta2=1.0)  # eta1 must exceed 1
    with pytest.raises(ValidationError):
        KouParams(lam=1.0, p=0.6, q=0.6, eta1=2.0, eta2=1.0)  # p+q != 1
    with pytest.raises(ValidationError):
        KouParams(lam=-1.0, p=0.5, q=0.5, eta1=2.0, eta2=1.0)
    k = KouParams(lam=1.0, p=1.0 / 3.0, q=2.0 / 3.0, eta1=2.0, eta2=1.0)
    assert k.p + k.q == 1.0


def test_vg_validation_rejects_weak_tail():
    # B - A = sqrt(2/(kappa sigma^2)) = 0.1414... <= 1
    with pytest.raises(ValidationError):
        VgParams(kappa=1.0, theta=0.0, sigma=10.0)
    v = VgParams(**{"kappa": 0.1083, "theta": -0.3726, "sigma": 0.4344})
    assert v.B - v.A > 1.0
    assert v.B > abs(v.A)


def test_leverage_validation():
    with pytest.raises(ValidationError):
        LeverageMap(0.5)
    with pytest.raises(ValidationError):
        LeverageMap(-0.3)
    assert LeverageMap(1.0).a_lower == -INF
    assert LeverageMap(2.0).a_lower == pytest.approx(math.log(0.5))
    assert LeverageMap(-2.0).a_upper == pytest.approx(math.log(1.5))
    assert LeverageMap(-2.0).u_upper == pytest.approx(math.log(3.0))


# -- leverage transform ----------------------------------------------------------

def test_u_beta_examples():
    assert LeverageMap(1.0).u(0.3) == 0.3  # exact identity at beta = 1
    assert LeverageMap(2.0).u(math.log(2.0)) == pytest.approx(math.log(3.0), rel=1e-14)
    assert LeverageMap(-2.0).u(0.4) == pytest.approx(-4.1134903965455045, rel=1e-12)


def test_u_beta_domain_errors():
    with pytest.raises(DefaultJumpError):
        LeverageMap(2.0).u(math.log(0.5))  # boundary excluded
    with pytest.raises(DefaultJumpError):
        LeverageMap(2.0).u(-5.0)
    with pytest.raises(DefaultJumpError):
        LeverageMap(-2.0).u(1.0)  # above ln(3/2)


def test_u_beta_inv_examples():
    assert LeverageMap(1.0).u_inv(-0.7) == -0.7
    assert LeverageMap(2.0).u_inv(math.log(3.0)) == pytest.approx(math.log(2.0), rel=1e-14)
    with pytest.raises(DomainError):
        LeverageMap(-2.0).u_inv(math.log(3.0))  # image boundary excluded


@settings(max_examples=300, deadline=None)
@given(
    beta=st.one_of(st.floats(1.0, 5.0), st.floats(-5.0, -1.0)),
    frac=st.floats(1e-9, 1.0 - 1e-9),
)
def test_u_round_trip(beta, frac):
    lev = LeverageMap(beta)
    # map frac into the predefault domain
    if beta >= 1.0:
        lo = lev.a_lower if beta > 1.0 else -5.0
        z = lo + frac * (5.0 - lo)
    else:
        z = -5.0 + frac * (lev.a_upper + 5.0)
    if not lev.contains(z):
        return
    back = lev.u_inv(lev.u(z))
    assert abs(back - z) <= 1e-12 * (1.0 + abs(z))


def test_u_round_trip_bulk(rng):
    for _ in range(20):
        beta = float(rng.choice([-3.0, -2.0, -1.5, -1.0, 1.0, 1.5, 2.0, 3.0]))
        lev = LeverageMap(beta)
        lo = max(lev.a_lower, -6.0)
        hi = min(lev.a_upper, 6.0)
        z = rng.uniform(lo + 1e-9, hi - 1e-9, 500)
        back = lev.u_inv(lev.u(z))
        assert np.all(np.abs(back - z) <= 1e-12 * (1.0 + np.abs(z)))


def test_u_monotone(beta_grid):
    for beta in beta_grid:
        lev = LeverageMap(beta)
        lo = max(lev.a_lower, -4.0)
        hi = min(lev.a_upper, 4.0)
        zs = np.linspace(lo + 1e-6, hi - 1e-6, 400)
        du = np.diff(lev.u(zs))
        if beta >= 1.0:
            assert np.all(du > 0)
        else:
            assert np.all(du < 0)


# -- transformed density ---------------------------------------------------------

def test_transformed_density_identity_at_beta_one(kou_model):
    lev = LeverageMap(1.0)
    ws = np.array([-1.0, -0.2, 0.05, 0.3, 2.0])
    np.testing.assert_array_equal(transformed_density(kou_model, lev, ws),
                                  kou_model.density(ws))


def test_transformed_density_support_cutoff(kou_model):
    lev = LeverageMap(-2.0)
    cutoff = math.log(3.0)
    assert transformed_density(kou_model, lev, 1.2) == 0.0  # just above ln 3
    ws = np.linspace(cutoff, cutoff + 3.0, 50)
    assert np.all(transformed_density(kou_model, lev, ws) == 0.0)
    assert transformed_density(kou_model, lev, cutoff - 0.05) > 0.0


def test_transformed_density_origin(kou_model, vg_model):
    assert transformed_density(kou_model, LeverageMap(2.0), 0.0) == 0.0
    with pytest.raises(DomainError):
        transformed_density(vg_model, LeverageMap(2.0), 0.0)


def test_mass_conservation_kou(kou_model, beta_grid):
    # integral of g over u(A) equals integral of h over A; g decays only at
    # rate e^w on the left (the image of the domain boundary), so the grid
    # reaches -40, and it jumps at w = 0, so the sum is split there
    for beta in beta_grid:
        lev = LeverageMap(beta)
        mass_a = kou_model.kou_params.lam - default_intensity(kou_model, lev)
        g = lambda w: transformed_density(kou_model, lev, w)
        hi = min(lev.u_upper, 40.0)
        mass_g = riemann(g, -40.0, 0.0, panels=2_000_000) + riemann(g, 0.0, hi, panels=2_000_000)
        assert abs(mass_g - mass_a) <= 1e-5  # Riemann-limited accuracy
    # frozen value for beta = 2: lam - lam q (1/2)^eta2 = 15 - 10 * 2^{-15}
    lev2 = LeverageMap(2.0)
    mass2 = kou_model.kou_params.lam - default_intensity(kou_model, lev2)
    assert mass2 == pytest.approx(14.99969482421875, abs=1e-12)


def test_mass_conservation_via_quadrature(kou_model, beta_grid):
    # closed form vs the package quadrature at 1e-8
    for beta in beta_grid:
        lev = LeverageMap(beta)
        mass_a = integrate_payoff(kou_model, lambda z: 1.0, lev.a_lower, lev.a_upper)
        closed = kou_model.kou_params.lam - default_intensity(kou_model, lev)
        assert abs(mass_a - closed) <= 1e-8


# -- default intensity ------------------------------------------------------------

def test_default_intensity_examples(kou_model, vg_model):
    assert default_intensity(kou_model, LeverageMap(1.0)) == 0.0
    assert default_intensity(vg_model, LeverageMap(1.0)) == 0.0
    got2 = default_intensity(kou_model, LeverageMap(2.0))
    assert got2 == pytest.approx(10.0 * 2.0**-15, rel=1e-13)
    assert got2 == pytest.approx(3.0517578125e-4, rel=1e-13)
    gotm2 = default_intensity(kou_model, LeverageMap(-2.0))
    assert gotm2 == pytest.approx(5.0 * 1.5**-25, rel=1e-13)
    assert gotm2 == pytest.approx(1.9801064021183045e-4, rel=1e-12)


def test_default_intensity_matches_quadrature(kou_model, vg_model, beta_grid):
    for model in (kou_model, vg_model):
        for beta in beta_grid:
            if beta == 1.0:
                continue
            lev = LeverageMap(beta)
            closed = default_intensity(model, lev)
            if beta > 1.0:
                quad = integrate_payoff(model, lambda z: 1.0, -INF, lev.boundary)
            else:
                quad = integrate_payoff(model, lambda z: 1.0, lev.boundary, INF)
            assert closed == pytest.approx(quad, abs=1e-12)


def test_vg_default_intensity_frozen(vg_model):
    assert default_intensity(vg_model, LeverageMap(2.0)) == pytest.approx(
        0.005128700000249339, rel=1e-12)
    assert default_intensity(vg_model, LeverageMap(-2.0)) == pytest.approx(
        0.01205445706876781, rel=1e-12)


# -- payoff integration ------------------------------------------------------------

def test_integrate_zero_payoff(kou_model):
    assert integrate_payoff(kou_model, lambda z: 0.0, -INF, INF) == 0.0


def test_integrate_kou_mass_on_domain(kou_model):
    lev = LeverageMap(2.0)
    got = integrate_payoff(kou_model, lambda z: 1.0, lev.a_lower, lev.a_upper)
    assert got == pytest.approx(14.99969482421875, abs=1e-9)


def test_integrate_vg_tail_mass(vg_model):
    got = integrate_payoff(vg_model, lambda z: 1.0, 0.1, INF)
    # frozen from a 10^6-panel midpoint oracle on (0.1, 12); tail beyond is ~1e-63
    assert got == pytest.approx(1.44833241814997, abs=1e-8)
    oracle = riemann(lambda z: vg_density(z), 0.1, 12.0)
    assert got == pytest.approx(oracle, abs=1e-7)


def test_integrate_rejects_origin_crossing(vg_model):
    with pytest.raises(DomainError):
        integrate_payoff(vg_model, lambda z: 1.0, -1.0, 1.0)


# -- jump sampling ------------------------------------------------------------------

def test_kou_degenerate_up_sampler(rng):
    model = LevyModel.kou(lam=1.0, p=1.0 - 1e-15, q=1e-15, eta1=5.0, eta2=1.0)
    draws = sample_jump(model, rng, size=10_000)
    assert np.all(draws > 0)


def test_kou_sign_fraction(kou_model, rng):
    n = 1_000_000
    draws = sample_jump(kou_model, rng, size=n)
    p = kou_model.kou_params.p
    band = 3.0 * math.sqrt(p * (1.0 - p) / n)
    assert abs(np.mean(draws > 0) - p) <= band


def test_vg_requires_truncation(vg_model, rng):
    with pytest.raises(ValidationError):
        sample_jump(vg_model, rng)


def test_vg_tail_sampler_moments(vg_model, rng):
    eps = 0.1
    n = 1_000_000
    draws = sample_jump(vg_model, rng, eps=eps, size=n)
    assert np.all(np.abs(draws) > eps)
    mass_l, mass_r = vg_tail_masses(vg_model.vg_params, eps)
    num = (integrate_payoff(vg_model, lambda z: z, eps, INF)
           + integrate_payoff(vg_model, lambda z: z, -INF, -eps))
    target = num / (mass_l + mass_r)
    se = np.std(draws) / math.sqrt(n)
    assert abs(np.mean(draws) - target) <= 3.0 * se
