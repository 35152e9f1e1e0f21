import numpy as np
import pytest

from siridelay.analysis import (H_of_i, NoEndemicEquilibrium, analyze, compute_R0, endemic_equilibrium,
                                right_endpoint, spectral_radius_2x2)
from siridelay.incidence import BILINEAR, SATURATED, builtin_incidence
from siridelay.model import ModelParams

BILINEAR_INC = builtin_incidence(BILINEAR)


def test_fig1_R0(fig1_params):
    R0, matrices = compute_R0(fig1_params, BILINEAR_INC)
    assert R0 == pytest.approx(0.8406, abs=1e-4)
    assert matrices.spectral_radius == pytest.approx(R0, rel=1e-10)


def test_fig2_R0_follows_the_formula(fig2_params):
    # threshold formula value; 2.2923 does not follow from these rates
    R0, _ = compute_R0(fig2_params, BILINEAR_INC)
    assert R0 == pytest.approx(2.5789, abs=1e-3)
    assert R0 > 1


def test_R0_vanishes_without_transmission(fig1_params):
    R0, _ = compute_R0(fig1_params.replace(beta=0.0), BILINEAR_INC)
    assert R0 == 0


def test_next_generation_matrices(fig1_params):
    _, m = compute_R0(fig1_params, BILINEAR_INC)
    np.testing.assert_allclose(m.V @ m.V_inv, np.eye(2), atol=1e-14)
    assert m.F[0, 0] == pytest.approx(fig1_params.beta * 50.0)
    assert m.V[0, 1] == -fig1_params.delta
    assert m.V[1, 0] == -fig1_params.gamma
    expected_inverse = np.array([[fig1_params.mu + fig1_params.delta, fig1_params.delta],
                                 [fig1_params.gamma, fig1_params.removal]]) / fig1_params.r0_denominator
    np.testing.assert_allclose(m.V_inv, expected_inverse, rtol=1e-12)


def test_closed_form_matches_spectral_radius_on_random_draws():
    rng = np.random.default_rng(2024)
    for _ in range(1000):
        Lambda, mu = rng.uniform(0.01, 50.0), rng.uniform(0.01, 2.0)
        gamma, c, beta, delta = rng.uniform(0.0, 2.0, size=4)
        params = ModelParams(Lambda=Lambda, mu=mu, gamma=gamma, c=c, beta=beta, delta=delta)
        R0, matrices = compute_R0(params, BILINEAR_INC)
        assert matrices.spectral_radius == pytest.approx(R0, rel=1e-10, abs=1e-300)


def test_spectral_radius_of_complex_pair():
    rotation = np.array([[0.0, -2.0], [2.0, 0.0]])
    assert spectral_radius_2x2(rotation) == pytest.approx(2.0)


def test_H_signs(fig2_params):
    assert H_of_i(fig2_params, BILINEAR_INC, 1e-9) > 0
    right = right_endpoint(fig2_params)
    expected = (fig2_params.delta * fig2_params.gamma / (fig2_params.mu + fig2_params.delta)
                - fig2_params.removal)
    assert H_of_i(fig2_params, BILINEAR_INC, right) == pytest.approx(expected, abs=1e-9)
    assert H_of_i(fig2_params, BILINEAR_INC, 5.1313) == pytest.approx(0.0, abs=1e-3)


@pytest.mark.parametrize("i", [0.0, -1.0, 100.0])
def test_H_domain(fig2_params, i):
    with pytest.raises(ValueError):
        H_of_i(fig2_params, BILINEAR_INC, i)


def test_fig2_endemic_equilibrium(fig2_params):
    report = endemic_equilibrium(fig2_params, BILINEAR_INC)
    E = report.endemic
    assert (E.s, E.i, E.r) == pytest.approx((10.7381, 5.1313, 5.7440), abs=2e-4)
    # bilinear incidence: beta s* = k
    assert E.s == pytest.approx(fig2_params.k / fig2_params.beta, rel=1e-10)
    assert report.residual < 1e-9
    assert report.stable_equilibrium == "E*"
    assert report.endemic_present


def test_fig1_has_no_endemic_equilibrium(fig1_params):
    with pytest.raises(NoEndemicEquilibrium) as excinfo:
        endemic_equilibrium(fig1_params, BILINEAR_INC)
    report = excinfo.value.report
    assert report.R0 == pytest.approx(0.8406, abs=1e-4)
    assert report.endemic is None
    assert (report.E0.s, report.E0.i, report.E0.r) == (pytest.approx(50.0), 0.0, 0.0)


def test_analyze_never_raises(fig1_params):
    report = analyze(fig1_params, BILINEAR_INC)
    assert not report.endemic_present
    assert report.stable_equilibrium == "E0"
    assert report.residual < 1e-12


def test_sir_limit_matches_closed_form():
    params = ModelParams(Lambda=10.0, mu=0.5, gamma=0.3, c=0.2, beta=0.1, delta=0.0)
    E = endemic_equilibrium(params, BILINEAR_INC).endemic
    s_star = params.removal / params.beta
    i_star = params.mu * (params.carrying_capacity - s_star) / params.removal
    assert E.s == pytest.approx(s_star, rel=1e-10)
    assert E.i == pytest.approx(i_star, rel=1e-10)
    assert E.r == pytest.approx(params.gamma * i_star / params.mu, rel=1e-10)


def test_saturated_equilibrium_has_small_residual(fig2_params):
    inc = builtin_incidence(SATURATED, saturation=0.05)
    report = endemic_equilibrium(fig2_params, inc)
    # saturation leaves R0 alone but lowers i*
    assert report.R0 == pytest.approx(compute_R0(fig2_params, BILINEAR_INC)[0])
    assert 0 < report.endemic.i < endemic_equilibrium(fig2_params, BILINEAR_INC).endemic.i
    assert report.residual < 1e-9


def random_params(rng):
    Lambda, mu = rng.uniform(0.1, 50.0), rng.uniform(0.05, 2.0)
    gamma, c, delta = rng.uniform(0.0, 2.0, size=3)
    beta = rng.uniform(0.01, 2.0)
    return ModelParams(Lambda=Lambda, mu=mu, gamma=gamma, c=c, beta=beta, delta=delta)


def test_R0_increases_with_beta_and_decreases_with_c():
    rng = np.random.default_rng(7)
    for _ in range(500):
        params = random_params(rng)
        R0, _ = compute_R0(params, BILINEAR_INC)
        more_beta, _ = compute_R0(params.replace(beta=params.beta * 1.5), BILINEAR_INC)
        more_c, _ = compute_R0(params.replace(c=params.c + 0.25), BILINEAR_INC)
        assert more_beta > R0
        assert more_c < R0


@pytest.mark.parametrize("inc", [BILINEAR_INC, builtin_incidence(SATURATED, saturation=0.05)])
@pytest.mark.parametrize("name", ["fig1_params", "fig2_params"])
def test_H_is_strictly_decreasing(name, inc, request):
    params = request.getfixturevalue(name)
    right = right_endpoint(params)
    grid = np.linspace(right * 1e-6, right, 2000)
    values = np.array([H_of_i(params, inc, i) for i in grid])
    assert np.all(np.diff(values) < 0)


@pytest.mark.parametrize("inc", [BILINEAR_INC, builtin_incidence(SATURATED, saturation=0.05)])
def test_endemic_equilibrium_satisfies_each_steady_state_relation(fig2_params, inc):
    p = fig2_params
    E = endemic_equilibrium(p, inc).endemic
    infection = p.beta * float(inc.f(E.s, E.i))
    assert p.mu * E.s + infection == pytest.approx(p.Lambda, rel=1e-9)
    assert p.removal * E.i - p.delta * E.r == pytest.approx(infection, rel=1e-9)
    assert (p.mu + p.delta) * E.r == pytest.approx(p.gamma * E.i, rel=1e-9)
