import numpy as np
import pytest

from siridelay.incidence import BILINEAR, SATURATED, IncidenceFunction, builtin_incidence, check_hypotheses

S_GRID = np.arange(0.0, 101.0)
I_GRID = np.linspace(0.1, 50.0, 100)


def test_bilinear_values():
    inc = builtin_incidence(BILINEAR)
    assert inc.f(50, 20) == 1000
    assert inc.phi0(50) == 50
    assert inc.phi(50, 20) == 50
    assert inc.d2f_at_dfe(50) == 50


def test_saturated_values():
    inc = builtin_incidence(SATURATED, saturation=0.1)
    assert inc.f(50, 20) == pytest.approx(1000 / 3)
    assert inc.phi(50, 20) == pytest.approx(50 / 3)
    assert inc.phi0(50) == 50


def test_incidence_broadcasts():
    inc = builtin_incidence(SATURATED, saturation=0.5)
    values = inc.f(10.0, np.array([0.0, 1.0, 2.0]))
    np.testing.assert_allclose(values, [0.0, 10 / 1.5, 10.0])


@pytest.mark.parametrize("tag, saturation", [(BILINEAR, 0.0), (SATURATED, 0.05), (SATURATED, 2.0)])
def test_phi_times_i_recovers_f(tag, saturation):
    inc = builtin_incidence(tag, saturation=saturation)
    s, i = np.meshgrid(S_GRID, I_GRID, indexing="ij")
    np.testing.assert_allclose(inc.phi(s, i) * i, inc.f(s, i), rtol=1e-12, atol=0)


def test_unknown_family():
    with pytest.raises(ValueError, match="Known families"):
        builtin_incidence("logistic")


def test_negative_saturation_rejected():
    with pytest.raises(ValueError):
        builtin_incidence(SATURATED, saturation=-1.0)


@pytest.mark.parametrize("tag, saturation", [(BILINEAR, 0.0), (SATURATED, 0.1)])
def test_builtin_families_pass(tag, saturation):
    report = check_hypotheses(builtin_incidence(tag, saturation), S_GRID, I_GRID)
    assert report.passed
    assert report.witness is None
    assert all(report.clauses().values())
    assert 0 < report.phi_supremum <= 100.0


def test_phi_increasing_in_i_fails_h2():
    quadratic = IncidenceFunction(
        f=lambda s, i: np.asarray(s) * np.asarray(i) ** 2,
        phi=lambda s, i: np.asarray(s) * np.asarray(i),
        phi0=lambda s: np.zeros_like(np.asarray(s, dtype=float)),
        d2f_at_dfe=lambda s: np.zeros_like(np.asarray(s, dtype=float)),
        family_tag="quadratic",
    )
    report = check_hypotheses(quadratic, S_GRID, I_GRID)
    assert not report.h2_decreasing
    assert not report.passed
    clause, s, i = report.witness
    assert clause in ("H1-s", "H2-decreasing")
    assert s in S_GRID


def test_witness_reports_first_failing_clause():
    # constant in s: H1-s fails before anything else
    flat = IncidenceFunction(
        f=lambda s, i: np.broadcast_to(np.asarray(i, dtype=float), np.broadcast(s, i).shape) * 1.0,
        phi=lambda s, i: np.ones(np.broadcast(s, i).shape),
        phi0=lambda s: np.ones_like(np.asarray(s, dtype=float)),
        d2f_at_dfe=lambda s: np.ones_like(np.asarray(s, dtype=float)),
        family_tag="flat",
    )
    report = check_hypotheses(flat, S_GRID, I_GRID)
    assert not report.h1_s_increasing
    assert not report.h3_boundary
    assert report.witness[0] == "H1-s"


def test_companion_mismatch_detected():
    inc = builtin_incidence(BILINEAR)
    wrong = IncidenceFunction(f=inc.f, phi=inc.phi, phi0=inc.phi0,
                              d2f_at_dfe=lambda s: 2 * np.asarray(s, dtype=float), family_tag="wrong")
    report = check_hypotheses(wrong, S_GRID, I_GRID)
    assert not report.companions_consistent
    assert report.h1_s_increasing and report.h2_decreasing


@pytest.mark.parametrize("s_grid, i_grid", [
    ([], I_GRID),
    ([0.0, -1.0], I_GRID),
    (S_GRID, [0.0, 1.0]),
    ([1.0, 1.0], I_GRID),
])
def test_bad_grids_rejected(s_grid, i_grid):
    with pytest.raises(ValueError):
        check_hypotheses(builtin_incidence(BILINEAR), s_grid, i_grid)
