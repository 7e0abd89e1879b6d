import math

import pytest

from treeopt.certificates import (
    ZETA,
    InconsistentBounds,
    assess_design,
    dual_bounds,
    esp_bounds,
    wolsey_gamma,
)
from treeopt.convex import solve_relaxation
from treeopt.greedy import greedy_esp

from _instances import cands, path

LOG3 = math.log(3)


def test_zeta_value():
    assert ZETA == pytest.approx(1.5819767068693265, abs=1e-15)


def test_exact_p3_instance():
    g = greedy_esp(path(3), cands((0, 2)), 1)
    sol = solve_relaxation(path(3), cands((0, 2)), 1)
    cert = esp_bounds(g.tau_init, g.tau_final, LOG3, sol.objective)
    assert cert.lower == pytest.approx(LOG3)
    assert cert.upper == pytest.approx(LOG3)
    assert cert.additive_gap == pytest.approx(0.0, abs=1e-12)
    assert assess_design(g.tau_final, cert).gap == pytest.approx(0.0, abs=1e-12)


def test_greedy_side_binds():
    cert = esp_bounds(0.0, 1.0, None, 10.0)
    assert cert.upper == pytest.approx(ZETA)
    assert cert.sources["upper"] == "greedy_guarantee"


def test_relaxation_side_binds():
    cert = esp_bounds(0.0, 1.0, 1.2, 1.3)
    assert (cert.lower, cert.upper) == (1.2, 1.3)
    assert cert.sources == {"lower": "cvx_rounded", "upper": "relaxation"}
    assert cert.ratio_bound == pytest.approx(1.3 / 1.2)


def test_inconsistent_inputs():
    with pytest.raises(InconsistentBounds):
        esp_bounds(0.0, 2.0, None, 1.0)
    with pytest.raises(InconsistentBounds):
        esp_bounds(1.0, 0.5, None, None)


def test_dual_bounds_boundary():
    cert = dual_bounds(1, 1, 1.0, 1.0)
    assert (cert.lower, cert.upper) == (1, 1)


def test_dual_bounds_ceiling():
    cert = dual_bounds(4, 5, 2.3, 2.0)
    assert cert.lower == 3 and cert.sources["lower"] == "relaxation"
    assert cert.upper == 4


def test_dual_bounds_ceiling_slack():
    # a sum that overshoots an integer by rounding noise must not add one
    assert dual_bounds(3, None, 3.0000000001, 1.5).lower == 3


def test_dual_gamma_one():
    cert = dual_bounds(3, None, None, 1.0)
    assert cert.lower == cert.upper == 3


def test_dual_inconsistent():
    with pytest.raises(InconsistentBounds):
        dual_bounds(2, None, 2.5, 1.0)


@pytest.mark.parametrize(
    "delta, phi, gamma",
    [(1.0, 0.0, 1.0), (1.0, 0.9, 1 + math.log(10)), (2.0, 1.0, 1 + math.log(2))],
)
def test_wolsey_gamma(delta, phi, gamma):
    assert wolsey_gamma(delta, phi) == pytest.approx(gamma)


def test_wolsey_gamma_domain():
    with pytest.raises(ValueError):
        wolsey_gamma(1.0, 1.0)


def test_assess_design():
    cert = esp_bounds(0.0, 1.0, 0.9, 1.2)
    assert assess_design(cert.lower, cert).gap == pytest.approx(cert.upper - cert.lower)
    assert assess_design(0.5, cert).gap > assess_design(1.0, cert).gap


def test_to_dict():
    d = esp_bounds(0.0, 1.0, None, None).to_dict()
    assert set(d) == {"lower", "upper", "design_value", "additive_gap", "ratio_bound", "sources"}
