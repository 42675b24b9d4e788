import numpy as np
import pytest

from porocdh.errors import MaterialError
from porocdh.material import (PoroelasticLayer, SourceAmplitudes, derive_layer, project_source,
                              scale_columns)

from conftest import BOTTOM, TOP


def test_top_speeds_match_published_values(top):
    assert abs(top.V_Pf - 2692) <= 1
    assert abs(top.V_Ps - 1186) <= 1
    assert abs(top.V_S - 1409) <= 1


def test_bottom_speeds_match_published_values(bottom):
    assert abs(bottom.V_Pf - 2535) <= 1
    assert abs(bottom.V_Ps - 744) <= 1
    assert abs(bottom.V_S - 1415) <= 1


def test_hand_computed_densities_and_lame(top):
    assert top.rho == pytest.approx(1700.0, rel=1e-14)
    assert top.rho_w == pytest.approx(4750.0, rel=1e-14)
    assert top.lam == pytest.approx(4.7e9, rel=1e-14)
    # beta and m by hand
    assert top.beta == pytest.approx(1 - 6.7 / 6.9, rel=1e-14)
    m = 1.0 / (0.4 / 2e9 + (top.beta - 0.4) / 6.9e9)
    assert top.m == pytest.approx(m, rel=1e-14)


@pytest.mark.parametrize("layer", [TOP, BOTTOM])
def test_eigenpairs_and_normalization(layer):
    d = derive_layer(layer)
    V2 = np.array([d.V_Pf**2, d.V_Ps**2])
    assert np.allclose(d.B @ d.P, d.A @ d.P * V2, rtol=1e-12, atol=0)
    assert np.allclose(np.linalg.norm(d.P, axis=0), 1.0, rtol=1e-15)
    assert np.all(d.P[0] > 0)
    assert d.V_Pf > d.V_Ps
    assert d.V_S == pytest.approx(np.sqrt(d.mu * d.rho_w / (d.rho * d.rho_w - d.rho_f**2)))


@pytest.mark.parametrize("field,value", [("phi", 0.0), ("phi", 1.0), ("a", 0.5), ("mu", -1.0),
                                         ("K_b", 7e9), ("rho_f", 0.0)])
def test_unphysical_inputs_are_rejected(field, value):
    kw = dict(TOP.__dict__)
    kw[field] = value
    with pytest.raises(MaterialError, match="unphysical"):
        PoroelasticLayer(**kw)


def test_zero_source_projects_to_zero(top):
    F = project_source(top, SourceAmplitudes())
    assert (F.F_Pf, F.F_Ps) == (0.0, 0.0)


def test_bulk_source_round_trip(top):
    F = project_source(top, SourceAmplitudes(-1e10, -1e10, 0.0))
    back = top.A @ top.P @ np.array([F.F_Pf, F.F_Ps])
    assert np.allclose(back, [-1e10, -1e10], rtol=1e-10, atol=0)


def test_pressure_source_round_trip(top):
    F = project_source(top, SourceAmplitudes(0.0, 0.0, 1.0))
    # independent 2x2 solve by Cramer's rule
    M = top.A @ top.P
    rhs = np.array([-top.beta * top.m, -top.m])
    det = M[0, 0] * M[1, 1] - M[0, 1] * M[1, 0]
    expect = np.array([rhs[0] * M[1, 1] - M[0, 1] * rhs[1], M[0, 0] * rhs[1] - rhs[0] * M[1, 0]]) / det
    assert np.allclose([F.F_Pf, F.F_Ps], expect, rtol=1e-10, atol=0)


def test_scaled_columns_keep_source_physics(top):
    alt = scale_columns(top, -1.0, 3.0)
    s = SourceAmplitudes(-1e10, -1e10, 0.0)
    a, b = project_source(top, s), project_source(alt, s)
    assert b.F_Pf == pytest.approx(-a.F_Pf, rel=1e-12)
    assert b.F_Ps == pytest.approx(a.F_Ps / 3.0, rel=1e-12)
