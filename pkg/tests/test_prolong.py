import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings, strategies as st

from burgerslie.numlab import prolonged_flow_jet
from burgerslie.prolong import (
    JetOrderError,
    VectorField,
    apply,
    coordinates_in_span,
    linearly_independent,
    parse_vector_field,
    prolong2,
)
from burgerslie.symcore import SymcoreError, compile_numeric, g, jet, normalize, nu, parse_expr, t, u, x

from conftest import B11, B12, B13, T, X

F_ABSTRACT = nu * jet("xx") - jet("t") - g(u) * jet("x")
JETS = ("x", "t", "xx", "xt", "tt")


def test_translation_prolongs_to_zero():
    pf = prolong2(X)
    assert all(v == 0 for v in list(pf.eta1.values()) + list(pf.eta2.values()))


def test_galilean_boost_first_prolongation():
    pf = prolong2(B12)
    assert pf.eta1["x"] == 0
    assert normalize(pf.eta1["t"] + jet("x")) == 0


def test_dilation_first_prolongation():
    assert normalize(prolong2(B13).eta1["x"] + 2 * jet("x")) == 0


def test_dilation_second_prolongation_by_hand():
    pf = prolong2(B13)
    # u -> e^{-s} u, x -> e^{s} x, t -> e^{2s} t gives weights -3, -4, -5
    assert normalize(pf.eta2["xx"] + 3 * jet("xx")) == 0
    assert normalize(pf.eta2["xt"] + 4 * jet("xt")) == 0
    assert normalize(pf.eta2["tt"] + 5 * jet("tt")) == 0


def test_translations_leave_F_invariant():
    assert apply(prolong2(X), F_ABSTRACT) == 0
    assert apply(prolong2(T), F_ABSTRACT) == 0


def test_apply_rejects_third_order():
    with pytest.raises(JetOrderError):
        apply(prolong2(X), jet("xxx"))


def test_field_rejects_jet_coefficients():
    with pytest.raises(SymcoreError):
        VectorField.of(jet("x"), 0, 0)


def test_parse_vector_field():
    assert parse_vector_field("t; 0; 1").equals(VectorField.of(t, 0, 1))
    with pytest.raises(SymcoreError):
        parse_vector_field("t; 0")


def test_latex():
    assert B12.to_latex() == r"t\,\partial_x + \partial_u"


poly_coeff = st.builds(
    lambda c: sum((ci * m for ci, m in zip(c, (1, x, t, u, x * u, t * t, u * u))), sp.S.Zero),
    st.lists(st.integers(-3, 3), min_size=7, max_size=7),
)
fields = st.builds(VectorField.of, poly_coeff, poly_coeff, poly_coeff)


@given(fields, fields, st.integers(-3, 3), st.integers(-3, 3))
@settings(max_examples=25, deadline=None)
def test_prolongation_is_linear(V, W, a, b_):
    lhs = prolong2(a * V + b_ * W)
    pv, pw = prolong2(V), prolong2(W)
    for k in ("x", "t"):
        assert normalize(lhs.eta1[k] - a * pv.eta1[k] - b_ * pw.eta1[k]) == 0
    for k in ("xx", "xt", "tt"):
        assert normalize(lhs.eta2[k] - a * pv.eta2[k] - b_ * pw.eta2[k]) == 0


@given(st.integers(-5, 5), st.integers(-5, 5), st.integers(-5, 5))
@settings(max_examples=10, deadline=None)
def test_constant_fields_have_trivial_prolongation(a, b_, c):
    pf = prolong2(VectorField.of(a, b_, c))
    assert all(v == 0 for v in list(pf.eta1.values()) + list(pf.eta2.values()))


def test_span_helpers():
    assert coordinates_in_span([X, T, B12], X * 2 - B12) == [2, 0, -1]
    assert coordinates_in_span([X, T], B12) is None
    assert linearly_independent([X, T, B11, B12, B13])
    assert not linearly_independent([X, T, X + T])


@pytest.mark.parametrize("text", ["t*x; t^2; x - t*u", "x; 2*t; -u", "t; 0; 1", "x + t; 2*t; 1 + u", "u; x; t*u^2"])
def test_prolongation_matches_numeric_jet_flow(text):
    """pr2(V) e agrees with d/de of e along the flow of graphs."""
    vf = parse_vector_field(text)
    e = parse_expr("u_x^2*u + x*u_xx - t*u_t + u_xt*u_tt")
    f = compile_numeric(e)
    pt = {"x": 0.3, "t": 0.4, "u": 0.6, "u_x": 0.7, "u_t": -0.2, "u_xx": 0.5, "u_xt": -0.3, "u_tt": 0.8}
    sym = {x: pt["x"], t: pt["t"], u: pt["u"], **{jet(k): pt["u_" + k] for k in JETS}}
    exact = compile_numeric(apply(prolong2(vf), e))(sym)

    def along(h):
        j = prolonged_flow_jet(vf, pt, h)
        return f({x: j["x"], t: j["t"], u: j["u"], **{jet(k): j["u_" + k] for k in JETS}})

    h = 2e-3
    numeric = (8 * (along(h) - along(-h)) - (along(2 * h) - along(-2 * h))) / (12 * h)
    assert abs(numeric - exact) <= 1e-6 * (1 + abs(exact))
