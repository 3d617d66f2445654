import pytest
import sympy as sp

from burgerslie.catalog import CATALOG
from burgerslie.deteq import (
    DeterminingError,
    DeterminingSystem,
    DiscoveryError,
    MismatchedUnknownsError,
    PDESpec,
    discover_over_samples,
    discover_symmetries,
    equivalent_systems,
    extract_determining,
    invariance_residual,
    point_ansatz,
    reference_system,
    verify_symmetry,
)
from burgerslie.liealg import bracket
from burgerslie.prolong import coordinates_in_span, parse_vector_field
from burgerslie.symcore import alpha, beta, is_jet, jets_in, normalize, nu, p, parse_expr, phi, t, x, xi

from conftest import B11, B12, B13, T, X

ABSTRACT = PDESpec()


def pde(text, nu_value=None):
    return PDESpec.from_text(text, nu_value)


# ---------------------------------------------------------------- PDESpec

def test_pde_rejects_bad_input():
    with pytest.raises(DeterminingError):
        PDESpec.from_text("u", 0)
    with pytest.raises(DeterminingError):
        PDESpec.from_text("3")
    with pytest.raises(DeterminingError):
        PDESpec.from_text("x*u")


# ---------------------------------------------------------------- residual

def test_residual_vanishes_for_translation():
    assert invariance_residual(ABSTRACT, X) == 0


def test_residual_exponential_case():
    assert invariance_residual(pde("exp(b*u)"), parse_vector_field("x; 2*t; -1/b")) == 0


def test_residual_nonzero_for_listed_minus_branch():
    # hand value of the u_x equation with xi = x + t, phi = 2t, alpha = beta = 1:
    # -(1 + u) g' - g + 1 = (2u^2 - 4u)/(1 - u)^2
    r = invariance_residual(pde("u/(1-u)"), parse_vector_field("x+t; 2*t; 1+u"))
    assert normalize(r - parse_expr("(2*u^2 - 4*u)*u_x/(1-u)^2")) == 0


def test_residual_of_ansatz_is_polynomial_in_jets():
    r = invariance_residual(ABSTRACT, point_ansatz())
    assert {str(j) for j in jets_in(r)} <= {"u_x", "u_xx"}


# ---------------------------------------------------------------- extraction

def test_extracted_system_equivalent_to_reference():
    res = equivalent_systems(extract_determining(ABSTRACT), reference_system())
    assert res.equivalent
    assert all(w is not None for w in res.a_in_b + res.b_in_a)


def test_u_xx_coefficient_is_time_scaling_condition():
    system = extract_determining(ABSTRACT)
    eq = dict(zip(map(str, system.monomials), system.equations))["u_xx"]
    target = nu * (sp.Derivative(phi(t), t) - 2 * sp.Derivative(xi(x, t), x))
    assert normalize(eq - target) == 0 or normalize(eq + target) == 0


def test_translations_solve_every_equation():
    rules = {alpha(x, t): 0, beta(x, t): 0, xi(x, t): sp.Symbol("c1"), phi(t): sp.Symbol("c2")}
    for e in extract_determining(ABSTRACT):
        assert normalize(e.subs(rules).doit()) == 0


def test_system_invariants():
    system = extract_determining(ABSTRACT)
    assert len(system) == 3
    for e in system:
        assert not any(is_jet(s) for s in e.free_symbols)
    eqs = list(system)
    for i in range(len(eqs)):
        for j in range(i + 1, len(eqs)):
            ratio = normalize(eqs[i] / eqs[j])
            assert ratio.atoms(sp.Derivative) or ratio.atoms(sp.core.function.AppliedUndef)


def test_json_and_latex():
    system = extract_determining(ABSTRACT)
    d = system.to_dict()
    assert [e["monomial"] for e in d["equations"]] == ["u_x", "u_xx", "1"]
    assert "\\xi" in system.to_latex()
    assert system.to_json() == extract_determining(ABSTRACT).to_json()


def test_abstract_g_forces_translations():
    """alpha = beta = 0 with xi_x = xi_t = 0 leaves phi' = 0."""
    c = sp.Symbol("c")
    rules = {alpha(x, t): 0, beta(x, t): 0, xi(x, t): c}
    remaining = [normalize(e.subs(rules).doit()) for e in extract_determining(ABSTRACT)]
    remaining = [e for e in remaining if e != 0]
    phi_t = sp.Derivative(phi(t), t)
    assert remaining
    for e in remaining:
        assert normalize(e.subs(phi_t, 0)) == 0
        assert e.has(phi_t)


# ---------------------------------------------------------------- equivalence

def test_equivalence_reflexive():
    A = reference_system()
    res = equivalent_systems(A, A)
    assert res.equivalent
    assert res.a_in_b == [{f"E{i}": "1"} for i in range(len(A))]


def test_equivalence_scaling_witness():
    A = DeterminingSystem((parse_expr("phi_t - 2*xi_x"),))
    B = DeterminingSystem((parse_expr("2*phi_t - 4*xi_x"),))
    res = equivalent_systems(A, B)
    assert res.equivalent and res.a_in_b == [{"E0": "1/2"}]


def test_equivalence_detects_difference():
    A = DeterminingSystem((parse_expr("phi_t - 2*xi_x"),))
    B = DeterminingSystem((parse_expr("phi_t - xi_x"),))
    assert not equivalent_systems(A, B).equivalent


def test_equivalence_mismatched_unknowns():
    A = DeterminingSystem((parse_expr("phi_t"),))
    B = DeterminingSystem((parse_expr("xi_x"),))
    with pytest.raises(MismatchedUnknownsError):
        equivalent_systems(A, B)


# ---------------------------------------------------------------- verification

def test_verify_projective_generator():
    assert verify_symmetry(pde("u"), B11).is_symmetry


def test_verify_log_case():
    assert verify_symmetry(pde("log(u)"), parse_vector_field("t; 0; u"))


def test_verify_corrected_minus_branch():
    assert verify_symmetry(pde("u/(1-u)"), parse_vector_field("x-t; 2*t; u-1"))


def test_verify_symbolic_power():
    assert verify_symmetry(pde("u^p"), parse_vector_field("x; 2*t; -u/p"))


@pytest.mark.parametrize("case", [e for e in CATALOG if e.generators], ids=lambda e: e.case_id)
def test_scaling_and_bracket_closure(case):
    P = case.pde()
    good = [X, T] + [vf for _, vf in case.generators + case.corrected if verify_symmetry(P, vf)]
    for vf in good:
        assert verify_symmetry(P, vf * sp.Rational(-3, 7))
    for i, V in enumerate(good):
        for W in good[i + 1:]:
            assert verify_symmetry(P, bracket(V, W))


# ---------------------------------------------------------------- discovery

def test_discover_burgers():
    basis = discover_symmetries(pde("u"), 2)
    assert len(basis) == 5
    for vf in (X, T, B11, B12, B13):
        assert coordinates_in_span(basis, vf) is not None


def test_discover_square():
    basis = discover_symmetries(pde("u^2"), 2)
    assert len(basis) == 3
    assert coordinates_in_span(basis, parse_vector_field("x; 2*t; -u/2")) is not None


def test_discover_case5_low_degree():
    basis = discover_symmetries(pde("(1-u)/(1+u)"), 1)
    B5 = parse_vector_field("x-t; 2*t; 1+u")
    assert len(basis) == 3
    assert all(coordinates_in_span(basis, v) is not None for v in (X, T, B5))


def test_discover_abstract_degree_one():
    basis = discover_symmetries(ABSTRACT, 1)
    assert len(basis) == 2
    assert all(coordinates_in_span([X, T], v) is not None for v in basis)


def test_discover_refuses_parameters_and_high_degree():
    with pytest.raises(DiscoveryError):
        discover_symmetries(pde("u^p"), 2)
    with pytest.raises(DiscoveryError):
        discover_symmetries(pde("u"), 4)


def test_discover_over_samples_reports_common_dimension():
    out = discover_over_samples(pde("u^p"), [{p: 2}, {p: sp.Rational(1, 2)}], 1)
    assert out["dimension"] == 3
    assert len(out["bases"]) == 2
