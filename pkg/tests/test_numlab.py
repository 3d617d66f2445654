import json
import math
import random

import numpy as np
import pytest

from burgerslie.catalog import CATALOG
from burgerslie.deteq import PDESpec, verify_symmetry
from burgerslie.numlab import (
    CATALOG_G,
    DomainClipError,
    FlowBlowUpError,
    FlowMap,
    Grid,
    NumlabError,
    StabilityError,
    discrete_residual,
    flow_group_law_error,
    flow_transform,
    invariance_transport_check,
    jet_residual_check,
    manufactured_convergence,
    prolonged_flow_jet,
    solve,
)
from burgerslie.prolong import apply, parse_vector_field, prolong2
from burgerslie.symcore import jet, parse_expr, t, u, x

from conftest import B11, B12, B13, T, X

BURGERS = CATALOG_G("1")
SAMPLE_PARAMS = {"2": {"p": 2}, "4": {"b": 1}}


def random_points(n=25, seed=3):
    rng = np.random.default_rng(seed)
    return np.column_stack([rng.uniform(-1, 1, n), rng.uniform(0, 0.5, n), rng.uniform(-1, 1, n)])


# ---------------------------------------------------------------- grid and solver

def test_grid_validation():
    with pytest.raises(NumlabError):
        Grid(0, 1, 8, 1.0, 32)
    with pytest.raises(NumlabError):
        Grid(1, 0, 32, 1.0, 32)
    with pytest.raises(NumlabError):
        Grid(0, 1, 32, 1.0, 32, boundary="neumann")
    with pytest.raises(NumlabError):
        Grid(0, 1, 100_000, 1.0, 100_000)


def test_zero_is_fixed_point():
    grid = Grid(0, 2 * math.pi, 64, 1.0, 64)
    sol = solve(0.3, BURGERS, lambda xs: 0 * xs, grid)
    assert np.all(sol.values == 0.0)


@pytest.mark.parametrize("c", [0.5, -0.25, 0.75])
def test_constants_are_fixed_points(c):
    grid = Grid(0, 2 * math.pi, 64, 1.0, 64)
    sol = solve(0.3, BURGERS, c, grid)
    assert np.all(sol.values == c)


def test_manufactured_convergence_order():
    out = manufactured_convergence()
    assert min(out["orders"]) >= 1.9
    assert out["errors"][0] > out["errors"][1] > out["errors"][2]


def test_stability_guard():
    grid = Grid(0, 1, 200, 1.0, 16)
    with pytest.raises(StabilityError):
        solve(0.01, BURGERS, 2.0, grid)


def test_nonpositive_nu_rejected():
    with pytest.raises(NumlabError):
        solve(0.0, BURGERS, 0.5, Grid(0, 1, 32, 1.0, 32))


def test_dirichlet_steady_linear_profile():
    # u = a constant satisfies the boundary data, so the profile must stay put
    grid = Grid.dirichlet(0, 1, 41, 0.5, 400, 0.3, 0.3)
    sol = solve(0.1, BURGERS, 0.3, grid)
    assert np.max(np.abs(sol.values - 0.3)) < 1e-14


def test_dirichlet_boundaries_held():
    grid = Grid.dirichlet(0, 1, 41, 0.2, 200, 0.0, 0.0)
    sol = solve(0.1, BURGERS, lambda xs: np.sin(math.pi * xs), grid)
    assert np.all(sol.values[:, 0] == 0.0) and np.all(sol.values[:, -1] == 0.0)
    assert np.max(np.abs(sol.values[-1])) < 1.0


def test_heat_decay_rate():
    # g = 0 is excluded from the catalog but isolates the diffusion part
    from burgerslie.symcore import GImpl

    zero = GImpl(lambda v: 0 * v, lambda v: 0.0, lambda v: 0.0)
    grid = Grid(0, 2 * math.pi, 128, 0.5, 2000)
    sol = solve(0.5, zero, np.sin, grid)
    assert abs(np.max(sol.values[-1]) - math.exp(-0.25)) < 1e-3


def test_exports():
    grid = Grid(0, 1, 16, 0.1, 16)
    sol = solve(0.2, BURGERS, 0.5, grid)
    lines = sol.to_csv().splitlines()
    assert lines[0] == "x,t,u" and len(lines) == 1 + 16 * 17
    data = json.loads(sol.to_json())
    assert data["grid"]["nx"] == 16 and len(data["u"]) == 17
    assert "scheme" in data["metadata"]


# ---------------------------------------------------------------- flows

def closed_forms(e):
    return {
        "X": lambda P: P + [e, 0, 0],
        "B12": lambda P: np.column_stack([P[:, 0] + e * P[:, 1], P[:, 1], P[:, 2] + e]),
        "B13": lambda P: P * [math.exp(e), math.exp(2 * e), math.exp(-e)],
        "B11": lambda P: np.column_stack([
            P[:, 0] / (1 - e * P[:, 1]), P[:, 1] / (1 - e * P[:, 1]),
            P[:, 2] * (1 - e * P[:, 1]) + e * P[:, 0]]),
    }


@pytest.mark.parametrize("name", ["X", "B11", "B12", "B13"])
@pytest.mark.parametrize("e", [-0.4, 0.3])
def test_flow_matches_closed_form(name, e):
    vf = {"X": X, "B11": B11, "B12": B12, "B13": B13}[name]
    P = random_points()
    got = flow_transform(FlowMap(vf, e), P)
    assert np.max(np.abs(got - closed_forms(e)[name](P))) < 1e-8


def test_flow_at_zero_is_identity():
    P = random_points()
    assert np.array_equal(FlowMap(B11, 0.0)(P), P)


def test_flow_validation():
    with pytest.raises(NumlabError):
        FlowMap(X, 0.1, steps=10)
    with pytest.raises(NumlabError):
        FlowMap(X, 5.0)
    with pytest.raises(NumlabError):
        flow_transform(FlowMap(parse_vector_field("x; 2*t; -u/p"), 0.1), random_points())


def test_flow_blow_up():
    with pytest.raises(FlowBlowUpError):
        flow_transform(FlowMap(parse_vector_field("0; 0; u^2"), 1.0), [[0.0, 0.0, 2.0]])


def catalog_generators():
    for e in CATALOG:
        P = e.pde()
        for name, vf in (("X", X), ("T", T)) + e.generators + e.corrected:
            if verify_symmetry(P, vf):
                yield e.case_id, name, vf


GENERATORS = list(catalog_generators())


@pytest.mark.parametrize("cid,name,vf", GENERATORS, ids=[f"{c}-{n}" for c, n, _ in GENERATORS])
def test_flow_group_law(cid, name, vf):
    prm = SAMPLE_PARAMS.get(cid)
    P = random_points(10)
    for e1, e2 in ((0.2, 0.3), (-0.5, 0.25)):
        assert flow_group_law_error(vf, e1, e2, P, prm) < 1e-7


# ---------------------------------------------------------------- jet residuals

CONCRETE = [gen for gen in GENERATORS if gen[0] != "arb"]


@pytest.mark.parametrize("cid,name,vf", CONCRETE, ids=[f"{c}-{n}" for c, n, _ in CONCRETE])
def test_jet_residual_small_for_symmetries(cid, name, vf):
    e = next(c for c in CATALOG if c.case_id == cid)
    prm = SAMPLE_PARAMS.get(cid)
    res = jet_residual_check(e.pde(), vf, params=prm, g_impl=CATALOG_G(cid, prm))
    assert res < 1e-9


def test_jet_residual_with_expression_g():
    # g compiled from the expression rather than the hand table
    assert jet_residual_check(PDESpec.from_text("u^2"), parse_vector_field("x; 2*t; -u/2")) < 1e-9


def test_jet_residual_large_for_minus_branch():
    pde = PDESpec.from_text("u/(1-u)")
    res = jet_residual_check(pde, parse_vector_field("x+t; 2*t; 1+u"), g_impl=CATALOG_G("7b"))
    assert res > 1e-3


def test_jet_residual_matches_symbolic_residual_values():
    # at a single jet, compare with the symbolic residual (2u^2 - 4u) u_x / (1 - u)^2
    pde = PDESpec.from_text("u/(1-u)")
    one = jet_residual_check(pde, parse_vector_field("x+t; 2*t; 1+u"), n_points=1, seed=11)
    rng = np.random.default_rng(11)
    rng.uniform(-1, 1, 2)
    uv = rng.uniform(0.2, 0.8)
    ux = rng.uniform(-1, 1, 3)[0]
    assert one == pytest.approx(abs((2 * uv**2 - 4 * uv) * ux / (1 - uv) ** 2), rel=1e-12)


COEFFS = ["0", "1", "x", "t", "u", "x*t", "t^2", "x*u", "u^2", "x - t", "2*t", "-u"]


def random_fields(n=20, seed=7):
    rng = random.Random(seed)
    cases = [c for c in CATALOG if c.case_id != "arb"]
    out = []
    while len(out) < n:
        case = rng.choice(cases)
        vf = parse_vector_field("; ".join(rng.choice(COEFFS) for _ in range(3)))
        if vf.is_zero():
            continue
        out.append((case, vf))
    return out


@pytest.mark.parametrize("case,vf", random_fields(), ids=lambda v: getattr(v, "case_id", None) or str(v))
def test_jet_check_agrees_with_verification(case, vf):
    prm = SAMPLE_PARAMS.get(case.case_id)
    pde = case.pde()
    symbolic = verify_symmetry(pde.with_params({k: v for k, v in _sym(prm).items()}) if prm else pde, vf)
    res = jet_residual_check(pde, vf, params=prm, g_impl=CATALOG_G(case.case_id, prm))
    if symbolic:
        assert res < 1e-9
    else:
        assert res > 1e-3


def _sym(prm):
    import sympy as sp

    return {sp.Symbol(k): sp.Integer(v) for k, v in prm.items()}


def test_random_fields_include_non_symmetries():
    verdicts = []
    for case, vf in random_fields():
        prm = SAMPLE_PARAMS.get(case.case_id)
        pde = case.pde().with_params(_sym(prm)) if prm else case.pde()
        verdicts.append(verify_symmetry(pde, vf).is_symmetry)
    assert verdicts.count(False) >= 15


def test_prolongation_matches_flow_of_jets():
    point = {"x": 0.3, "t": 0.4, "u": 0.6, "u_x": 0.5, "u_t": -0.2, "u_xx": 0.7, "u_xt": 0.1, "u_tt": -0.3}
    h = 2e-3
    for vf in (B11, B12, B13):
        jets = {k: prolonged_flow_jet(vf, point, k * h) for k in (-2, -1, 1, 2)}
        pf = prolong2(vf)
        subs = {x: 0.3, t: 0.4, u: 0.6, jet("x"): 0.5, jet("t"): -0.2, jet("xx"): 0.7,
                jet("xt"): 0.1, jet("tt"): -0.3}
        for name in ("x", "t", "xx", "xt", "tt"):
            expected = float(pf.coefficient(jet(name)).subs(subs))
            c = {k: j[f"u_{name}"] for k, j in jets.items()}
            got = (8 * (c[1] - c[-1]) - (c[2] - c[-2])) / (12 * h)
            assert got == pytest.approx(expected, rel=1e-6, abs=1e-6)


def test_apply_to_burgers_f_on_manifold():
    F = parse_expr("nu*u_xx - u_t - u*u_x")
    assert apply(prolong2(X), F) == 0


# ---------------------------------------------------------------- transport

def test_transport_at_zero_equals_untransformed():
    grid = Grid(0, 2 * math.pi, 64, 0.5, 64)
    out = invariance_transport_check(0.5, BURGERS, B12, 0.0, grid, lambda xs: 0.5 + 0.25 * np.sin(xs))
    assert out["residual"] == out["untransformed"]


def test_transport_translation_periodic():
    grid = Grid(0, 2 * math.pi, 128, 0.5, 128)
    out = invariance_transport_check(0.5, BURGERS, X, 0.3, grid, lambda xs: 0.5 + 0.25 * np.sin(xs))
    assert out["residual"] <= 2 * out["untransformed"]
    assert out["valid_fraction"] == 1.0


def test_transport_galilean_refinement_order():
    res = []
    nxs = (32, 64, 128)
    for nx in nxs:
        # diffusion number nu*dt/dx^2 fixed at 1/4, so the first-order time error scales like dx^2
        dx = 2 * math.pi / nx
        grid = Grid(0, 2 * math.pi, nx, 0.5, math.ceil(0.5 * 0.5 / (0.25 * dx * dx)))
        out = invariance_transport_check(0.5, BURGERS, B12, 0.1, grid, lambda xs: 0.5 + 0.25 * np.sin(xs))
        res.append(out["residual"])
    orders = [math.log2(res[i] / res[i + 1]) for i in range(len(res) - 1)]
    assert min(orders) >= 1.5


def test_transport_clip_error():
    grid = Grid(0, 2 * math.pi, 32, 0.2, 32)
    with pytest.raises(DomainClipError):
        invariance_transport_check(0.5, BURGERS, T, 0.15, grid, lambda xs: 0.5 + 0.25 * np.sin(xs))


def test_transport_rejects_u_dependent_base_flow():
    grid = Grid(0, 2 * math.pi, 32, 0.2, 32)
    with pytest.raises(NumlabError):
        invariance_transport_check(0.5, BURGERS, parse_vector_field("u; 0; 0"), 0.1, grid, 0.5)


def test_discrete_residual_of_exact_constant():
    grid = Grid(0, 1, 32, 0.1, 32)
    assert discrete_residual(np.full((33, 32), 0.4), grid, 0.2, BURGERS) == 0.0
