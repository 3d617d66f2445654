"""Numerical cross-checks: a finite-difference solver for
nu*u_xx = u_t + g(u)*u_x, one-parameter flows of point symmetries, and numeric
evaluation of the invariance condition on random jets."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np
import sympy as sp
from scipy.interpolate import RectBivariateSpline
from scipy.sparse import diags, identity as sparse_identity
from scipy.sparse.linalg import splu

from .deteq import PDESpec
from .prolong import VectorField, apply, prolong2
from .symcore import (
    EvaluationError,
    GImpl,
    SymcoreError,
    b,
    compile_numeric,
    g,
    jet,
    nu,
    p,
    t,
    u,
    x,
)

__all__ = [
    "Grid", "SolutionField", "FlowMap", "NumlabError", "StabilityError", "SolverBreakdown",
    "FlowBlowUpError", "DomainClipError", "CATALOG_G", "solve", "manufactured_convergence",
    "flow_transform", "flow_group_law_error", "jet_residual_check", "invariance_transport_check",
    "discrete_residual", "transform_solution", "prolonged_flow_jet",
]

CELL_BUDGET = 20_000_000


class NumlabError(SymcoreError):
    pass


class StabilityError(NumlabError):
    pass


class SolverBreakdown(NumlabError):
    pass


class FlowBlowUpError(NumlabError):
    pass


class DomainClipError(NumlabError):
    pass


# ---------------------------------------------------------------- grid

@dataclass(frozen=True)
class Grid:
    x_min: float
    x_max: float
    nx: int
    t_final: float
    nt: int
    boundary: str = "periodic"
    left: float = 0.0
    right: float = 0.0

    def __post_init__(self):
        if self.nx < 16 or self.nt < 16:
            raise NumlabError("grid needs nx >= 16 and nt >= 16")
        if not self.x_max > self.x_min:
            raise NumlabError("x_max must exceed x_min")
        if not self.t_final > 0:
            raise NumlabError("t_final must be positive")
        if self.boundary not in ("periodic", "dirichlet"):
            raise NumlabError("boundary must be 'periodic' or 'dirichlet'")
        if self.nx * self.nt > CELL_BUDGET:
            raise NumlabError(f"grid exceeds the cell budget of {CELL_BUDGET}")

    @classmethod
    def dirichlet(cls, x_min, x_max, nx, t_final, nt, left, right) -> "Grid":
        return cls(x_min, x_max, nx, t_final, nt, "dirichlet", left, right)

    @property
    def periodic(self) -> bool:
        return self.boundary == "periodic"

    @property
    def dx(self) -> float:
        span = self.x_max - self.x_min
        return span / self.nx if self.periodic else span / (self.nx - 1)

    @property
    def dt(self) -> float:
        return self.t_final / self.nt

    @property
    def x(self) -> np.ndarray:
        return self.x_min + self.dx * np.arange(self.nx)

    @property
    def t(self) -> np.ndarray:
        return self.dt * np.arange(self.nt + 1)

    def to_dict(self) -> dict:
        d = {"x_min": self.x_min, "x_max": self.x_max, "nx": self.nx, "t_final": self.t_final,
             "nt": self.nt, "boundary": self.boundary}
        if not self.periodic:
            d.update(left=self.left, right=self.right)
        return d


@dataclass
class SolutionField:
    grid: Grid
    values: np.ndarray  # shape (nt + 1, nx)
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if not np.all(np.isfinite(self.values)):
            raise NumlabError("solution contains non-finite values")

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["x", "t", "u"])
        xs, ts = self.grid.x, self.grid.t
        for n, tn in enumerate(ts):
            for i, xi in enumerate(xs):
                w.writerow([repr(float(xi)), repr(float(tn)), repr(float(self.values[n, i]))])
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps({
            "grid": self.grid.to_dict(),
            "metadata": self.metadata,
            "x": self.grid.x.tolist(),
            "t": self.grid.t.tolist(),
            "u": self.values.tolist(),
        }, sort_keys=True)


# ---------------------------------------------------------------- g tables

def _gimpl(f, df, d2f) -> GImpl:
    return GImpl(f, df, d2f)


def _catalog_g(case: str, prm: Mapping | None = None) -> GImpl:
    """Hand-written g, g', g'' for the classification cases."""
    prm = dict(prm or {})
    if case == "1":
        return _gimpl(lambda v: v, lambda v: 1.0, lambda v: 0.0)
    if case == "2":
        q = float(prm.get("p", prm.get(p, 2)))
        return _gimpl(lambda v: v**q, lambda v: q * v ** (q - 1), lambda v: q * (q - 1) * v ** (q - 2))
    if case == "3":
        return _gimpl(np.log, lambda v: 1 / v, lambda v: -1 / v**2)
    if case == "4":
        c = float(prm.get("b", prm.get(b, 1)))
        return _gimpl(lambda v: np.exp(c * v), lambda v: c * np.exp(c * v), lambda v: c * c * np.exp(c * v))
    if case == "5":
        return _gimpl(lambda v: (1 - v) / (1 + v), lambda v: -2 / (1 + v) ** 2, lambda v: 4 / (1 + v) ** 3)
    if case == "6":
        return _gimpl(lambda v: 1 / (1 + v), lambda v: -1 / (1 + v) ** 2, lambda v: 2 / (1 + v) ** 3)
    if case == "7a":
        return _gimpl(lambda v: v / (1 + v), lambda v: 1 / (1 + v) ** 2, lambda v: -2 / (1 + v) ** 3)
    if case == "7b":
        return _gimpl(lambda v: v / (1 - v), lambda v: 1 / (1 - v) ** 2, lambda v: 2 / (1 - v) ** 3)
    raise KeyError(f"no numeric g for case {case!r}")


CATALOG_G: Callable[..., GImpl] = _catalog_g


def _vectorize(gi: GImpl) -> Callable[[np.ndarray], np.ndarray]:
    f = gi.g
    try:
        probe = f(np.array([0.5, 0.25]))
        if np.shape(probe) == (2,):
            return f
    except Exception:
        pass
    return np.vectorize(f, otypes=[float])


# ---------------------------------------------------------------- solver

def _advection(uv: np.ndarray, gv: np.ndarray, dx: float, periodic: bool) -> np.ndarray:
    """g(u)*u_x by second-order upwinding in the direction of g."""
    if periodic:
        um1, um2 = np.roll(uv, 1), np.roll(uv, 2)
        up1, up2 = np.roll(uv, -1), np.roll(uv, -2)
        back = (3 * uv - 4 * um1 + um2) / (2 * dx)
        fwd = (-3 * uv + 4 * up1 - up2) / (2 * dx)
        return gv * np.where(gv >= 0, back, fwd)
    out = np.zeros_like(uv)
    n = uv.size
    for i in range(1, n - 1):
        if gv[i] >= 0 and i >= 2:
            d = (3 * uv[i] - 4 * uv[i - 1] + uv[i - 2]) / (2 * dx)
        elif gv[i] < 0 and i <= n - 3:
            d = (-3 * uv[i] + 4 * uv[i + 1] - uv[i + 2]) / (2 * dx)
        else:
            d = (uv[i + 1] - uv[i - 1]) / (2 * dx)
        out[i] = gv[i] * d
    return out


def _laplacian(n: int, dx: float, periodic: bool):
    main = -2.0 * np.ones(n)
    off = np.ones(n - 1)
    L = diags([off, main, off], [-1, 0, 1], format="lil")
    if periodic:
        L[0, n - 1] = 1.0
        L[n - 1, 0] = 1.0
    else:
        L[0, :] = 0.0
        L[n - 1, :] = 0.0
    return (L / dx**2).tocsc()


def solve(nu_value: float, g_impl: GImpl, u0, grid: Grid,
          source: Callable[[np.ndarray, float], np.ndarray] | None = None) -> SolutionField:
    """Semi-implicit scheme: implicit centred diffusion, explicit second-order
    upwind advection, written in increment form so that constants are exact
    fixed points."""
    nu_value = float(nu_value)
    if not nu_value > 0:
        raise NumlabError("nu must be positive")
    xs = grid.x
    uv = np.asarray(u0(xs) if callable(u0) else u0, dtype=float).copy()
    if uv.shape != xs.shape:
        uv = np.broadcast_to(uv, xs.shape).astype(float).copy()
    if not np.all(np.isfinite(uv)):
        raise NumlabError("initial data must be finite")
    if not grid.periodic:
        uv[0], uv[-1] = grid.left, grid.right
    dx, dt = grid.dx, grid.dt
    gfun = _vectorize(g_impl)
    L = _laplacian(grid.nx, dx, grid.periodic)
    A = (sparse_identity(grid.nx, format="csc") - dt * nu_value * L).tocsc()
    if not grid.periodic:
        A = A.tolil()
        A[0, :] = 0.0
        A[-1, :] = 0.0
        A[0, 0] = 1.0
        A[-1, -1] = 1.0
        A = A.tocsc()
    try:
        lu = splu(A)
    except RuntimeError as exc:
        raise SolverBreakdown(f"diffusion matrix factorisation failed: {exc}") from exc

    out = np.empty((grid.nt + 1, grid.nx))
    out[0] = uv
    cfl_max = 0.0
    for n in range(grid.nt):
        gv = gfun(uv)
        cfl = float(np.max(np.abs(gv))) * dt / dx
        cfl_max = max(cfl_max, cfl)
        if cfl > 0.9:
            raise StabilityError(f"advective Courant number {cfl:.3g} exceeds 0.9 at step {n}")
        rhs = dt * (nu_value * (L @ uv) - _advection(uv, gv, dx, grid.periodic))
        if source is not None:
            rhs = rhs + dt * source(xs, n * dt)
        if not grid.periodic:
            rhs[0] = rhs[-1] = 0.0
        delta = lu.solve(rhs)
        if not np.all(np.isfinite(delta)):
            raise SolverBreakdown(f"non-finite update at step {n}")
        uv = uv + delta
        out[n + 1] = uv
    meta = {"scheme": "semi-implicit: implicit centred diffusion, explicit 2nd-order upwind advection",
            "nu": nu_value, "max_courant": cfl_max}
    return SolutionField(grid, out, meta)


def manufactured_convergence(nu_value: float = 0.5, nxs: Sequence[int] = (64, 128, 256),
                             t_final: float = 0.5, diffusion_number: float = 0.5) -> dict:
    """Error sweep for u* = exp(-t) sin(x) with g = u on [0, 2*pi).

    dt = diffusion_number * dx^2 / nu so that the first-order time error
    scales like dx^2.
    """
    gi = _catalog_g("1")

    def exact(xs, tv):
        return np.exp(-tv) * np.sin(xs)

    def src(xs, tv):
        e = np.exp(-tv)
        return -e * np.sin(xs) + e * e * np.sin(xs) * np.cos(xs) + nu_value * e * np.sin(xs)

    errors = []
    for nx in nxs:
        dx = 2 * math.pi / nx
        nt = max(16, math.ceil(t_final / (diffusion_number * dx * dx / nu_value)))
        grid = Grid(0.0, 2 * math.pi, nx, t_final, nt)
        sol = solve(nu_value, gi, lambda xs: exact(xs, 0.0), grid, src)
        errors.append(float(np.max(np.abs(sol.values[-1] - exact(grid.x, t_final)))))
    orders = [math.log(errors[i] / errors[i + 1], nxs[i + 1] / nxs[i]) for i in range(len(errors) - 1)]
    return {"nx": list(nxs), "errors": errors, "orders": orders}


# ---------------------------------------------------------------- flows

def _lambdified(vf: VectorField, params: Mapping | None):
    comps = [sp.sympify(c).subs(dict(params or {})) for c in vf.components]
    free = set().union(*(c.free_symbols for c in comps)) - {x, t, u}
    if free:
        raise NumlabError(f"flow needs values for {sorted(map(str, free))}")
    fs = [sp.lambdify((x, t, u), c, modules="numpy") for c in comps]

    def rhs(state: np.ndarray) -> np.ndarray:
        xs, ts, us = state
        return np.array([np.broadcast_to(np.asarray(f(xs, ts, us), dtype=float), xs.shape) for f in fs])

    return rhs


@dataclass(frozen=True)
class FlowMap:
    """exp(eps * V) acting on points (x, t, u)."""

    generator: VectorField
    epsilon: float
    params: tuple = ()
    steps: int = 64
    max_epsilon: float = 2.0

    def __post_init__(self):
        if self.steps < 64:
            raise NumlabError("flow integration uses at least 64 steps")
        if abs(self.epsilon) > self.max_epsilon:
            raise NumlabError(f"|epsilon| must not exceed {self.max_epsilon}")
        object.__setattr__(self, "params", tuple(sorted(dict(self.params).items(), key=lambda kv: str(kv[0]))))

    def __call__(self, points) -> np.ndarray:
        return flow_transform(self, points)


def flow_transform(fm: FlowMap, points) -> np.ndarray:
    """Classical RK4 on dx/de = xi, dt/de = phi, du/de = eta."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.shape[-1] != 3:
        raise NumlabError("points must be (x, t, u) triples")
    if fm.epsilon == 0:
        return pts.copy()
    rhs = _lambdified(fm.generator, dict(fm.params))
    h = fm.epsilon / fm.steps
    y = pts.T.copy()
    for _ in range(fm.steps):
        k1 = rhs(y)
        k2 = rhs(y + 0.5 * h * k1)
        k3 = rhs(y + 0.5 * h * k2)
        k4 = rhs(y + h * k3)
        y = y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(y)) or np.max(np.abs(y)) > 1e12:
            raise FlowBlowUpError("flow left the region |state| <= 1e12")
    return y.T


def flow_group_law_error(vf: VectorField, e1: float, e2: float, points, params=None, steps: int = 64) -> float:
    prm = tuple((params or {}).items())
    a = flow_transform(FlowMap(vf, e1, prm, steps), flow_transform(FlowMap(vf, e2, prm, steps), points))
    c = flow_transform(FlowMap(vf, e1 + e2, prm, steps), points)
    return float(np.max(np.abs(a - c)))


# ---------------------------------------------------------------- jets

_ABSTRACT_F = nu * jet("xx") - jet("t") - g(u) * jet("x")


def jet_residual_check(pde: PDESpec, vf: VectorField, n_points: int = 200, *, params: Mapping | None = None,
                       g_impl: GImpl | None = None, nu_value: float = 0.7, seed: int = 0,
                       u_range: tuple = (0.2, 0.8), coord_range: float = 1.0, jet_range: float = 1.0,
                       max_tries: int = 10) -> float:
    """max |pr2(V) F| over random jets on the solution manifold.

    The prolongation is applied to F with g left abstract; g, g', g'' come
    from ``g_impl`` and u_t, u_xt are filled in numerically from the PDE.
    """
    prm = {sp.Symbol(str(k)) if isinstance(k, str) else k: v for k, v in dict(params or {}).items()}
    vf_num = vf.subs(prm) if prm else vf
    if g_impl is None:
        g_impl = GImpl.from_expr(pde.g, prm)
    nu_num = float(pde.nu) if pde.nu.is_number else float(nu_value)
    expr = apply(prolong2(vf_num), _ABSTRACT_F)
    leftover = expr.free_symbols - {x, t, u, nu} - {jet(s) for s in ("x", "t", "xx", "xt", "tt")}
    if leftover:
        raise NumlabError(f"numeric check needs values for {sorted(map(str, leftover))}")
    f = compile_numeric(expr, g_impl)
    rng = np.random.default_rng(seed)
    worst = 0.0
    done = 0
    tries = 0
    while done < n_points:
        xv, tv = rng.uniform(-coord_range, coord_range, 2)
        uv = rng.uniform(*u_range)
        ux, uxx, uxxx = rng.uniform(-jet_range, jet_range, 3)
        try:
            gv, dg = g_impl.g(uv), g_impl.dg(uv)
            ut = nu_num * uxx - gv * ux
            uxt = nu_num * uxxx - dg * ux * ux - gv * uxx
            point = {x: xv, t: tv, u: uv, nu: nu_num, jet("x"): ux, jet("xx"): uxx,
                     jet("t"): ut, jet("xt"): uxt, jet("tt"): 0.0}
            val = f(point)
        except (EvaluationError, ZeroDivisionError, OverflowError, ValueError):
            val = float("nan")
        if not math.isfinite(val):
            tries += 1
            if tries > max_tries * n_points:
                raise NumlabError("too many samples hit a pole; narrow u_range")
            continue
        worst = max(worst, abs(val))
        done += 1
    return worst


# ---------------------------------------------------------------- transport

def discrete_residual(values: np.ndarray, grid: Grid, nu_value: float, g_impl: GImpl,
                      mask: np.ndarray | None = None) -> float:
    """RMS of the centred residual u_t + g(u) u_x - nu u_xx over interior time
    levels (and interior x for Dirichlet grids), restricted to ``mask``."""
    U = values
    dx, dt = grid.dx, grid.dt
    gfun = _vectorize(g_impl)
    core = U[1:-1]
    ut = (U[2:] - U[:-2]) / (2 * dt)
    if grid.periodic:
        ux = (np.roll(core, -1, axis=1) - np.roll(core, 1, axis=1)) / (2 * dx)
        uxx = (np.roll(core, -1, axis=1) - 2 * core + np.roll(core, 1, axis=1)) / dx**2
        R = ut + gfun(core.ravel()).reshape(core.shape) * ux - nu_value * uxx
        valid = np.ones_like(R, dtype=bool)
        if mask is not None:
            m = mask[1:-1] & mask[2:] & mask[:-2]
            valid = m & np.roll(m, 1, axis=1) & np.roll(m, -1, axis=1)
    else:
        c = core[:, 1:-1]
        ux = (core[:, 2:] - core[:, :-2]) / (2 * dx)
        uxx = (core[:, 2:] - 2 * c + core[:, :-2]) / dx**2
        R = ut[:, 1:-1] + gfun(c.ravel()).reshape(c.shape) * ux - nu_value * uxx
        valid = np.ones_like(R, dtype=bool)
        if mask is not None:
            m = mask[1:-1] & mask[2:] & mask[:-2]
            valid = m[:, 1:-1] & m[:, 2:] & m[:, :-2]
    if not valid.any():
        raise DomainClipError("no valid points remain for the residual")
    return float(np.sqrt(np.mean(R[valid] ** 2)))


def _interpolator(sol: SolutionField):
    grid = sol.grid
    ts, xs, U = grid.t, grid.x, sol.values
    if grid.periodic:
        pad = 3
        L = grid.x_max - grid.x_min
        xs = np.concatenate([xs[-pad:] - L, xs, xs[:pad] + L])
        U = np.concatenate([U[:, -pad:], U, U[:, :pad]], axis=1)
    spline = RectBivariateSpline(ts, xs, U, kx=3, ky=3)

    def at(tq: np.ndarray, xq: np.ndarray) -> np.ndarray:
        if grid.periodic:
            xq = grid.x_min + np.mod(xq - grid.x_min, grid.x_max - grid.x_min)
        return spline.ev(tq, xq)

    return at


def transform_solution(sol: SolutionField, vf: VectorField, epsilon: float, params=None,
                       steps: int = 64) -> tuple[np.ndarray, np.ndarray]:
    """Values of the transformed solution on the same grid and a validity
    mask. Requires xi and phi independent of u."""
    if any(sp.diff(c, u) != 0 for c in (vf.xi, vf.phi)):
        raise NumlabError("transport check needs xi and phi independent of u")
    grid = sol.grid
    TT, XX = np.meshgrid(grid.t, grid.x, indexing="ij")
    if epsilon == 0:
        return sol.values.copy(), np.ones_like(sol.values, dtype=bool)
    prm = tuple((params or {}).items())
    back = flow_transform(FlowMap(vf, -epsilon, prm, steps), np.stack([XX.ravel(), TT.ravel(), np.zeros(XX.size)], 1))
    x0, t0 = back[:, 0], back[:, 1]
    inside = (t0 >= -1e-12) & (t0 <= grid.t_final + 1e-12)
    if not grid.periodic:
        inside &= (x0 >= grid.x_min - 1e-12) & (x0 <= grid.x_max + 1e-12)
    if inside.mean() < 0.5:
        raise DomainClipError(f"{100 * (1 - inside.mean()):.0f}% of the grid maps outside the solved domain")
    at = _interpolator(sol)
    u0 = np.zeros(XX.size)
    u0[inside] = at(np.clip(t0[inside], 0, grid.t_final), x0[inside])
    fwd = flow_transform(FlowMap(vf, epsilon, prm, steps), np.stack([x0, t0, u0], 1))
    vals = np.where(inside, fwd[:, 2], np.nan).reshape(XX.shape)
    return np.nan_to_num(vals), inside.reshape(XX.shape)


def invariance_transport_check(nu_value: float, g_impl: GImpl, vf: VectorField, epsilon: float, grid: Grid,
                               u0, params=None, sol: SolutionField | None = None) -> dict:
    """Solve, push the solution graph through exp(eps V), and compare discrete
    PDE residuals of the transformed and original fields."""
    if sol is None:
        sol = solve(nu_value, g_impl, u0, grid)
    base = discrete_residual(sol.values, grid, nu_value, g_impl)
    vals, mask = transform_solution(sol, vf, epsilon, params)
    res = discrete_residual(vals, grid, nu_value, g_impl, mask)
    return {"residual": res, "untransformed": base, "valid_fraction": float(mask.mean())}


# ---------------------------------------------------------------- jet flows

_JET_NAMES = ("x", "t", "xx", "xt", "tt")


def prolonged_flow_jet(vf: VectorField, point: Mapping, epsilon: float, params=None, delta: float = 0.02,
                       fit_degree: int = 4, stencil: int = 9) -> dict:
    """Image of a second-order jet under exp(eps V), computed without the
    prolongation formula: the graph of the jet's quadratic Taylor polynomial
    is pushed through the flow and the image is refitted by least squares.

    ``point`` maps x, t, u and the jet symbols u_x, ..., u_tt to floats.
    """
    val = {str(k): float(v) for k, v in point.items()}
    x0, t0, u0 = val["x"], val["t"], val["u"]
    d = {n: val.get(f"u_{n}", 0.0) for n in _JET_NAMES}
    offs = np.linspace(-delta, delta, stencil)
    DX, DT = (a.ravel() for a in np.meshgrid(offs, offs, indexing="ij"))
    U = u0 + d["x"] * DX + d["t"] * DT + 0.5 * d["xx"] * DX**2 + d["xt"] * DX * DT + 0.5 * d["tt"] * DT**2
    pts = np.stack([np.concatenate([[x0], x0 + DX]), np.concatenate([[t0], t0 + DT]), np.concatenate([[u0], U])], 1)
    img = flow_transform(FlowMap(vf, epsilon, tuple((params or {}).items())), pts)
    X0, T0, U0 = img[0]
    px, pt, pu = img[1:, 0] - X0, img[1:, 1] - T0, img[1:, 2]
    powers = [(a, k - a) for k in range(fit_degree + 1) for a in range(k, -1, -1)]
    A = np.stack([px**a * pt**c for a, c in powers], 1)
    coef, *_ = np.linalg.lstsq(A, pu, rcond=None)
    c = dict(zip(powers, coef))
    return {"x": X0, "t": T0, "u": U0, "u_x": c[1, 0], "u_t": c[0, 1],
            "u_xx": 2 * c[2, 0], "u_xt": c[1, 1], "u_tt": 2 * c[0, 2]}
