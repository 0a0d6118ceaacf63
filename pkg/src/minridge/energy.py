"""Discrete elastic energy: strains, quadrature, reduced functional, gradient.

Dimensionless energy of the rescaled fields (U, V, W) on [-1,1] x [0, Y_max]:

    I = int [ (U_X + W_X^2)^2
            + (eps^(-2/3)/2) (V_X + U_Y + 2 W_X W_Y)^2
            + eps^(-4/3)     (V_Y + W_Y^2)^2 ] dX dY
      + int [ W_YY^2 + 2 eps^(2/3) W_XY^2 + eps^(4/3) W_XX^2 ] dX dY

Discretization: second-order central differences on the uniform tensor grid,
trapezoidal quadrature, and a ghost row at Y = -h_Y realizing the fold-line
slope condition W_Y(X, 0) = alpha,

    W(X, -h_Y) = W(X, h_Y) - 2 h_Y alpha,

which keeps W_YY second-order accurate at Y = 0 and makes the discrete
W_Y(X, 0) equal alpha exactly.  Pass ``alpha=None`` to evaluate a field with
one-sided stencils instead (pure quadrature of arbitrary fields, no slope
convention).

X-direction first derivatives use first-order one-sided stencils on the edge
rows.  That choice makes the trapezoid sum of a derivative telescope exactly,
so int U_X dX = 0 holds discretely for clamped U and the Jensen reduction
I >= E(W) is exact at the discrete level; the energy itself stays second-order
accurate because the edge rows carry only O(h) quadrature weight.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.sparse as sp

from .fields import FieldSet, GridSpec, PhysicalGrid

__all__ = [
    "StrainFields",
    "EnergyBreakdown",
    "ReducedEnergy",
    "UnscaledEnergy",
    "strains",
    "energy_rescaled",
    "energy_unscaled",
    "reduced_energy",
    "gradient",
    "membrane_prefactors",
    "bending_prefactors",
]


def membrane_prefactors(epsilon: float) -> tuple[float, float, float]:
    """Prefactors of the three membrane terms (xx, xy, yy)."""
    if epsilon <= 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    return (1.0, 0.5 * epsilon ** (-2.0 / 3.0), epsilon ** (-4.0 / 3.0))


def bending_prefactors(epsilon: float) -> tuple[float, float, float]:
    """Prefactors of the three bending terms (YY, XY, XX)."""
    if epsilon <= 0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    return (1.0, 2.0 * epsilon ** (2.0 / 3.0), epsilon ** (4.0 / 3.0))


# ---------------------------------------------------------------------------
# sparse stencil factories
# ---------------------------------------------------------------------------


def _d1_telescoping(n: int, h: float) -> sp.csr_matrix:
    """First derivative: central interior, first-order one-sided edge rows.

    Edge rows (f1-f0)/h and (f_{n-1}-f_{n-2})/h make the trapezoid sum of the
    derivative telescope to (f_{n-1} - f_0) exactly.
    """
    m = sp.lil_matrix((n, n))
    inv2h = 1.0 / (2.0 * h)
    for i in range(1, n - 1):
        m[i, i - 1] = -inv2h
        m[i, i + 1] = inv2h
    m[0, 0] = -1.0 / h
    m[0, 1] = 1.0 / h
    m[n - 1, n - 2] = -1.0 / h
    m[n - 1, n - 1] = 1.0 / h
    return m.tocsr()


def _d1_onesided2(n: int, h: float) -> sp.csr_matrix:
    """First derivative: central interior, second-order one-sided edge rows."""
    m = sp.lil_matrix((n, n))
    inv2h = 1.0 / (2.0 * h)
    for i in range(1, n - 1):
        m[i, i - 1] = -inv2h
        m[i, i + 1] = inv2h
    m[0, 0], m[0, 1], m[0, 2] = -3.0 * inv2h, 4.0 * inv2h, -1.0 * inv2h
    m[n - 1, n - 1], m[n - 1, n - 2], m[n - 1, n - 3] = (
        3.0 * inv2h,
        -4.0 * inv2h,
        1.0 * inv2h,
    )
    return m.tocsr()


def _d1_ghost_row0(n: int, h: float) -> sp.csr_matrix:
    """First derivative whose row 0 is zero (value supplied by the ghost
    convention as the constant alpha); second-order one-sided at the far end."""
    m = _d1_onesided2(n, h).tolil()
    m[0, :] = 0.0
    return m.tocsr()


def _d2_onesided2(n: int, h: float) -> sp.csr_matrix:
    """Second derivative: central interior, second-order 4-point edge rows."""
    m = sp.lil_matrix((n, n))
    invh2 = 1.0 / (h * h)
    for i in range(1, n - 1):
        m[i, i - 1] = invh2
        m[i, i] = -2.0 * invh2
        m[i, i + 1] = invh2
    m[0, 0], m[0, 1], m[0, 2], m[0, 3] = (
        2.0 * invh2,
        -5.0 * invh2,
        4.0 * invh2,
        -1.0 * invh2,
    )
    m[n - 1, n - 1], m[n - 1, n - 2], m[n - 1, n - 3], m[n - 1, n - 4] = (
        2.0 * invh2,
        -5.0 * invh2,
        4.0 * invh2,
        -1.0 * invh2,
    )
    return m.tocsr()


def _d2_ghost_row0(n: int, h: float) -> sp.csr_matrix:
    """Second derivative with ghost row 0: (2f1 - 2f0)/h^2 plus the constant
    -2 alpha / h added by the caller."""
    m = _d2_onesided2(n, h).tolil()
    m[0, :] = 0.0
    invh2 = 1.0 / (h * h)
    m[0, 0] = -2.0 * invh2
    m[0, 1] = 2.0 * invh2
    return m.tocsr()


class _Operators:
    """Flattened-field sparse operators and quadrature for one grid.

    Fields are stored as (n_Y, n_X) arrays and flattened in C order, so
    kron(A_Y, B_X) applies A along Y and B along X.
    """

    def __init__(self, n_X: int, n_Y: int, h_X: float, h_Y: float):
        self.n_X, self.n_Y = n_X, n_Y
        self.h_X, self.h_Y = h_X, h_Y
        ix = sp.identity(n_X, format="csr")
        iy = sp.identity(n_Y, format="csr")
        dx1 = _d1_telescoping(n_X, h_X)
        dy1 = _d1_onesided2(n_Y, h_Y)
        dy1g = _d1_ghost_row0(n_Y, h_Y)
        dx2 = _d2_onesided2(n_X, h_X)
        dy2 = _d2_onesided2(n_Y, h_Y)
        dy2g = _d2_ghost_row0(n_Y, h_Y)

        def k(a, b):
            return sp.kron(a, b, format="csr")

        self.DX = k(iy, dx1)
        self.DY = k(dy1, ix)
        self.DYg = k(dy1g, ix)
        self.DXX = k(iy, dx2)
        self.DYY = k(dy2, ix)
        self.DYYg = k(dy2g, ix)
        self.DXY = k(dy1, dx1)
        self.DXYg = k(dy1g, dx1)
        self.DXT = self.DX.T.tocsr()
        self.DYT = self.DY.T.tocsr()
        self.DYgT = self.DYg.T.tocsr()
        self.DXXT = self.DXX.T.tocsr()
        self.DYYT = self.DYY.T.tocsr()
        self.DYYgT = self.DYYg.T.tocsr()
        self.DXYT = self.DXY.T.tocsr()
        self.DXYgT = self.DXYg.T.tocsr()

        wx = np.full(n_X, h_X)
        wx[0] = wx[-1] = 0.5 * h_X
        wy = np.full(n_Y, h_Y)
        wy[0] = wy[-1] = 0.5 * h_Y
        self.wx, self.wy = wx, wy
        self.q = np.outer(wy, wx).ravel()

        # Dirichlet masks: clamped edges and the truncation row for all
        # fields; the fold line additionally pins V and W.
        free_u = np.ones((n_Y, n_X), dtype=bool)
        free_u[:, 0] = free_u[:, -1] = False
        free_u[-1, :] = False
        free_vw = free_u.copy()
        free_vw[0, :] = False
        self.free_u = free_u.ravel()
        self.free_vw = free_vw.ravel()


@lru_cache(maxsize=32)
def _operators(n_X: int, n_Y: int, h_X: float, h_Y: float) -> _Operators:
    return _Operators(n_X, n_Y, h_X, h_Y)


def operators_for(grid: GridSpec) -> _Operators:
    return _operators(grid.n_X, grid.n_Y, grid.h_X, grid.h_Y)


def _operators_physical(grid: PhysicalGrid) -> _Operators:
    return _operators(grid.n_X, grid.n_Y, grid.h_x, grid.h_y)


# ---------------------------------------------------------------------------
# derivative evaluation
# ---------------------------------------------------------------------------


def _w_derivatives(ops: _Operators, w: np.ndarray, alpha: float | None):
    """(W_X, W_Y, W_YY, W_XY, W_XX) flattened, honoring the ghost convention.

    The ghost constants are not applied on the clamped columns X = +-1: those
    columns are pinned to zero for all Y, so the fold slope cannot hold there
    (in the continuum it holds for a.e. X only).  Applying the ghost there
    would inject a spurious bending content 2 alpha^2 h_X / h_Y that survives
    proportional refinement.
    """
    n_X = ops.n_X
    wx = ops.DX @ w
    wxx = ops.DXX @ w
    if alpha is None:
        wy = ops.DY @ w
        wyy = ops.DYY @ w
        wxy = ops.DXY @ w
    else:
        wy = ops.DYg @ w
        wy[1 : n_X - 1] = alpha
        wy[0] = wy[n_X - 1] = 0.0
        wyy = ops.DYYg @ w
        wyy[1 : n_X - 1] += -2.0 * alpha / ops.h_Y
        wyy[0] = wyy[n_X - 1] = 0.0
        wxy = ops.DXYg @ w
    return wx, wy, wyy, wxy, wxx


def w_yy_field(W: np.ndarray, grid: GridSpec, alpha: float | None = None) -> np.ndarray:
    """The discrete W_YY array under the same convention as the energy."""
    W = np.asarray(W, dtype=float)
    if W.shape != grid.shape:
        raise ValueError(f"W shape {W.shape} does not match grid {grid.shape}")
    ops = operators_for(grid)
    _, _, wyy, _, _ = _w_derivatives(ops, W.ravel(), alpha)
    return wyy.reshape(grid.shape)


def w_x_field(W: np.ndarray, grid: GridSpec) -> np.ndarray:
    """The discrete W_X array under the same convention as the energy."""
    W = np.asarray(W, dtype=float)
    if W.shape != grid.shape:
        raise ValueError(f"W shape {W.shape} does not match grid {grid.shape}")
    ops = operators_for(grid)
    return (ops.DX @ W.ravel()).reshape(grid.shape)


@dataclass(frozen=True)
class StrainFields:
    """Membrane strain combinations entering the energy integrand.

    gamma_xx = U_X + W_X^2, gamma_xy = V_X + U_Y + 2 W_X W_Y,
    gamma_yy = V_Y + W_Y^2 (rescaled form; the rest-state offsets are
    absorbed by the rescaling of u and v).
    """

    gamma_xx: np.ndarray
    gamma_xy: np.ndarray
    gamma_yy: np.ndarray


def strains(fields: FieldSet, grid: GridSpec, alpha: float | None = None) -> StrainFields:
    if fields.shape != grid.shape:
        raise ValueError(f"fields shape {fields.shape} does not match grid {grid.shape}")
    ops = operators_for(grid)
    shape = grid.shape
    u, v, w = fields.U.ravel(), fields.V.ravel(), fields.W.ravel()
    wx, wy, _, _, _ = _w_derivatives(ops, w, alpha)
    g_xx = ops.DX @ u + wx * wx
    g_xy = ops.DX @ v + ops.DY @ u + 2.0 * wx * wy
    g_yy = ops.DY @ v + wy * wy
    return StrainFields(
        gamma_xx=g_xx.reshape(shape),
        gamma_xy=g_xy.reshape(shape),
        gamma_yy=g_yy.reshape(shape),
    )


@dataclass(frozen=True)
class EnergyBreakdown:
    """The six quadrature terms of the dimensionless energy plus reductions.

    All terms include their epsilon prefactors. ``reduced_E = E_b + E_s`` is
    the bending-plus-row-stretching functional of W alone that bounds
    ``total_I`` from below for admissible fields.
    """

    term_xx: float
    term_xy: float
    term_yy: float
    bend_YY: float
    bend_XY: float
    bend_XX: float
    total_I: float
    reduced_E: float
    E_b: float
    E_s: float

    def as_dict(self) -> dict:
        return {
            "term_xx": self.term_xx,
            "term_xy": self.term_xy,
            "term_yy": self.term_yy,
            "bend_YY": self.bend_YY,
            "bend_XY": self.bend_XY,
            "bend_XX": self.bend_XX,
            "total_I": self.total_I,
            "reduced_E": self.reduced_E,
            "E_b": self.E_b,
            "E_s": self.E_s,
        }


@dataclass(frozen=True)
class ReducedEnergy:
    """E(W) = int [ (1/2) tau(Y)^2 + int W_YY^2 dX ] dY and its pieces.

    ``tau`` is the per-row stretching content int W_X^2 dX; ``bend_rows`` is
    the per-row bending content int W_YY^2 dX.
    """

    value: float
    E_s: float
    E_b: float
    tau: np.ndarray
    bend_rows: np.ndarray


def _reduced_pieces(ops: _Operators, w: np.ndarray, alpha: float | None):
    shape = (ops.n_Y, ops.n_X)
    wx, _, wyy, _, _ = _w_derivatives(ops, w, alpha)
    tau = (wx.reshape(shape) ** 2) @ ops.wx
    bend_rows = (wyy.reshape(shape) ** 2) @ ops.wx
    E_s = 0.5 * float(ops.wy @ (tau * tau))
    E_b = float(ops.wy @ bend_rows)
    return tau, bend_rows, E_s, E_b


def reduced_energy(
    W: np.ndarray, grid: GridSpec, alpha: float | None = None
) -> ReducedEnergy:
    """Evaluate the reduced functional of the deflection alone."""
    W = np.asarray(W, dtype=float)
    if W.shape != grid.shape:
        raise ValueError(f"W shape {W.shape} does not match grid {grid.shape}")
    ops = operators_for(grid)
    tau, bend_rows, E_s, E_b = _reduced_pieces(ops, W.ravel(), alpha)
    return ReducedEnergy(value=E_s + E_b, E_s=E_s, E_b=E_b, tau=tau, bend_rows=bend_rows)


def _assemble(
    ops: _Operators,
    u: np.ndarray,
    v: np.ndarray,
    w: np.ndarray,
    epsilon: float,
    alpha: float | None,
    want_grad: bool,
):
    """Energy terms of the discretized functional and, optionally, its exact gradient."""
    c1, c2, c3 = membrane_prefactors(epsilon)
    c4, c5, c6 = bending_prefactors(epsilon)
    q = ops.q

    ux = ops.DX @ u
    uy = ops.DY @ u
    vx = ops.DX @ v
    vy = ops.DY @ v
    wx, wy, wyy, wxy, wxx = _w_derivatives(ops, w, alpha)

    g1 = ux + wx * wx
    g2 = vx + uy + 2.0 * wx * wy
    g3 = vy + wy * wy

    terms = (
        c1 * float(q @ (g1 * g1)),
        c2 * float(q @ (g2 * g2)),
        c3 * float(q @ (g3 * g3)),
        c4 * float(q @ (wyy * wyy)),
        c5 * float(q @ (wxy * wxy)),
        c6 * float(q @ (wxx * wxx)),
    )
    if not want_grad:
        return terms, None

    z1 = (2.0 * c1) * (q * g1)
    z2 = (2.0 * c2) * (q * g2)
    z3 = (2.0 * c3) * (q * g3)
    grad_u = ops.DXT @ z1 + ops.DYT @ z2
    grad_v = ops.DXT @ z2 + ops.DYT @ z3
    if alpha is None:
        dyT, dyyT, dxyT = ops.DYT, ops.DYYT, ops.DXYT
    else:
        dyT, dyyT, dxyT = ops.DYgT, ops.DYYgT, ops.DXYgT
    grad_w = (
        ops.DXT @ (z1 * (2.0 * wx) + z2 * (2.0 * wy))
        + dyT @ (z2 * (2.0 * wx) + z3 * (2.0 * wy))
        + dyyT @ ((2.0 * c4) * (q * wyy))
        + dxyT @ ((2.0 * c5) * (q * wxy))
        + ops.DXXT @ ((2.0 * c6) * (q * wxx))
    )
    return terms, (grad_u, grad_v, grad_w)


def energy_rescaled(
    fields: FieldSet, epsilon: float, grid: GridSpec, alpha: float | None = None
) -> EnergyBreakdown:
    """Trapezoidal quadrature of the six dimensionless energy terms.

    With ``alpha`` given, the ghost-row convention supplies W_Y = alpha on the
    fold line; with ``alpha=None`` one-sided stencils evaluate the field as-is.
    """
    if fields.shape != grid.shape:
        raise ValueError(f"fields shape {fields.shape} does not match grid {grid.shape}")
    ops = operators_for(grid)
    u, v, w = fields.U.ravel(), fields.V.ravel(), fields.W.ravel()
    terms, _ = _assemble(ops, u, v, w, epsilon, alpha, want_grad=False)
    _, _, E_s, E_b = _reduced_pieces(ops, w, alpha)
    return EnergyBreakdown(
        term_xx=terms[0],
        term_xy=terms[1],
        term_yy=terms[2],
        bend_YY=terms[3],
        bend_XY=terms[4],
        bend_XX=terms[5],
        total_I=sum(terms),
        reduced_E=E_s + E_b,
        E_b=E_b,
        E_s=E_s,
    )


def gradient(
    fields: FieldSet, epsilon: float, grid: GridSpec, alpha: float | None = None
) -> FieldSet:
    """Exact gradient of the discretized energy w.r.t. nodal values.

    Entries at Dirichlet-pinned nodes are zeroed: the clamped edges and the
    truncation row for all fields, plus the fold line for V and W.
    """
    if fields.shape != grid.shape:
        raise ValueError(f"fields shape {fields.shape} does not match grid {grid.shape}")
    ops = operators_for(grid)
    u, v, w = fields.U.ravel(), fields.V.ravel(), fields.W.ravel()
    _, grads = _assemble(ops, u, v, w, epsilon, alpha, want_grad=True)
    gu, gv, gw = grads
    gu = np.where(ops.free_u, gu, 0.0)
    gv = np.where(ops.free_vw, gv, 0.0)
    gw = np.where(ops.free_vw, gw, 0.0)
    shape = grid.shape
    return FieldSet(U=gu.reshape(shape), V=gv.reshape(shape), W=gw.reshape(shape))


def energy_and_gradient_flat(
    x: np.ndarray, epsilon: float, grid: GridSpec, alpha: float | None
) -> tuple[float, np.ndarray]:
    """Solver-facing evaluation on the packed vector [U, V, W] (flattened).

    Returns the total energy and its gradient with Dirichlet entries zeroed.
    """
    ops = operators_for(grid)
    n = grid.n_X * grid.n_Y
    u, v, w = x[:n], x[n : 2 * n], x[2 * n :]
    terms, grads = _assemble(ops, u, v, w, epsilon, alpha, want_grad=True)
    gu, gv, gw = grads
    g = np.concatenate(
        [
            np.where(ops.free_u, gu, 0.0),
            np.where(ops.free_vw, gv, 0.0),
            np.where(ops.free_vw, gw, 0.0),
        ]
    )
    return sum(terms), g


def energy_flat(x: np.ndarray, epsilon: float, grid: GridSpec, alpha: float | None) -> float:
    ops = operators_for(grid)
    n = grid.n_X * grid.n_Y
    terms, _ = _assemble(ops, x[:n], x[n : 2 * n], x[2 * n :], epsilon, alpha, want_grad=False)
    return sum(terms)


@dataclass(frozen=True)
class UnscaledEnergy:
    """Physical-variable energy split into membrane and bending parts."""

    membrane: float
    bending: float

    @property
    def total(self) -> float:
        return self.membrane + self.bending


def energy_unscaled(
    u: np.ndarray,
    v: np.ndarray,
    w: np.ndarray,
    sigma: float,
    grid: PhysicalGrid,
    alpha: float | None = None,
) -> UnscaledEnergy:
    """Direct quadrature of the physical-variable energy.

    Integrand: (u_x + w_x^2 - 1)^2 + (1/2)(v_x + u_y + 2 w_x w_y)^2
             + (v_y + w_y^2 - 1)^2 + sigma^2 (w_xx^2 + 2 w_xy^2 + w_yy^2).
    The rest-state offsets appear explicitly here; they are absorbed by the
    rescaling in the dimensionless evaluator.
    """
    if sigma <= 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    w = np.asarray(w, dtype=float)
    if not (u.shape == v.shape == w.shape == grid.shape):
        raise ValueError("u, v, w must all have the grid shape")
    ops = _operators_physical(grid)
    uf, vf, wf = u.ravel(), v.ravel(), w.ravel()
    ux = ops.DX @ uf
    uy = ops.DY @ uf
    vx = ops.DX @ vf
    vy = ops.DY @ vf
    wx, wy, wyy, wxy, wxx = _w_derivatives(ops, wf, alpha)
    g_xx = ux + wx * wx - 1.0
    g_xy = vx + uy + 2.0 * wx * wy
    g_yy = vy + wy * wy - 1.0
    q = ops.q
    membrane = float(q @ (g_xx * g_xx) + 0.5 * (q @ (g_xy * g_xy)) + q @ (g_yy * g_yy))
    bending = sigma * sigma * float(
        q @ (wxx * wxx) + 2.0 * (q @ (wxy * wxy)) + q @ (wyy * wyy)
    )
    return UnscaledEnergy(membrane=membrane, bending=bending)
