"""Minimization of the discretized energy over admissible fields.

Limited-memory quasi-Newton descent (two-loop L-BFGS recursion) with an
Armijo backtracking line search.  The search runs over all nodal values with
Dirichlet entries pinned: their gradient components are zero, the initial
iterate satisfies the boundary conditions exactly, and every update is a
linear combination of gradients, so pinned nodes never move.

Stiffness: the membrane term carrying eps^(-4/3) dominates the curvature of
the V block (and eps^(-2/3) the U block) as eps -> 0.  Two measures keep the
iteration well conditioned: a fixed per-field diagonal seed for the inverse
Hessian that divides out those prefactors, and warm-started continuation down
a decreasing ladder of eps values.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .energy import (
    EnergyBreakdown,
    _w_derivatives,
    energy_and_gradient_flat,
    energy_flat,
    energy_rescaled,
    membrane_prefactors,
    operators_for,
)
from .fields import (
    BoundaryData,
    FieldSet,
    GridSpec,
    ProblemParams,
    apply_boundary_conditions,
)

__all__ = [
    "SolveOptions",
    "MinimizeResult",
    "LineSearchError",
    "initial_fields",
    "minimize",
    "continuation_minimize",
    "mesh_ladder_minimize",
    "default_ladder",
]


class LineSearchError(RuntimeError):
    """Backtracking failed to find sufficient decrease away from a stationary point.

    Carries the last iterate as ``result`` for diagnosis.
    """

    def __init__(self, message: str, result: "MinimizeResult"):
        super().__init__(message)
        self.result = result


@dataclass(frozen=True)
class SolveOptions:
    """Solver knobs.

    The line search contract is sufficient decrease with backtracking:
    a step t is accepted iff f(x + t d) <= f(x) + armijo_c1 * t * <g, d>,
    halving t until it holds.  ``continuation_ladder`` must be strictly
    decreasing and end at the target eps; ``None`` selects a default ladder.
    ``seed`` feeds the optional random perturbation of the starting ramp
    (``init_noise`` > 0), used for multi-start experiments.
    """

    max_iterations: int = 20000
    gradient_tolerance: float = 1e-6
    memory: int = 25
    armijo_c1: float = 1e-4
    backtrack_factor: float = 0.5
    max_backtracks: int = 60
    continuation_ladder: tuple | None = None
    seed: int = 0
    init_noise: float = 0.0
    uv_presolve: bool = True

    def __post_init__(self) -> None:
        if self.gradient_tolerance <= 0:
            raise ValueError("gradient_tolerance must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")
        if self.continuation_ladder is not None:
            ladder = tuple(float(e) for e in self.continuation_ladder)
            if any(e <= 0 for e in ladder):
                raise ValueError("continuation ladder entries must be positive")
            if any(b >= a for a, b in zip(ladder, ladder[1:])):
                raise ValueError("continuation ladder must be strictly decreasing")
            object.__setattr__(self, "continuation_ladder", ladder)


@dataclass
class MinimizeResult:
    fields: FieldSet
    breakdown: EnergyBreakdown
    iterations: int
    final_gradient_norm: float
    converged: bool
    energy_history: list = field(default_factory=list)


def default_ladder(target_epsilon: float) -> tuple:
    """Roughly half-decade ladder from eps = 1 down to the target."""
    if target_epsilon >= 1.0:
        return (target_epsilon,)
    ladder = [1.0]
    while ladder[-1] > target_epsilon * 3.17:
        ladder.append(ladder[-1] * 0.31622776601683794)
    ladder.append(target_epsilon)
    return tuple(ladder)


def initial_fields(
    boundary: BoundaryData, params: ProblemParams, grid: GridSpec, options: SolveOptions
) -> FieldSet:
    """Starting iterate: a fold-consistent ramp W = alpha Y exp(-Y/Y_est).

    The ramp has slope alpha at the fold line and decays on the scale
    Y_est ~ 1.5 alpha^(-1/3) where the bending content optimizes; it places
    the iterate in the ridge basin rather than a flat local minimum.
    """
    alpha = params.alpha
    _, Y = grid.meshgrid()
    if alpha > 0:
        y_est = 1.5 * alpha ** (-1.0 / 3.0)
        Wr = alpha * Y * np.exp(-Y / y_est)
    else:
        Wr = np.zeros(grid.shape)
    fields = FieldSet(U=np.zeros(grid.shape), V=np.zeros(grid.shape), W=Wr)
    if options.init_noise > 0:
        rng = np.random.default_rng(options.seed)
        X, Y = grid.meshgrid()
        for arr in (fields.U, fields.V, fields.W):
            noise = np.zeros(grid.shape)
            for k in range(1, 4):
                for l in range(1, 4):
                    noise += (
                        rng.normal()
                        / (k * l) ** 2
                        * np.sin(k * np.pi * (X + 1) / 2)
                        * np.sin(l * np.pi * Y / grid.Y_max)
                    )
            arr += options.init_noise * noise
    return apply_boundary_conditions(fields, boundary, grid)


def _preconditioner(epsilon: float, grid: GridSpec) -> np.ndarray:
    """Inverse diagonal of the quadratic part of the discrete Hessian.

    Per-field assembly of diag(2c A^T Q A) over the operators entering each
    field quadratically (the stiff eps^(-2/3) and eps^(-4/3) membrane blocks
    for U and V, the bending blocks for W), which both divides out the eps
    prefactors and equalizes the h-dependent stencil scales.
    """
    from .energy import bending_prefactors, membrane_prefactors, operators_for

    ops = operators_for(grid)
    c1, c2, c3 = membrane_prefactors(epsilon)
    c4, c5, c6 = bending_prefactors(epsilon)
    q = ops.q

    def d(op):
        return op.power(2).T @ q

    ddx, ddy = d(ops.DX), d(ops.DY)
    diag_u = 2.0 * (c1 * ddx + c2 * ddy)
    diag_v = 2.0 * (c2 * ddx + c3 * ddy)
    diag_w = 2.0 * (c4 * d(ops.DYYg) + c5 * d(ops.DXYg) + c6 * d(ops.DXX))
    diag = np.concatenate([diag_u, diag_v, diag_w])
    floor = 1e-12 * float(np.max(diag))
    return 1.0 / np.maximum(diag, floor)


def _uv_presolve(
    x: np.ndarray, epsilon: float, grid: GridSpec, alpha: float
) -> np.ndarray:
    """Exact minimization of the energy over (U, V) at fixed W.

    The membrane terms are convex quadratics in (U, V); one sparse SPD solve
    on the free nodes puts them at their conditional optimum.  Used to warm
    start each descent so the stiff eps^(-4/3) directions start relaxed.
    """
    ops = operators_for(grid)
    n = grid.n_X * grid.n_Y
    c1, c2, c3 = membrane_prefactors(epsilon)
    q = ops.q
    wx, wy, _, _, _ = _w_derivatives(ops, x[2 * n :], alpha)
    b1, b2, b3 = wx * wx, 2.0 * wx * wy, wy * wy
    Q = sp.diags(q)
    DX, DY = ops.DX, ops.DY
    Huu = c1 * (DX.T @ Q @ DX) + c2 * (DY.T @ Q @ DY)
    Huv = c2 * (DY.T @ Q @ DX)
    Hvv = c2 * (DX.T @ Q @ DX) + c3 * (DY.T @ Q @ DY)
    H = sp.bmat([[Huu, Huv], [Huv.T, Hvv]], format="csr")
    rhs = -np.concatenate(
        [
            c1 * (DX.T @ (q * b1)) + c2 * (DY.T @ (q * b2)),
            c2 * (DX.T @ (q * b2)) + c3 * (DY.T @ (q * b3)),
        ]
    )
    idx = np.where(np.concatenate([ops.free_u, ops.free_vw]))[0]
    z = np.zeros(2 * n)
    z[idx] = spla.spsolve(H[idx][:, idx].tocsc(), rhs[idx])
    out = x.copy()
    out[: 2 * n] = z
    return out


def _lbfgs(
    x0: np.ndarray,
    epsilon: float,
    grid: GridSpec,
    alpha: float,
    options: SolveOptions,
) -> tuple[np.ndarray, int, float, bool, list]:
    """Preconditioned L-BFGS with Armijo backtracking; monotone in energy."""
    x = x0.copy()
    f, g = energy_and_gradient_flat(x, epsilon, grid, alpha)
    history: list[tuple[np.ndarray, np.ndarray, float]] = []
    energies = [f]
    precond = _preconditioner(epsilon, grid)
    gamma = 1.0
    iterations = 0
    c1 = options.armijo_c1
    shrink = options.backtrack_factor

    for _ in range(options.max_iterations):
        gnorm = float(np.max(np.abs(g))) if g.size else 0.0
        if gnorm <= options.gradient_tolerance:
            return x, iterations, gnorm, True, energies

        # two-loop recursion with H0 = gamma * diag(precond)
        d = -g
        alphas = []
        for s, y, rho in reversed(history):
            a = rho * float(s @ d)
            alphas.append(a)
            d = d - a * y
        d = gamma * (precond * d)
        for (s, y, rho), a in zip(history, reversed(alphas)):
            b = rho * float(y @ d)
            d = d + (a - b) * s

        gd = float(g @ d)
        if gd >= 0.0:
            # stale curvature produced a non-descent direction: restart
            history.clear()
            d = -precond * g
            gd = float(g @ d)

        t = 1.0
        if not history:
            # first step (or restart): scale to a unit-size move
            dmax = float(np.max(np.abs(d)))
            if dmax > 0:
                t = min(1.0, 0.5 / dmax)

        accepted = False
        for _bt in range(options.max_backtracks):
            x_new = x + t * d
            f_new = energy_flat(x_new, epsilon, grid, alpha)
            if np.isfinite(f_new) and f_new <= f + c1 * t * gd:
                accepted = True
                break
            t *= shrink
        if not accepted:
            if not history:
                break  # steepest descent failed: genuinely stuck
            # retry from a fresh steepest-descent direction
            history.clear()
            d = -precond * g
            gd = float(g @ d)
            t = 1.0
            dmax = float(np.max(np.abs(d)))
            if dmax > 0:
                t = min(1.0, 0.5 / dmax)
            for _bt in range(options.max_backtracks):
                x_new = x + t * d
                f_new = energy_flat(x_new, epsilon, grid, alpha)
                if np.isfinite(f_new) and f_new <= f + c1 * t * gd:
                    accepted = True
                    break
                t *= shrink
            if not accepted:
                break

        f_new, g_new = energy_and_gradient_flat(x_new, epsilon, grid, alpha)
        s = x_new - x
        yv = g_new - g
        sy = float(s @ yv)
        if sy > 1e-14 * float(np.linalg.norm(s)) * float(np.linalg.norm(yv)) and sy > 0:
            py = precond * yv
            history.append((s, yv, 1.0 / sy))
            gamma = sy / float(yv @ py)
            if len(history) > options.memory:
                history.pop(0)
        x, f, g = x_new, f_new, g_new
        energies.append(f)
        iterations += 1

    gnorm = float(np.max(np.abs(g))) if g.size else 0.0
    return x, iterations, gnorm, gnorm <= options.gradient_tolerance, energies


def _pack(fields: FieldSet) -> np.ndarray:
    return np.concatenate([fields.U.ravel(), fields.V.ravel(), fields.W.ravel()])


def _unpack(x: np.ndarray, grid: GridSpec) -> FieldSet:
    n = grid.n_X * grid.n_Y
    shape = grid.shape
    return FieldSet(
        U=x[:n].reshape(shape).copy(),
        V=x[n : 2 * n].reshape(shape).copy(),
        W=x[2 * n :].reshape(shape).copy(),
    )


def minimize(
    boundary: BoundaryData,
    params: ProblemParams,
    grid: GridSpec,
    options: SolveOptions | None = None,
    start: FieldSet | None = None,
) -> MinimizeResult:
    """Minimize the discretized energy at the parameters' eps.

    The energy is monotone nonincreasing across accepted steps; the result
    satisfies the Dirichlet conditions exactly and carries a ``converged``
    flag from the max-norm gradient test.  Raises :class:`LineSearchError`
    (with the last iterate attached) if backtracking stalls away from a
    stationary point.
    """
    options = options or SolveOptions()
    if boundary.alpha != params.alpha:
        raise ValueError(
            f"boundary alpha {boundary.alpha} differs from params alpha {params.alpha}"
        )
    if start is None:
        start = initial_fields(boundary, params, grid, options)
    else:
        start = apply_boundary_conditions(start, boundary, grid)
    x0 = _pack(start)
    if options.uv_presolve:
        x_uv = _uv_presolve(x0, params.epsilon, grid, params.alpha)
        if energy_flat(x_uv, params.epsilon, grid, params.alpha) <= energy_flat(
            x0, params.epsilon, grid, params.alpha
        ):
            x0 = x_uv
    x, iters, gnorm, converged, energies = _lbfgs(
        x0, params.epsilon, grid, params.alpha, options
    )
    fields = _unpack(x, grid)
    breakdown = energy_rescaled(fields, params.epsilon, grid, alpha=params.alpha)
    result = MinimizeResult(
        fields=fields,
        breakdown=breakdown,
        iterations=iters,
        final_gradient_norm=gnorm,
        converged=converged,
        energy_history=energies,
    )
    if not converged and iters < options.max_iterations:
        raise LineSearchError(
            f"line search failed at gradient max-norm {gnorm:.3e} "
            f"(tolerance {options.gradient_tolerance:.3e})",
            result,
        )
    return result


def continuation_minimize(
    boundary: BoundaryData,
    params: ProblemParams,
    grid: GridSpec,
    options: SolveOptions | None = None,
) -> MinimizeResult:
    """Warm-started minimization down a strictly decreasing eps ladder.

    Each rung reuses the previous minimizer as its starting point; the final
    rung runs at the target eps and its result is returned with the total
    iteration count across rungs.
    """
    options = options or SolveOptions()
    ladder = options.continuation_ladder or default_ladder(params.epsilon)
    if abs(ladder[-1] - params.epsilon) > 1e-12 * params.epsilon:
        raise ValueError(
            f"continuation ladder must end at the target eps {params.epsilon}, "
            f"got {ladder[-1]}"
        )
    start: FieldSet | None = None
    total_iters = 0
    result: MinimizeResult | None = None
    for eps in ladder:
        rung_params = ProblemParams(
            sigma=eps * params.L, L=params.L, alpha=params.alpha, a=params.a
        )
        rung_options = options
        if eps != ladder[-1]:
            # intermediate rungs only seed the next warm start
            rung_options = replace(
                options, gradient_tolerance=30.0 * options.gradient_tolerance
            )
        result = minimize(boundary, rung_params, grid, rung_options, start=start)
        total_iters += result.iterations
        start = result.fields
    assert result is not None
    result.iterations = total_iters
    return result


def _coarsen_grid(grid: GridSpec) -> GridSpec | None:
    """Half-resolution grid whose nodes are every second node of ``grid``."""
    if (grid.n_X - 1) % 2 or (grid.n_Y - 1) % 2:
        return None
    n_X = (grid.n_X - 1) // 2 + 1
    n_Y = (grid.n_Y - 1) // 2 + 1
    if n_X < 5 or n_X % 2 == 0 or n_Y < 5:
        return None
    return GridSpec(n_X=n_X, n_Y=n_Y, Y_max=grid.Y_max)


def _refine_array(coarse: np.ndarray) -> np.ndarray:
    """Linear interpolation onto the grid with doubled resolution."""
    ny, nx = coarse.shape
    mid_x = np.empty((ny, 2 * nx - 1))
    mid_x[:, 0::2] = coarse
    mid_x[:, 1::2] = 0.5 * (coarse[:, :-1] + coarse[:, 1:])
    fine = np.empty((2 * ny - 1, 2 * nx - 1))
    fine[0::2, :] = mid_x
    fine[1::2, :] = 0.5 * (mid_x[:-1, :] + mid_x[1:, :])
    return fine


def mesh_ladder_minimize(
    boundary: BoundaryData,
    params: ProblemParams,
    grid: GridSpec,
    options: SolveOptions | None = None,
    levels: int = 2,
) -> MinimizeResult:
    """Coarse-to-fine orchestration of :func:`continuation_minimize`.

    Runs the eps continuation on a coarsened grid first and polishes the
    interpolated minimizer on each finer grid at the target eps.  Pure
    orchestration: the returned result is a converged minimize() output on
    the requested grid with iterations summed across levels.
    """
    options = options or SolveOptions()
    grids = [grid]
    for _ in range(levels - 1):
        coarser = _coarsen_grid(grids[-1])
        if coarser is None:
            break
        grids.append(coarser)
    grids.reverse()

    start: FieldSet | None = None
    total_iters = 0
    result: MinimizeResult | None = None
    for level, g in enumerate(grids):
        bnd = boundary if g.n_X == grid.n_X else _restrict_boundary_to(boundary, g, grid)
        is_final = g is grids[-1]
        level_options = options
        if not is_final:
            level_options = replace(
                options, gradient_tolerance=10.0 * options.gradient_tolerance
            )
        if start is None:
            result = continuation_minimize(bnd, params, g, level_options)
        else:
            result = minimize(bnd, params, g, level_options, start=start)
        total_iters += result.iterations
        if not is_final:
            nxt = grids[level + 1]
            start = FieldSet(
                U=_refine_array(result.fields.U),
                V=_refine_array(result.fields.V),
                W=_refine_array(result.fields.W),
            )
            if start.shape != nxt.shape:
                raise RuntimeError("mesh ladder produced mismatched shapes")
    assert result is not None
    result.iterations = total_iters
    return result


def _restrict_boundary_to(
    boundary: BoundaryData, coarse: GridSpec, fine: GridSpec
) -> BoundaryData:
    step = (fine.n_X - 1) // (coarse.n_X - 1)
    return BoundaryData(
        V0=boundary.V0[::step], W0=boundary.W0[::step], alpha=boundary.alpha
    )
