"""Grids, displacement fields, boundary data, and rescaling maps.

The physical configuration is a thin elastic strip of thickness ``sigma``
occupying the half strip ``|x| <= L``, ``0 <= y``, bent through an angle
``2*alpha`` by clamping the lateral edges ``x = +-L`` to a rigid frame.  By
symmetry only one half of the bent strip is modelled; the fold line sits at
``y = 0``.

All solver and certification work happens in dimensionless variables

    x = L*X,                 y = sigma^(1/3) L^(2/3) * Y,
    u = x + sigma^(2/3) L^(1/3) * U,
    v = y + sigma^(1/3) L^(2/3) * V,
    w =     sigma^(1/3) L^(2/3) * W,

on the rescaled domain ``|X| <= 1``, ``0 <= Y``, truncated at ``Y = Y_max``.
Energies transform as ``physical = sigma^(5/3) L^(1/3) * dimensionless``.
"""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = [
    "SIZE_CONDITION_B",
    "ProblemParams",
    "GridSpec",
    "PhysicalGrid",
    "BoundaryData",
    "FieldSet",
    "AdmissibilityReport",
    "rescale_params",
    "unscale_energy",
    "rescale_energy",
    "default_y_max",
    "zero_boundary",
    "quadratic_bump",
    "tabulated_boundary",
    "apply_boundary_conditions",
    "admissibility_check",
    "map_to_physical",
    "save_snapshot",
    "load_snapshot",
]

# Admissible fold-line displacement budget: the lower-bound theorem assumes
# A <= SIZE_CONDITION_B * alpha^(2/3) in rescaled variables.
SIZE_CONDITION_B = 0.13

SNAPSHOT_FIELD_ORDER = ("U", "V", "W")
SNAPSHOT_FORMAT_VERSION = 1


@dataclass(frozen=True)
class ProblemParams:
    """Physical strip parameters together with their dimensionless images.

    Attributes
    ----------
    sigma : float
        Sheet thickness (length).
    L : float
        Half width of the strip (length).
    alpha : float
        Bending half-angle in radians; the small-angle regime
        ``0 <= alpha < 0.5`` is enforced so ``tan(alpha) ~ alpha``.
    a : float
        Amplitude bound of the fold-line displacement data (length).
    epsilon : float
        Dimensionless thickness ``sigma / L`` (derived).
    A : float
        Rescaled fold-line amplitude ``a * sigma^(-1/3) * L^(-2/3)`` (derived).
    """

    sigma: float
    L: float
    alpha: float
    a: float = 0.0
    epsilon: float = field(init=False)
    A: float = field(init=False)

    def __post_init__(self) -> None:
        if not (self.sigma > 0):
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        if not (self.L > 0):
            raise ValueError(f"L must be positive, got {self.L}")
        if not (0.0 <= self.alpha < 0.5):
            raise ValueError(
                f"alpha must lie in [0, 0.5) (small-angle regime), got {self.alpha}"
            )
        if self.a < 0:
            raise ValueError(f"a must be nonnegative, got {self.a}")
        object.__setattr__(self, "epsilon", self.sigma / self.L)
        object.__setattr__(
            self, "A", self.a * self.sigma ** (-1.0 / 3.0) * self.L ** (-2.0 / 3.0)
        )

    @property
    def y_scale(self) -> float:
        """Physical length per unit of rescaled Y (also the v and w scale)."""
        return self.sigma ** (1.0 / 3.0) * self.L ** (2.0 / 3.0)

    @property
    def u_scale(self) -> float:
        """Physical length per unit of rescaled U."""
        return self.sigma ** (2.0 / 3.0) * self.L ** (1.0 / 3.0)

    @property
    def energy_scale(self) -> float:
        """Physical energy per unit of dimensionless energy."""
        return self.sigma ** (5.0 / 3.0) * self.L ** (1.0 / 3.0)

    def physical(self) -> tuple[float, float, float, float]:
        """Inverse of the rescaling map: the original (sigma, L, alpha, a)."""
        return (self.sigma, self.L, self.alpha, self.a)

    def as_dict(self) -> dict:
        return {
            "sigma": self.sigma,
            "L": self.L,
            "alpha": self.alpha,
            "a": self.a,
            "epsilon": self.epsilon,
            "A": self.A,
        }


def rescale_params(sigma: float, L: float, alpha: float, a: float = 0.0) -> ProblemParams:
    """Map physical strip parameters to the dimensionless parameter set.

    Raises ``ValueError`` for non-positive sigma, L or alpha.
    """
    if alpha <= 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    return ProblemParams(sigma=sigma, L=L, alpha=alpha, a=a)


def unscale_energy(I_value: float, params: ProblemParams) -> float:
    """Convert a dimensionless energy to physical units, sigma^(5/3) L^(1/3) * I."""
    if I_value < 0:
        raise ValueError(f"dimensionless energy must be nonnegative, got {I_value}")
    return params.energy_scale * I_value


def rescale_energy(physical_energy: float, params: ProblemParams) -> float:
    """Inverse of :func:`unscale_energy`."""
    if physical_energy < 0:
        raise ValueError(f"physical energy must be nonnegative, got {physical_energy}")
    return physical_energy / params.energy_scale


def default_y_max(alpha: float) -> float:
    """Default truncation of the half-infinite strip.

    Eight times the characteristic decay scale of the fold, estimated from the
    bending content at its optimizing value: Y_tilde = alpha^2 / (2 E_b) with
    E_b near alpha^(7/3) / 3 gives Y_tilde ~ 1.5 * alpha^(-1/3).
    """
    if alpha <= 0:
        return 8.0
    return 8.0 * max(1.0, 1.5 * alpha ** (-1.0 / 3.0))


@dataclass(frozen=True)
class GridSpec:
    """Uniform tensor grid on the rescaled domain [-1, 1] x [0, Y_max].

    ``n_X`` must be odd so that the symmetry axis X = 0 is a node.
    """

    n_X: int
    n_Y: int
    Y_max: float

    def __post_init__(self) -> None:
        if self.n_X < 5 or self.n_X % 2 == 0:
            raise ValueError(f"n_X must be odd and >= 5, got {self.n_X}")
        if self.n_Y < 5:
            raise ValueError(f"n_Y must be >= 5, got {self.n_Y}")
        if not (self.Y_max > 0):
            raise ValueError(f"Y_max must be positive, got {self.Y_max}")

    @property
    def h_X(self) -> float:
        return 2.0 / (self.n_X - 1)

    @property
    def h_Y(self) -> float:
        return self.Y_max / (self.n_Y - 1)

    @property
    def shape(self) -> tuple[int, int]:
        """Array shape of a field on this grid: (n_Y, n_X), row j is Y_j."""
        return (self.n_Y, self.n_X)

    def X(self) -> np.ndarray:
        return np.linspace(-1.0, 1.0, self.n_X)

    def Y(self) -> np.ndarray:
        return np.linspace(0.0, self.Y_max, self.n_Y)

    def meshgrid(self) -> tuple[np.ndarray, np.ndarray]:
        """(X, Y) arrays of shape (n_Y, n_X)."""
        return np.meshgrid(self.X(), self.Y())

    def trapezoid_weights(self) -> tuple[np.ndarray, np.ndarray]:
        """(w_Y, w_X) one-dimensional trapezoid weights."""
        wx = np.full(self.n_X, self.h_X)
        wx[0] = wx[-1] = 0.5 * self.h_X
        wy = np.full(self.n_Y, self.h_Y)
        wy[0] = wy[-1] = 0.5 * self.h_Y
        return wy, wx

    def as_dict(self) -> dict:
        return {"n_X": self.n_X, "n_Y": self.n_Y, "Y_max": self.Y_max}


@dataclass(frozen=True)
class PhysicalGrid:
    """Uniform grid on the physical half strip [-L, L] x [0, y_max]."""

    n_X: int
    n_Y: int
    L: float
    y_max: float

    @property
    def h_x(self) -> float:
        return 2.0 * self.L / (self.n_X - 1)

    @property
    def h_y(self) -> float:
        return self.y_max / (self.n_Y - 1)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n_Y, self.n_X)

    def x(self) -> np.ndarray:
        return np.linspace(-self.L, self.L, self.n_X)

    def y(self) -> np.ndarray:
        return np.linspace(0.0, self.y_max, self.n_Y)


@dataclass(frozen=True)
class BoundaryData:
    """Dirichlet data (V0, W0) on the fold line Y = 0 plus the bend angle.

    ``A_measured`` is the max over samples of (|V0|, |W0|); the lower-bound
    theorem requires it to stay below ``SIZE_CONDITION_B * alpha^(2/3)``.
    """

    V0: np.ndarray
    W0: np.ndarray
    alpha: float
    A_measured: float = field(init=False)

    def __post_init__(self) -> None:
        V0 = np.asarray(self.V0, dtype=float)
        W0 = np.asarray(self.W0, dtype=float)
        object.__setattr__(self, "V0", V0)
        object.__setattr__(self, "W0", W0)
        if V0.ndim != 1 or W0.ndim != 1 or V0.shape != W0.shape:
            raise ValueError("V0 and W0 must be one-dimensional arrays of equal length")
        if not (np.all(np.isfinite(V0)) and np.all(np.isfinite(W0))):
            raise ValueError("boundary data must be finite")
        amp = float(max(np.max(np.abs(V0), initial=0.0), np.max(np.abs(W0), initial=0.0)))
        edge = max(abs(V0[0]), abs(V0[-1]), abs(W0[0]), abs(W0[-1]))
        if edge > 1e-12 * max(1.0, amp):
            raise ValueError(
                "boundary data must vanish at X = +-1 (clamped-edge compatibility)"
            )
        object.__setattr__(self, "A_measured", amp)


def zero_boundary(grid: GridSpec, alpha: float) -> BoundaryData:
    z = np.zeros(grid.n_X)
    return BoundaryData(V0=z, W0=z.copy(), alpha=alpha)


def quadratic_bump(
    grid: GridSpec, alpha: float, amplitude: float | None = None
) -> BoundaryData:
    """Builtin fold-line data V0 = -amp*(1-X^2), W0 = +amp*(1-X^2).

    When ``amplitude`` is omitted it defaults to half the size-condition
    budget, ``0.5 * SIZE_CONDITION_B * alpha^(2/3)``, so the theorem's
    hypothesis holds by construction.
    """
    if amplitude is None:
        amplitude = 0.5 * SIZE_CONDITION_B * alpha ** (2.0 / 3.0) if alpha > 0 else 0.0
    if amplitude < 0:
        raise ValueError(f"amplitude must be nonnegative, got {amplitude}")
    bump = 1.0 - grid.X() ** 2
    return BoundaryData(V0=-amplitude * bump, W0=amplitude * bump, alpha=alpha)


def tabulated_boundary(
    grid: GridSpec, alpha: float, V0: np.ndarray, W0: np.ndarray
) -> BoundaryData:
    V0 = np.asarray(V0, dtype=float)
    W0 = np.asarray(W0, dtype=float)
    if V0.shape != (grid.n_X,) or W0.shape != (grid.n_X,):
        raise ValueError(
            f"tabulated boundary data must have length n_X={grid.n_X}, "
            f"got {V0.shape} and {W0.shape}"
        )
    return BoundaryData(V0=V0, W0=W0, alpha=alpha)


@dataclass
class FieldSet:
    """Rescaled displacement fields on a GridSpec tensor grid.

    Arrays are indexed ``[j, i]`` with row j the Y level and column i the X
    node, shape (n_Y, n_X).
    """

    U: np.ndarray
    V: np.ndarray
    W: np.ndarray

    def __post_init__(self) -> None:
        self.U = np.asarray(self.U, dtype=float)
        self.V = np.asarray(self.V, dtype=float)
        self.W = np.asarray(self.W, dtype=float)
        if not (self.U.shape == self.V.shape == self.W.shape) or self.U.ndim != 2:
            raise ValueError("U, V, W must be 2-D arrays of identical shape")
        for name, arr in (("U", self.U), ("V", self.V), ("W", self.W)):
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"field {name} contains non-finite entries")

    @classmethod
    def zeros(cls, grid: GridSpec) -> "FieldSet":
        return cls(
            U=np.zeros(grid.shape), V=np.zeros(grid.shape), W=np.zeros(grid.shape)
        )

    def copy(self) -> "FieldSet":
        return FieldSet(U=self.U.copy(), V=self.V.copy(), W=self.W.copy())

    @property
    def shape(self) -> tuple[int, int]:
        return self.U.shape


def apply_boundary_conditions(
    fields: FieldSet, boundary: BoundaryData, grid: GridSpec
) -> FieldSet:
    """Project fields onto the admissible set by overwriting Dirichlet rows.

    Enforces exactly: U = V = W = 0 on X = +-1, V = V0 and W = W0 on Y = 0,
    U = V = W = 0 on Y = Y_max (truncation surrogate for decay at infinity).
    The Neumann condition W_Y(X, 0) = alpha is not a constraint on nodal
    values; it is encoded by the ghost-row convention of the energy module.
    Idempotent; the interior is untouched.
    """
    if fields.shape != grid.shape:
        raise ValueError(f"fields shape {fields.shape} does not match grid {grid.shape}")
    if boundary.V0.shape != (grid.n_X,):
        raise ValueError(
            f"boundary data length {boundary.V0.shape[0]} does not match n_X={grid.n_X}"
        )
    out = fields.copy()
    for arr in (out.U, out.V, out.W):
        arr[:, 0] = 0.0
        arr[:, -1] = 0.0
        arr[-1, :] = 0.0
    out.V[0, :] = boundary.V0
    out.W[0, :] = boundary.W0
    # clamped corners win over fold-line data (boundary data vanishes there anyway)
    out.V[0, 0] = out.V[0, -1] = 0.0
    out.W[0, 0] = out.W[0, -1] = 0.0
    out.U[-1, :] = 0.0
    return out


@dataclass(frozen=True)
class AdmissibilityReport:
    """Per-condition maximum violations of the essential boundary conditions."""

    violations: dict
    tol: float
    passed: bool

    @property
    def max_violation(self) -> float:
        return max(self.violations.values()) if self.violations else 0.0


def admissibility_check(
    fields: FieldSet, boundary: BoundaryData, grid: GridSpec, tol: float = 0.0
) -> AdmissibilityReport:
    """Report how far fields are from satisfying the essential conditions.

    Report-only: never raises on violations. ``passed`` is true iff every
    per-condition max violation is <= tol.
    """
    if fields.shape != grid.shape:
        raise ValueError(f"fields shape {fields.shape} does not match grid {grid.shape}")
    v: dict[str, float] = {}
    for name, arr in (("U", fields.U), ("V", fields.V), ("W", fields.W)):
        v[f"{name}@X=+-1"] = float(
            max(np.max(np.abs(arr[:, 0])), np.max(np.abs(arr[:, -1])))
        )
        v[f"{name}@Y=Y_max"] = float(np.max(np.abs(arr[-1, :])))
    v["V@Y=0"] = float(np.max(np.abs(fields.V[0, 1:-1] - boundary.V0[1:-1])))
    v["W@Y=0"] = float(np.max(np.abs(fields.W[0, 1:-1] - boundary.W0[1:-1])))
    passed = all(val <= tol for val in v.values())
    return AdmissibilityReport(violations=v, tol=tol, passed=passed)


def map_to_physical(
    fields: FieldSet, params: ProblemParams, grid: GridSpec
) -> tuple[np.ndarray, np.ndarray, np.ndarray, PhysicalGrid]:
    """Map rescaled fields to physical displacements (u, v, w) on the matching grid."""
    pg = PhysicalGrid(
        n_X=grid.n_X, n_Y=grid.n_Y, L=params.L, y_max=params.y_scale * grid.Y_max
    )
    x = pg.x()[None, :]
    y = pg.y()[:, None]
    u = x + params.u_scale * fields.U
    v = y + params.y_scale * fields.V
    w = params.y_scale * fields.W
    return u, v, w, pg


def _atomic_write_bytes(path: Path, payload: bytes) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def save_snapshot(
    path: str | Path, fields: FieldSet, params: ProblemParams, grid: GridSpec
) -> tuple[Path, Path]:
    """Write fields as an .npz container plus a JSON sidecar.

    The archive stores arrays in the order documented by
    ``SNAPSHOT_FIELD_ORDER``; the sidecar (same stem, .json suffix) records
    ProblemParams and GridSpec. Both files are written atomically.
    """
    path = Path(path)
    if path.suffix != ".npz":
        path = path.with_suffix(".npz")
    import io

    buf = io.BytesIO()
    np.savez(buf, U=fields.U, V=fields.V, W=fields.W)
    _atomic_write_bytes(path, buf.getvalue())
    sidecar = path.with_suffix(".json")
    meta = {
        "format_version": SNAPSHOT_FORMAT_VERSION,
        "field_order": list(SNAPSHOT_FIELD_ORDER),
        "params": params.as_dict(),
        "grid": grid.as_dict(),
    }
    _atomic_write_bytes(sidecar, json.dumps(meta, indent=2).encode())
    return path, sidecar


def load_snapshot(path: str | Path) -> tuple[FieldSet, ProblemParams, GridSpec]:
    path = Path(path)
    if path.suffix != ".npz":
        path = path.with_suffix(".npz")
    sidecar = path.with_suffix(".json")
    with np.load(path) as data:
        fields = FieldSet(U=data["U"], V=data["V"], W=data["W"])
    meta = json.loads(sidecar.read_text())
    p = meta["params"]
    params = ProblemParams(sigma=p["sigma"], L=p["L"], alpha=p["alpha"], a=p["a"])
    g = meta["grid"]
    grid = GridSpec(n_X=g["n_X"], n_Y=g["n_Y"], Y_max=g["Y_max"])
    if fields.shape != grid.shape:
        raise ValueError("snapshot arrays do not match the grid in the sidecar")
    return fields, params, grid
