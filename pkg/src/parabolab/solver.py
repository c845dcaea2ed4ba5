"""Backward-Euler finite-difference solver for the Dirichlet problem

    dphi/dt - div(A grad phi) + omega phi = f,   phi = 0 on the lateral
    boundary,  phi(., 0) = phi0,

on a cell-centered grid.  Each step solves (I + dt L) phi^{n+1} =
phi^n + dt f^{n+1} where L discretizes -div(A grad .) + omega with
coefficients frozen at the new time level (fully implicit).

Diagonal diffusion uses two-point face fluxes: interior face
coefficients are arithmetic means of the adjacent cells, boundary faces
use the boundary cell's coefficient with the half-cell gradient
2 phi / h toward the wall value 0.  Off-diagonal entries use ghost-cell
central differences together with their exact adjoints, so the operator
is symmetric by construction and conjugate gradients applies; the
M-matrix (maximum-principle) structure is guaranteed only for diagonal
A.  All linear algebra is matrix-free with diagonal preconditioning,
and reductions use a fixed-order pairwise fold, so repeated runs are
bit-identical.
"""

from dataclasses import dataclass, replace

import numpy as np

from parabolab._cg import conjugate_gradient
from parabolab.errors import ConfigurationError, SolverError
from parabolab.fields import SPACETIME, TIMESLICE, Field, Grid, ProblemSpec, validate


@dataclass(frozen=True)
class SolveOptions:
    """Linear-solver knobs; the time scheme itself is fixed."""
    tol: float = 1e-10
    max_iters: int = None  # default 10 * unknown count

    def __post_init__(self):
        if not 0.0 < self.tol <= 1e-4:
            raise ConfigurationError(f"solver tolerance must lie in (0, 1e-4], got {self.tol}")
        if self.max_iters is not None and self.max_iters < 1:
            raise ConfigurationError(f"max_iters must be >= 1, got {self.max_iters}")

    def iteration_cap(self, grid: Grid) -> int:
        if self.max_iters is not None:
            return int(self.max_iters)
        return 10 * grid.num_cells


@dataclass(frozen=True)
class Solution:
    """Space-time solution with the per-step linear-solver history."""
    phi: Field
    residuals: tuple
    iterations: tuple

    @property
    def steps(self) -> int:
        return len(self.residuals)

    @property
    def total_iterations(self) -> int:
        return int(sum(self.iterations))


def _sl(nd: int, axis: int, s) -> tuple:
    idx = [slice(None)] * nd
    idx[axis] = s
    return tuple(idx)


def _central_odd(u: np.ndarray, axis: int, h: float) -> np.ndarray:
    """Central difference with odd ghosts (ghost = -edge cell, wall value 0)."""
    nd = u.ndim
    first = u[_sl(nd, axis, slice(0, 1))]
    last = u[_sl(nd, axis, slice(-1, None))]
    padded = np.concatenate([-first, u, -last], axis=axis)
    return (padded[_sl(nd, axis, slice(2, None))]
            - padded[_sl(nd, axis, slice(None, -2))]) / (2.0 * h)


def _central_even_adjoint(psi: np.ndarray, axis: int, h: float) -> np.ndarray:
    """Exact transpose of :func:`_central_odd` (even ghosts, reversed sign)."""
    nd = psi.ndim
    first = psi[_sl(nd, axis, slice(0, 1))]
    last = psi[_sl(nd, axis, slice(-1, None))]
    padded = np.concatenate([first, psi, last], axis=axis)
    return (padded[_sl(nd, axis, slice(None, -2))]
            - padded[_sl(nd, axis, slice(2, None))]) / (2.0 * h)


class _ImplicitOperator:
    """Matrix-free application of I + dt L at one time level."""

    def __init__(self, spec: ProblemSpec, t_index: int):
        grid = spec.grid
        self.grid = grid
        self.dt = grid.dt
        self.nd = grid.dim
        self.diag_coeffs = [spec.A.at_time(k, k, t_index) for k in range(self.nd)]
        self.cross = []
        for k in range(self.nd):
            for j in range(k + 1, self.nd):
                c = spec.A.at_time(k, j, t_index)
                if np.isscalar(c) and c == 0.0:
                    continue
                self.cross.append((k, j, c))
        self.omega = spec.omega_at(t_index)
        self.diagonal = self._build_diagonal()

    def _build_diagonal(self) -> np.ndarray:
        # Jacobi diagonal: exact for the axis terms, cross terms omitted
        # (they only touch diagonal entries of doubly-boundary cells).
        grid = self.grid
        diag = np.ones(grid.shape_space)
        nd = self.nd
        for axis, (h, a) in enumerate(zip(grid.h, self.diag_coeffs)):
            h2 = h * h
            part = np.empty(grid.shape_space)
            if np.isscalar(a):
                part.fill(2.0 * a / h2)
                part[_sl(nd, axis, 0)] = 3.0 * a / h2
                part[_sl(nd, axis, -1)] = 3.0 * a / h2
            else:
                abar = 0.5 * (a[_sl(nd, axis, slice(None, -1))]
                              + a[_sl(nd, axis, slice(1, None))])
                part[_sl(nd, axis, slice(1, -1))] = (abar[_sl(nd, axis, slice(None, -1))]
                                                     + abar[_sl(nd, axis, slice(1, None))]) / h2
                part[_sl(nd, axis, 0)] = (2.0 * a[_sl(nd, axis, 0)] + abar[_sl(nd, axis, 0)]) / h2
                part[_sl(nd, axis, -1)] = (2.0 * a[_sl(nd, axis, -1)] + abar[_sl(nd, axis, -1)]) / h2
            diag += self.dt * part
        diag += self.dt * self.omega
        return diag

    def apply_spatial(self, u: np.ndarray) -> np.ndarray:
        """L u = -div(A grad u) + omega u with Dirichlet ghost faces."""
        grid = self.grid
        nd = self.nd
        out = self.omega * u
        for axis, (h, a) in enumerate(zip(grid.h, self.diag_coeffs)):
            grad = np.diff(u, axis=axis) / h
            if np.isscalar(a):
                face = a * grad
                a_lo = a * u[_sl(nd, axis, slice(0, 1))]
                a_hi = a * u[_sl(nd, axis, slice(-1, None))]
            else:
                face = 0.5 * (a[_sl(nd, axis, slice(None, -1))]
                              + a[_sl(nd, axis, slice(1, None))]) * grad
                a_lo = a[_sl(nd, axis, slice(0, 1))] * u[_sl(nd, axis, slice(0, 1))]
                a_hi = a[_sl(nd, axis, slice(-1, None))] * u[_sl(nd, axis, slice(-1, None))]
            # fluxes at the walls: half-cell gradient toward the value 0
            flux_shape = list(u.shape)
            flux_shape[axis] += 1
            flux = np.empty(flux_shape)
            flux[_sl(nd, axis, slice(1, -1))] = face
            flux[_sl(nd, axis, 0)] = (2.0 / h) * a_lo[_sl(nd, axis, 0)]
            flux[_sl(nd, axis, -1)] = (-2.0 / h) * a_hi[_sl(nd, axis, 0)]
            out -= np.diff(flux, axis=axis) / h
        for k, j, c in self.cross:
            hk, hj = grid.h[k], grid.h[j]
            dku = _central_odd(u, k, hk)
            dju = _central_odd(u, j, hj)
            out += _central_even_adjoint(c * dju, k, hk)
            out += _central_even_adjoint(c * dku, j, hj)
        return out

    def apply(self, u: np.ndarray) -> np.ndarray:
        return u + self.dt * self.apply_spatial(u)


def _coefficients_static(spec: ProblemSpec) -> bool:
    for k in range(spec.grid.dim):
        for j in range(k, spec.grid.dim):
            entry = spec.A.component(k, j)
            if not np.isscalar(entry) and np.ndim(entry) == spec.grid.dim + 1:
                return False
    if isinstance(spec.omega, Field) and spec.omega.kind == SPACETIME:
        return False
    return True


def _require_admissible(spec: ProblemSpec) -> None:
    report = validate(spec)
    if not report.admissible:
        lines = "; ".join(v.message for v in report.violations)
        raise ConfigurationError(f"problem data violate the standing hypotheses: {lines}")


def _check_grid(spec: ProblemSpec, grid) -> None:
    if grid is not None and grid != spec.grid:
        raise ConfigurationError("explicit grid argument disagrees with spec.grid")


def step(state: Field, spec: ProblemSpec, grid: Grid = None, t_index: int = 0,
         opts: SolveOptions = None) -> Field:
    """Advance one backward-Euler step from time level t_index.

    Returns the timeslice at level t_index + 1; coefficients and forcing
    are taken at the new level.
    """
    _check_grid(spec, grid)
    _require_admissible(spec)
    if state.kind != TIMESLICE or state.grid != spec.grid:
        raise ConfigurationError("state must be a timeslice field on the spec grid")
    if not 0 <= t_index < spec.grid.nt:
        raise ConfigurationError(f"t_index must lie in [0, nt), got {t_index}")
    opts = opts or SolveOptions()
    op = _ImplicitOperator(spec, t_index + 1)
    rhs = state.values + spec.grid.dt * spec.f.values[t_index + 1]
    x, _, _ = conjugate_gradient(op.apply, rhs, op.diagonal, state.values,
                                 opts.tol, opts.iteration_cap(spec.grid))
    return Field(spec.grid, x, TIMESLICE)


def solve_ibvp(spec: ProblemSpec, grid: Grid = None, opts: SolveOptions = None) -> Solution:
    """March the initial-boundary value problem over all nt steps."""
    _check_grid(spec, grid)
    _require_admissible(spec)
    opts = opts or SolveOptions()
    g = spec.grid
    cap = opts.iteration_cap(g)
    phi = np.empty(g.shape_spacetime)
    phi[0] = spec.phi0.values
    static = _coefficients_static(spec)
    op = _ImplicitOperator(spec, 1) if static else None
    residuals = []
    iterations = []
    fvals = spec.f.values
    dt = g.dt
    for n in range(g.nt):
        if not static:
            op = _ImplicitOperator(spec, n + 1)
        rhs = phi[n] + dt * fvals[n + 1]
        try:
            x, rel, iters = conjugate_gradient(op.apply, rhs, op.diagonal, phi[n],
                                               opts.tol, cap)
        except SolverError as err:
            raise SolverError(f"step {n + 1}: {err}", residual=err.residual,
                              step_index=n + 1) from err
        phi[n + 1] = x
        residuals.append(rel)
        iterations.append(iters)
    return Solution(Field(g, phi, SPACETIME), tuple(residuals), tuple(iterations))


def solve_split(spec: ProblemSpec, grid: Grid = None, opts: SolveOptions = None):
    """Split phi = phi1 + phi2: forcing with zero data, data with zero forcing.

    Returns (Solution phi1, Solution phi2).  When the initial data or
    the forcing vanish identically the corresponding half is a zero
    field produced without linear solves.
    """
    _check_grid(spec, grid)
    g = spec.grid
    no_data = not np.any(spec.phi0.values)
    no_forcing = not np.any(spec.f.values)
    zero_history = Solution(Field.zeros(g, SPACETIME), (0.0,) * g.nt, (0,) * g.nt)
    if no_data and no_forcing:
        _require_admissible(spec)
        return zero_history, zero_history
    if no_data:
        return solve_ibvp(spec, grid, opts), zero_history
    if no_forcing:
        return zero_history, solve_ibvp(spec, grid, opts)
    forced = replace(spec, phi0=Field.zeros(g, TIMESLICE))
    drift = replace(spec, f=Field.zeros(g, SPACETIME))
    return solve_ibvp(forced, grid, opts), solve_ibvp(drift, grid, opts)


# ---------------------------------------------------------------------------
# export / import
# ---------------------------------------------------------------------------

def export_solution(solution, path: str) -> None:
    """Dump a solution (or bare spacetime field) as text.

    Layout: header line `N nx... nt T`, a second header carrying the box
    extents, then one value per line, time-major and row-major per slice.
    """
    field = solution.phi if isinstance(solution, Solution) else solution
    g = field.grid
    with open(path, "w") as fh:
        fh.write("# " + " ".join([str(g.dim)] + [str(n) for n in g.nx]
                                 + [str(g.nt), repr(g.T)]) + "\n")
        fh.write("# box " + " ".join(f"{lo!r},{hi!r}" for lo, hi in g.box) + "\n")
        flat = field.values.reshape(-1)
        fh.write("\n".join(f"{v:.17g}" for v in flat))
        fh.write("\n")


def load_solution(path: str) -> Field:
    """Inverse of :func:`export_solution`; reconstructs grid and field."""
    from parabolab.fields import make_grid
    with open(path) as fh:
        header = fh.readline().strip().lstrip("# ").split()
        box_line = fh.readline().strip().lstrip("# ").split()
        dim = int(header[0])
        nx = [int(v) for v in header[1:1 + dim]]
        nt = int(header[1 + dim])
        T = float(header[2 + dim])
        if box_line[0] != "box":
            raise ConfigurationError(f"{path}: malformed box header")
        box = []
        for token in box_line[1:]:
            lo, hi = token.split(",")
            box.append((float(lo), float(hi)))
        values = np.loadtxt(fh).reshape((nt + 1, *nx))
    grid = make_grid(box, nx, T, nt)
    return Field(grid, values, SPACETIME)
