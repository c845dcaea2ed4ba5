"""Self-similar forcing families, sweep orchestration, and regression.

The probe family is f_eps(x,t) = eps^(-gamma) psi((x-x0)/eps,
(t-t0)/eps^2) with psi(y,s) = exp(-1/(1 - |y|^2 - s^2)) inside the unit
ball of (y,s) and 0 outside.  Under parabolic scaling the norms obey
|f_eps|_p^p = eps^(N+2-gamma p) |psi|_p^p, so gamma = 2 pins the
critical norm |f|_{1+N/2} while |f|_q grows like eps^((N+2)/q - 2) as
eps shrinks: shrinking eps walks the forcing up the q-norm axis at
fixed critical norm, which is exactly the regime where the logarithmic
sup-norm law is visible against the classical linear-in-|f|_q bound.

The sweep solves one problem per eps (largest first), runs the full
diagnostic chain on each solution (both signs), selects a single
exponential-moment rate alpha for the whole sweep, and fits
sup|phi| against ln(|f|_q + 1) by ordinary least squares.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np

from parabolab.errors import (ConfigurationError, FitError, RangeError,
                              ResolutionError, SolverError)
from parabolab.fields import SPACETIME, Field, Grid, ProblemSpec
from parabolab.moser import (BoundReport, exp_change, exp_moment, exponents,
                             interpolation_check, l1_check, normalize, trace)
from parabolab.norms import ess_sup, lq_spacetime
from parabolab.reductions import pairwise_sum
from parabolab.solver import SolveOptions, solve_split

SWEEP_CSV_HEADER = "eps,f_norm_crit,f_norm_q,phi_sup,implied_c,exp_moment,l1_lhs,l1_rhs"


# ---------------------------------------------------------------------------
# bump family
# ---------------------------------------------------------------------------

def _psi(rho2: np.ndarray) -> np.ndarray:
    """Profile exp(-1/(1-rho^2)) on rho^2 < 1, zero outside."""
    out = np.zeros_like(rho2)
    inside = rho2 < 1.0
    out[inside] = np.exp(-1.0 / (1.0 - rho2[inside]))
    return out


def bump(eps: float, gamma: float, center, grid: Grid) -> Field:
    """Sample f_eps = eps^(-gamma) psi((x-x0)/eps, (t-t0)/eps^2) on the grid.

    center is (x0_1, ..., x0_N, t0).  The bump must be resolved (at
    least 4 cells across its radius in space, 4 steps across eps^2 in
    time) and its support must fit inside the space-time box.
    """
    N = grid.dim
    center = tuple(float(c) for c in center)
    if len(center) != N + 1:
        raise ConfigurationError(
            f"center needs {N + 1} entries (x0..., t0), got {len(center)}")
    x0, t0 = center[:N], center[N]
    if not eps > 0.0:
        raise ConfigurationError(f"eps must be positive, got {eps}")

    hmax = max(grid.h)
    if eps + 1e-12 < 4.0 * hmax:
        need = [math.ceil(4.0 * (hi - lo) / eps) for lo, hi in grid.box]
        raise ResolutionError(
            f"eps = {eps:.6g} under-resolved in space (needs eps >= 4 max(h) = "
            f"{4.0 * hmax:.6g}); refine to nx >= {need}")
    if eps * eps + 1e-12 < 4.0 * grid.dt:
        need_nt = math.ceil(4.0 * grid.T / (eps * eps))
        raise ResolutionError(
            f"eps = {eps:.6g} under-resolved in time (needs eps^2 >= 4 dt = "
            f"{4.0 * grid.dt:.6g}); refine to nt >= {need_nt}")
    for k, (lo, hi) in enumerate(grid.box):
        if x0[k] - eps < lo - 1e-12 or x0[k] + eps > hi + 1e-12:
            raise ConfigurationError(
                f"bump support [x0 +- eps] leaves the box on axis {k}: "
                f"x0 = {x0[k]:.6g}, eps = {eps:.6g}, box = ({lo:.6g}, {hi:.6g})")
    if t0 - eps * eps < -1e-12 or t0 + eps * eps > grid.T + 1e-12:
        raise ConfigurationError(
            f"bump support [t0 +- eps^2] leaves (0, T): t0 = {t0:.6g}, "
            f"eps^2 = {eps * eps:.6g}, T = {grid.T:.6g}")

    mesh = grid.meshgrid()
    space_rho2 = np.zeros(grid.shape_space)
    for k in range(N):
        space_rho2 += ((mesh[k] - x0[k]) / eps) ** 2
    s = (grid.time_levels() - t0) / (eps * eps)
    s2 = (s * s).reshape((-1,) + (1,) * N)
    values = eps ** (-gamma) * _psi(space_rho2[np.newaxis] + s2)
    return Field(grid, values, SPACETIME)


@dataclass(frozen=True)
class BumpFamily:
    """Bump center and scaling exponent; eps varies per call."""
    center: tuple          # spatial center x0
    t0: float
    gamma: float = 2.0
    amplitude: float = 1.0

    @classmethod
    def default_for(cls, grid: Grid, gamma: float = 2.0) -> "BumpFamily":
        # parabolic interior default: spatial midpoint, t0 = 0.6 T keeps
        # the support clear of the initial slice and the lateral walls
        mid = tuple(0.5 * (lo + hi) for lo, hi in grid.box)
        return cls(mid, 0.6 * grid.T, gamma)

    def field(self, eps: float, grid: Grid) -> Field:
        f = bump(eps, self.gamma, (*self.center, self.t0), grid)
        if self.amplitude == 1.0:
            return f
        return Field(grid, self.amplitude * f.values, f.kind)


@lru_cache(maxsize=None)
def profile_norm(p: float, N: int, points: int = 200000) -> float:
    """|psi|_p over R^N x R by radial midpoint quadrature.

    psi depends only on rho = |(y, s)|, so the (N+1)-dimensional
    integral reduces to the unit sphere area times a radial integral.
    """
    d = N + 1
    area = 2.0 * math.pi ** (d / 2.0) / math.gamma(d / 2.0)
    h = 1.0 / points
    rho = (np.arange(points) + 0.5) * h
    integrand = np.exp(-p / (1.0 - rho * rho)) * rho ** (d - 1)
    return (area * pairwise_sum(integrand) * h) ** (1.0 / p)


# ---------------------------------------------------------------------------
# regression
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FitResult:
    slope: float
    intercept: float
    r_squared: float
    curvature: float  # quadratic coefficient of a 2nd-degree refit


def _fit_xy(row):
    if hasattr(row, "f_norm_q"):
        return math.log(row.f_norm_q + 1.0), row.phi_sup
    x, y = row
    return float(x), float(y)


def _quadratic_coefficient(xs: np.ndarray, ys: np.ndarray) -> float:
    # normal equations for y ~ a x^2 + b x + c on centered x, by Cramer
    x = xs - xs.mean()
    s1, s2, s3, s4 = (pairwise_sum(x ** k) for k in (1, 2, 3, 4))
    s0 = float(len(x))
    t0 = pairwise_sum(ys)
    t1 = pairwise_sum(ys * x)
    t2 = pairwise_sum(ys * x * x)
    det = (s4 * (s2 * s0 - s1 * s1) - s3 * (s3 * s0 - s1 * s2)
           + s2 * (s3 * s1 - s2 * s2))
    if abs(det) < 1e-30:
        return 0.0
    det_a = (t2 * (s2 * s0 - s1 * s1) - s3 * (t1 * s0 - t0 * s1)
             + s2 * (t1 * s1 - t0 * s2))
    return det_a / det


def fit_log_law(rows) -> FitResult:
    """OLS of sup|phi| on ln(|f|_q + 1); rows may also be raw (x, y) pairs."""
    if len(rows) < 4:
        raise FitError(f"need at least 4 rows to fit, got {len(rows)}")
    pts = [_fit_xy(r) for r in rows]
    xs = np.array([p[0] for p in pts])
    ys = np.array([p[1] for p in pts])
    xbar = pairwise_sum(xs) / xs.size
    ybar = pairwise_sum(ys) / ys.size
    sxx = pairwise_sum((xs - xbar) ** 2)
    if sxx <= 0.0:
        raise FitError("regressor has zero variance (all |f|_q equal); fit is degenerate")
    sxy = pairwise_sum((xs - xbar) * (ys - ybar))
    slope = sxy / sxx
    intercept = ybar - slope * xbar
    ss_res = pairwise_sum((ys - slope * xs - intercept) ** 2)
    ss_tot = pairwise_sum((ys - ybar) ** 2)
    if ss_tot <= 0.0:
        r2 = 1.0 if ss_res <= 1e-28 else 0.0
    else:
        r2 = 1.0 - ss_res / ss_tot
    return FitResult(slope, intercept, r2, _quadratic_coefficient(xs, ys))


# ---------------------------------------------------------------------------
# sweep
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SweepRow:
    eps: float
    f_norm_crit: float
    f_norm_q: float
    phi_sup: float
    implied_c: float
    exp_moment: float
    l1_lhs: float
    l1_rhs: float


@dataclass(frozen=True)
class SweepResult:
    rows: tuple            # SweepRow, eps descending
    fit: FitResult         # None when refused
    fit_note: str
    alpha: float           # selected moment rate
    traces: tuple          # dominant-sign MoserTrace per row
    reports: tuple         # BoundReport per row
    interpolation: tuple   # (lhs, rhs, passed) per row
    skipped: tuple         # (eps, reason) for solver failures


def _moment_candidates(r: float):
    return [2.0 ** -k for k in range(9) if 2.0 ** -k < r]


def run_sweep(template: ProblemSpec, family: BumpFamily, eps_list,
              opts: SolveOptions = None, threads: int = 1, beta0: float = 1.0,
              i_max: int = 12, moment_cap: float = 10.0) -> SweepResult:
    """Solve, diagnose, and tabulate one row per eps (descending).

    The template's forcing is replaced by the family member at each eps;
    everything else (grid, coefficients, initial data, q) is shared.
    alpha is chosen once for the whole sweep: the largest 2^-k below r
    whose exponential moments stay within moment_cap * |Omega_T| on
    every row and both signs.
    """
    eps_values = sorted(set(float(e) for e in eps_list), reverse=True)
    if not eps_values:
        raise ConfigurationError("empty sweep: no eps values supplied")
    grid = template.grid
    N = grid.dim
    q = template.q
    r = (1.0 + beta0) * q / (q - 1.0)
    alpha_interp = min(1.0, 0.5 * r)
    candidates = _moment_candidates(r)
    measure = grid.spacetime_volume
    data_free = not np.any(template.phi0.values)
    sup0 = ess_sup(template.phi0)

    def worker(eps):
        f = family.field(eps, grid)
        spec = replace(template, f=f)
        forced, drift = solve_split(spec, opts=opts)
        if data_free:
            phi_sup = ess_sup(forced.phi)
        else:
            phi_sup = float(np.max(np.abs(forced.phi.values + drift.phi.values)))
        pair = normalize(forced.phi, f)
        l1 = l1_check(pair.u, pair.g)
        moments = {}
        best = None  # (trace, interpolation triple)
        for sign in (1.0, -1.0):
            u_s = pair.u if sign > 0 else Field(grid, -pair.u.values, SPACETIME)
            _, w = exp_change(u_s)
            tr = trace(w, beta0, q, N, i_max)
            if best is None or tr.measured_sup > best[0].measured_sup:
                best = (tr, interpolation_check(w, r, alpha_interp))
            for a in candidates:
                try:
                    m = exp_moment(u_s, a, N)
                except RangeError:
                    m = math.inf
                moments[a] = max(moments.get(a, 0.0), m)
        f_crit = lq_spacetime(f, 1.0 + N / 2.0)
        f_q = lq_spacetime(f, q)
        return {"eps": eps, "f_crit": f_crit, "f_q": f_q, "phi_sup": phi_sup,
                "l1": l1, "moments": moments, "trace": best[0], "interp": best[1]}

    raw = []
    skipped = []
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = [(eps, pool.submit(worker, eps)) for eps in eps_values]
            for eps, fut in futures:
                try:
                    raw.append(fut.result())
                except SolverError as err:
                    skipped.append((eps, str(err)))
    else:
        for eps in eps_values:
            try:
                raw.append(worker(eps))
            except SolverError as err:
                skipped.append((eps, str(err)))

    alpha = None
    for a in candidates:
        if all(math.isfinite(item["moments"][a]) for item in raw) and \
                all(item["moments"][a] <= moment_cap * measure for item in raw):
            alpha = a
            break
    if alpha is None:
        finite = [a for a in candidates
                  if all(math.isfinite(item["moments"][a]) for item in raw)]
        if not finite:
            raise RangeError("every candidate alpha overflows on some sweep row")
        alpha = finite[-1]

    rows = []
    reports = []
    for item in raw:
        log_term = math.log(item["f_q"] + 1.0)
        denom = item["f_crit"] * (log_term + 1.0)
        implied_c = (item["phi_sup"] - sup0) / denom if denom > 0 else 0.0
        classical = item["phi_sup"] / item["f_q"] if item["f_q"] > 0 else 0.0
        a0, r_val, final = exponents(beta0, q, N, alpha)
        rows.append(SweepRow(item["eps"], item["f_crit"], item["f_q"],
                             item["phi_sup"], implied_c, item["moments"][alpha],
                             item["l1"][0], item["l1"][1]))
        reports.append(BoundReport(item["phi_sup"], sup0, item["f_crit"],
                                   item["f_q"], log_term, implied_c, classical,
                                   beta0, a0, r_val, alpha, final))

    fit = None
    note = ""
    if len(rows) < 4:
        note = f"fit refused: only {len(rows)} successful rows (need 4)"
    else:
        try:
            fit = fit_log_law(rows)
        except FitError as err:
            note = f"fit refused: {err}"
    return SweepResult(tuple(rows), fit, note, alpha,
                       tuple(item["trace"] for item in raw),
                       tuple(reports),
                       tuple(item["interp"] for item in raw),
                       tuple(skipped))


# ---------------------------------------------------------------------------
# export
# ---------------------------------------------------------------------------

def _sweep_csv(result: SweepResult) -> str:
    lines = [SWEEP_CSV_HEADER]
    for row in result.rows:
        lines.append(",".join(format(v, ".13g") for v in (
            row.eps, row.f_norm_crit, row.f_norm_q, row.phi_sup,
            row.implied_c, row.exp_moment, row.l1_lhs, row.l1_rhs)))
    return "\n".join(lines) + "\n"


def parse_sweep_csv(path: str):
    """Read back a sweep CSV written by :func:`export`."""
    with open(path) as fh:
        header = fh.readline().strip()
        if header != SWEEP_CSV_HEADER:
            raise ConfigurationError(f"{path}: unexpected header {header!r}")
        rows = []
        for line in fh:
            line = line.strip()
            if not line:
                continue
            parts = [float(tok) for tok in line.split(",")]
            if len(parts) != 8:
                raise ConfigurationError(f"{path}: malformed row {line!r}")
            rows.append(SweepRow(*parts))
    return rows


def _svg_plot(result: SweepResult) -> str:
    width, height, margin = 640, 480, 64.0
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" '
             f'height="{height}" viewBox="0 0 {width} {height}">',
             f'<rect width="{width}" height="{height}" fill="white"/>']
    pts = [(math.log(r.f_norm_q + 1.0), r.phi_sup) for r in result.rows]
    if not pts:
        parts.append(f'<text x="{width / 2}" y="{height / 2}" '
                     'text-anchor="middle" font-size="14">no data</text>')
        parts.append("</svg>")
        return "\n".join(parts) + "\n"
    xs = [p[0] for p in pts]
    ys = [p[1] for p in pts]
    xlo, xhi = min(xs), max(xs)
    ylo, yhi = min(ys), max(ys)
    xpad = 0.05 * (xhi - xlo) or max(0.05 * abs(xhi), 0.5)
    ypad = 0.05 * (yhi - ylo) or max(0.05 * abs(yhi), 0.5)
    xlo, xhi = xlo - xpad, xhi + xpad
    ylo, yhi = ylo - ypad, yhi + ypad

    def sx(x):
        return margin + (x - xlo) / (xhi - xlo) * (width - 2 * margin)

    def sy(y):
        return height - margin - (y - ylo) / (yhi - ylo) * (height - 2 * margin)

    parts.append(f'<line x1="{margin}" y1="{height - margin}" x2="{width - margin}" '
                 f'y2="{height - margin}" stroke="black"/>')
    parts.append(f'<line x1="{margin}" y1="{margin}" x2="{margin}" '
                 f'y2="{height - margin}" stroke="black"/>')
    for k in range(5):
        xv = xlo + (xhi - xlo) * k / 4
        yv = ylo + (yhi - ylo) * k / 4
        parts.append(f'<text x="{sx(xv):.1f}" y="{height - margin + 18:.1f}" '
                     f'text-anchor="middle" font-size="11">{xv:.3g}</text>')
        parts.append(f'<text x="{margin - 8:.1f}" y="{sy(yv) + 4:.1f}" '
                     f'text-anchor="end" font-size="11">{yv:.3g}</text>')
    parts.append(f'<text x="{width / 2:.1f}" y="{height - 18:.1f}" text-anchor="middle" '
                 'font-size="13">ln(|f|_q + 1)</text>')
    parts.append(f'<text x="18" y="{height / 2:.1f}" text-anchor="middle" font-size="13" '
                 f'transform="rotate(-90 18 {height / 2:.1f})">sup |phi|</text>')
    if result.fit is not None:
        y1 = result.fit.slope * xlo + result.fit.intercept
        y2 = result.fit.slope * xhi + result.fit.intercept
        parts.append(f'<line x1="{sx(xlo):.2f}" y1="{sy(y1):.2f}" x2="{sx(xhi):.2f}" '
                     f'y2="{sy(y2):.2f}" stroke="#c04040" stroke-width="1.5"/>')
        parts.append(f'<text x="{width - margin:.1f}" y="{margin - 10:.1f}" text-anchor="end" '
                     f'font-size="12">slope = {result.fit.slope:.4g}, '
                     f'R^2 = {result.fit.r_squared:.4g}</text>')
    for x, y in pts:
        parts.append(f'<circle cx="{sx(x):.2f}" cy="{sy(y):.2f}" r="4" '
                     'fill="#3060b0" fill-opacity="0.8"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _sweep_text(result: SweepResult) -> str:
    lines = [f"rows: {len(result.rows)}   alpha = {result.alpha:.12g}"]
    header = (f"{'eps':>12s} {'f_norm_crit':>14s} {'f_norm_q':>14s} {'phi_sup':>14s} "
              f"{'implied_c':>14s} {'exp_moment':>14s} {'l1_lhs':>14s} {'l1_rhs':>14s}")
    lines.append(header)
    for row in result.rows:
        lines.append(f"{row.eps:12.6g} {row.f_norm_crit:14.10g} {row.f_norm_q:14.10g} "
                     f"{row.phi_sup:14.10g} {row.implied_c:14.10g} "
                     f"{row.exp_moment:14.10g} {row.l1_lhs:14.10g} {row.l1_rhs:14.10g}")
    if result.fit is not None:
        lines.append(f"fit: slope = {result.fit.slope:.12g}, intercept = "
                     f"{result.fit.intercept:.12g}, R^2 = {result.fit.r_squared:.12g}, "
                     f"curvature = {result.fit.curvature:.12g}")
    elif result.fit_note:
        lines.append(result.fit_note)
    for eps, reason in result.skipped:
        lines.append(f"skipped eps = {eps:.6g}: {reason}")
    return "\n".join(lines) + "\n"


def export(result: SweepResult, path: str, fmt: str = "csv") -> None:
    """Write a sweep result as csv, svg-plot, or text."""
    renderers = {"csv": _sweep_csv, "svg-plot": _svg_plot, "text": _sweep_text}
    if fmt not in renderers:
        raise ConfigurationError(f"unknown export format {fmt!r}; "
                                 f"choose from {sorted(renderers)}")
    content = renderers[fmt](result)
    try:
        with open(path, "w") as fh:
            fh.write(content)
    except OSError as err:
        raise ConfigurationError(f"cannot write {path}: {err}") from err
