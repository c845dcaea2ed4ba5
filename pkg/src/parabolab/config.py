"""Plain-text problem configuration.

Grammar: INI sections with `key = value` lines.

  [grid]          box = 0,1 0,1   nx = 96,96   T = 0.26   nt = 1088
  [coefficients]  a = 1.0 (isotropic) or 1.0,2.0 (diagonal), individual
                  entries axx, ayy, azz, axy, axz, ayz (scalar or a
                  registered spatial function), omega, lambda, q
  [forcing]       f = <function>, phi0 = <function>
  [sweep]         eps = 0.25,0.125,...  gamma, x0, t0, amplitude, beta0,
                  i_max, moment_cap (all optional except eps)
  [solver]        tol, max_iters (optional)

Function values are `name key=val key=val ...` with comma-separated
vector components.  Registered names:

  zero
  constant value=V
  sine amplitude=A decay=D      A * prod_k sin(pi (x_k-lo_k)/L_k) * e^(-D t)
  radial amplitude=A center=a,b exponent=P     A * |x - center|^P
  bump eps=E gamma=G x0=a,b t0=C   (forcing only; space-time support checks)

A bare number is shorthand for `constant value=<number>`.  A radial
omega with P slightly above -2 stays integrable while damping a
self-similar bump family by a nearly scale-free amount per octave of
eps, which keeps the sweep's sup growth close to linear in ln|f|_q.
"""

import configparser
import math
import os
from dataclasses import dataclass

import numpy as np

from parabolab.errors import ConfigurationError
from parabolab.experiments import BumpFamily, bump
from parabolab.fields import (SPACETIME, TIMESLICE, Field, Grid, MatrixCoefficient,
                              ProblemSpec, make_grid, sample, sample_initial)
from parabolab.solver import SolveOptions

_AXIS_NAMES = "xyz"


@dataclass(frozen=True)
class SweepSettings:
    eps: tuple
    family: BumpFamily
    beta0: float = 1.0
    i_max: int = 12
    moment_cap: float = 10.0


@dataclass(frozen=True)
class ConfigBundle:
    grid: Grid
    spec: ProblemSpec
    sweep: SweepSettings       # None when the file has no [sweep] section
    solve_options: SolveOptions


def _floats(text: str, key: str):
    try:
        return [float(tok) for tok in text.replace(",", " ").split()]
    except ValueError as err:
        raise ConfigurationError(f"{key}: cannot parse numbers from {text!r}") from err


def _parse_function(text: str, key: str):
    """Split `name k=v k=v` into (name, params dict of float tuples)."""
    tokens = text.split()
    name = tokens[0]
    params = {}
    for tok in tokens[1:]:
        if "=" not in tok:
            raise ConfigurationError(f"{key}: expected k=v parameter, got {tok!r}")
        pkey, pval = tok.split("=", 1)
        vals = _floats(pval, f"{key}.{pkey}")
        params[pkey] = vals[0] if len(vals) == 1 else tuple(vals)
    return name, params


def _sine_fn(grid: Grid, amplitude: float = 1.0, decay: float = 0.0):
    def fn(*args):
        if len(args) == grid.dim:
            xs, t = args, 0.0
        else:
            xs, t = args[:-1], args[-1]
        out = amplitude * math.exp(-decay * float(t))
        for k, (lo, hi) in enumerate(grid.box):
            out = out * np.sin(math.pi * (xs[k] - lo) / (hi - lo))
        return out
    return fn


def _build_field(text: str, key: str, grid: Grid, kind: str) -> Field:
    text = text.strip()
    try:
        value = float(text)
        is_number = True
    except ValueError:
        is_number = False
    if is_number:
        shape = grid.shape_spacetime if kind == SPACETIME else grid.shape_space
        return Field(grid, np.full(shape, value), kind)
    name, params = _parse_function(text, key)
    if name == "zero":
        return Field.zeros(grid, kind)
    if name == "constant":
        shape = grid.shape_spacetime if kind == SPACETIME else grid.shape_space
        return Field(grid, np.full(shape, float(params.get("value", 1.0))), kind)
    if name == "sine":
        fn = _sine_fn(grid, float(params.get("amplitude", 1.0)),
                      float(params.get("decay", 0.0)))
        return sample(fn, grid) if kind == SPACETIME else sample_initial(fn, grid)
    if name == "radial":
        center = params.get("center", tuple(0.5 * (lo + hi) for lo, hi in grid.box))
        if np.isscalar(center):
            center = (center,)
        if len(center) != grid.dim:
            raise ConfigurationError(f"{key}: radial center needs {grid.dim} components")
        amplitude = float(params.get("amplitude", 1.0))
        exponent = float(params.get("exponent", -1.0))
        mesh = grid.meshgrid()
        r2 = np.zeros(grid.shape_space)
        for k in range(grid.dim):
            r2 = r2 + (mesh[k] - center[k]) ** 2
        with np.errstate(divide="ignore"):
            vals = amplitude * r2 ** (0.5 * exponent)
        if kind == SPACETIME:
            vals = np.broadcast_to(vals, grid.shape_spacetime).copy()
        return Field(grid, vals, kind)
    if name == "bump":
        if kind != SPACETIME:
            raise ConfigurationError(f"{key}: bump is a space-time forcing only")
        if "eps" not in params:
            raise ConfigurationError(f"{key}: bump needs eps=...")
        x0 = params.get("x0", tuple(0.5 * (lo + hi) for lo, hi in grid.box))
        if np.isscalar(x0):
            x0 = (x0,)
        t0 = float(params.get("t0", 0.6 * grid.T))
        return bump(float(params["eps"]), float(params.get("gamma", 2.0)),
                    (*x0, t0), grid)
    raise ConfigurationError(f"{key}: unknown function {name!r} "
                             "(choose zero, constant, sine, radial, bump)")


def _build_coefficient(section, grid: Grid) -> MatrixCoefficient:
    N = grid.dim
    diag = [1.0] * N
    if "a" in section:
        vals = _floats(section["a"], "coefficients.a")
        if len(vals) == 1:
            diag = [vals[0]] * N
        elif len(vals) == N:
            diag = list(vals)
        else:
            raise ConfigurationError(
                f"coefficients.a needs 1 or {N} values, got {len(vals)}")
    off = {}
    for i in range(N):
        for j in range(i, N):
            key = f"a{_AXIS_NAMES[i]}{_AXIS_NAMES[j]}"
            if key not in section:
                continue
            text = section[key].strip()
            try:
                entry = float(text)
            except ValueError:
                entry = _build_field(text, f"coefficients.{key}", grid, TIMESLICE).values
            if i == j:
                diag[i] = entry
            else:
                off[(i, j)] = entry
    return MatrixCoefficient(grid, diag, off or None)


def load_config(path: str) -> ConfigBundle:
    """Parse a configuration file into grid, problem spec, and settings."""
    if not os.path.exists(path):
        raise ConfigurationError(f"configuration file not found: {path}")
    parser = configparser.ConfigParser()
    parser.optionxform = str
    try:
        parser.read(path)
    except configparser.Error as err:
        raise ConfigurationError(f"{path}: {err}") from err
    if "grid" not in parser:
        raise ConfigurationError(f"{path}: missing [grid] section")
    gs = parser["grid"]
    for need in ("box", "nx", "T", "nt"):
        if need not in gs:
            raise ConfigurationError(f"{path}: [grid] missing {need}")
    pairs = gs["box"].split()
    box = []
    for token in pairs:
        vals = _floats(token, "grid.box")
        if len(vals) != 2:
            raise ConfigurationError(f"grid.box: each axis needs lo,hi, got {token!r}")
        box.append((vals[0], vals[1]))
    nx = [int(v) for v in _floats(gs["nx"], "grid.nx")]
    grid = make_grid(box, nx, float(gs["T"]), int(gs["nt"]))

    cs = parser["coefficients"] if "coefficients" in parser else {}
    A = _build_coefficient(cs, grid)
    lam = float(cs.get("lambda", 1.0))
    q = float(cs.get("q", 4.0))
    omega_text = str(cs.get("omega", "0.0")).strip()
    try:
        omega_val = float(omega_text)
        omega = Field(grid, np.full(grid.shape_space, omega_val), TIMESLICE)
    except ValueError:
        name, params = _parse_function(omega_text, "coefficients.omega")
        # static potentials stay one slice so the solver can reuse its
        # factorization-free operator across steps
        time_varying = name == "bump" or (name == "sine" and params.get("decay", 0.0))
        omega = _build_field(omega_text, "coefficients.omega", grid,
                             SPACETIME if time_varying else TIMESLICE)

    fs = parser["forcing"] if "forcing" in parser else {}
    f = _build_field(str(fs.get("f", "zero")), "forcing.f", grid, SPACETIME)
    phi0 = _build_field(str(fs.get("phi0", "zero")), "forcing.phi0", grid, TIMESLICE)
    spec = ProblemSpec(grid, A, omega, f, phi0, lam, q)

    sweep = None
    if "sweep" in parser:
        ss = parser["sweep"]
        if "eps" not in ss:
            raise ConfigurationError(f"{path}: [sweep] missing eps")
        eps = tuple(_floats(ss["eps"], "sweep.eps"))
        x0 = tuple(_floats(ss["x0"], "sweep.x0")) if "x0" in ss \
            else tuple(0.5 * (lo + hi) for lo, hi in grid.box)
        if len(x0) != grid.dim:
            raise ConfigurationError(f"sweep.x0 needs {grid.dim} components")
        t0 = float(ss.get("t0", 0.6 * grid.T))
        family = BumpFamily(x0, t0, float(ss.get("gamma", 2.0)),
                            float(ss.get("amplitude", 1.0)))
        sweep = SweepSettings(eps, family, float(ss.get("beta0", 1.0)),
                              int(ss.get("i_max", 12)),
                              float(ss.get("moment_cap", 10.0)))

    opts = SolveOptions()
    if "solver" in parser:
        sv = parser["solver"]
        tol = float(sv.get("tol", 1e-10))
        max_iters = int(sv["max_iters"]) if "max_iters" in sv else None
        opts = SolveOptions(tol, max_iters)
    return ConfigBundle(grid, spec, sweep, opts)
