"""Uniform 1+1 space-time grids, lattice fields, stencils, norms, interpolation.

Conventions used throughout the package:

* A grid has ``nx`` nodes ``x(i) = x_min + i*dx`` with
  ``dx = (x_max - x_min)/(nx - 1)`` and ``nt`` time levels
  ``t(n) = t0 + n*dt``.  Under periodic boundary conditions node ``nx``
  is identified with node 0, i.e. the period is ``nx*dx``.
* Grid integrals (L1/L2 norms) use trapezoidal weights, so a constant
  field of value 1 on [0, 1] has discrete L2 norm exactly 1.
* Grids and field values are immutable after construction and safe to
  share across threads.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, DomainError

_BIN_MAGIC = b"STPDEF01"
_BIN_HEADER = struct.Struct("<8s6I4d")  # magic, version, nx, nt, comps, kind, pad | x_min, x_max, dt, t0


@dataclass(frozen=True)
class SpaceTimeGrid:
    """Uniform discretization of [x_min, x_max] x [t0, t0 + (nt-1)*dt]."""

    x_min: float
    x_max: float
    nx: int
    dt: float
    nt: int
    t0: float = 0.0

    def __post_init__(self):
        if self.nx < 3:
            raise DimensionError(f"nx must be >= 3, got {self.nx}")
        if self.nt < 2:
            raise DimensionError(f"nt must be >= 2, got {self.nt}")
        if not self.x_max > self.x_min:
            raise DimensionError("x_max must exceed x_min")
        if not self.dt > 0:
            raise DimensionError("dt must be positive")

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / (self.nx - 1)

    @property
    def t_end(self) -> float:
        return self.t0 + (self.nt - 1) * self.dt

    def x(self, i=None):
        if i is None:
            return self.x_min + self.dx * np.arange(self.nx)
        return self.x_min + self.dx * np.asarray(i)

    def t(self, n=None):
        if n is None:
            return self.t0 + self.dt * np.arange(self.nt)
        return self.t0 + self.dt * np.asarray(n)

    def refine(self, factor: int = 2) -> "SpaceTimeGrid":
        """Grid with dx and dt divided by ``factor`` over the same extents."""
        return SpaceTimeGrid(self.x_min, self.x_max, (self.nx - 1) * factor + 1,
                             self.dt / factor, (self.nt - 1) * factor + 1, self.t0)

    def subgrid(self, i0: int, i1: int, n0: int, n1: int) -> "SpaceTimeGrid":
        """Sub-rectangle [i0, i1] x [n0, n1] (inclusive) of this lattice."""
        if not (0 <= i0 <= i1 - 2 < self.nx - 1 and 0 <= n0 <= n1 - 1 < self.nt):
            raise DimensionError("subgrid indices out of range or too small")
        return SpaceTimeGrid(self.x(i0), self.x(i1), i1 - i0 + 1,
                             self.dt, n1 - n0 + 1, self.t(n0))


class BoundaryCondition:
    """Marker base class; see Periodic, Dirichlet, Reflecting."""


@dataclass(frozen=True)
class Periodic(BoundaryCondition):
    pass


@dataclass(frozen=True)
class Dirichlet(BoundaryCondition):
    """Pinned edge values; each side is a finite float or a callable of t."""

    left: object = 0.0
    right: object = 0.0

    def value(self, side: str, t: float) -> float:
        v = self.left if side == "left" else self.right
        v = float(v(t)) if callable(v) else float(v)
        if not np.isfinite(v):
            raise DomainError("dirichlet boundary value is not finite")
        return v


@dataclass(frozen=True)
class Reflecting(BoundaryCondition):
    """Zero-flux edges: ghost nodes mirror the first interior node."""


PERIODIC = Periodic()


@dataclass(frozen=True)
class FieldHistory:
    """Scalar or two-component lattice function of (x, t).

    ``values`` is indexed ``(component, time index, space index)`` and is
    made read-only on construction.  ``info`` carries run diagnostics
    (stability ratios, degeneracy flags); it never affects equality.
    """

    grid: SpaceTimeGrid
    values: np.ndarray
    info: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        v = np.asarray(self.values)
        if v.ndim == 2:
            v = v[np.newaxis]
        if v.ndim != 3 or v.shape[0] not in (1, 2):
            raise DimensionError(f"values must be (1|2, nt, nx), got {v.shape}")
        if v.shape[1] != self.grid.nt or v.shape[2] != self.grid.nx:
            raise DimensionError(
                f"values shape {v.shape} does not match grid (nt={self.grid.nt}, nx={self.grid.nx})")
        if v.dtype not in (np.float64, np.complex128):
            v = v.astype(np.complex128 if np.iscomplexobj(v) else np.float64)
        v = v.copy()
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @property
    def components(self) -> int:
        return self.values.shape[0]

    @property
    def scalar_kind(self) -> str:
        return "complex" if np.iscomplexobj(self.values) else "real"

    def component(self, c: int) -> np.ndarray:
        return self.values[c]

    def at_time(self, n: int, c: int = 0) -> np.ndarray:
        return self.values[c, n]

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.values)))

    @staticmethod
    def from_function(grid: SpaceTimeGrid, *fns) -> "FieldHistory":
        """Sample callables f(x, t) (one per component) on the lattice."""
        xs = grid.x()[np.newaxis, :]
        ts = grid.t()[:, np.newaxis]
        vals = np.stack([np.broadcast_to(f(xs, ts), (grid.nt, grid.nx)).copy() for f in fns])
        return FieldHistory(grid, vals)

    # -- serialization ----------------------------------------------------

    def to_csv(self, path) -> None:
        g = self.grid
        with open(path, "w", newline="") as fh:
            fh.write("t,x,component,value\n")
            ts = [repr(float(v)) for v in g.t()]
            xs = [repr(float(v)) for v in g.x()]
            for c in range(self.components):
                for n in range(g.nt):
                    row = self.values[c, n]
                    for i in range(g.nx):
                        fh.write(f"{ts[n]},{xs[i]},{c},{_fmt_value(row[i])}\n")

    @staticmethod
    def from_csv(path) -> "FieldHistory":
        ts, xs, cs, vs = [], [], [], []
        with open(path) as fh:
            header = fh.readline().strip()
            if header != "t,x,component,value":
                raise DimensionError(f"unexpected CSV header {header!r}")
            for line in fh:
                t_, x_, c_, v_ = line.rstrip("\n").split(",")
                ts.append(float(t_)); xs.append(float(x_))
                cs.append(int(c_)); vs.append(complex(v_))
        t_levels = sorted(set(ts))
        x_nodes = sorted(set(xs))
        comps = sorted(set(cs))
        nt, nx = len(t_levels), len(x_nodes)
        if nt < 2 or nx < 3:
            raise DimensionError("CSV does not contain a full lattice")
        grid = SpaceTimeGrid(x_nodes[0], x_nodes[-1], nx,
                             (t_levels[-1] - t_levels[0]) / (nt - 1) if nt > 1 else 1.0,
                             nt, t_levels[0])
        ti = {t: n for n, t in enumerate(t_levels)}
        xi = {x: i for i, x in enumerate(x_nodes)}
        vals = np.zeros((len(comps), nt, nx), dtype=complex)
        for t_, x_, c_, v_ in zip(ts, xs, cs, vs):
            vals[c_, ti[t_], xi[x_]] = v_
        if np.allclose(vals.imag, 0):
            vals = vals.real.copy()
        return FieldHistory(grid, vals)

    def to_binary(self, path) -> None:
        g = self.grid
        kind = 1 if self.scalar_kind == "complex" else 0
        header = _BIN_HEADER.pack(_BIN_MAGIC, 1, g.nx, g.nt, self.components, kind, 0,
                                  g.x_min, g.x_max, g.dt, g.t0)
        with open(path, "wb") as fh:
            fh.write(header)
            fh.write(np.ascontiguousarray(self.values).astype(
                np.complex128 if kind else np.float64).tobytes())

    @staticmethod
    def from_binary(path) -> "FieldHistory":
        with open(path, "rb") as fh:
            magic, _ver, nx, nt, comps, kind, _pad, x_min, x_max, dt, t0 = _BIN_HEADER.unpack(
                fh.read(_BIN_HEADER.size))
            if magic != _BIN_MAGIC:
                raise DimensionError("not a field dump (bad magic)")
            raw = fh.read()
        dtype = np.complex128 if kind else np.float64
        vals = np.frombuffer(raw, dtype=dtype).reshape(comps, nt, nx).copy()
        return FieldHistory(SpaceTimeGrid(x_min, x_max, nx, dt, nt, t0), vals)


def _fmt_value(v) -> str:
    if isinstance(v, complex) or np.iscomplexobj(v):
        v = complex(v)
        return f"{v.real!r}{'+' if v.imag >= 0 else '-'}{abs(v.imag)!r}j"
    return repr(float(v))


# -- finite differences ----------------------------------------------------

def second_space_derivative(f: np.ndarray, dx: float, bc: BoundaryCondition = PERIODIC) -> np.ndarray:
    """Central stencil (f[i-1] - 2 f[i] + f[i+1]) / dx^2 on one time slice.

    Boundary nodes: wrapped for periodic, mirrored for reflecting, and 0
    for dirichlet (where edge values are pinned by the solver anyway).
    """
    f = np.asarray(f)
    if f.shape[-1] < 3:
        raise DimensionError("need at least 3 nodes for the central stencil")
    out = np.empty_like(f, dtype=np.result_type(f.dtype, np.float64))
    out[..., 1:-1] = (f[..., :-2] - 2.0 * f[..., 1:-1] + f[..., 2:]) / dx**2
    if isinstance(bc, Periodic):
        out[..., 0] = (f[..., -1] - 2.0 * f[..., 0] + f[..., 1]) / dx**2
        out[..., -1] = (f[..., -2] - 2.0 * f[..., -1] + f[..., 0]) / dx**2
    elif isinstance(bc, Reflecting):
        out[..., 0] = 2.0 * (f[..., 1] - f[..., 0]) / dx**2
        out[..., -1] = 2.0 * (f[..., -2] - f[..., -1]) / dx**2
    else:
        out[..., 0] = 0.0
        out[..., -1] = 0.0
    return out


def first_space_derivative(f: np.ndarray, dx: float, bc: BoundaryCondition = PERIODIC) -> np.ndarray:
    """Centered first derivative (f[i+1] - f[i-1]) / (2 dx) on one time slice."""
    f = np.asarray(f)
    if f.shape[-1] < 3:
        raise DimensionError("need at least 3 nodes for the central stencil")
    out = np.empty_like(f, dtype=np.result_type(f.dtype, np.float64))
    out[..., 1:-1] = (f[..., 2:] - f[..., :-2]) / (2.0 * dx)
    if isinstance(bc, Periodic):
        out[..., 0] = (f[..., 1] - f[..., -1]) / (2.0 * dx)
        out[..., -1] = (f[..., 0] - f[..., -2]) / (2.0 * dx)
    else:
        # one-sided, second order
        out[..., 0] = (-3.0 * f[..., 0] + 4.0 * f[..., 1] - f[..., 2]) / (2.0 * dx)
        out[..., -1] = (3.0 * f[..., -1] - 4.0 * f[..., -2] + f[..., -3]) / (2.0 * dx)
    return out


# -- norms ------------------------------------------------------------------

def trapezoid_weights(n: int) -> np.ndarray:
    w = np.ones(n)
    w[0] = w[-1] = 0.5
    return w


def grid_norm(f: np.ndarray, which: str = "sup", dx: float | None = None) -> float:
    """Sup norm, or discrete (trapezoidal) L2 norm sqrt(sum f^2 dx)."""
    f = np.asarray(f)
    if f.size == 0:
        raise DimensionError("empty input")
    if which == "sup":
        return float(np.max(np.abs(f)))
    if which == "l2":
        if dx is None:
            raise DimensionError("l2 norm needs dx")
        w = trapezoid_weights(f.shape[-1])
        return float(np.sqrt(np.sum(w * np.abs(f) ** 2, axis=-1).sum() * dx))
    raise DimensionError(f"unknown norm {which!r}")


def l1_distance(f: np.ndarray, g: np.ndarray, dx: float) -> float:
    """Trapezoidal L1 distance between two slices on the same lattice."""
    f, g = np.asarray(f), np.asarray(g)
    if f.shape != g.shape:
        raise DimensionError(f"shape mismatch {f.shape} vs {g.shape}")
    w = trapezoid_weights(f.shape[-1])
    return float(np.sum(w * np.abs(f - g)) * dx)


# -- interpolation ----------------------------------------------------------

def _lagrange_weights(s: np.ndarray) -> np.ndarray:
    """Cubic Lagrange weights on nodes {0,1,2,3} at local coordinate s."""
    w = np.empty(s.shape + (4,))
    w[..., 0] = -(s - 1) * (s - 2) * (s - 3) / 6.0
    w[..., 1] = s * (s - 2) * (s - 3) / 2.0
    w[..., 2] = -s * (s - 1) * (s - 3) / 2.0
    w[..., 3] = s * (s - 1) * (s - 2) / 6.0
    return w


def _stencil(u: np.ndarray, n: int, periodic: bool):
    """4-point stencil start indices and local coordinates for queries u (in node units)."""
    if periodic:
        base = np.floor(u).astype(np.int64)
        start = base - 1
        s = u - start
        idx = (start[..., None] + np.arange(4)) % n
    else:
        base = np.floor(u).astype(np.int64)
        start = np.clip(base - 1, 0, n - 4)
        s = u - start
        idx = start[..., None] + np.arange(4)
    return idx, _lagrange_weights(s)


def cubic_interp_1d(values: np.ndarray, x_min: float, dx: float, xq: np.ndarray,
                    periodic: bool = False) -> np.ndarray:
    """Piecewise-cubic Lagrange interpolation of one slice at points xq.

    Exact on lattice nodes and for cubic polynomials.  ``values`` may be
    a stack of slices (interpolation runs along the last axis).
    """
    values = np.asarray(values)
    xq = np.asarray(xq, dtype=float)
    n = values.shape[-1]
    u = (xq - x_min) / dx
    if not periodic:
        span = n - 1
        fuzz = 1e-9
        if np.any(u < -fuzz) or np.any(u > span + fuzz):
            raise DomainError("interpolation query outside the domain")
        u = np.clip(u, 0.0, span)
    idx, w = _stencil(u, n, periodic)
    return np.einsum("...qi,...qi->...q", values[..., idx], w) if values.ndim > 1 \
        else np.einsum("qi,qi->q", values[idx], w)


def interpolate(fieldh: FieldHistory, x, t, component: int = 0):
    """Bicubic (cubic in x, cubic in t) interpolation of a field history.

    Exact at lattice nodes.  Raises DomainError for queries outside the
    grid hull.  ``x`` and ``t`` may be scalars or broadcastable arrays.
    """
    g = fieldh.grid
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    scalar_in = x.ndim == 0 and t.ndim == 0
    x, t = np.broadcast_arrays(np.atleast_1d(x), np.atleast_1d(t))
    ux = (x - g.x_min) / g.dx
    ut = (t - g.t0) / g.dt
    fuzz = 1e-9
    if (np.any(ux < -fuzz) or np.any(ux > g.nx - 1 + fuzz)
            or np.any(ut < -fuzz) or np.any(ut > g.nt - 1 + fuzz)):
        raise DomainError("interpolation query outside the grid hull")
    ux = np.clip(ux, 0.0, g.nx - 1)
    ut = np.clip(ut, 0.0, g.nt - 1)
    xi, wx = _stencil(ux.ravel(), g.nx, periodic=False)
    ti, wt = _stencil(ut.ravel(), g.nt, periodic=False)
    vals = fieldh.values[component][ti[:, :, None], xi[:, None, :]]  # (q, 4t, 4x)
    out = np.einsum("qi,qij,qj->q", wt, vals, wx)
    if scalar_in:
        return out[0] if np.iscomplexobj(out) else float(out[0])
    return out.reshape(x.shape)


# -- convergence fits ---------------------------------------------------------

def fit_convergence_order(hs, errors) -> float:
    """Least-squares slope p in error ~ C h^p from a refinement study."""
    hs = np.asarray(hs, dtype=float)
    errors = np.asarray(errors, dtype=float)
    if hs.size < 2 or hs.size != errors.size:
        raise DimensionError("need matching h and error sequences of length >= 2")
    errors = np.maximum(errors, 1e-300)
    return float(np.polyfit(np.log(hs), np.log(errors), 1)[0])
