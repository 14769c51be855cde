"""Explicit finite-difference initial-value solvers and residual oracles.

Scheme choices, enforced by pre-flight gates:

* parabolic kinds: forward-time centered-space, gate max|coeff|*dt/dx^2 <= 1/2
  re-checked every step;
* first-order hyperbolic systems: upwind transport on each characteristic,
  Strang-split with the (exact or midpoint) coupling flow, gate v*dt/dx <= 1;
  at v*dt = dx the transport is an exact lattice shift;
* second-order-in-time equations: leapfrog with centered damping terms;
* the two-component complex dispersion kind: exact shift at c*dt = dx plus
  an exact unitary mixing rotation, so the discrete norm is conserved to
  round-off.

``residual`` plugs any field history back into its equation with centered
differences on the interior lattice; it is the universal correctness check
used across the package.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np

from .errors import (
    ConfigurationError,
    DegeneracyError,
    DimensionError,
    DivergenceError,
    ParameterError,
)
from .grid import (
    PERIODIC,
    BoundaryCondition,
    Dirichlet,
    FieldHistory,
    Periodic,
    Reflecting,
    SpaceTimeGrid,
    first_space_derivative,
    second_space_derivative,
)

FOUR_PI = 4.0 * math.pi


# -- diffusivity laws ---------------------------------------------------------

@dataclass(frozen=True)
class ConstantLaw:
    """f(P) = d."""

    d: float

    def __post_init__(self):
        if not (np.isfinite(self.d) and self.d > 0):
            raise ParameterError("constant diffusivity must be positive and finite")

    def __call__(self, P):
        return np.full_like(np.asarray(P, dtype=float), self.d)

    def derivative(self, P):
        return np.zeros_like(np.asarray(P, dtype=float))


@dataclass(frozen=True)
class PowerLaw:
    """f(P) = a (P + b)^m."""

    a: float
    b: float
    m: float

    def __post_init__(self):
        for v in (self.a, self.b, self.m):
            if not np.isfinite(v):
                raise ParameterError("power-law parameters must be finite")

    def _shifted(self, P):
        s = np.asarray(P, dtype=float) + self.b
        if self.m != int(self.m) and np.any(s <= 0):
            raise DegeneracyError(
                "P + b must stay positive for a non-integer exponent",
                location=float(np.min(s)))
        if self.m < 0 and np.any(s == 0):
            raise DegeneracyError("P + b hit zero with a negative exponent")
        return s

    def __call__(self, P):
        return self.a * self._shifted(P) ** self.m

    def derivative(self, P):
        if self.m == 0:
            return np.zeros_like(np.asarray(P, dtype=float))
        return self.a * self.m * self._shifted(P) ** (self.m - 1)


@dataclass(frozen=True)
class TabulatedLaw:
    """Arbitrary callable with its derivative."""

    fn: Callable
    dfn: Callable

    def __call__(self, P):
        return np.asarray(self.fn(np.asarray(P, dtype=float)), dtype=float)

    def derivative(self, P):
        return np.asarray(self.dfn(np.asarray(P, dtype=float)), dtype=float)


DiffusivityLaw = Union[ConstantLaw, PowerLaw, TabulatedLaw]


# -- initial data ---------------------------------------------------------------

@dataclass(frozen=True)
class GaussianProfile:
    center: float = 0.0
    width: float = 1.0
    mass: float = 1.0

    def sample(self, grid: SpaceTimeGrid):
        x = grid.x()
        amp = self.mass / (self.width * math.sqrt(2.0 * math.pi))
        return amp * np.exp(-0.5 * ((x - self.center) / self.width) ** 2)


@dataclass(frozen=True)
class DeltaOnLattice:
    center: float = 0.0

    def sample(self, grid: SpaceTimeGrid):
        out = np.zeros(grid.nx)
        i = int(round((self.center - grid.x_min) / grid.dx))
        if not 0 <= i < grid.nx:
            raise ParameterError("delta center outside the grid")
        out[i] = 1.0 / grid.dx
        return out


@dataclass(frozen=True)
class CustomProfile:
    fn: Callable

    def sample(self, grid: SpaceTimeGrid):
        return np.asarray(self.fn(grid.x()))


Profile = Union[GaussianProfile, DeltaOnLattice, CustomProfile]


@dataclass(frozen=True)
class InitialData:
    """Per-component t0 profiles, plus an optional initial time derivative
    (second-order-in-time kinds only; defaults to zero)."""

    profiles: tuple
    velocity: Optional[Profile] = None

    @staticmethod
    def gaussian(center=0.0, width=1.0, mass=1.0, velocity=None):
        return InitialData((GaussianProfile(center, width, mass),), velocity)

    @staticmethod
    def delta(center=0.0):
        return InitialData((DeltaOnLattice(center),))

    @staticmethod
    def custom(fn, velocity=None):
        return InitialData((CustomProfile(fn),), velocity)

    @staticmethod
    def two_component(plus, minus):
        return InitialData((plus if not callable(plus) else CustomProfile(plus),
                            minus if not callable(minus) else CustomProfile(minus)))

    def sample(self, grid, component=0):
        vals = self.profiles[component].sample(grid)
        if not np.all(np.isfinite(vals)):
            raise ParameterError("initial data contains non-finite values")
        return vals

    def sample_velocity(self, grid):
        if self.velocity is None:
            return np.zeros(grid.nx)
        return np.asarray(self.velocity.sample(grid))


# -- sources --------------------------------------------------------------------

@dataclass(frozen=True)
class SourceTerm:
    """Source a(x, t); analytic partials unlock sharper diagnostics."""

    fn: Callable
    d_dt: Optional[Callable] = None
    d_dx: Optional[Callable] = None

    def sample(self, grid):
        x = grid.x()[np.newaxis, :]
        t = grid.t()[:, np.newaxis]
        return np.broadcast_to(self.fn(x, t), (grid.nt, grid.nx)).astype(float).copy()

    @staticmethod
    def zero():
        return SourceTerm(lambda x, t: np.zeros_like(x + t),
                          lambda x, t: np.zeros_like(x + t),
                          lambda x, t: np.zeros_like(x + t))


# -- equation kinds ---------------------------------------------------------------

def _require(cond, msg):
    if not cond:
        raise ParameterError(msg)


@dataclass(frozen=True)
class Diffusion:
    d: float

    def __post_init__(self):
        _require(np.isfinite(self.d) and self.d > 0, "D must be positive")


@dataclass(frozen=True)
class TwoSpeedSystem:
    v: float
    a: float

    def __post_init__(self):
        _require(np.isfinite(self.v) and self.v >= 0, "v must be nonnegative")
        _require(np.isfinite(self.a) and self.a >= 0, "a must be nonnegative")


@dataclass(frozen=True)
class Telegrapher:
    v: float
    a: float

    def __post_init__(self):
        _require(np.isfinite(self.v) and self.v > 0, "v must be positive")
        _require(np.isfinite(self.a) and self.a >= 0, "a must be nonnegative")


@dataclass(frozen=True)
class DiracEquation:
    m: float
    c: float = 1.0

    def __post_init__(self):
        _require(np.isfinite(self.m), "mass must be finite")
        _require(np.isfinite(self.c) and self.c > 0, "c must be positive")


@dataclass(frozen=True)
class MaxwellPotentials:
    c: float
    source: SourceTerm

    def __post_init__(self):
        _require(np.isfinite(self.c) and self.c > 0, "c must be positive")


@dataclass(frozen=True)
class NonlinearDiffusion:
    """dP/dt = f(P)^k d2P/dx2 with k = 1 or 2."""

    law: DiffusivityLaw
    k: int = 1

    def __post_init__(self):
        _require(self.k in (1, 2), "exponent k must be 1 or 2")

    def coefficient(self, P):
        f = self.law(P)
        return f if self.k == 1 else f * f


@dataclass(frozen=True)
class ConservativeDiffusion:
    """dP/dt = d/dx [ f(P) dP/dx ]."""

    law: DiffusivityLaw


@dataclass(frozen=True)
class NonlinearDiracSystem:
    v: float
    a: float

    def __post_init__(self):
        _require(np.isfinite(self.v) and self.v >= 0, "v must be nonnegative")
        _require(np.isfinite(self.a) and self.a >= 0, "a must be nonnegative")


@dataclass(frozen=True)
class NonlinearTelegrapher:
    """Second-order equation with cubic and quadratic first-derivative terms,
    in the printed sign convention (see also iteration_residuals)."""

    v: float
    a: float

    def __post_init__(self):
        _require(np.isfinite(self.v) and self.v > 0, "v must be positive")
        _require(np.isfinite(self.a), "a must be finite")


PdeKind = Union[Diffusion, TwoSpeedSystem, Telegrapher, DiracEquation,
                MaxwellPotentials, NonlinearDiffusion, ConservativeDiffusion,
                NonlinearDiracSystem, NonlinearTelegrapher]


# -- solve -------------------------------------------------------------------------

def solve(kind: PdeKind, init: InitialData, grid: SpaceTimeGrid,
          bc: BoundaryCondition = PERIODIC) -> FieldHistory:
    """March the chosen equation over all nt steps of the grid."""
    if isinstance(kind, Diffusion):
        return _solve_parabolic(kind, init, grid, bc, lambda P: np.full_like(P, kind.d))
    if isinstance(kind, NonlinearDiffusion):
        return _solve_parabolic(kind, init, grid, bc, kind.coefficient)
    if isinstance(kind, ConservativeDiffusion):
        return _solve_conservative(kind, init, grid, bc)
    if isinstance(kind, TwoSpeedSystem):
        return _solve_two_speed(kind, init, grid, bc)
    if isinstance(kind, NonlinearDiracSystem):
        return _solve_nonlinear_system(kind, init, grid, bc)
    if isinstance(kind, Telegrapher):
        return _solve_leapfrog(kind, init, grid, bc)
    if isinstance(kind, NonlinearTelegrapher):
        return _solve_leapfrog(kind, init, grid, bc)
    if isinstance(kind, DiracEquation):
        return _solve_dirac(kind, init, grid, bc)
    if isinstance(kind, MaxwellPotentials):
        return _solve_maxwell(kind, init, grid, bc)
    raise ConfigurationError(f"unknown equation kind {kind!r}")


def _check_finite(row, n):
    if not np.all(np.isfinite(row)):
        raise DivergenceError(f"non-finite values at step {n}", step=n)


def _apply_dirichlet(row, bc: Dirichlet, t):
    row[0] = bc.value("left", t)
    row[-1] = bc.value("right", t)


def _solve_parabolic(kind, init, grid, bc, coeff_fn) -> FieldHistory:
    dx, dt = grid.dx, grid.dt
    P = np.empty((grid.nt, grid.nx))
    P[0] = init.sample(grid)
    info = {"scheme": "ftcs", "near_degenerate": False}
    F0 = coeff_fn(P[0])
    ratio0 = float(np.max(np.abs(F0)) * dt / dx**2)
    if ratio0 > 0.5:
        raise ConfigurationError(
            f"FTCS stability gate failed: max|coeff|*dt/dx^2 = {ratio0:.3g} > 0.5")
    info["stability_ratio"] = ratio0
    floor = np.finfo(float).eps * max(1.0, float(np.max(np.abs(P[0]))))
    for n in range(grid.nt - 1):
        F = coeff_fn(P[n])
        if np.any(F < 0):
            raise DegeneracyError("diffusivity went negative (not parabolic)",
                                  location=int(np.argmin(F)))
        if np.min(F) < floor:
            info["near_degenerate"] = True
        ratio = float(np.max(F) * dt / dx**2)
        if ratio > 0.5:
            raise DivergenceError(
                f"stability ratio grew to {ratio:.3g} at step {n}", step=n)
        P[n + 1] = P[n] + dt * F * second_space_derivative(P[n], dx, bc)
        if isinstance(bc, Dirichlet):
            _apply_dirichlet(P[n + 1], bc, grid.t(n + 1))
        _check_finite(P[n + 1], n + 1)
    return FieldHistory(grid, P[np.newaxis], info)


def _solve_conservative(kind: ConservativeDiffusion, init, grid, bc) -> FieldHistory:
    dx, dt = grid.dx, grid.dt
    law = kind.law
    P = np.empty((grid.nt, grid.nx))
    P[0] = init.sample(grid)
    ratio0 = float(np.max(np.abs(law(P[0]))) * dt / dx**2)
    if ratio0 > 0.5:
        raise ConfigurationError(
            f"FTCS stability gate failed: max|f|*dt/dx^2 = {ratio0:.3g} > 0.5")
    info = {"scheme": "ftcs-flux", "stability_ratio": ratio0, "mass_drift": 0.0}
    mass0 = float(np.sum(P[0]) * dx)
    max_step_drift = 0.0
    for n in range(grid.nt - 1):
        f = law(P[n])
        if np.any(f < 0):
            raise DegeneracyError("diffusivity went negative (not parabolic)")
        if float(np.max(f)) * dt / dx**2 > 0.5:
            raise DivergenceError(f"stability violated at step {n}", step=n)
        if isinstance(bc, Periodic):
            f_r = 0.5 * (f + np.roll(f, -1))          # i+1/2
            flux_r = f_r * (np.roll(P[n], -1) - P[n])  # periodic wrap
            P[n + 1] = P[n] + dt / dx**2 * (flux_r - np.roll(flux_r, 1))
            drift = abs(float(np.sum(P[n + 1]) * dx) - mass0)
            max_step_drift = max(max_step_drift, drift)
        else:
            f_mid = 0.5 * (f[:-1] + f[1:])
            flux = f_mid * (P[n, 1:] - P[n, :-1])      # at i+1/2
            P[n + 1] = P[n].copy()
            P[n + 1, 1:-1] += dt / dx**2 * (flux[1:] - flux[:-1])
            if isinstance(bc, Dirichlet):
                _apply_dirichlet(P[n + 1], bc, grid.t(n + 1))
            elif isinstance(bc, Reflecting):
                P[n + 1, 0] += dt / dx**2 * flux[0]
                P[n + 1, -1] -= dt / dx**2 * flux[-1]
        _check_finite(P[n + 1], n + 1)
    info["mass_drift"] = max_step_drift
    return FieldHistory(grid, P[np.newaxis], info)


def _gate_cfl(v, grid, limit=1.0, exact=False):
    nu = v * grid.dt / grid.dx
    if exact and abs(nu - 1.0) > 1e-12:
        raise ConfigurationError(
            f"this scheme requires v*dt/dx = 1 exactly, got {nu:.12g}")
    if nu > limit + 1e-12:
        raise ConfigurationError(f"CFL gate failed: v*dt/dx = {nu:.3g} > {limit}")
    return nu


def _upwind_pair(plus, minus, nu):
    """One transport step: plus moves right, minus moves left."""
    new_p = plus - nu * (plus - np.roll(plus, 1))
    new_m = minus - nu * (minus - np.roll(minus, -1))
    return new_p, new_m


def _solve_two_speed(kind: TwoSpeedSystem, init, grid, bc) -> FieldHistory:
    if not isinstance(bc, Periodic):
        raise ConfigurationError("transport schemes support periodic boundaries only")
    nu = _gate_cfl(kind.v, grid)
    dt = grid.dt
    P = np.empty((2, grid.nt, grid.nx))
    P[0, 0] = init.sample(grid, 0)
    P[1, 0] = init.sample(grid, 1)
    # exact half-step of the coupling: mean fixed, difference decays
    decay = math.exp(-2.0 * kind.a * dt / 2.0)
    for n in range(grid.nt - 1):
        p, m = _relax_pair(P[0, n], P[1, n], decay)
        p, m = _upwind_pair(p, m, nu)
        p, m = _relax_pair(p, m, decay)
        P[0, n + 1], P[1, n + 1] = p, m
        _check_finite(P[:, n + 1], n + 1)
    return FieldHistory(grid, P, {"scheme": "strang-upwind", "cfl": nu})


def _relax_pair(p, m, decay):
    mean = 0.5 * (p + m)
    half_diff = 0.5 * (p - m) * decay
    return mean + half_diff, mean - half_diff


def _solve_nonlinear_system(kind: NonlinearDiracSystem, init, grid, bc) -> FieldHistory:
    if not isinstance(bc, Periodic):
        raise ConfigurationError("transport schemes support periodic boundaries only")
    nu = _gate_cfl(kind.v, grid)
    dt, a = grid.dt, kind.a
    P = np.empty((2, grid.nt, grid.nx))
    P[0, 0] = init.sample(grid, 0)
    P[1, 0] = init.sample(grid, 1)

    def coupling(p, m):
        return -p * p + a * m, -p * m + a * p

    def half_step(p, m):
        # midpoint rule on the local coupling ODE
        h = 0.5 * dt
        kp, km = coupling(p, m)
        kp2, km2 = coupling(p + 0.5 * h * kp, m + 0.5 * h * km)
        return p + h * kp2, m + h * km2

    for n in range(grid.nt - 1):
        p, m = half_step(P[0, n], P[1, n])
        p, m = _upwind_pair(p, m, nu)
        p, m = half_step(p, m)
        P[0, n + 1], P[1, n + 1] = p, m
        _check_finite(P[:, n + 1], n + 1)
    return FieldHistory(grid, P, {"scheme": "strang-upwind", "cfl": nu})


def _leapfrog_accel(kind, P, dPdt, dx, bc):
    """Right-hand side of d2P/dt2 = ... for the damped-wave kinds."""
    d2 = second_space_derivative(P, dx, bc)
    if isinstance(kind, Telegrapher):
        return kind.v**2 * d2 - 2.0 * kind.a * dPdt
    d1 = first_space_derivative(P, dx, bc)
    return (kind.v**2 * d2 - P**3 + P * dPdt
            + kind.v * P * d1 + kind.a**2 * P)


def _solve_leapfrog(kind, init, grid, bc) -> FieldHistory:
    if isinstance(bc, Reflecting):
        raise ConfigurationError("leapfrog kinds support periodic or dirichlet boundaries")
    nu = _gate_cfl(kind.v, grid)
    dx, dt = grid.dx, grid.dt
    P = np.empty((grid.nt, grid.nx))
    P[0] = init.sample(grid)
    V0 = init.sample_velocity(grid)
    P[1] = P[0] + dt * V0 + 0.5 * dt**2 * _leapfrog_accel(kind, P[0], V0, dx, bc)
    if isinstance(bc, Dirichlet):
        _apply_dirichlet(P[1], bc, grid.t(1))
    for n in range(1, grid.nt - 1):
        d2 = second_space_derivative(P[n], dx, bc)
        if isinstance(kind, Telegrapher):
            adt = kind.a * dt
            P[n + 1] = (2.0 * P[n] - (1.0 - adt) * P[n - 1]
                        + dt**2 * kind.v**2 * d2) / (1.0 + adt)
        else:
            d1 = first_space_derivative(P[n], dx, bc)
            denom = 1.0 - 0.5 * dt * P[n]
            if np.any(np.abs(denom) < 0.1):
                raise DivergenceError(
                    f"time step too large for the field amplitude at step {n}", step=n)
            P[n + 1] = (2.0 * P[n] - P[n - 1]
                        + dt**2 * (kind.v**2 * d2 - P[n]**3
                                   + kind.v * P[n] * d1 + kind.a**2 * P[n])
                        - 0.5 * dt * P[n] * P[n - 1]) / denom
        if isinstance(bc, Dirichlet):
            _apply_dirichlet(P[n + 1], bc, grid.t(n + 1))
        _check_finite(P[n + 1], n + 1)
    return FieldHistory(grid, P[np.newaxis], {"scheme": "leapfrog", "cfl": nu})


def _solve_dirac(kind: DiracEquation, init, grid, bc) -> FieldHistory:
    if not isinstance(bc, Periodic):
        raise ConfigurationError("the spinor scheme supports periodic boundaries only")
    _gate_cfl(kind.c, grid, exact=True)
    dt = grid.dt
    psi = np.empty((2, grid.nt, grid.nx), dtype=np.complex128)
    psi[0, 0] = np.asarray(init.sample(grid, 0), dtype=np.complex128)
    psi[1, 0] = np.asarray(init.sample(grid, 1), dtype=np.complex128)
    theta = kind.m * kind.c**2 * dt / 2.0  # half-step mixing angle
    cos_t, sin_t = math.cos(theta), math.sin(theta)

    def rotate(u, w):
        # exp(-i theta sigma_x): unitary for any theta
        return cos_t * u - 1j * sin_t * w, cos_t * w - 1j * sin_t * u

    norms = np.empty(grid.nt)
    norms[0] = _spinor_norm(psi[:, 0], grid.dx)
    for n in range(grid.nt - 1):
        u, w = rotate(psi[0, n], psi[1, n])
        u = np.roll(u, 1)    # component 1 moves right
        w = np.roll(w, -1)   # component 2 moves left
        psi[0, n + 1], psi[1, n + 1] = rotate(u, w)
        norms[n + 1] = _spinor_norm(psi[:, n + 1], grid.dx)
        _check_finite(psi[:, n + 1], n + 1)
    info = {"scheme": "shift-rotate", "norm_drift": float(np.max(np.abs(norms - norms[0])))}
    return FieldHistory(grid, psi, info)


def _spinor_norm(slice2, dx):
    return float(np.sum(np.abs(slice2) ** 2) * dx)


def _solve_maxwell(kind: MaxwellPotentials, init, grid, bc) -> FieldHistory:
    if not isinstance(bc, Periodic):
        raise ConfigurationError("the characteristic scheme supports periodic boundaries only")
    _gate_cfl(kind.c, grid, exact=True)
    dt = grid.dt
    src = kind.source.sample(grid)
    p = np.empty((grid.nt, grid.nx))  # right mover A + Phi
    q = np.empty((grid.nt, grid.nx))  # left mover A - Phi
    p[0] = init.sample(grid, 0)
    q[0] = init.sample(grid, 1)
    for n in range(grid.nt - 1):
        # trapezoidal source quadrature along each characteristic
        p[n + 1] = np.roll(p[n], 1) + 0.5 * dt * (np.roll(src[n], 1) + src[n + 1])
        q[n + 1] = np.roll(q[n], -1) + 0.5 * dt * (np.roll(src[n], -1) + src[n + 1])
        _check_finite(p[n + 1], n + 1)
    A = 0.5 * (p + q)
    phi = 0.5 * (p - q)
    return FieldHistory(grid, np.stack([A, phi]), {"scheme": "characteristic"})


# -- residual oracles -----------------------------------------------------------

def _dt_center(V, dt):
    out = np.zeros_like(V)
    out[1:-1] = (V[2:] - V[:-2]) / (2.0 * dt)
    return out


def _dtt_center(V, dt):
    out = np.zeros_like(V)
    out[1:-1] = (V[2:] - 2.0 * V[1:-1] + V[:-2]) / dt**2
    return out


def _dx_center(V, dx):
    out = np.zeros_like(V)
    out[:, 1:-1] = (V[:, 2:] - V[:, :-2]) / (2.0 * dx)
    return out


def _dxx_center(V, dx):
    out = np.zeros_like(V)
    out[:, 1:-1] = (V[:, :-2] - 2.0 * V[:, 1:-1] + V[:, 2:]) / dx**2
    return out


def _zero_frame(R):
    R[..., 0, :] = 0
    R[..., -1, :] = 0
    R[..., :, 0] = 0
    R[..., :, -1] = 0
    return R


def residual(kind: PdeKind, fieldh: FieldHistory) -> FieldHistory:
    """Pointwise PDE residual with centered differences on the interior.

    Returns a field history on the same grid (per-component residuals for
    systems); the outermost frame is set to zero.
    """
    g = fieldh.grid
    if g.nt < 3:
        raise DimensionError("need nt >= 3 for the centered time stencil")
    dx, dt = g.dx, g.dt
    V = fieldh.values

    if isinstance(kind, Diffusion):
        R = _dt_center(V[0], dt) - kind.d * _dxx_center(V[0], dx)
        return FieldHistory(g, _zero_frame(R)[np.newaxis])
    if isinstance(kind, NonlinearDiffusion):
        R = _dt_center(V[0], dt) - kind.coefficient(V[0]) * _dxx_center(V[0], dx)
        return FieldHistory(g, _zero_frame(R)[np.newaxis])
    if isinstance(kind, ConservativeDiffusion):
        P = V[0]
        f = kind.law(P)
        f_r = 0.5 * (f[:, 1:] + f[:, :-1])
        flux = f_r * (P[:, 1:] - P[:, :-1])
        R = np.zeros_like(P)
        R[:, 1:-1] = -(flux[:, 1:] - flux[:, :-1]) / dx**2
        R += _dt_center(P, dt)
        return FieldHistory(g, _zero_frame(R)[np.newaxis])
    if isinstance(kind, Telegrapher):
        P = V[0]
        R = (_dtt_center(P, dt) - kind.v**2 * _dxx_center(P, dx)
             + 2.0 * kind.a * _dt_center(P, dt))
        return FieldHistory(g, _zero_frame(R)[np.newaxis])
    if isinstance(kind, NonlinearTelegrapher):
        P = V[0]
        R = (_dtt_center(P, dt) - kind.v**2 * _dxx_center(P, dx)
             + P**3 - P * _dt_center(P, dt)
             - kind.v * P * _dx_center(P, dx) - kind.a**2 * P)
        return FieldHistory(g, _zero_frame(R)[np.newaxis])
    if isinstance(kind, TwoSpeedSystem):
        p, m = V[0], V[1]
        Rp = _dt_center(p, dt) + kind.a * (p - m) + kind.v * _dx_center(p, dx)
        Rm = _dt_center(m, dt) + kind.a * (m - p) - kind.v * _dx_center(m, dx)
        return FieldHistory(g, _zero_frame(np.stack([Rp, Rm])))
    if isinstance(kind, NonlinearDiracSystem):
        p, m = V[0], V[1]
        Rp = _dt_center(p, dt) + p * p + kind.v * _dx_center(p, dx) - kind.a * m
        Rm = _dt_center(m, dt) + p * m - kind.a * p - kind.v * _dx_center(m, dx)
        return FieldHistory(g, _zero_frame(np.stack([Rp, Rm])))
    if isinstance(kind, DiracEquation):
        u, w = V[0], V[1]
        mc2 = kind.m * kind.c**2
        Ru = _dt_center(u, dt) + kind.c * _dx_center(u, dx) + 1j * mc2 * w
        Rw = _dt_center(w, dt) - kind.c * _dx_center(w, dx) + 1j * mc2 * u
        return FieldHistory(g, _zero_frame(np.stack([Ru, Rw])))
    if isinstance(kind, MaxwellPotentials):
        A, phi = V[0], V[1]
        src = kind.source.sample(g)
        RA = _dt_center(A, dt) + kind.c * _dx_center(phi, dx) - src
        Rphi = _dt_center(phi, dt) + kind.c * _dx_center(A, dx)
        RA[0] = RA[-1] = 0.0  # the sampled source has no frame counterpart
        return FieldHistory(g, _zero_frame(np.stack([RA, Rphi])))
    raise ConfigurationError(f"unknown equation kind {kind!r}")


def residual_norm(kind: PdeKind, fieldh: FieldHistory, which: str = "sup") -> float:
    """Interior norm of the residual lattice."""
    R = residual(kind, fieldh).values[:, 1:-1, 1:-1]
    if which == "sup":
        return float(np.max(np.abs(R)))
    if which == "l2":
        w = np.sqrt(np.mean(np.abs(R) ** 2))
        return float(w)
    raise DimensionError(f"unknown norm {which!r}")


# -- iteration identities ----------------------------------------------------------

def iterate_system_check(kind, fieldh: FieldHistory) -> float:
    """Sup-norm residual of the corresponding second-order equation on the
    first component of a first-order-system solution."""
    if isinstance(kind, TwoSpeedSystem):
        second = Telegrapher(kind.v, kind.a) if kind.v > 0 else None
        P = FieldHistory(fieldh.grid, fieldh.values[0:1])
        if second is None:
            # degenerate v = 0 case: d2P/dt2 = -2a dP/dt
            g = fieldh.grid
            R = (_dtt_center(fieldh.values[0], g.dt)
                 + 2.0 * kind.a * _dt_center(fieldh.values[0], g.dt))
            return float(np.max(np.abs(_zero_frame(R)[1:-1, 1:-1])))
        return residual_norm(second, P, "sup")
    if isinstance(kind, NonlinearDiracSystem):
        out = iteration_residuals(fieldh, kind.v, kind.a)
        return out["printed"]
    raise ConfigurationError("iteration check applies to the first-order systems only")


def iteration_residuals(fieldh: FieldHistory, v: float, a: float) -> dict:
    """Second-order residuals of a nonlinear-system solution, both ways.

    ``printed``: d2P/dt2 - v^2 d2P/dx2 + P^3 - P dP/dt - v P dP/dx - a^2 P.
    ``derived``: the exact elimination of the second component from the
    first-order system, which carries -3 P dP/dt instead of +P dP/dt:
    d2P/dt2 - v^2 d2P/dx2 + P^3 + 3 P dP/dt - v P dP/dx - a^2 P.
    The two disagree; residuals for both are reported, never patched.
    """
    g = fieldh.grid
    if g.nt < 3:
        raise DimensionError("need nt >= 3 for the centered time stencil")
    P = fieldh.values[0]
    dt_c = _dt_center(P, g.dt)
    common = (_dtt_center(P, g.dt) - v**2 * _dxx_center(P, g.dx)
              + P**3 - v * P * _dx_center(P, g.dx) - a**2 * P)
    printed = common - P * dt_c
    derived = common + 3.0 * P * dt_c
    return {
        "printed": float(np.max(np.abs(_zero_frame(printed)[1:-1, 1:-1]))),
        "derived": float(np.max(np.abs(_zero_frame(derived)[1:-1, 1:-1]))),
    }


# -- coupled wave suite --------------------------------------------------------------

@dataclass
class MaxwellResult:
    A: FieldHistory
    phi: FieldHistory
    J: FieldHistory
    rho: FieldHistory
    diagnostics: dict


def solve_maxwell_suite(source: SourceTerm, init: InitialData,
                        grid: SpaceTimeGrid, c: float = 1.0) -> MaxwellResult:
    """Evolve the coupled potential system and report its constraint residuals.

    The current J is (1/(4 pi c)) da/dt and the charge density is
    -(1/(4 pi c)) da/dx, from analytic partials when the source provides
    them (finite differences of the sampled source otherwise).  Diagnostics
    hold interior sup norms of the gauge constraint, both second-order wave
    residuals, and charge continuity.
    """
    kind = MaxwellPotentials(c, source)
    fields = solve(kind, init, grid)
    A, phi = fields.values[0], fields.values[1]
    dx, dt = grid.dx, grid.dt

    xs = grid.x()[np.newaxis, :]
    ts = grid.t()[:, np.newaxis]
    if source.d_dt is not None:
        a_t = np.broadcast_to(source.d_dt(xs, ts), (grid.nt, grid.nx)).astype(float)
    else:
        a_t = _dt_center(source.sample(grid), dt)
    if source.d_dx is not None:
        a_x = np.broadcast_to(source.d_dx(xs, ts), (grid.nt, grid.nx)).astype(float)
    else:
        a_x = _dx_center(source.sample(grid), dx)
    J = a_t / (FOUR_PI * c)
    rho = -a_x / (FOUR_PI * c)

    interior = np.s_[2:-2, 2:-2]  # keep clear of FD frame effects
    lorentz = _dx_center(A, dx) + _dt_center(phi, dt) / c
    wave_A = _dxx_center(A, dx) - _dtt_center(A, dt) / c**2 + FOUR_PI / c * J
    wave_phi = _dxx_center(phi, dx) - _dtt_center(phi, dt) / c**2 + FOUR_PI * rho
    continuity = _dx_center(J, dx) + _dt_center(rho, dt)

    diagnostics = {
        "lorentz_sup": float(np.max(np.abs(lorentz[interior]))),
        "wave_A_sup": float(np.max(np.abs(wave_A[interior]))),
        "wave_phi_sup": float(np.max(np.abs(wave_phi[interior]))),
        "continuity_sup": float(np.max(np.abs(continuity[interior]))),
    }
    mk = lambda arr: FieldHistory(grid, arr[np.newaxis])
    return MaxwellResult(mk(A.copy()), mk(phi.copy()), mk(J.copy()), mk(rho.copy()),
                         diagnostics)
