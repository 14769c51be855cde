"""Infinitesimal symmetry generators with exact rational arithmetic.

Generators are vector fields xi*d/dx + eta*d/dt + zeta*d/dP whose
coefficients are sparse polynomials in (x, t, P) over the rationals.
Brackets and algebra tables are checked exactly; one-parameter group
flows are exponentiated (closed form for affine generators, adaptive
integration otherwise) and used to map solutions to solutions.
"""

from __future__ import annotations

import ast
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import expm

from . import solvers
from .errors import (
    ConfigurationError,
    DimensionError,
    DomainError,
    FlowError,
    UnsupportedDegreeError,
)
from .grid import FieldHistory, fit_convergence_order, interpolate

MAX_TOTAL_DEGREE = 3
_VARS = ("x", "t", "P")


class PolyCoeff:
    """Sparse polynomial in (x, t, P), exact Fraction coefficients.

    Canonical form: zero coefficients dropped, monomials keyed by
    exponent triples.  Total degree is capped at MAX_TOTAL_DEGREE, which
    covers every generator handled here (the largest is the x*P term of
    the damped boost) with headroom for their brackets.
    """

    __slots__ = ("terms",)

    def __init__(self, terms=None):
        clean = {}
        for key, c in (terms or {}).items():
            c = Fraction(c)
            if c == 0:
                continue
            key = tuple(int(e) for e in key)
            if len(key) != 3 or min(key) < 0:
                raise UnsupportedDegreeError(f"bad monomial key {key}")
            if sum(key) > MAX_TOTAL_DEGREE:
                raise UnsupportedDegreeError(
                    f"monomial {key} exceeds max total degree {MAX_TOTAL_DEGREE}")
            clean[key] = clean.get(key, Fraction(0)) + c
        self.terms = {k: v for k, v in clean.items() if v != 0}

    # -- constructors -----------------------------------------------------

    @classmethod
    def zero(cls):
        return cls()

    @classmethod
    def const(cls, q):
        return cls({(0, 0, 0): Fraction(q)})

    @classmethod
    def var(cls, name):
        e = [0, 0, 0]
        e[_VARS.index(name)] = 1
        return cls({tuple(e): Fraction(1)})

    @classmethod
    def from_string(cls, text, params=None):
        """Parse e.g. ``"v2*t - x*P/2"`` with rational parameter bindings."""
        params = {k: Fraction(v) for k, v in (params or {}).items()}
        try:
            tree = ast.parse(text.strip(), mode="eval")
        except SyntaxError as exc:
            raise ConfigurationError(f"cannot parse polynomial {text!r}: {exc}") from exc

        def build(node):
            if isinstance(node, ast.Expression):
                return build(node.body)
            if isinstance(node, ast.Constant):
                if isinstance(node.value, int):
                    return cls.const(node.value)
                raise ConfigurationError(f"only integer literals allowed, got {node.value!r}")
            if isinstance(node, ast.Name):
                if node.id in _VARS:
                    return cls.var(node.id)
                if node.id in params:
                    return cls.const(params[node.id])
                raise ConfigurationError(f"unbound symbol {node.id!r} in {text!r}")
            if isinstance(node, ast.UnaryOp):
                inner = build(node.operand)
                return -inner if isinstance(node.op, ast.USub) else inner
            if isinstance(node, ast.BinOp):
                left, right = build(node.left), build(node.right)
                if isinstance(node.op, ast.Add):
                    return left + right
                if isinstance(node.op, ast.Sub):
                    return left - right
                if isinstance(node.op, ast.Mult):
                    return left * right
                if isinstance(node.op, ast.Div):
                    if not right.is_constant():
                        raise ConfigurationError("division only by constants")
                    return left * (Fraction(1) / right.constant_value())
                if isinstance(node.op, ast.Pow):
                    if not isinstance(node.right, ast.Constant) or not isinstance(node.right.value, int):
                        raise ConfigurationError("exponent must be an integer literal")
                    out = cls.const(1)
                    for _ in range(node.right.value):
                        out = out * left
                    return out
            raise ConfigurationError(f"unsupported syntax in polynomial {text!r}")

        return build(tree)

    # -- ring operations ---------------------------------------------------

    def __add__(self, other):
        other = self._coerce(other)
        out = dict(self.terms)
        for k, c in other.terms.items():
            out[k] = out.get(k, Fraction(0)) + c
        return PolyCoeff(out)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __neg__(self):
        return PolyCoeff({k: -c for k, c in self.terms.items()})

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return PolyCoeff({k: c * Fraction(other) for k, c in self.terms.items()})
        out = {}
        for k1, c1 in self.terms.items():
            for k2, c2 in other.terms.items():
                k = (k1[0] + k2[0], k1[1] + k2[1], k1[2] + k2[2])
                out[k] = out.get(k, Fraction(0)) + c1 * c2
        return PolyCoeff(out)

    __rmul__ = __mul__

    @staticmethod
    def _coerce(v):
        return v if isinstance(v, PolyCoeff) else PolyCoeff.const(v)

    def diff(self, name):
        """Exact partial derivative with respect to x, t or P."""
        ax = _VARS.index(name)
        out = {}
        for k, c in self.terms.items():
            if k[ax] == 0:
                continue
            nk = list(k)
            nk[ax] -= 1
            out[tuple(nk)] = c * k[ax]
        return PolyCoeff(out)

    # -- inspection ---------------------------------------------------------

    def is_zero(self):
        return not self.terms

    def is_constant(self):
        return all(sum(k) == 0 for k in self.terms)

    def constant_value(self):
        return self.terms.get((0, 0, 0), Fraction(0))

    @property
    def degree(self):
        return max((sum(k) for k in self.terms), default=0)

    def depends_on(self, name):
        ax = _VARS.index(name)
        return any(k[ax] > 0 for k in self.terms)

    def __eq__(self, other):
        if not isinstance(other, PolyCoeff):
            return NotImplemented
        return self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def evaluate(self, x, t, P=0.0):
        """Float evaluation, numpy-broadcastable."""
        out = 0.0
        for (i, j, k), c in self.terms.items():
            term = float(c)
            if i:
                term = term * np.asarray(x, dtype=float) ** i
            if j:
                term = term * np.asarray(t, dtype=float) ** j
            if k:
                term = term * np.asarray(P, dtype=float) ** k
            out = out + term
        return out

    def __repr__(self):
        if not self.terms:
            return "0"
        parts = []
        for k in sorted(self.terms, key=lambda k: (sum(k), k)):
            c = self.terms[k]
            mono = "*".join(
                v if e == 1 else f"{v}^{e}"
                for v, e in zip(_VARS, k) if e)
            if not mono:
                parts.append(str(c))
            elif c == 1:
                parts.append(mono)
            elif c == -1:
                parts.append(f"-{mono}")
            else:
                parts.append(f"{c}*{mono}")
        s = " + ".join(parts)
        return s.replace("+ -", "- ")


@dataclass(frozen=True)
class SymmetryGenerator:
    """Vector field xi*d/dx + eta*d/dt + zeta*d/dP."""

    xi: PolyCoeff
    eta: PolyCoeff
    zeta: PolyCoeff
    label: str = ""

    def apply_to(self, w: PolyCoeff) -> PolyCoeff:
        """Action as a derivation on a polynomial."""
        return self.xi * w.diff("x") + self.eta * w.diff("t") + self.zeta * w.diff("P")

    def components(self):
        return (self.xi, self.eta, self.zeta)

    def is_affine(self) -> bool:
        return all(c.degree <= 1 for c in self.components())

    def affine_matrix(self) -> np.ndarray:
        """4x4 matrix M with d/de (x,t,P,1)^T = M (x,t,P,1)^T."""
        if not self.is_affine():
            raise FlowError("generator is not affine in (x, t, P)")
        M = np.zeros((4, 4))
        for r, comp in enumerate(self.components()):
            for (i, j, k), c in comp.terms.items():
                col = 3 if (i, j, k) == (0, 0, 0) else (i, j, k).index(1)
                M[r, col] = float(c)
        return M

    def evaluate(self, x, t, P=0.0):
        return (self.xi.evaluate(x, t, P),
                self.eta.evaluate(x, t, P),
                self.zeta.evaluate(x, t, P))

    def is_zero(self):
        return all(c.is_zero() for c in self.components())

    def __repr__(self):
        name = f"{self.label}: " if self.label else ""
        return f"<{name}xi={self.xi!r}, eta={self.eta!r}, zeta={self.zeta!r}>"


def generator(xi="0", eta="0", zeta="0", label="", params=None) -> SymmetryGenerator:
    """Convenience constructor from polynomial strings."""
    return SymmetryGenerator(
        PolyCoeff.from_string(str(xi), params),
        PolyCoeff.from_string(str(eta), params),
        PolyCoeff.from_string(str(zeta), params),
        label,
    )


def linear_combination(terms) -> SymmetryGenerator:
    """Sum of (rational coefficient, generator) pairs."""
    xi = eta = zeta = PolyCoeff.zero()
    for c, g in terms:
        c = Fraction(c)
        xi = xi + g.xi * c
        eta = eta + g.eta * c
        zeta = zeta + g.zeta * c
    return SymmetryGenerator(xi, eta, zeta)


def commutator(v: SymmetryGenerator, w: SymmetryGenerator) -> SymmetryGenerator:
    """Exact Lie bracket [v, w] with components v(w_i) - w(v_i)."""
    return SymmetryGenerator(
        v.apply_to(w.xi) - w.apply_to(v.xi),
        v.apply_to(w.eta) - w.apply_to(v.eta),
        v.apply_to(w.zeta) - w.apply_to(v.zeta),
        label=f"[{v.label or 'v'},{w.label or 'w'}]",
    )


def jacobi_residual(u, v, w) -> SymmetryGenerator:
    """[[u,v],w] + [[v,w],u] + [[w,u],v]; zero for any honest bracket."""
    return linear_combination([
        (1, commutator(commutator(u, v), w)),
        (1, commutator(commutator(v, w), u)),
        (1, commutator(commutator(w, u), v)),
    ])


# -- algebra tables ----------------------------------------------------------

@dataclass(frozen=True)
class AlgebraTable:
    """Generators plus the expected bracket [v_i, v_j] for every i < j.

    Expected brackets are rational linear combinations, stored as tuples
    of (coefficient, generator index).
    """

    label: str
    generators: tuple
    expected: dict

    def __post_init__(self):
        n = len(self.generators)
        for (i, j), combo in self.expected.items():
            if not (0 <= i < j < n):
                raise DimensionError(f"bracket pair ({i},{j}) out of range")
            for _c, k in combo:
                if not 0 <= k < n:
                    raise DimensionError(f"bracket target index {k} out of range")

    def expected_generator(self, i, j) -> SymmetryGenerator:
        return linear_combination(
            [(c, self.generators[k]) for c, k in self.expected.get((i, j), ())])

    def with_expected(self, i, j, combo) -> "AlgebraTable":
        new = dict(self.expected)
        new[(i, j)] = tuple(combo)
        return AlgebraTable(self.label, self.generators, new)


@dataclass
class BracketCheck:
    i: int
    j: int
    passed: bool
    computed: str
    expected: str


@dataclass
class AlgebraReport:
    label: str
    checks: list = field(default_factory=list)

    @property
    def all_passed(self):
        return all(c.passed for c in self.checks)

    @property
    def n_passed(self):
        return sum(c.passed for c in self.checks)

    def to_dict(self):
        return {
            "label": self.label,
            "all_passed": self.all_passed,
            "pairs": [
                {"i": c.i, "j": c.j, "passed": c.passed,
                 "computed": c.computed, "expected": c.expected}
                for c in self.checks
            ],
        }


def verify_algebra(table: AlgebraTable) -> AlgebraReport:
    """Exact check of every pairwise bracket against the declared table."""
    report = AlgebraReport(table.label)
    n = len(table.generators)
    for i in range(n):
        for j in range(i + 1, n):
            got = commutator(table.generators[i], table.generators[j])
            want = table.expected_generator(i, j)
            diff = linear_combination([(1, got), (-1, want)])
            report.checks.append(BracketCheck(
                i, j, diff.is_zero(), repr(got), repr(want)))
    return report


# -- the four algebras -------------------------------------------------------

def nl_diffusion_algebra() -> AlgebraTable:
    """Symmetries of dP/dt = F(P) d2P/dx2 with generic coefficient F."""
    v1 = generator(xi="1", label="x-shift")
    v2 = generator(eta="1", label="t-shift")
    v3 = generator(xi="x", eta="2*t", label="parabolic-scaling")
    return AlgebraTable("nl-diffusion", (v1, v2, v3), {
        (0, 1): (),
        (0, 2): ((1, 0),),
        (1, 2): ((2, 1),),
    })


def power_law_diffusion_algebra(m, b=0) -> AlgebraTable:
    """Symmetries of dP/dt = A (P+b)^m d2P/dx2 (m is the full coefficient exponent)."""
    m, b = Fraction(m), Fraction(b)
    if m == 0:
        raise ConfigurationError("power-law exponent m must be nonzero")
    params = {"m": m, "b": b}
    v1 = generator(xi="1", label="x-shift")
    v2 = generator(eta="1", label="t-shift")
    v3 = generator(xi="x", zeta="(2*P + 2*b)/m", label="x-scaling", params=params)
    v4 = generator(eta="t", zeta="-(P + b)/m", label="t-scaling", params=params)
    return AlgebraTable("power-law-diffusion", (v1, v2, v3, v4), {
        (0, 1): (),
        (0, 2): ((1, 0),),
        (0, 3): (),
        (1, 2): (),
        (1, 3): ((1, 1),),
        (2, 3): (),
    })


def nl_telegrapher_algebra(v=1) -> AlgebraTable:
    """Translations plus hyperbolic rotation, speed parameter v."""
    params = {"v2": Fraction(v) ** 2}
    v1 = generator(xi="1", label="x-shift")
    v2 = generator(eta="1", label="t-shift")
    v3 = generator(xi="v2*t", eta="x", label="boost", params=params)
    return AlgebraTable("nl-telegrapher", (v1, v2, v3), {
        (0, 1): (),
        (0, 2): ((1, 1),),
        (1, 2): ((Fraction(v) ** 2, 0),),
    })


def telegrapher_algebra(v=1, a=1) -> AlgebraTable:
    """Damped wave equation: translations, amplitude scaling, damped boost."""
    params = {"v2": Fraction(v) ** 2, "a": Fraction(a)}
    v1 = generator(xi="1", label="x-shift")
    v2 = generator(eta="1", label="t-shift")
    v3 = generator(zeta="P", label="p-scale")
    v4 = generator(xi="v2*t", eta="x", zeta="-a*x*P", label="damped-boost", params=params)
    return AlgebraTable("linear-telegrapher", (v1, v2, v3, v4), {
        (0, 1): (),
        (0, 2): (),
        (0, 3): ((1, 1), (-Fraction(a), 2)),
        (1, 2): (),
        (1, 3): ((Fraction(v) ** 2, 0),),
        (2, 3): (),
    })


ALGEBRA_FACTORIES = {
    "nl-diffusion": nl_diffusion_algebra,
    "power-law-diffusion": power_law_diffusion_algebra,
    "nl-telegrapher": nl_telegrapher_algebra,
    "linear-telegrapher": telegrapher_algebra,
}


def load_generator_set(text) -> list:
    """Parse the declarative generator format.

    ``param NAME = rational`` lines bind parameters; blank-line-separated
    blocks with ``name/xi/eta/zeta`` keys define generators.
    """
    params = {}
    blocks, current = [], {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            if current:
                blocks.append(current)
                current = {}
            continue
        if line.startswith("param "):
            try:
                key, val = line[6:].split("=", 1)
                params[key.strip()] = Fraction(val.strip())
            except (ValueError, ZeroDivisionError) as exc:
                raise ConfigurationError(f"line {lineno}: bad param {line!r}") from exc
            continue
        if "=" not in line:
            raise ConfigurationError(f"line {lineno}: expected key = value, got {line!r}")
        key, val = (s.strip() for s in line.split("=", 1))
        if key not in ("name", "xi", "eta", "zeta"):
            raise ConfigurationError(f"line {lineno}: unknown key {key!r}")
        current[key] = val
    if current:
        blocks.append(current)
    out = []
    for blk in blocks:
        out.append(generator(
            xi=blk.get("xi", "0"), eta=blk.get("eta", "0"),
            zeta=blk.get("zeta", "0"), label=blk.get("name", ""),
            params=params))
    return out


# -- one-parameter group flows -------------------------------------------------

@dataclass(frozen=True)
class GroupElement:
    generator: SymmetryGenerator
    epsilon: float


def flow(g: GroupElement, point):
    """Transformed point exp(eps*v)(x, t, P).

    Affine generators use the exact 4x4 matrix exponential; otherwise the
    flow ODE is integrated adaptively to tolerance 1e-12.  Accepts a
    single (x, t, P) triple or an (n, 3) array.
    """
    pts = np.atleast_2d(np.asarray(point, dtype=float))
    if pts.shape[-1] != 3:
        raise DimensionError("points must be (x, t, P) triples")
    out = _flow_points(g.generator, g.epsilon, pts)
    return out[0] if np.asarray(point).ndim == 1 else out


def _flow_points(gen: SymmetryGenerator, eps: float, pts: np.ndarray) -> np.ndarray:
    if eps == 0.0:
        return pts.copy()
    if gen.is_affine():
        M = gen.affine_matrix()
        prop = expm(eps * M)
        aug = np.hstack([pts, np.ones((len(pts), 1))])
        return (aug @ prop.T)[:, :3]
    return _flow_numeric(gen, eps, pts)


def _flow_numeric(gen: SymmetryGenerator, eps: float, pts: np.ndarray) -> np.ndarray:
    n = len(pts)

    def rhs(_s, y):
        x, t, P = y[:n], y[n:2 * n], y[2 * n:]
        dx, dt, dP = gen.evaluate(x, t, P)
        return np.concatenate([np.broadcast_to(dx, (n,)),
                               np.broadcast_to(dt, (n,)),
                               np.broadcast_to(dP, (n,))])

    y0 = np.concatenate([pts[:, 0], pts[:, 1], pts[:, 2]])
    sol = solve_ivp(rhs, (0.0, eps), y0, method="DOP853", rtol=1e-12, atol=1e-12)
    if not sol.success:
        raise FlowError(f"flow integration failed: {sol.message}")
    yf = sol.y[:, -1]
    return np.stack([yf[:n], yf[n:2 * n], yf[2 * n:]], axis=1)


# -- solution transport --------------------------------------------------------

def _inverse_base_map(gen: SymmetryGenerator, eps: float, xs, ts, map_kind):
    """Map target (x1, t1) back to source (x0, t0).

    Requires xi and eta independent of P (true for every generator here).
    """
    if gen.xi.depends_on("P") or gen.eta.depends_on("P"):
        raise ConfigurationError(
            "solution transport needs xi, eta independent of P")
    if map_kind == "exact":
        pts = np.stack([xs, ts, np.zeros_like(xs)], axis=1)
        back = _flow_points(
            SymmetryGenerator(gen.xi, gen.eta, PolyCoeff.zero()), -eps, pts)
        return back[:, 0], back[:, 1]
    # first-order truncated map: solve x1 = x + eps*xi(x,t), t1 = t + eps*eta(x,t)
    x0, t0 = xs.copy(), ts.copy()
    for _ in range(100):
        xi_v, eta_v, _ = gen.evaluate(x0, t0, 0.0)
        nx0 = xs - eps * xi_v
        nt0 = ts - eps * eta_v
        delta = max(np.max(np.abs(nx0 - x0)), np.max(np.abs(nt0 - t0)))
        x0, t0 = nx0, nt0
        if delta < 1e-14:
            break
    else:
        raise FlowError("truncated-map inversion did not converge")
    return x0, t0


def _default_target(sol: FieldHistory, gen, eps, map_kind):
    """Largest lattice sub-rectangle whose inverse image stays in the hull."""
    g = sol.grid
    X, T = np.meshgrid(g.x(), g.t())
    x0, t0 = _inverse_base_map(gen, eps, X.ravel(), T.ravel(), map_kind)
    fx = 1e-9 * max(g.dx, 1.0)
    ft = 1e-9 * max(g.dt, 1.0)
    ok = ((x0 >= g.x_min - fx) & (x0 <= g.x_max + fx)
          & (t0 >= g.t0 - ft) & (t0 <= g.t_end + ft)).reshape(g.nt, g.nx)
    rows = np.nonzero(ok.any(axis=1))[0]
    if rows.size < 3:
        raise DomainError("transform clips the whole time range")
    lo = np.array([np.argmax(ok[r]) for r in rows])
    hi = np.array([g.nx - 1 - np.argmax(ok[r][::-1]) for r in rows])
    i0, i1 = int(lo.max()), int(hi.min())
    if i1 - i0 < 4:
        raise DomainError(
            f"transform clips too much of the domain (columns {i0}..{i1} remain)")
    return int(rows[0]), int(rows[-1]), i0, i1


def restrict_to_subgrid(sol: FieldHistory, n0, n1, i0, i1) -> FieldHistory:
    """Exact restriction (pure slicing) onto a lattice sub-rectangle."""
    sub = sol.grid.subgrid(i0, i1, n0, n1)
    return FieldHistory(sub, sol.values[:, n0:n1 + 1, i0:i1 + 1].copy(), dict(sol.info))


def transform_solution(sol: FieldHistory, g: GroupElement, target=None,
                       map_kind: str = "exact", component: int = 0) -> FieldHistory:
    """Push a solution graph through a one-parameter group element.

    The new field P1 at a target node (x1, t1) is obtained by mapping the
    node back through the base flow, interpolating the source field there,
    and applying the flow of the dependent variable.  ``map_kind`` selects
    the exact exponentiated flow or its first-order truncation
    (x, t, P) + eps*(xi, eta, zeta).

    ``target`` is (n0, n1, i0, i1) lattice index bounds on sol's grid; by
    default the largest sub-rectangle that avoids extrapolation is used.
    """
    if map_kind not in ("exact", "infinitesimal"):
        raise ConfigurationError(f"unknown map_kind {map_kind!r}")
    gen, eps = g.generator, g.epsilon
    if target is None:
        target = _default_target(sol, gen, eps, map_kind)
    n0, n1, i0, i1 = target
    sub = sol.grid.subgrid(i0, i1, n0, n1)
    X, T = np.meshgrid(sub.x(), sub.t())
    x0, t0 = _inverse_base_map(gen, eps, X.ravel(), T.ravel(), map_kind)
    # guard the hull before interpolating, with a descriptive clip report
    gfull = sol.grid
    fx = 1e-9 * max(gfull.dx, 1.0)
    bad = ((x0 < gfull.x_min - fx) | (x0 > gfull.x_max + fx)
           | (t0 < gfull.t0 - fx) | (t0 > gfull.t_end + fx))
    if np.any(bad):
        raise DomainError(
            f"{int(bad.sum())} target nodes map outside the source hull; "
            "shrink the target grid")
    x0 = np.clip(x0, gfull.x_min, gfull.x_max)
    t0 = np.clip(t0, gfull.t0, gfull.t_end)
    P0 = interpolate(sol, x0, t0, component=component)
    if eps == 0.0:
        P1 = P0
    elif map_kind == "infinitesimal":
        P1 = P0 + eps * gen.zeta.evaluate(x0, t0, P0)
    elif gen.is_affine():
        M = gen.affine_matrix()
        prop = expm(eps * M)
        aug = np.stack([x0, t0, P0, np.ones_like(P0)], axis=1)
        P1 = (aug @ prop.T)[:, 2]
    else:
        P1 = _dependent_flow(gen, eps, x0, t0, P0)
    vals = P1.reshape(1, sub.nt, sub.nx)
    info = {"epsilon": eps, "map_kind": map_kind, "target": target,
            "generator": gen.label}
    return FieldHistory(sub, vals, info)


def _dependent_flow(gen: SymmetryGenerator, eps, x0, t0, P0):
    """Integrate dP/ds = zeta(x(s), t(s), P) along the affine base flow."""
    base = SymmetryGenerator(gen.xi, gen.eta, PolyCoeff.zero())
    if not base.is_affine():
        raise FlowError("non-affine base flow with P-dependent zeta is unsupported")
    M = base.affine_matrix()
    aug0 = np.stack([x0, t0, np.zeros_like(x0), np.ones_like(x0)], axis=1)

    def rhs(s, P):
        pos = aug0 @ expm(s * M).T
        return gen.zeta.evaluate(pos[:, 0], pos[:, 1], P)

    sol = solve_ivp(rhs, (0.0, eps), P0, method="DOP853", rtol=1e-12, atol=1e-12)
    if not sol.success:
        raise FlowError(f"dependent-variable flow failed: {sol.message}")
    return sol.y[:, -1]


# -- invariance verification ---------------------------------------------------

@dataclass
class InvarianceReport:
    generator: str
    epsilons: list
    residual_sup: list
    baseline_sup: float
    delta_sup: list
    fitted_order: float
    map_kind: str

    def to_dict(self):
        return {
            "generator": self.generator,
            "map_kind": self.map_kind,
            "epsilons": list(self.epsilons),
            "residual_sup": list(self.residual_sup),
            "baseline_sup": self.baseline_sup,
            "delta_sup": list(self.delta_sup),
            "fitted_order": self.fitted_order,
        }


def invariance_residual(kind, sol: FieldHistory, gen: SymmetryGenerator,
                        epsilons, map_kind: str = "infinitesimal") -> InvarianceReport:
    """Residual growth of a transformed numerical solution in epsilon.

    For each epsilon the solution is transported by the group element and
    plugged back into the equation; the epsilon = 0 residual field (the
    scheme's own truncation error, restricted to the common target grid)
    is subtracted before fitting the power law.  A generator that leaves
    the equation invariant shows order ~2 under the truncated map; a
    non-symmetry shows order ~1.
    """
    epsilons = sorted(float(e) for e in epsilons)
    if not epsilons or epsilons[0] <= 0:
        raise ConfigurationError("epsilons must be positive")
    # the largest epsilon clips the most; use its target for all runs
    target = _default_target(sol, gen, epsilons[-1], map_kind)
    for e in epsilons[:-1]:
        t2 = _default_target(sol, gen, e, map_kind)
        target = (max(target[0], t2[0]), min(target[1], t2[1]),
                  max(target[2], t2[2]), min(target[3], t2[3]))
    base_field = restrict_to_subgrid(sol, *target[:2], *target[2:])
    R0 = solvers.residual(kind, base_field)
    r0 = _interior_sup(R0)
    sups, deltas = [], []
    for e in epsilons:
        moved = transform_solution(sol, GroupElement(gen, e), target, map_kind)
        Re = solvers.residual(kind, moved)
        sups.append(_interior_sup(Re))
        deltas.append(_interior_sup_diff(Re, R0))
    order = fit_convergence_order(epsilons, deltas)
    return InvarianceReport(gen.label or repr(gen), epsilons, sups, r0,
                            deltas, order, map_kind)


def _interior_sup(residual_field: FieldHistory) -> float:
    vals = residual_field.values[:, 1:-1, 1:-1]
    return float(np.max(np.abs(vals))) if vals.size else 0.0


def _interior_sup_diff(a: FieldHistory, b: FieldHistory) -> float:
    va = a.values[:, 1:-1, 1:-1]
    vb = b.values[:, 1:-1, 1:-1]
    return float(np.max(np.abs(va - vb))) if va.size else 0.0
