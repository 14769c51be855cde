import numpy as np
import pytest

from stochpde.errors import DimensionError, DomainError
from stochpde.grid import (
    Dirichlet,
    FieldHistory,
    Periodic,
    Reflecting,
    SpaceTimeGrid,
    cubic_interp_1d,
    fit_convergence_order,
    first_space_derivative,
    grid_norm,
    interpolate,
    l1_distance,
    second_space_derivative,
)


def make_grid(x_min=-1.0, x_max=1.0, nx=101, dt=1e-3, nt=11, t0=0.0):
    return SpaceTimeGrid(x_min, x_max, nx, dt, nt, t0)


class TestSpaceTimeGrid:
    def test_spacing(self):
        g = make_grid(0.0, 1.0, 11)
        assert g.dx == pytest.approx(0.1)
        assert np.allclose(g.x(), np.linspace(0, 1, 11))
        assert np.allclose(g.t(), np.arange(11) * 1e-3)

    def test_invariants_rejected(self):
        with pytest.raises(DimensionError):
            SpaceTimeGrid(0.0, 1.0, 2, 1e-3, 5)
        with pytest.raises(DimensionError):
            SpaceTimeGrid(0.0, 1.0, 11, 1e-3, 1)
        with pytest.raises(DimensionError):
            SpaceTimeGrid(1.0, 0.0, 11, 1e-3, 5)
        with pytest.raises(DimensionError):
            SpaceTimeGrid(0.0, 1.0, 11, -1e-3, 5)

    def test_refine_and_subgrid(self):
        g = make_grid(nx=11, nt=5)
        f = g.refine(2)
        assert f.nx == 21 and f.nt == 9 and f.dx == pytest.approx(g.dx / 2)
        s = g.subgrid(2, 8, 1, 3)
        assert s.nx == 7 and s.nt == 3
        assert s.x_min == pytest.approx(g.x(2))
        assert s.t0 == pytest.approx(g.t(1))


class TestSecondSpaceDerivative:
    def test_constant_is_zero(self):
        f = np.full(50, 3.7)
        assert np.all(second_space_derivative(f, 0.1) == 0.0)

    def test_quadratic_exact(self):
        x = np.linspace(-1, 1, 41)
        d2 = second_space_derivative(x**2, x[1] - x[0], Dirichlet())
        assert np.allclose(d2[1:-1], 2.0, atol=1e-10)

    def test_sine_analytic(self):
        dx = 0.01
        x = np.arange(0, 2 * np.pi, dx)
        d2 = second_space_derivative(np.sin(x), dx, Dirichlet())
        assert np.max(np.abs(d2[1:-1] + np.sin(x)[1:-1])) < 1e-4

    def test_too_small(self):
        with pytest.raises(DimensionError):
            second_space_derivative(np.array([1.0, 2.0]), 0.1)

    def test_periodic_wraps(self):
        x = np.linspace(0, 2 * np.pi, 129)[:-1]  # periodic nodes
        d2 = second_space_derivative(np.sin(x), x[1] - x[0], Periodic())
        assert np.max(np.abs(d2 + np.sin(x))) < 1e-2

    def test_reflecting_edges(self):
        f = np.cos(np.linspace(0, np.pi, 101))  # zero slope at both ends
        d2 = second_space_derivative(f, np.pi / 100, Reflecting())
        assert abs(d2[0] + f[0]) < 1e-2 and abs(d2[-1] + f[-1]) < 1e-2

    def test_refinement_order(self):
        hs, errs = [], []
        for nx in (65, 129, 257, 513):
            x = np.linspace(0, 1, nx)
            dx = x[1] - x[0]
            d2 = second_space_derivative(np.exp(np.sin(3 * x)), dx, Dirichlet())
            exact = np.exp(np.sin(3 * x)) * (9 * np.cos(3 * x) ** 2 - 9 * np.sin(3 * x))
            hs.append(dx)
            errs.append(np.max(np.abs(d2[1:-1] - exact[1:-1])))
        p = fit_convergence_order(hs, errs)
        assert 1.9 <= p <= 2.1


class TestFirstSpaceDerivative:
    def test_linear_exact(self):
        x = np.linspace(0, 1, 21)
        d1 = first_space_derivative(2.5 * x + 1, x[1] - x[0], Dirichlet())
        assert np.allclose(d1, 2.5, atol=1e-12)


class TestNorms:
    def test_zero_field(self):
        assert grid_norm(np.zeros(7), "sup") == 0.0
        assert grid_norm(np.zeros(7), "l2", dx=0.1) == 0.0

    def test_single_entry_sup(self):
        assert grid_norm(np.array([3.0]), "sup") == 3.0

    def test_unit_l2(self):
        for nx in (11, 64, 301):
            dx = 1.0 / (nx - 1)
            assert grid_norm(np.ones(nx), "l2", dx=dx) == pytest.approx(1.0, abs=1e-12)

    def test_empty_rejected(self):
        with pytest.raises(DimensionError):
            grid_norm(np.array([]), "sup")

    def test_l1_offset_closed_form(self):
        nx = 101
        dx = 1.0 / (nx - 1)
        a = np.sin(np.linspace(0, 1, nx))
        assert l1_distance(a + 1e-3, a, dx) == pytest.approx(1e-3, rel=1e-12)


class TestInterpolation:
    def test_node_identity(self):
        g = make_grid(0.0, 1.0, 21, 0.05, 9)
        rng = np.random.default_rng(0)
        f = FieldHistory(g, rng.normal(size=(1, g.nt, g.nx)))
        assert interpolate(f, g.x(7), g.t(3)) == pytest.approx(f.values[0, 3, 7], abs=1e-13)

    def test_bilinear_exact(self):
        g = make_grid(0.0, 1.0, 21, 0.05, 9)
        f = FieldHistory.from_function(g, lambda x, t: 2.0 * x - 3.0 * t + 0.5)
        xs = np.array([0.013, 0.5, 0.987])
        ts = np.array([0.001, 0.2, 0.39])
        got = interpolate(f, xs, ts)
        assert np.allclose(got, 2.0 * xs - 3.0 * ts + 0.5, atol=1e-13)

    def test_cubic_reproduction(self):
        g = make_grid(-1.0, 1.0, 25, 0.125, 9)
        f = FieldHistory.from_function(
            g, lambda x, t: (x**3 - 0.5 * x**2) * (t**3 + 2 * t + 1))
        rng = np.random.default_rng(1)
        xs = rng.uniform(-1, 1, 50)
        ts = rng.uniform(0, 1, 50)
        exact = (xs**3 - 0.5 * xs**2) * (ts**3 + 2 * ts + 1)
        got = interpolate(f, xs, ts)
        scale = np.max(np.abs(exact))
        assert np.max(np.abs(got - exact)) / scale < 1e-10

    def test_analytic_accuracy(self):
        g = SpaceTimeGrid(0.0, 2.0, 201, 0.01, 101)
        f = FieldHistory.from_function(g, lambda x, t: np.sin(x) * np.exp(-t))
        rng = np.random.default_rng(2)
        xs = rng.uniform(0.05, 1.95, 200)
        ts = rng.uniform(0.05, 0.95, 200)
        got = interpolate(f, xs, ts)
        assert np.max(np.abs(got - np.sin(xs) * np.exp(-ts))) < 1e-6

    def test_out_of_hull(self):
        g = make_grid()
        f = FieldHistory(g, np.zeros((1, g.nt, g.nx)))
        with pytest.raises(DomainError):
            interpolate(f, 1.5, 0.0)
        with pytest.raises(DomainError):
            interpolate(f, 0.0, -0.5)

    def test_periodic_1d_wrap(self):
        n = 64
        dx = 2 * np.pi / n
        x = np.arange(n) * dx
        vals = np.sin(x)
        xq = np.array([-0.3, 2 * np.pi + 0.2, 0.1])
        got = cubic_interp_1d(vals, 0.0, dx, xq, periodic=True)
        assert np.allclose(got, np.sin(xq), atol=1e-5)


class TestFieldHistoryIO:
    def _field(self, complex_=False):
        g = make_grid(0.0, 1.0, 11, 0.1, 4)
        rng = np.random.default_rng(5)
        v = rng.normal(size=(2, 4, 11))
        if complex_:
            v = v + 1j * rng.normal(size=v.shape)
        return FieldHistory(g, v)

    def test_csv_roundtrip(self, tmp_path):
        f = self._field()
        p = tmp_path / "field.csv"
        f.to_csv(p)
        head = p.read_text().splitlines()[0]
        assert head == "t,x,component,value"
        back = FieldHistory.from_csv(p)
        assert np.allclose(back.values, f.values, atol=0, rtol=0)
        assert back.grid.nx == f.grid.nx and back.grid.nt == f.grid.nt

    def test_csv_roundtrip_complex(self, tmp_path):
        f = self._field(complex_=True)
        p = tmp_path / "field.csv"
        f.to_csv(p)
        back = FieldHistory.from_csv(p)
        assert np.allclose(back.values, f.values, atol=0, rtol=0)

    def test_binary_roundtrip(self, tmp_path):
        for complex_ in (False, True):
            f = self._field(complex_)
            p = tmp_path / "field.bin"
            f.to_binary(p)
            assert p.stat().st_size == 64 + f.values.nbytes
            back = FieldHistory.from_binary(p)
            assert np.array_equal(back.values, f.values)
            assert back.grid == f.grid

    def test_values_immutable(self):
        f = self._field()
        with pytest.raises(ValueError):
            f.values[0, 0, 0] = 1.0

    def test_shape_mismatch_rejected(self):
        g = make_grid()
        with pytest.raises(DimensionError):
            FieldHistory(g, np.zeros((1, 2, 3)))
        with pytest.raises(DimensionError):
            FieldHistory(g, np.zeros((3, g.nt, g.nx)))
