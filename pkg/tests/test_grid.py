"""Discrete calculus: Laplacian, summation by parts, exact inverse, norms."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nlch.grid import Grid


@pytest.fixture
def g1():
    return Grid(lengths=(1.0,), cells=(64,))


@pytest.fixture
def g2():
    return Grid(lengths=(1.0, 0.5), cells=(32, 16))


def rand_field(grid, seed=0):
    return np.random.default_rng(seed).standard_normal(grid.shape)


class TestBasics:
    def test_spacing(self, g2):
        assert g2.spacing == (1.0 / 32, 0.5 / 16)
        assert g2.shape == (16, 32)
        assert g2.cell_volume == pytest.approx((1.0 / 32) * (0.5 / 16))

    def test_validation(self):
        with pytest.raises(ValueError):
            Grid(lengths=(1.0,), cells=(2,))
        with pytest.raises(ValueError):
            Grid(lengths=(-1.0,), cells=(8,))
        with pytest.raises(ValueError):
            Grid(lengths=(1.0, 1.0, 1.0), cells=(8, 8, 8))

    def test_coords_shape(self, g2):
        X, Y = g2.coords()
        assert X.shape == g2.shape and Y.shape == g2.shape
        assert X[0, 0] == pytest.approx(0.5 / 32)
        assert Y[0, 0] == pytest.approx(0.25 / 16)

    def test_inner_is_quadrature(self, g1):
        # integral of x^2 over (0,1) by midpoint rule: exact to O(dx^2)
        x = g1.coords()[0]
        assert g1.inner(x, x) == pytest.approx(1.0 / 3.0, abs=1e-4)

    def test_norms(self, g1):
        u = g1.new_field(2.0)
        assert g1.norm_L2(u) == pytest.approx(2.0)
        assert g1.norm_Linf(u) == 2.0
        assert g1.norm_H1(u) == pytest.approx(2.0)  # constant: no gradient

    def test_shape_mismatch(self, g1, g2):
        with pytest.raises(ValueError):
            g1.mean(rand_field(g2))


class TestLaplacian:
    @pytest.mark.parametrize("gname", ["g1", "g2"])
    def test_mean_free(self, gname, request):
        grid = request.getfixturevalue(gname)
        u = rand_field(grid, 1)
        lap = grid.laplacian(u)
        assert abs(np.sum(lap)) < 1e-10 * np.max(np.abs(u)) / grid.spacing[0] ** 2

    @pytest.mark.parametrize("gname", ["g1", "g2"])
    def test_annihilates_constants(self, gname, request):
        grid = request.getfixturevalue(gname)
        assert np.max(np.abs(grid.laplacian(grid.new_field(3.7)))) == 0.0

    def test_cosine_eigenfunction(self, g1):
        # cos(k pi x) has zero normal derivative at both ends; the stencil
        # reproduces it with the discrete eigenvalue (2-2cos(pi k/n))/dx^2
        x = g1.coords()[0]
        n, dx = g1.cells[0], g1.spacing[0]
        for k in (1, 3, 7):
            u = np.cos(k * np.pi * x)
            lam = (2.0 - 2.0 * np.cos(np.pi * k / n)) / dx**2
            np.testing.assert_allclose(g1.laplacian(u), -lam * u, atol=1e-10)

    @pytest.mark.parametrize("gname", ["g1", "g2"])
    def test_summation_by_parts(self, gname, request):
        grid = request.getfixturevalue(gname)
        u, v = rand_field(grid, 2), rand_field(grid, 3)
        lhs = grid.inner(-grid.laplacian(u), v)
        rhs = grid.inner(-grid.laplacian(v), u)
        assert lhs == pytest.approx(rhs, abs=1e-9 * max(abs(lhs), 1.0))
        assert grid.inner(-grid.laplacian(u), u) == pytest.approx(
            grid.grad_sq_integral(u), rel=1e-10
        )

    @pytest.mark.parametrize("gname", ["g1", "g2"])
    def test_matrix_matches_stencil(self, gname, request):
        grid = request.getfixturevalue(gname)
        u = rand_field(grid, 4)
        L = grid.laplacian_matrix()
        np.testing.assert_allclose(
            (L @ u.ravel()).reshape(grid.shape), grid.laplacian(u), atol=1e-9
        )

    def test_second_order_convergence(self):
        # smooth Neumann-compatible profile; error drops ~4x per refinement
        errs = []
        for n in (32, 64, 128):
            grid = Grid(lengths=(1.0,), cells=(n,))
            x = grid.coords()[0]
            u = np.cos(2 * np.pi * x)
            exact = -(2 * np.pi) ** 2 * u
            errs.append(grid.norm_Linf(grid.laplacian(u) - exact))
        assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.1)
        assert errs[1] / errs[2] == pytest.approx(4.0, rel=0.1)


class TestInverse:
    @pytest.mark.parametrize("gname", ["g1", "g2"])
    def test_inverse_identity(self, gname, request):
        grid = request.getfixturevalue(gname)
        f = rand_field(grid, 5)
        f -= np.mean(f)
        u = grid.inv_laplacian(f)
        assert abs(np.mean(u)) < 1e-12
        np.testing.assert_allclose(-grid.laplacian(u), f, atol=1e-9)

    def test_rejects_nonzero_mean(self, g1):
        with pytest.raises(ValueError):
            grid_f = g1.new_field(1.0)
            g1.inv_laplacian(grid_f)

    def test_self_adjoint(self, g2):
        f = rand_field(g2, 6)
        f -= np.mean(f)
        h = rand_field(g2, 7)
        h -= np.mean(h)
        lhs = g2.inner(f, g2.inv_laplacian(h))
        rhs = g2.inner(h, g2.inv_laplacian(f))
        assert lhs == pytest.approx(rhs, rel=1e-12)

    def test_vprime_norm_via_gradient(self, g1):
        # for f = -lap u: ||f||_dual^2 = <f, u> = |grad u|^2
        u = rand_field(g1, 8)
        u -= np.mean(u)
        f = -g1.laplacian(u)
        assert g1.vprime_norm(f) ** 2 == pytest.approx(
            g1.grad_sq_integral(u), rel=1e-9
        )

    @given(seed=st.integers(0, 10_000))
    @settings(max_examples=25, deadline=None)
    def test_dual_norm_positive(self, seed):
        grid = Grid(lengths=(1.0,), cells=(32,))
        f = np.random.default_rng(seed).standard_normal(grid.shape)
        f -= np.mean(f)
        if np.max(np.abs(f)) < 1e-12:
            return
        assert grid.vprime_norm(f) > 0.0


class TestSerialization:
    def test_csv_roundtrip_1d(self, g1, tmp_path):
        u = rand_field(g1, 9)
        path = tmp_path / "u.csv"
        path.write_text(g1.field_to_csv(u))
        data = np.loadtxt(path, delimiter=",", skiprows=1)
        np.testing.assert_array_equal(data[:, 1], u)
        np.testing.assert_allclose(data[:, 0], g1.axes()[0])

    def test_csv_2d_shape(self, g2):
        text = g2.field_to_csv(rand_field(g2, 10))
        lines = text.strip().split("\n")
        assert lines[0].startswith("#")
        assert len(lines) == 1 + g2.shape[0]
        assert len(lines[1].split(",")) == g2.shape[1]
