import math

import numpy as np
import pytest

from caliblab.exterior import DegenerateInputError
from caliblab.fields import SymTensorField, VectorField
from caliblab.submanifold import (
    Box,
    Patch,
    QuadratureRule,
    circle_patch,
    fd_derivative,
    flat_plane,
    graph_patch,
    induced_metric,
    jet_of_F,
    mean_curvature,
    normal_projector,
    sphere_patch,
    tangent_normal_split,
    torus_patch,
    volume,
)
from caliblab.variation import ambient_family, analytic_first_variation


class TestQuadrature:
    @pytest.mark.parametrize("order", [2, 4, 8])
    def test_polynomial_exactness(self, order):
        rule = QuadratureRule(Box.unit(1), order)
        for deg in range(2 * order):
            got = rule.integrate(rule.nodes[:, 0] ** deg)
            assert got == pytest.approx(1.0 / (deg + 1), rel=1e-13)

    def test_tensorized_2d(self):
        rule = QuadratureRule(Box.make([0, -1], [2, 1]), 5)
        got = rule.integrate(rule.nodes[:, 0] ** 3 * rule.nodes[:, 1] ** 2)
        assert got == pytest.approx(4 * (2.0 / 3.0), rel=1e-12)


class TestPatchCatalog:
    @pytest.mark.parametrize("patch,x", [
        (graph_patch((1, 2), 4, [(3, 0.1, (1, -1), 0.3), (4, 0.05, (2, 1), 1.0)], "g"),
         np.array([0.37, 0.61])),
        (sphere_patch(1.2), np.array([1.1, 2.3])),
        (torus_patch(), np.array([0.8, 2.5])),
        (circle_patch(1.5), np.array([0.9])),
    ])
    def test_derivative_consistency(self, patch, x):
        h = 1e-6
        jac_fd = np.zeros((patch.n, patch.k))
        for a in range(patch.k):
            e = np.zeros(patch.k)
            e[a] = h
            jac_fd[:, a] = (patch.position(x + e) - patch.position(x - e)) / (2 * h)
        assert np.abs(jac_fd - patch.jacobian(x)).max() < 1e-8
        h2 = 1e-4
        for a in range(patch.k):
            e = np.zeros(patch.k)
            e[a] = h2
            hess_fd = (patch.jacobian(x + e) - patch.jacobian(x - e)) / (2 * h2)
            assert np.abs(hess_fd - patch.hessian(x)[:, :, a]).max() < 1e-6


class TestInducedMetricAndVolume:
    def test_flat_plane(self):
        p = flat_plane((1, 2), 5)
        g = induced_metric(p, None, [0.5, 0.5]).entries
        assert np.array_equal(g, np.eye(2))

    def test_circle_metric(self):
        p = circle_patch(2.0)
        g = induced_metric(p, None, [0.7]).entries
        assert g[0, 0] == pytest.approx(4.0)

    def test_graph_metric_oracle(self):
        # u(x) = (x1, x2, f) with f = 0.3 x1^2 x2: g = I + grad(f) grad(f)^T
        def ev(x):
            return np.array([x[0], x[1], 0.3 * x[0] ** 2 * x[1]])

        def jac(x):
            return np.array([[1.0, 0.0], [0.0, 1.0],
                             [0.6 * x[0] * x[1], 0.3 * x[0] ** 2]])

        p = Patch("poly-graph", 2, 3, Box.unit(2), False, ev, jac, None)
        x = np.array([0.4, 0.8])
        grad = np.array([0.6 * x[0] * x[1], 0.3 * x[0] ** 2])
        want = np.eye(2) + np.outer(grad, grad)
        got = induced_metric(p, None, x).entries
        assert np.abs(got - want).max() < 1e-14

    def test_out_of_domain(self):
        p = flat_plane((1, 2), 4)
        with pytest.raises(ValueError):
            induced_metric(p, None, [1.5, 0.0])

    def test_unit_square_volume(self):
        p = flat_plane((1, 3), 6)
        rule = QuadratureRule(p.box, 4)
        assert volume(p, None, rule) == pytest.approx(1.0, abs=1e-14)

    def test_sphere_area(self):
        for r in (1.0, 1.7):
            p = sphere_patch(r)
            rule = QuadratureRule(p.box, 12)
            assert volume(p, None, rule) == pytest.approx(4 * math.pi * r * r, rel=1e-9)

    def test_volume_scaling(self):
        p = flat_plane((1, 2, 3), 7)
        rule = QuadratureRule(p.box, 3)
        t = 0.4
        scaled = volume(p, lambda y: math.exp(t) * np.eye(7), rule)
        assert scaled == pytest.approx(math.exp(3 * t / 2), rel=1e-12)

    def test_volume_monotone_under_domination(self):
        p = sphere_patch(1.0)
        rule = QuadratureRule(p.box, 6)
        rng = np.random.default_rng(0)
        raw = rng.standard_normal((3, 3))
        bump = raw @ raw.T + 0.1 * np.eye(3)
        small = volume(p, None, rule)
        big = volume(p, lambda y: np.eye(3) + bump, rule)
        assert big > small

    def test_degenerate_metric_raises(self):
        p = flat_plane((1, 2), 4)
        rule = QuadratureRule(p.box, 2)
        with pytest.raises(DegenerateInputError):
            volume(p, lambda y: np.diag([1.0, -1.0, 1.0, 1.0]), rule)


class TestSplitting:
    def test_flat_split(self):
        p = flat_plane((1, 2), 4)
        vt, vp = tangent_normal_split(p, None, [0.5, 0.5], np.array([1.0, 0, 1, 0]))
        assert np.allclose(vt, [1, 0, 0, 0])
        assert np.allclose(vp, [0, 0, 1, 0])

    def test_orthogonality_random(self):
        rng = np.random.default_rng(1)
        p = sphere_patch(1.0)
        gfield = lambda y: np.eye(3) + 0.2 * np.outer(y, y)
        for _ in range(10):
            x = np.array([rng.uniform(0.5, 2.5), rng.uniform(0.5, 5.5)])
            v = rng.standard_normal(3)
            vt, vp = tangent_normal_split(p, gfield, x, v)
            assert np.allclose(vt + vp, v)
            g = gfield(p.position(x))
            assert abs(vt @ g @ vp) < 1e-12

    def test_idempotent(self):
        p = sphere_patch(1.0)
        rng = np.random.default_rng(2)
        x = np.array([1.2, 0.7])
        v = rng.standard_normal(3)
        vt, _ = tangent_normal_split(p, None, x, v)
        vt2, vp2 = tangent_normal_split(p, None, x, vt)
        assert np.allclose(vt2, vt) and np.abs(vp2).max() < 1e-12


class TestJetOfF:
    def test_flat_plane_jet(self):
        p = flat_plane((1, 2), 4)
        jet = jet_of_F(p, [0.3, 0.4])
        assert jet.value == 0.0
        assert np.abs(jet.gradient).max() == 0.0
        assert np.allclose(jet.hessian, np.diag([0, 0, 1, 1]))
        # tangent vectors are annihilated, normal vectors returned
        assert np.allclose(jet.hessian @ np.array([1.0, 0, 0, 0]), 0)
        nu = np.array([0.0, 0, 1, 0])
        assert np.allclose(jet.hessian @ nu, nu)

    def test_flat_offpatch_values(self):
        p = flat_plane((1, 2), 4)
        jet = jet_of_F(p, [0.3, 0.4])
        base = p.position([0.3, 0.4])
        for s in (0.05, 0.2):
            y = base + s * np.array([0.0, 0, 1, 0])
            assert jet.evaluate(y) == pytest.approx(0.5 * s * s, abs=1e-12)
        # numeric gradient at an off-patch point points along s nu
        y = base + 0.2 * np.array([0.0, 0, 1, 0])
        h = 1e-6
        grad = np.array([
            (jet.evaluate(y + h * np.eye(4)[i]) - jet.evaluate(y - h * np.eye(4)[i])) / (2 * h)
            for i in range(4)])
        assert np.allclose(grad, 0.2 * np.array([0, 0, 1, 0]), atol=1e-9)

    def test_sphere_jet(self):
        p = sphere_patch(1.3)
        x = np.array([1.1, 2.3])
        jet = jet_of_F(p, x)
        assert np.allclose(jet.hessian, normal_projector(p, x))
        y = p.position(x) * 1.05
        assert jet.evaluate(y) == pytest.approx(0.5 * (0.05 * 1.3) ** 2, abs=1e-12)

    def test_numeric_jet_matches_projector(self):
        # criterion-style check: second differences of F reproduce the projector
        for patch, x in [
            (flat_plane((1, 2, 3), 7), np.array([0.3, 0.5, 0.7])),
            (graph_patch((1, 2), 4, [(3, 0.08, (1, 1), 0.2)], "g4"), np.array([0.4, 0.6])),
        ]:
            jet = jet_of_F(patch, x)
            y0 = patch.position(x)
            h = 3e-4
            n = patch.n
            hess = np.zeros((n, n))
            for i in range(n):
                for j in range(i, n):
                    yy = [y0 + h * np.eye(n)[i] + h * np.eye(n)[j],
                          y0 + h * np.eye(n)[i] - h * np.eye(n)[j],
                          y0 - h * np.eye(n)[i] + h * np.eye(n)[j],
                          y0 - h * np.eye(n)[i] - h * np.eye(n)[j]]
                    val = (jet.evaluate(yy[0]) - jet.evaluate(yy[1])
                           - jet.evaluate(yy[2]) + jet.evaluate(yy[3])) / (4 * h * h)
                    hess[i, j] = hess[j, i] = val
            assert np.abs(hess - jet.hessian).max() < 1e-6


class TestMeanCurvature:
    def test_flat_zero(self):
        p = flat_plane((1, 2), 4)
        assert np.abs(mean_curvature(p, [0.5, 0.5])).max() == 0.0

    def test_circle(self):
        p = circle_patch(2.5)
        x = np.array([0.9])
        h = mean_curvature(p, x)
        assert np.linalg.norm(h) == pytest.approx(1 / 2.5, abs=1e-11)
        assert h @ p.position(x) < 0  # points inward

    def test_sphere_fd_oracle(self):
        # oracle: area variation of the dilated sphere gives |H| = 2/r
        r = 1.4
        p = sphere_patch(r)
        x = np.array([1.0, 2.0])
        h = mean_curvature(p, x)
        assert np.linalg.norm(h) == pytest.approx(2 / r, abs=1e-10)
        nu = p.position(x) / np.linalg.norm(p.position(x))

        def area_near(t):
            q = sphere_patch(r + t)
            rule = QuadratureRule(q.box, 6)
            return volume(q, None, rule)

        darea, _ = fd_derivative(area_near, 0.0, 1e-4)
        # d(4 pi r^2)/dr = 8 pi r = integral of <H, nu> over the sphere
        assert darea == pytest.approx((2 / r) * 4 * math.pi * r * r, rel=1e-6)
        assert h @ nu == pytest.approx(-2 / r, abs=1e-10)


class TestFdDerivative:
    def test_quadratic(self):
        val, _ = fd_derivative(lambda t: t * t, 0.0)
        assert abs(val) < 1e-12

    def test_exponential(self):
        val, err = fd_derivative(math.exp, 0.0)
        assert val == pytest.approx(1.0, abs=1e-10)
        assert err < 1e-8

    def test_scaling_volume_derivative(self):
        p = flat_plane((1, 2, 3), 7)
        rule = QuadratureRule(p.box, 3)

        def vol(t):
            return volume(p, lambda y: math.exp(t) * np.eye(7), rule)

        val, _ = fd_derivative(vol, 0.0)
        assert val == pytest.approx(3.0 / 2.0, abs=1e-9)

    def test_array_valued(self):
        val, _ = fd_derivative(lambda t: np.array([t * t, math.sin(t)]), 0.0)
        assert np.allclose(val, [0.0, 1.0], atol=1e-10)


class TestFirstVariationFormula:
    def test_random_ambient_families(self):
        # d/dt Vol(gbar_t) = (1/2) integral Tr_g h for gbar_t = I + tH + t^2 K
        rng = np.random.default_rng(3)
        patches = [flat_plane((1, 2), 4), sphere_patch(1.0),
                   graph_patch((1, 2), 4, [(4, 0.1, (1, 0), 0.5)], "g")]
        for patch in patches:
            rule = QuadratureRule(patch.box, 6)
            for _ in range(3):
                hf = SymTensorField.random(patch.n, rng, amplitude=0.4)
                kf = SymTensorField.random(patch.n, rng, amplitude=0.4)
                fam = ambient_family(hf, kf)
                analytic = analytic_first_variation(patch, fam, rule)

                def vol(t):
                    def gbar(y):
                        return np.eye(patch.n) + t * hf.value(y) + t * t * kf.value(y)
                    return volume(patch, gbar, rule)

                fd, _ = fd_derivative(vol, 0.0, 1e-4)
                assert fd == pytest.approx(analytic, abs=2e-8)


class TestClosestPoint:
    def test_converges_off_sphere(self):
        p = sphere_patch(1.0, full=False)
        jet = jet_of_F(p, [1.0, 1.0])
        y = p.position([1.3, 2.0]) * 1.2
        cp = jet.closest_point(y)
        assert np.linalg.norm(p.position(cp) - y / 1.2) < 1e-9

    def test_failure_reported_with_residual(self):
        # beyond the curvature radius of a wavy graph the Gauss-Newton
        # iteration oscillates and must report its gradient residual
        p = graph_patch((1, 2), 3, [(3, 0.3, (3, 0), 0.0)], "wavy", closed=False)
        jet = jet_of_F(p, [0.5, 0.5])
        with pytest.raises(DegenerateInputError, match="residual"):
            jet.evaluate(np.array([0.5, 0.5, 8.0]))
