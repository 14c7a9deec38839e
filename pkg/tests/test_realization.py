import numpy as np
import pytest

from lpembed.core import (
    PTH_POWER,
    RAW,
    Configuration,
    UpperTriangularMatrix,
    eval_F,
    eval_F_tilde,
    has_property_K,
    make_H_configuration,
)
from lpembed.errors import FoldingFailureError, PreconditionError
from lpembed.realization import (
    SolveOptions,
    estimate_perturbation_radius,
    realize_distance_matrix,
    realize_perturbation,
    reduce_dimension,
)

from conftest import brute_distances


def padded_simplex(p, extra):
    pts = np.zeros((3, 3 + len(extra[0])))
    pts[:, :3] = np.eye(3)
    pts[:, 3:] = extra
    return Configuration(p, pts)


class TestOptions:
    def test_defaults(self):
        o = SolveOptions()
        assert (o.max_iterations, o.residual_tolerance, o.step_damping, o.regularization) == (100, 1e-9, 1.0, 0.0)

    @pytest.mark.parametrize("kw", [{"max_iterations": 0}, {"residual_tolerance": 0},
                                    {"step_damping": 0}, {"regularization": -1}])
    def test_invalid(self, kw):
        with pytest.raises(PreconditionError):
            SolveOptions(**kw)


class TestRealizeDistanceMatrix:
    def test_identity_target(self, simplex3):
        res = realize_distance_matrix(simplex3, eval_F(simplex3))
        assert res.converged and res.iterations_used == 0
        assert res.configuration == simplex3

    def test_simplex_perturbed(self, simplex3):
        target = UpperTriangularMatrix(3, [2.01, 2.0, 2.0], PTH_POWER)
        res = realize_distance_matrix(simplex3, target)
        assert res.converged and res.residual_inf_norm <= 1e-9
        # independent check with explicit loops
        got = brute_distances(res.configuration.points, 2) ** 2
        assert np.max(np.abs(got - [2.01, 2.0, 2.0])) <= 1e-9

    def test_negative_entry_rejected(self, simplex3):
        with pytest.raises(PreconditionError):
            realize_distance_matrix(simplex3, UpperTriangularMatrix(3, [-1.0, 2.0, 2.0]))

    def test_zero_entry_rejected(self, simplex3):
        with pytest.raises(PreconditionError):
            realize_distance_matrix(simplex3, UpperTriangularMatrix(3, [0.0, 2.0, 2.0]))

    def test_base_outside_G(self):
        base = Configuration(2, np.ones((3, 3)))
        with pytest.raises(PreconditionError):
            realize_distance_matrix(base, UpperTriangularMatrix(3, [1.0, 1.0, 1.0]))

    def test_kind_checked(self, simplex3):
        with pytest.raises(PreconditionError):
            realize_distance_matrix(simplex3, UpperTriangularMatrix(3, [1.0, 1.0, 1.0], RAW))

    def test_far_target_reports_nonconvergence(self, simplex3):
        # violates the triangle inequality badly; no configuration realizes it
        target = UpperTriangularMatrix(3, [100.0, 1.0, 1.0])
        res = realize_distance_matrix(simplex3, target, SolveOptions(max_iterations=20))
        assert not res.converged
        assert res.residual_inf_norm == pytest.approx(
            np.max(np.abs(eval_F(res.configuration).entries - target.entries)))

    @pytest.mark.parametrize("p", [1.5, 2.0, 3.0])
    def test_right_inverse_property(self, p):
        rng = np.random.default_rng(int(p * 10))
        for _ in range(20):
            base = make_H_configuration(4, rng.uniform(-1, 1, 6), p)
            target = UpperTriangularMatrix(4, eval_F(base).entries * (1 + rng.uniform(-0.01, 0.01, 6)))
            res = realize_distance_matrix(base, target)
            assert res.converged
            assert np.max(np.abs(eval_F(res.configuration).entries - target.entries)) <= 1e-9

    def test_trace_monotone_and_logged(self, simplex3):
        target = UpperTriangularMatrix(3, [2.3, 1.8, 2.1])
        res = realize_distance_matrix(simplex3, target)
        residuals = [r for _, r in res.trace]
        assert res.trace[0][0] == 0 and len(res.trace) == res.iterations_used + 1
        assert residuals[-1] == res.residual_inf_norm

    def test_regularized_solve(self, simplex3):
        target = UpperTriangularMatrix(3, [2.05, 1.95, 2.0])
        res = realize_distance_matrix(simplex3, target, SolveOptions(regularization=1e-8))
        assert res.converged

    def test_deterministic(self, simplex3):
        target = UpperTriangularMatrix(3, [2.05, 1.95, 2.0])
        a = realize_distance_matrix(simplex3, target)
        b = realize_distance_matrix(simplex3, target)
        assert np.array_equal(a.configuration.points, b.configuration.points)


class TestRealizePerturbation:
    def test_zero_perturbation_is_identity(self):
        base = padded_simplex(2.5, [[0.3, -0.1], [0.2, 0.4], [-0.5, 0.0]])
        res = realize_perturbation(base, eval_F_tilde(base))
        assert res.converged and res.configuration == base

    def test_untouched_coordinates(self):
        base = padded_simplex(2.0, [[0.3, -0.1], [0.2, 0.4], [-0.5, 0.0]])
        d = eval_F_tilde(base).entries.copy()
        d[1] += 0.005
        res = realize_perturbation(base, UpperTriangularMatrix(3, d, RAW))
        assert res.converged
        assert np.array_equal(res.configuration.points[:, 3:], base.points[:, 3:])
        assert np.max(np.abs(brute_distances(res.configuration.points, 2) - d)) <= 1e-9

    def test_continuity_probe(self):
        base = padded_simplex(2.5, [[0.3, -0.1], [0.2, 0.4], [-0.5, 0.0]])
        d = eval_F_tilde(base).entries
        shift = np.array([0.004, -0.002, 0.003])
        a = realize_perturbation(base, UpperTriangularMatrix(3, d + shift, RAW))
        b = realize_perturbation(base, UpperTriangularMatrix(3, d + shift + 1e-6, RAW))
        gap = np.max(np.abs(a.configuration.points - b.configuration.points))
        assert gap <= 1e-3

    def test_requires_property_K(self):
        base = Configuration(2, [[0.0, 1, 1], [0.0, 1, 1], [1.0, 1, 1]])
        with pytest.raises(PreconditionError):
            realize_perturbation(base, UpperTriangularMatrix(3, [1.0, 1.0, 1.0], RAW))

    def test_bad_witness(self):
        base = padded_simplex(2.0, [[0.0, 0.0], [0.0, 0.0], [0.0, 0.0]])
        with pytest.raises(PreconditionError):
            realize_perturbation(base, eval_F_tilde(base), witness=(2, 3, 4))

    def test_rejects_nonpositive_raw(self):
        base = padded_simplex(2.0, [[0.0], [0.0], [0.0]])
        with pytest.raises(PreconditionError):
            realize_perturbation(base, UpperTriangularMatrix(3, [0.0, 1.0, 1.0], RAW))

    def test_pythagorean_split(self):
        rng = np.random.default_rng(0)
        for p in (1.5, 2.0, 2.5, 4.0):
            y = Configuration(p, rng.standard_normal((4, 7)))
            head, tail = y.with_points(y.points[:, :4]), y.with_points(y.points[:, 4:])
            whole = eval_F(y).entries
            assert np.allclose(eval_F(head).entries + eval_F(tail).entries, whole, rtol=1e-12, atol=0)


class TestReduceDimension:
    def test_already_minimal(self):
        x = Configuration(2.5, np.eye(3))
        assert reduce_dimension(x) == x

    def test_common_tail_cancels(self):
        t = np.linspace(-1, 1, 7)
        x = padded_simplex(2.5, np.tile(t, (3, 1)))
        y = reduce_dimension(x)
        assert y.N == 3
        assert np.array_equal(eval_F_tilde(y).entries, eval_F_tilde(x).entries)

    @pytest.mark.parametrize("seed", range(5))
    def test_random_fold(self, seed):
        rng = np.random.default_rng(seed)
        pts = np.hstack([rng.standard_normal((4, 4)), rng.uniform(-0.05, 0.05, (4, 8))])
        x = Configuration(2.5, pts)
        y = reduce_dimension(x)
        assert 4 <= y.N <= 12
        before, after = brute_distances(x.points, 2.5), brute_distances(y.points, 2.5)
        assert np.max(np.abs(after - before) / before) <= 1e-9
        assert has_property_K(y) == (True, (0, 1, 2, 3))

    def test_witness_moves_to_front(self):
        rng = np.random.default_rng(3)
        pts = np.hstack([rng.uniform(-0.05, 0.05, (3, 2)), rng.standard_normal((3, 3))])
        x = Configuration(2.0, pts)
        y = reduce_dimension(x, witness=(2, 3, 4))
        assert np.allclose(eval_F_tilde(y).entries, eval_F_tilde(x).entries, rtol=1e-9)
        assert has_property_K(y)[1] == (0, 1, 2)

    def test_failure_is_reported(self):
        x = Configuration(2.0, np.hstack([np.eye(3), np.zeros((3, 1))]))
        with pytest.raises(FoldingFailureError) as info:
            reduce_dimension(x, isometry_rtol=-1.0)
        assert info.value.residual is not None


class TestPerturbationRadius:
    def test_simplex_radius(self, simplex3):
        eps = estimate_perturbation_radius(simplex3, 10, 0)
        assert eps >= 1e-3
        # regression anchor: the first candidate (half the smallest distance) already passes
        assert eps == pytest.approx(0.5 * np.sqrt(2), rel=1e-15)

    def test_start_at_zero(self, simplex3):
        assert estimate_perturbation_radius(simplex3, 1, 0, initial=0.0) == 0.0

    def test_more_trials_never_larger(self):
        base = make_H_configuration(3, [0.9, -0.8, 0.7], 1.5)
        big = estimate_perturbation_radius(base, 100, 4, initial=5.0)
        small = estimate_perturbation_radius(base, 10, 4, initial=5.0)
        assert big <= small

    def test_rejects_zero_trials(self, simplex3):
        with pytest.raises(PreconditionError):
            estimate_perturbation_radius(simplex3, 0, 0)
