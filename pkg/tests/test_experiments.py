from math import comb

import numpy as np
import pytest

from lpembed.core import Configuration, has_property_K, make_H_configuration, square_jacobian
from lpembed.errors import DimensionError, PreconditionError
from lpembed.experiments import (
    UNIFORM_CUBE,
    LineProbe,
    SampleCampaign,
    g_along,
    line_probe_determinant,
    property_k_survey,
    same_component_partner,
    sample_G_density,
    singular_value_histogram,
    to_csv,
)


class TestDensity:
    def test_n3_all_in_G(self):
        count, rep = sample_G_density(SampleCampaign(3, 3, 2.0, 1000, 1))
        assert count == 1000 and rep["failures"] == []

    def test_n2(self):
        assert sample_G_density(SampleCampaign(2, 2, 1.5, 100, 0))[0] == 100

    def test_replay(self):
        c = SampleCampaign(4, 4, 3.0, 50, 9, UNIFORM_CUBE)
        a, ra = sample_G_density(c)
        b, rb = sample_G_density(c)
        assert a == b and ra == rb

    def test_jobs_do_not_change_result(self):
        c = SampleCampaign(3, 3, 2.5, 40, 2)
        assert sample_G_density(c)[1] == sample_G_density(c, jobs=4)[1]

    def test_requires_square(self):
        with pytest.raises(DimensionError):
            sample_G_density(SampleCampaign(3, 4, 2.0, 5, 0))

    def test_invalid_campaign(self):
        with pytest.raises(PreconditionError):
            SampleCampaign(3, 3, 2.0, 0, 0)

    def test_histogram_counts(self):
        _, rep = sample_G_density(SampleCampaign(3, 3, 2.0, 200, 3))
        assert sum(r["count"] for r in singular_value_histogram(rep, bins=10)) == 200


def _segment(seed, p=2.0, n=3):
    rng = np.random.default_rng(seed)
    a = Configuration(p, rng.standard_normal((n, n)))
    return a, same_component_partner(a, rng)


def _poly_root_count(a, b):
    # p = 2: g is a polynomial of degree <= C(n,2); interpolate it exactly and count roots in (0, 1)
    deg = comb(a.n, 2)
    ts = np.linspace(0, 1, deg + 1)
    coef = np.polyfit(ts, g_along(a, b, ts), deg)
    roots = np.roots(coef)
    real = roots[np.abs(roots.imag) < 1e-9].real
    return int(np.sum((real > 0) & (real < 1)))


class TestLineProbe:
    def test_degenerate_segment(self):
        a, _ = _segment(0)
        res = line_probe_determinant(LineProbe(a, a))
        assert res.zero_bracket_count == 0 and np.allclose(res.g, res.g[0], rtol=1e-12)

    @pytest.mark.parametrize("seed", range(10))
    def test_zero_count_matches_polynomial_roots(self, seed):
        a, b = _segment(seed)
        res = line_probe_determinant(LineProbe(a, b))
        assert res.zero_bracket_count <= 3
        assert res.zero_bracket_count == _poly_root_count(a, b)
        for t in res.refined_zeros:
            assert abs(g_along(a, b, t)[0]) <= 1e-8 * np.max(np.abs(res.g))

    def test_endpoints_consistent_with_square_jacobian(self):
        for seed in range(5):
            a, b = _segment(seed, p=2.5)
            res = line_probe_determinant(LineProbe(a, b, 100))
            assert res.g[0] == pytest.approx(np.linalg.det(square_jacobian(a)), rel=1e-10)
            assert res.g[-1] == pytest.approx(np.linalg.det(square_jacobian(b)), rel=1e-10)

    def test_h_family_endpoints(self):
        rng = np.random.default_rng(0)
        tails = rng.uniform(0.1, 0.3, 3)
        a = make_H_configuration(3, tails, 2.0)
        b = make_H_configuration(3, 0.5 * tails, 2.0)
        res = line_probe_determinant(LineProbe(a, b))
        assert res.isolated and res.zero_bracket_count == 0

    def test_component_guard(self):
        a = Configuration(2.0, [[0.0, 1.0, 2.0], [1.0, 0.0, 0.5], [2.0, 3.0, 1.0]])
        b = a.with_points(a.points * [[1, 1, 1], [1, 1, 1], [1, 1, -1]])
        with pytest.raises(PreconditionError, match="different components"):
            line_probe_determinant(LineProbe(a, b))

    def test_g0_zero_rejected(self):
        a = Configuration(2.0, np.ones((3, 3)))
        with pytest.raises(PreconditionError):
            line_probe_determinant(LineProbe(a, a))

    def test_partner_keeps_orderings(self):
        rng = np.random.default_rng(5)
        a = make_H_configuration(4, rng.uniform(-1, 1, 6), 2.0)
        b = same_component_partner(a, rng)
        sa = np.sign(a.points[:, None] - a.points[None])
        sb = np.sign(b.points[:, None] - b.points[None])
        assert np.array_equal(sa, sb)


class TestSurvey:
    def test_frequency_one(self):
        rows = property_k_survey([3], [3], [2.0], 500, 0)
        assert rows == [{"n": 3, "N": 3, "p": 2.0, "trials": 500, "frequency": 1.0}]

    def test_skips_small_N(self):
        rows = property_k_survey([3, 4], [3, 4], [2.0], 5, 0)
        assert [(r["n"], r["N"]) for r in rows] == [(3, 3), (3, 4), (4, 4)]

    def test_degenerate_configuration_counts_zero(self):
        assert has_property_K(Configuration(2.0, np.zeros((3, 4))))[0] is False

    def test_replay_bitwise(self):
        a = to_csv(property_k_survey([2, 3], [3, 4], [1.5, 2.5], 20, 7))
        b = to_csv(property_k_survey([2, 3], [3, 4], [1.5, 2.5], 20, 7))
        assert a == b and a.startswith("n,N,p,trials,frequency\n")

    def test_gaussian_n4_frequency_one(self):
        rows = property_k_survey([4], [4], [2.5], 1000, 11)
        assert rows[0]["frequency"] == 1.0
