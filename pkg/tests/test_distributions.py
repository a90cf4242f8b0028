import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from src.core.distributions import (
    DensityPiece,
    ProductivityDist,
    dist_from_descriptor,
    make_poly,
    make_power,
    make_step,
    make_uniform,
    mixture,
    moment,
    pooled,
    regularity,
)
from src.core.errors import NormalizationError, ParameterError, StructureError
from src.core.market import Market


class TestConstruction:
    def test_uniform(self):
        d = make_uniform()
        assert d.cdf(0.3) == pytest.approx(0.3)
        assert d.mean == pytest.approx(0.5)
        assert d.f_lower == d.f_upper == 1.0

    def test_power_cdf_and_mean(self):
        d = make_power(5)
        assert d.cdf(0.5) == pytest.approx(0.5**5, abs=1e-15)
        assert d.mean == pytest.approx(5.0 / 6.0, abs=1e-14)
        assert d.f_lower == 0.0 and d.f_upper == pytest.approx(5.0)

    def test_power_rejects_bad_exponent(self):
        with pytest.raises(ParameterError):
            make_power(0)
        with pytest.raises(ParameterError):
            make_power(2.5)

    def test_step_density(self):
        d = make_step([0.5], [0.1, 1.9])
        assert d.pdf(0.25) == pytest.approx(0.1)
        assert d.pdf(0.75) == pytest.approx(1.9)
        assert d.cdf(0.5) == pytest.approx(0.05)
        assert d.mean == pytest.approx(0.0125 + 0.7125)

    def test_unnormalised_density(self):
        with pytest.raises(NormalizationError) as info:
            make_step([0.5], [1.0, 0.5])
        assert info.value.deficit == pytest.approx(0.25)

    def test_gap_in_partition(self):
        with pytest.raises(StructureError):
            ProductivityDist([DensityPiece(0.0, 0.4, (1.0,)), DensityPiece(0.5, 1.0, (1.0,))])

    def test_negative_density(self):
        with pytest.raises(ParameterError):
            make_poly([(0.0, 0.5, (-1.0,)), (0.5, 1.0, (3.0,))])

    def test_poly_pieces(self):
        d = make_poly([(0.0, 1.0, (0.0, 2.0))])
        assert d.cdf(0.5) == pytest.approx(0.25)

    def test_pdf_vectorised_and_outside_support(self):
        d = make_uniform()
        np.testing.assert_array_equal(d.pdf(np.array([-0.1, 0.5, 1.1])), [0.0, 1.0, 0.0])


class TestMoments:
    def test_partial_moment_matches_quadrature_moment(self):
        d = make_power(5)
        assert d.partial_moment(2, 0.0, 1.0) == pytest.approx(moment(d, 2), abs=1e-14)
        assert moment(d, 2) == pytest.approx(5.0 / 7.0, abs=1e-14)

    def test_tail_surplus_uniform(self):
        d = make_uniform()
        assert d.tail_surplus(0.5, 1.0) == pytest.approx(0.125)
        assert d.tail_surplus(0.8, 0.3) == 0.0

    def test_linear_integral(self):
        d = make_uniform()
        # integral of (1 + 2v) over [0, 1]
        assert d.linear_integral(0.0, 1.0, 1.0, 2.0) == pytest.approx(2.0)

    def test_negative_order(self):
        with pytest.raises(ParameterError):
            make_uniform().cumulative(-1, 0.5)

    @settings(max_examples=60, deadline=None)
    @given(
        st.integers(min_value=1, max_value=12),
        st.floats(min_value=0.0, max_value=1.0),
        st.floats(min_value=0.0, max_value=1.0),
    )
    def test_cdf_is_monotone(self, k, a, b):
        d = make_power(k)
        lo, hi = min(a, b), max(a, b)
        assert d.cdf(lo) <= d.cdf(hi) + 1e-15
        assert d.cdf(hi) == pytest.approx(hi**k, abs=1e-12)


class TestMixture:
    def test_pooled_power5_mean(self):
        market = Market(4.0, make_uniform(), make_power(5))
        pool = pooled(market)
        assert pool.mean == pytest.approx(0.8 * 0.5 + 0.2 * 5.0 / 6.0, abs=1e-13)

    def test_mixture_of_steps_keeps_breaks(self):
        a = make_step([0.5], [0.1, 1.9])
        b = make_step([0.5], [1.9, 0.1])
        mix = mixture([a, b], [1.0, 1.0])
        assert mix.pdf(0.2) == pytest.approx(1.0)
        assert mix.pdf(0.8) == pytest.approx(1.0)

    def test_mixture_rejects_bad_weights(self):
        with pytest.raises(ParameterError):
            mixture([make_uniform()], [-1.0])
        with pytest.raises(StructureError):
            mixture([make_uniform()], [0.5, 0.5])


class TestRegularity:
    def test_uniform_is_regular(self):
        assert regularity(make_uniform()).strictly_positive

    def test_power_warns(self):
        report = regularity(make_power(5))
        assert not report.strictly_positive
        assert report.warnings

    def test_power_strict(self):
        with pytest.raises(ParameterError):
            regularity(make_power(5), strict=True)


class TestDescriptors:
    def test_kinds(self):
        assert dist_from_descriptor({"kind": "uniform"}).label == "uniform"
        assert dist_from_descriptor({"kind": "power", "k": 5}).label == "power(5)"
        step = dist_from_descriptor({"kind": "step", "breaks": [0.5], "levels": [0.1, 1.9]})
        assert step.pdf(0.9) == pytest.approx(1.9)
        poly = dist_from_descriptor({"kind": "poly", "pieces": [{"lo": 0, "hi": 1, "coef": [0, 2]}]})
        assert poly.mean == pytest.approx(2.0 / 3.0)

    def test_unknown_kind(self):
        with pytest.raises(ParameterError):
            dist_from_descriptor({"kind": "lognormal"})
