from fractions import Fraction as F

import pytest
from hypothesis import given
from hypothesis import strategies as st

from sle_dyson.ensembles import BetaConvention
from sle_dyson.exponents import (ansatz_exponent, beta_from_kappa,
                                 exponent_table, fusion_exponent, h21,
                                 kac_h_1_s)

rational_kappas = st.builds(F, st.integers(min_value=1, max_value=60),
                            st.integers(min_value=1, max_value=12))


class TestBetaFromKappa:
    def test_known_values(self):
        assert beta_from_kappa(F(8, 3)) == F(3, 2)
        assert beta_from_kappa(3) == F(4, 3)
        assert beta_from_kappa(4, BetaConvention.CFT_2_OVER_KAPPA) == F(1, 2)
        assert beta_from_kappa(2, BetaConvention.CORRECTED_8_OVER_KAPPA) == 4

    def test_rejects_floats(self):
        with pytest.raises(TypeError):
            beta_from_kappa(2.0)

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            beta_from_kappa(F(-1, 2))


class TestKacWeights:
    def test_frozen_values(self):
        assert kac_h_1_s(6, 1) == 0
        assert kac_h_1_s(6, 2) == F(1, 3)
        assert kac_h_1_s(3, 1) == F(1, 2)

    def test_rejects_bad_p(self):
        with pytest.raises(ValueError):
            kac_h_1_s(6, 0)


class TestFusionAndAnsatz:
    def test_frozen_values(self):
        assert fusion_exponent(2, 6) == F(1, 3)
        assert fusion_exponent(2, 4) == F(1, 2)
        assert ansatz_exponent(2, 1) == 1
        assert ansatz_exponent(3, beta_from_kappa(
            6, BetaConvention.CFT_2_OVER_KAPPA)) == fusion_exponent(3, 6) == 1

    def test_p_lower_bound(self):
        with pytest.raises(ValueError):
            fusion_exponent(1, 6)

    @given(st.integers(min_value=2, max_value=10), rational_kappas)
    def test_kac_combination_identity(self, p, kappa):
        assert fusion_exponent(p, kappa) == \
            kac_h_1_s(kappa, p) - p * kac_h_1_s(kappa, 1)

    @given(st.integers(min_value=2, max_value=10), rational_kappas)
    def test_factor_two_discrepancy(self, p, kappa):
        # the product ansatz under beta = 4/kappa gives exactly twice the
        # fusion exponent; only beta = 2/kappa closes the gap
        assert ansatz_exponent(p, beta_from_kappa(kappa)) == \
            2 * fusion_exponent(p, kappa)
        assert ansatz_exponent(
            p, beta_from_kappa(kappa, BetaConvention.CFT_2_OVER_KAPPA)) == \
            fusion_exponent(p, kappa)


class TestH21:
    def test_frozen_values(self):
        assert h21(6) == 0
        assert h21(2) == 1
        assert h21(F(8, 3)) == F(5, 8)

    def test_exactness_type(self):
        assert isinstance(h21(F(8, 3)), F)


def test_exponent_table_contents():
    rows = exponent_table([F(8, 3), 6], p_max=3)
    assert rows[0]["beta_dyson"] == F(3, 2)
    assert rows[1]["h21"] == 0
    assert rows[0]["fusion_3"] == fusion_exponent(3, F(8, 3))
