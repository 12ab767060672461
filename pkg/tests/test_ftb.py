"""
Tests for the Feature Transformation Block (M1/M2/M3) and the temporal DCT
"""
import numpy as np
import pytest
from scipy import fft

from egovad.core.ftb import (
    FtbMode,
    apply_ftb,
    dct_temporal,
    temporal_regularity,
    temporal_shift,
)


def direct_dct_matrix(T):
    """O(T^2) orthonormal DCT-II by cosine summation"""
    n = np.arange(T)
    k = n[:, None]
    C = np.cos(np.pi * (2 * n[None, :] + 1) * k / (2 * T))
    scale = np.full(T, np.sqrt(2.0 / T))
    scale[0] = np.sqrt(1.0 / T)
    return scale[:, None] * C


class TestShift:
    def test_backward_shift_replicates_first_row(self):
        F = np.array([[1.0], [2.0], [3.0]])
        assert temporal_shift(F).tolist() == [[1.0], [1.0], [2.0]]

    def test_single_frame_unchanged(self):
        F = np.array([[4.0, -1.0]])
        np.testing.assert_array_equal(temporal_shift(F), F)

    def test_constant_sequence_unchanged(self):
        F = np.tile([0.3, 2.0, -5.0], (6, 1))
        np.testing.assert_array_equal(temporal_shift(F), F)

    def test_regularity_first_row_is_zero(self, rng):
        delta = temporal_regularity(rng.standard_normal((10, 4)))
        assert np.all(delta[0] == 0.0)
        assert np.all(delta >= 0.0)


class TestModes:
    def test_m1_is_identity(self, rng):
        F = rng.standard_normal((12, 5))
        out = apply_ftb(F, FtbMode.M1)
        np.testing.assert_array_equal(out.data, F)
        assert out.mode == FtbMode.M1

    def test_m2_of_constant_sequence_is_exactly_zero(self, rng):
        F = np.tile(rng.standard_normal(8), (20, 1))
        out = apply_ftb(F, "m2")
        assert np.all(out.data == 0.0)

    def test_m3_of_zeros_is_one_half(self):
        out = apply_ftb(np.zeros((4, 3)), FtbMode.M3)
        np.testing.assert_array_equal(out.data, np.full((4, 3), 0.5))

    def test_m3_minus_regularity_strictly_inside_unit_interval(self, rng):
        for _ in range(20):
            F = 3.0 * rng.standard_normal((int(rng.integers(1, 50)), 6))
            gate = apply_ftb(F, FtbMode.M3).data - temporal_regularity(F)
            assert np.all(gate > 0.0) and np.all(gate < 1.0)

    def test_m3_gate_does_not_saturate_on_large_inputs(self):
        F = np.array([[40.0, -800.0, 1e6], [40.0, -800.0, 1e6]])
        gate = apply_ftb(F, FtbMode.M3).data - temporal_regularity(F)
        assert np.all(gate > 0.0) and np.all(gate < 1.0)

    def test_m2_adds_dct_of_regularity(self, rng):
        F = rng.standard_normal((9, 3))
        delta = temporal_regularity(F)
        expected = delta + direct_dct_matrix(9) @ delta
        np.testing.assert_allclose(apply_ftb(F, FtbMode.M2).data, expected, atol=1e-12)

    @pytest.mark.parametrize("mode", list(FtbMode))
    def test_shape_preserved(self, rng, mode):
        for T in (1, 2, 17):
            out = apply_ftb(rng.standard_normal((T, 7)), mode)
            assert out.shape == (T, 7)
            assert np.all(np.isfinite(out.data))

    def test_deterministic(self, rng):
        F = rng.standard_normal((33, 4))
        for mode in FtbMode:
            assert apply_ftb(F, mode).data.tobytes() == apply_ftb(F.copy(), mode).data.tobytes()

    @pytest.mark.parametrize("text,mode", [("m1", FtbMode.M1), ("M2", FtbMode.M2), ("m3", FtbMode.M3)])
    def test_parse(self, text, mode):
        assert FtbMode.parse(text) is mode

    def test_parse_rejects_unknown(self):
        with pytest.raises(ValueError):
            FtbMode.parse("m4")


class TestDct:
    def test_unit_impulse(self):
        coeffs = dct_temporal(np.array([[1.0], [0.0], [0.0], [0.0]]))[:, 0]
        np.testing.assert_allclose(coeffs, [0.5, 0.65328, 0.5, 0.27060], atol=1e-4)

    @pytest.mark.parametrize("T", [1, 2, 4, 7, 16, 257])
    def test_energy_and_direct_summation(self, rng, T):
        # 100 random vectors as the channels of one T x 100 matrix
        X = rng.standard_normal((T, 100)) * rng.uniform(0.1, 10.0, size=100)
        coeffs = dct_temporal(X)

        np.testing.assert_allclose(
            np.linalg.norm(coeffs, axis=0), np.linalg.norm(X, axis=0), rtol=0, atol=1e-5
        )
        np.testing.assert_allclose(coeffs, direct_dct_matrix(T) @ X, rtol=0, atol=1e-6)

    def test_linearity(self, rng):
        X, Y = rng.standard_normal((2, 31, 5))
        a, b = rng.standard_normal(2)
        np.testing.assert_allclose(
            dct_temporal(a * X + b * Y), a * dct_temporal(X) + b * dct_temporal(Y), atol=1e-6
        )

    def test_orthonormal_inverse_recovers_input(self, rng):
        X = rng.standard_normal((64, 8))
        recovered = fft.idct(dct_temporal(X), type=2, norm="ortho", axis=0)
        np.testing.assert_allclose(recovered, X, atol=1e-5)

    def test_lowpass_zeroes_high_frequencies(self, rng):
        X = rng.standard_normal((16, 3))
        coeffs = dct_temporal(X, lowpass=4)
        assert np.all(coeffs[4:] == 0.0)
        np.testing.assert_array_equal(coeffs[:4], dct_temporal(X)[:4])

    def test_lowpass_below_one(self):
        with pytest.raises(ValueError):
            dct_temporal(np.ones((4, 1)), lowpass=0)
