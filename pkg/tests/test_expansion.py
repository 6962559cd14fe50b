import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rlseg import DataError, build_projector, expand
from rlseg.expansion import counter_normals


def relu_matmul_oracle(x, w):
    """Naive triple loop: multiply then clamp at zero."""
    n, d_in = x.shape
    d_out = w.shape[1]
    out = np.zeros((n, d_out))
    for i in range(n):
        for j in range(d_out):
            acc = 0.0
            for k in range(d_in):
                acc += x[i, k] * w[k, j]
            out[i, j] = max(0.0, acc)
    return out


class TestBuildProjector:
    def test_shape_and_rebuild_bitwise(self):
        p1 = build_projector(7, 4, 16, 1.0)
        p2 = build_projector(7, 4, 16, 1.0)
        assert p1.weights.shape == (4, 16)
        assert p1.weights.tobytes() == p2.weights.tobytes()

    def test_distinct_seeds_differ(self):
        p7 = build_projector(7, 4, 16, 1.0)
        p8 = build_projector(8, 4, 16, 1.0)
        assert not np.array_equal(p7.weights, p8.weights)

    def test_normal_statistics(self):
        # thresholds fixed from a 10-seed pre-run of this generator:
        # max |mean| observed 0.0054, max |std - 1| observed 0.0016
        for seed in range(10):
            w = build_projector(seed, 2, 100000, 1.0).weights
            assert abs(w.mean()) < 0.02
            assert abs(w.std() - 1.0) < 0.02

    def test_scale_multiplies_draws(self):
        base = build_projector(3, 5, 7, 1.0).weights
        scaled = build_projector(3, 5, 7, 2.5).weights
        np.testing.assert_allclose(scaled, 2.5 * base, rtol=1e-15)

    def test_entry_is_pure_function_of_seed_row_col(self):
        # the same flat counter yields the same draw whatever the shape
        wide = build_projector(11, 2, 12, 1.0).weights
        flat = counter_normals(11, 24).reshape(2, 12)
        np.testing.assert_array_equal(wide, flat)

    @pytest.mark.parametrize("d_enc,d_exp", [(0, 4), (4, 0)])
    def test_zero_dims_rejected(self, d_enc, d_exp):
        with pytest.raises(DataError):
            build_projector(1, d_enc, d_exp, 1.0)

    def test_nonpositive_scale_rejected(self):
        with pytest.raises(DataError):
            build_projector(1, 2, 2, 0.0)


class TestExpand:
    def test_relu_definition_identity_weights(self):
        p = build_projector(0, 2, 2, 1.0)
        object.__setattr__(p, "weights", np.eye(2))
        out = expand(p, np.array([[1.0, -3.0]]))
        np.testing.assert_array_equal(out, [[1.0, 0.0]])

    def test_zero_input_zero_output(self):
        p = build_projector(1, 3, 8, 1.0)
        out = expand(p, np.zeros((4, 3)))
        np.testing.assert_array_equal(out, np.zeros((4, 8)))

    def test_against_triple_loop_oracle(self, rng):
        p = build_projector(5, 3, 6, 1.0)
        x = rng.standard_normal((5, 3))
        expected = relu_matmul_oracle(x, p.weights)
        np.testing.assert_allclose(expand(p, x), expected, atol=1e-12)

    def test_output_nonnegative(self, rng):
        p = build_projector(2, 10, 32, 1.0)
        assert (expand(p, rng.standard_normal((50, 10))) >= 0).all()

    def test_deterministic_repeat(self, rng):
        p = build_projector(9, 6, 24, 1.0)
        x = rng.standard_normal((20, 6))
        assert expand(p, x).tobytes() == expand(p, x).tobytes()

    def test_chunking_does_not_change_values(self, rng):
        # BLAS picks different kernels per row-block size, so chunked
        # results can differ in the last ulp; equivalence is semantic
        p = build_projector(4, 8, 16, 1.0)
        x = rng.standard_normal((37, 8))
        full = expand(p, x, chunk_rows=65536)
        for chunk in (1, 5, 36, 37):
            np.testing.assert_allclose(
                expand(p, x, chunk_rows=chunk), full, rtol=1e-14, atol=1e-300
            )

    def test_shape_mismatch_names_both_dims(self):
        p = build_projector(1, 4, 8, 1.0)
        with pytest.raises(DataError, match="3.*4|4.*3"):
            expand(p, np.zeros((2, 3)))

    @settings(max_examples=25, deadline=None)
    @given(st.floats(min_value=1e-3, max_value=1e3), st.integers(0, 2**32 - 1))
    def test_positive_homogeneity(self, c, seed):
        p = build_projector(3, 4, 8, 1.0)
        x = np.random.default_rng(seed).standard_normal((6, 4))
        lhs = expand(p, c * x)
        rhs = c * expand(p, x)
        np.testing.assert_allclose(lhs, rhs, rtol=1e-12, atol=1e-300)
