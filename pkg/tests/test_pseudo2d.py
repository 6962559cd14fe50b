import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rlseg import IGNORE, DataError, relabel_2d, uncertainty_2d


def sigmoid_scalar(x):
    return 1.0 / (1.0 + math.exp(-x))


class TestUncertainty2d:
    def test_zero_logit_gives_half(self):
        u = uncertainty_2d(np.array([[0.0, -1.0]]))
        assert u[0] == 0.5

    def test_saturates_at_large_logit(self):
        u = uncertainty_2d(np.array([[50.0]]))
        assert abs(u[0]) <= 1e-15

    def test_matches_scalar_sigmoid_oracle(self):
        u = uncertainty_2d(np.array([[0.3, 1.2, -0.4]]))
        assert abs(u[0] - (1.0 - sigmoid_scalar(1.2))) <= 1e-15

    def test_range_is_unit_interval(self, rng):
        u = uncertainty_2d(rng.standard_normal((200, 5)) * 30)
        assert ((u >= 0) & (u <= 1)).all()

    def test_nonfinite_rejected(self):
        with pytest.raises(DataError):
            uncertainty_2d(np.array([[np.inf, 0.0]]))


class TestRelabel2d:
    # previous model knows classes [1, 2], current step introduces [3],
    # background id 0
    PREV_IDS = [0, 1, 2]

    def relabel(self, gt, logits, tau=0.4, current=(3,)):
        return relabel_2d(
            np.asarray(gt), np.asarray(logits, dtype=float),
            self.PREV_IDS, list(current), 0, tau,
        )

    def test_current_class_always_kept(self, rng):
        logits = rng.standard_normal((4, 3)) * 10
        out = self.relabel([3, 3, 3, 3], logits)
        np.testing.assert_array_equal(out, [3, 3, 3, 3])

    def test_uncertain_background_kept(self):
        # max logit 0 -> U = 0.5 > tau = 0.4
        out = self.relabel([0], [[0.0, -5.0, -5.0]])
        np.testing.assert_array_equal(out, [0])

    def test_confident_background_takes_prediction(self):
        # logits [3, -1]: U = 1 - sigmoid(3) ~ 0.047 <= 0.4 -> class of column 0
        out = relabel_2d([0], [[3.0, -1.0]], [1, 2], [3], 0, 0.4)
        np.testing.assert_array_equal(out, [1])

    def test_boundary_equality_pseudo_labels(self):
        # U exactly 0.5 at max logit 0; tau = 0.5 -> U <= tau fires
        out = self.relabel([0], [[0.0, -1.0, -1.0]], tau=0.5)
        np.testing.assert_array_equal(out, [0])  # argmax col 0 = background id 0

        out = relabel_2d([0], [[-1.0, 0.0, -1.0]], self.PREV_IDS, [3], 0, 0.5)
        np.testing.assert_array_equal(out, [1])

    def test_ignore_stays_ignore(self):
        out = self.relabel([IGNORE], [[9.0, 0.0, 0.0]])
        np.testing.assert_array_equal(out, [IGNORE])

    def test_unknown_label_rejected(self):
        with pytest.raises(DataError):
            self.relabel([7], [[0.0, 0.0, 0.0]])

    def test_exhaustive_truth_table(self):
        # hand-derived reference for a 3-class previous model:
        # cases are (gt kind) x (U <= tau vs U > tau); tau = 0.4
        # confident logits -> max 3.0 -> U ~ 0.047; uncertain -> max 0.0 -> U = 0.5
        confident = [0.0, 3.0, 0.0]  # argmax column 1 -> class id 1
        uncertain = [0.0, 0.0, -1.0]  # U = 0.5
        cases = [
            # (gt, logits, expected)
            (3, confident, 3),        # in S_t, confident prediction: keep gt
            (3, uncertain, 3),        # in S_t, uncertain: keep gt
            (0, confident, 1),        # background, U <= tau: pseudo-label
            (0, uncertain, 0),        # background, U > tau: stay background
            (IGNORE, confident, IGNORE),
            (IGNORE, uncertain, IGNORE),
        ]
        gt = [c[0] for c in cases]
        logits = [c[1] for c in cases]
        expected = [c[2] for c in cases]
        np.testing.assert_array_equal(self.relabel(gt, logits), expected)

    def test_never_touches_current_class_elements(self, rng):
        gt = rng.choice([0, 3], size=100)
        logits = rng.standard_normal((100, 3)) * 5
        out = self.relabel(gt, logits)
        np.testing.assert_array_equal(out[gt == 3], 3)

    def test_output_domain(self, rng):
        gt = rng.choice([0, 3, IGNORE], size=200)
        logits = rng.standard_normal((200, 3)) * 5
        out = self.relabel(gt, logits)
        assert set(np.unique(out)) <= {0, 1, 2, 3, IGNORE}

    @settings(max_examples=30, deadline=None)
    @given(
        st.floats(min_value=0.0, max_value=1.0),
        st.floats(min_value=0.0, max_value=1.0),
        st.integers(0, 2**32 - 1),
    )
    def test_monotone_in_tau(self, tau_lo, tau_hi, seed):
        # raising tau can only move elements from pseudo-labeled to
        # background-kept, never the reverse
        tau_lo, tau_hi = min(tau_lo, tau_hi), max(tau_lo, tau_hi)
        r = np.random.default_rng(seed)
        gt = r.choice([0, 3], size=50)
        logits = r.standard_normal((50, 3)) * 3
        lo = self.relabel(gt, logits, tau=tau_lo)
        hi = self.relabel(gt, logits, tau=tau_hi)
        went_pseudo_lo = (gt == 0) & (lo != 0)
        went_pseudo_hi = (gt == 0) & (hi != 0)
        # pseudo-labeled under tau_hi implies pseudo-labeled under tau_lo... no:
        # U <= tau_lo implies U <= tau_hi, so lo-pseudo is a subset of hi-pseudo
        assert not (went_pseudo_lo & ~went_pseudo_hi).any()
