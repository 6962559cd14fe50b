import numpy as np

from rlseg.bench import (
    fit_cubic,
    run_bench,
    sgd_reference,
    time_update_modes,
)
from rlseg.kernels import available_backends


class TestUpdateModeTimings:
    def test_woodbury_beats_direct_on_wide_small_batch(self):
        # 32 rows against width 4096: the Woodbury path must win clearly
        rows = time_update_modes([4096], n_rows=32, seed=1)
        entry = rows[0]
        assert entry["woodbury"] < entry["direct"], entry

    def test_report_shape(self):
        rows = time_update_modes([32, 64], n_rows=16, seed=0)
        assert [r["d_expanded"] for r in rows] == [32, 64]
        assert all(r["direct"] > 0 and r["woodbury"] > 0 for r in rows)


class TestCubicFit:
    def test_recovers_planted_cubic(self):
        sizes = np.array([100, 200, 400, 800])
        times = 3e-9 * sizes**3 + 0.01
        fit = fit_cubic(sizes, times)
        assert abs(fit["a"] - 3e-9) / 3e-9 < 1e-6
        assert fit["r2"] > 0.999999

    def test_r2_reported_on_noisy_data(self, rng):
        sizes = np.array([64, 128, 256, 512])
        times = 1e-9 * sizes**3 + rng.uniform(0, 1e-4, 4)
        fit = fit_cubic(sizes, times)
        assert np.isfinite(fit["r2"])


class TestSgdReference:
    def test_learns_separable_data(self, rng):
        # the reference must be a working classifier, not a strawman
        n, d = 512, 16
        cols = rng.integers(0, 2, n)
        feats = rng.standard_normal((n, d)) * 0.1
        feats[:, 0] += np.where(cols == 0, 3.0, -3.0)
        w, elapsed = sgd_reference(feats, cols, 2, epochs=10, lr=0.05, seed=0)
        pred = (feats @ w).argmax(axis=1)
        assert (pred == cols).mean() > 0.95
        assert elapsed > 0


class TestRunBench:
    def test_full_report(self):
        report = run_bench(sizes=(48, 96), n_rows=16, seed=0, kernels_section=True)
        assert report["woodbury_beats_direct_at_largest"] in (True, False)
        assert set(report["kernels"]["backends"]) == set(available_backends())
        assert "r2" in report["cubic_fit_direct"]
