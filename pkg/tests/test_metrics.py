import json

import numpy as np
import pytest

from v2gopt.exceptions import DegenerateMetricError
from v2gopt.metrics import FitReport, fit_report, r_squared


class TestRSquared:
    def test_perfect_fit_is_one(self):
        y = [0.1, 0.5, 2.0, -3.0]
        assert r_squared(y, y) == 1.0

    def test_mean_predictor_is_zero(self):
        truth = np.array([1.0, 2.0, 3.0, 4.0])
        pred = np.full(4, truth.mean())
        assert r_squared(pred, truth) == pytest.approx(0.0, abs=1e-15)

    def test_hand_arithmetic(self):
        # SSE = (3-4)^2 = 1, SST = (1-2)^2 + (3-2)^2 = 2
        assert r_squared([1.0, 2.0, 4.0], [1.0, 2.0, 3.0]) == pytest.approx(0.5)

    def test_constant_truth_raises(self):
        with pytest.raises(DegenerateMetricError):
            r_squared([1.0, 2.0], [5.0, 5.0])

    def test_length_mismatch_raises(self):
        with pytest.raises(ValueError):
            r_squared([1.0, 2.0], [1.0, 2.0, 3.0])

    def test_too_few_samples_raises(self):
        with pytest.raises(ValueError):
            r_squared([1.0], [2.0])

    def test_non_finite_raises(self):
        with pytest.raises(ValueError):
            r_squared([1.0, np.nan], [1.0, 2.0])

    def test_shift_invariance(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            truth = rng.normal(size=30)
            pred = truth + rng.normal(scale=0.3, size=30)
            c = rng.normal()
            assert r_squared(pred + c, truth + c) == pytest.approx(
                r_squared(pred, truth), rel=1e-12
            )

    def test_positive_scale_invariance(self):
        rng = np.random.default_rng(8)
        truth = rng.normal(size=25)
        pred = truth + rng.normal(scale=0.2, size=25)
        s = 3.7
        assert r_squared(s * pred, s * truth) == pytest.approx(
            r_squared(pred, truth), rel=1e-12
        )


class TestFitReport:
    def test_fields(self):
        rep = fit_report([1.0, 2.0, 4.0], [1.0, 2.0, 3.0])
        assert rep.r2 == pytest.approx(0.5)
        assert rep.rmse == pytest.approx(np.sqrt(1.0 / 3.0))
        assert rep.max_abs_error == pytest.approx(1.0)
        assert rep.n_samples == 3
        assert rep.r2 <= 1.0 and rep.rmse >= 0.0

    def test_json_round_trip(self):
        rep = fit_report([0.5, 1.5, 2.25], [0.4, 1.6, 2.0])
        back = FitReport.from_json(rep.to_json())
        assert back == rep
        doc = json.loads(rep.to_json())
        assert set(doc) == {"r2", "rmse", "max_abs_error", "n_samples"}
