"""Statistical evaluation utilities: R² and residual summaries."""

import json
from dataclasses import asdict, dataclass

import numpy as np

from .exceptions import DegenerateMetricError


@dataclass(frozen=True)
class FitReport:
    """Summary of prediction quality on one evaluation set."""

    r2: float
    rmse: float
    max_abs_error: float
    n_samples: int

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "FitReport":
        d = json.loads(text)
        return cls(
            r2=float(d["r2"]),
            rmse=float(d["rmse"]),
            max_abs_error=float(d["max_abs_error"]),
            n_samples=int(d["n_samples"]),
        )


def _as_1d_pair(predictions, truth):
    f = np.asarray(predictions, dtype=float).ravel()
    g = np.asarray(truth, dtype=float).ravel()
    if f.shape != g.shape:
        raise ValueError(
            f"predictions and truth differ in length: {f.size} vs {g.size}"
        )
    if f.size < 2:
        raise ValueError("need at least 2 samples")
    if not (np.all(np.isfinite(f)) and np.all(np.isfinite(g))):
        raise ValueError("predictions and truth must be finite")
    return f, g


def r_squared(predictions, truth) -> float:
    """Coefficient of determination: 1 - SSE / SST.

    1 means a perfect fit; predicting the mean of the truth scores 0.
    Raises DegenerateMetricError when the truth has no variance, since
    the denominator would vanish.
    """
    f, g = _as_1d_pair(predictions, truth)
    sst = float(np.sum((g - g.mean()) ** 2))
    if sst <= 0.0:
        raise DegenerateMetricError(
            "truth values are all identical; R² is undefined"
        )
    sse = float(np.sum((g - f) ** 2))
    return 1.0 - sse / sst


def fit_report(predictions, truth) -> FitReport:
    f, g = _as_1d_pair(predictions, truth)
    resid = g - f
    return FitReport(
        r2=r_squared(f, g),
        rmse=float(np.sqrt(np.mean(resid**2))),
        max_abs_error=float(np.max(np.abs(resid))),
        n_samples=int(f.size),
    )
