"""Trade-off sweep over the user preference rho.

Solving the charging problem across a grid of rho values traces the
frontier between electricity cost (theta1) and battery degradation cost
(theta2): weighted-sum scalarization of convex objectives yields
Pareto-optimal points, with theta1 nonincreasing and theta2 nondecreasing
as rho grows.
"""

import json
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .exceptions import ConfigError, V2gOptError
from .icnn import PicnnWeights
from .objectives import ChargingProblem
from .solver import SolveConfig, solve

__all__ = [
    "SWEEP_HEADER",
    "DEFAULT_RHOS",
    "TradeoffPoint",
    "sweep",
    "write_sweep_csv",
    "points_to_json",
]

SWEEP_HEADER = ["rho", "theta1_eur", "theta2_eur", "J_eur"]

# 11-point grid: the resolution of the published trade-off curve.
DEFAULT_RHOS = tuple(round(0.1 * i, 1) for i in range(11))

J_CONSISTENCY_TOL = 1e-10


@dataclass(frozen=True)
class TradeoffPoint:
    """One solved (rho, theta1, theta2, J) sample of the trade-off curve.

    ``error`` carries the stringified exception when the solve for this
    rho failed; the cost fields are NaN then and ``converged`` is False.
    """

    rho: float
    theta1: float
    theta2: float
    j_value: float
    converged: bool
    iterations: int
    error: Optional[str] = None

    def __post_init__(self):
        if not 0.0 <= self.rho <= 1.0:
            raise ValueError(f"rho must be in [0, 1], got {self.rho}")
        finite = (np.isfinite(self.theta1) and np.isfinite(self.theta2)
                  and np.isfinite(self.j_value))
        if self.error is None and not finite:
            raise ValueError("cost fields must be finite unless the "
                             "point records a solve error")
        if finite:
            want = self.rho * self.theta1 + (1.0 - self.rho) * self.theta2
            if abs(self.j_value - want) > J_CONSISTENCY_TOL:
                raise ValueError(
                    f"inconsistent objective: J={self.j_value!r} but "
                    f"rho*theta1+(1-rho)*theta2={want!r}")


def sweep(problem: ChargingProblem, weights: PicnnWeights,
          rhos=None, config: SolveConfig = None,
          warm_start: bool = True) -> list:
    """Solve the charging problem for each rho in ascending order.

    ``warm_start`` (default on) seeds each solve with the previous
    optimum; by convexity this cannot change converged optima, only the
    iteration count.  A failing solve is recorded as a NaN-cost point
    carrying the error message, and the sweep continues.  Duplicate rho
    values reuse the already-computed point.
    """
    if rhos is None:
        rhos = DEFAULT_RHOS
    rhos = [float(r) for r in np.asarray(rhos, dtype=float).ravel()]
    if not rhos:
        raise ConfigError("rho grid must be non-empty", field="rhos")
    for r in rhos:
        if not 0.0 <= r <= 1.0:
            raise ConfigError(f"rho values must lie in [0, 1], got {r}",
                              field="rhos")
    if any(b < a for a, b in zip(rhos, rhos[1:])):
        raise ConfigError("rho grid must be sorted ascending",
                          field="rhos")

    points = []
    prev_u = None
    prev_rho = None
    for rho in rhos:
        if prev_rho is not None and rho == prev_rho and points:
            points.append(points[-1])
            continue
        prob_r = problem.with_rho(rho)
        try:
            sched = solve(prob_r, weights, config,
                          start=prev_u if warm_start else None)
        except V2gOptError as exc:
            points.append(TradeoffPoint(
                rho=rho, theta1=float("nan"), theta2=float("nan"),
                j_value=float("nan"), converged=False, iterations=0,
                error=f"{type(exc).__name__}: {exc}"))
            prev_rho = rho
            continue
        prev_u = sched.u
        prev_rho = rho
        points.append(TradeoffPoint(
            rho=rho,
            theta1=sched.theta1_value,
            theta2=sched.theta2_value,
            j_value=sched.j_value,
            converged=sched.converged,
            iterations=sched.iterations,
        ))
    return points


def write_sweep_csv(points, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(SWEEP_HEADER) + "\n")
        for pt in points:
            fh.write(f"{float(pt.rho)!r},{float(pt.theta1)!r},"
                     f"{float(pt.theta2)!r},{float(pt.j_value)!r}\n")


def points_to_json(points) -> str:
    return json.dumps(
        [
            {
                "rho": pt.rho,
                "theta1_eur": pt.theta1,
                "theta2_eur": pt.theta2,
                "j_eur": pt.j_value,
                "converged": pt.converged,
                "iterations": pt.iterations,
                "error": pt.error,
            }
            for pt in points
        ],
        indent=2,
    )
