"""Scalar objectives for the charging problem.

Two cost terms over a horizon of T intervals of length dt hours:

* charging cost: sum of tariff * energy per interval (positive = money
  paid to the grid, negative = revenue from discharging),
* degradation cost: per-interval capacity loss predicted by the convex
  network, converted from cell Ah to euros.

The weighted sum rho * charging + (1 - rho) * degradation is convex in
the power schedule u: the first term is linear and the second composes
a convex-in-C-rate network with the affine map u -> u / capacity.
"""

import csv
from dataclasses import dataclass

import numpy as np

from .exceptions import ConfigError, DataFormatError, NetworkShapeError
from .icnn import PicnnWeights, picnn_forward_batch, picnn_value_and_grads

PROFILE_HEADER = ["interval", "value"]


@dataclass(frozen=True)
class PackParams:
    """Battery pack and session constants.

    Energy state quantities (e0, e_lo, e_hi, e_des, epsilon) are in per
    unit of capacity_kwh; gamma prices capacity fade in EUR per kWh of
    lost pack capacity.
    """

    capacity_kwh: float = 50.0
    n_series: int = 83
    n_parallel: int = 94
    v_bat: float = 350.0
    gamma: float = 585.0
    eta_avg: float = 0.95
    e0: float = 0.5
    e_lo: float = 0.2
    e_hi: float = 0.9
    e_des: float = 0.7
    epsilon: float = 0.02
    p_max: float = 22.0
    dt: float = 0.25

    def __post_init__(self):
        if not (0.0 <= self.e_lo < self.e_des <= self.e_hi <= 1.0):
            raise ConfigError(
                "need 0 <= e_lo < e_des <= e_hi <= 1, got "
                f"e_lo={self.e_lo}, e_des={self.e_des}, e_hi={self.e_hi}"
            )
        if not (0.0 <= self.e0 <= 1.0):
            raise ConfigError(f"e0 must be in [0, 1], got {self.e0}", field="e0")
        if self.epsilon <= 0:
            raise ConfigError("epsilon must be positive", field="epsilon")
        if self.p_max <= 0:
            raise ConfigError("p_max must be positive", field="p_max")
        if self.dt <= 0:
            raise ConfigError("dt must be positive", field="dt")
        if self.gamma <= 0:
            raise ConfigError("gamma must be positive", field="gamma")
        if not (0.0 < self.eta_avg <= 1.0):
            raise ConfigError("eta_avg must be in (0, 1]", field="eta_avg")
        if self.capacity_kwh <= 0:
            raise ConfigError("capacity_kwh must be positive",
                              field="capacity_kwh")
        if self.n_series < 1 or self.n_parallel < 1:
            raise ConfigError("cell counts must be >= 1")
        if self.v_bat <= 0:
            raise ConfigError("v_bat must be positive", field="v_bat")

    @property
    def zeta_eur_per_cell_ah(self) -> float:
        """EUR per amp-hour of single-cell capacity loss.

        One cell-Ah at cell voltage v_bat/n_series, replicated across
        n_series * n_parallel cells, is n_parallel * v_bat / 1000 kWh of
        pack capacity, priced at gamma EUR/kWh.
        """
        return self.gamma * self.n_parallel * self.v_bat / 1000.0


def _load_profile_csv(path, what: str) -> np.ndarray:
    """Two-column CSV (interval,value) with consecutive 0-based
    interval indices."""
    values = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataFormatError("file is empty; expected header row", line=1)
        if header != PROFILE_HEADER:
            raise DataFormatError(
                f"header must be exactly {','.join(PROFILE_HEADER)}", line=1
            )
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise DataFormatError(
                    f"expected 2 fields, got {len(row)}", line=lineno
                )
            try:
                idx = int(row[0])
                val = float(row[1])
            except ValueError:
                raise DataFormatError(
                    f"malformed {what} row: {row!r}", line=lineno
                )
            if idx != len(values):
                raise DataFormatError(
                    f"interval indices must be consecutive from 0; "
                    f"expected {len(values)}, got {idx}",
                    line=lineno,
                )
            if not np.isfinite(val):
                raise DataFormatError(f"{what} value must be finite",
                                      line=lineno)
            values.append(val)
    if not values:
        raise DataFormatError(f"{what} file has no data rows")
    return np.array(values, dtype=float)


def _write_profile_csv(path, values) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(PROFILE_HEADER) + "\n")
        for i, v in enumerate(np.asarray(values, dtype=float)):
            fh.write(f"{i},{float(v)!r}\n")


@dataclass(frozen=True)
class TariffProfile:
    """Per-interval electricity price in EUR/kWh."""

    alpha: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.alpha, dtype=float)
        if a.ndim != 1 or a.size < 1:
            raise ConfigError("tariff must be a non-empty vector",
                              field="alpha")
        if not np.all(np.isfinite(a)):
            raise ConfigError("tariff entries must be finite", field="alpha")
        object.__setattr__(self, "alpha", a)

    def __len__(self):
        return self.alpha.size

    @classmethod
    def from_csv(cls, path) -> "TariffProfile":
        return cls(_load_profile_csv(path, "tariff"))

    def to_csv(self, path) -> None:
        _write_profile_csv(path, self.alpha)


@dataclass(frozen=True)
class TempForecast:
    """Per-interval battery temperature forecast in °C."""

    temps_c: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.temps_c, dtype=float)
        if t.ndim != 1 or t.size < 1:
            raise ConfigError("temperature forecast must be a non-empty "
                              "vector", field="temps_c")
        if not np.all((t > -40.0) & (t < 100.0)):
            raise ConfigError("temperatures must lie in (-40, 100) °C",
                              field="temps_c")
        object.__setattr__(self, "temps_c", t)

    def __len__(self):
        return self.temps_c.size

    @classmethod
    def from_csv(cls, path) -> "TempForecast":
        return cls(_load_profile_csv(path, "temperature"))

    def to_csv(self, path) -> None:
        _write_profile_csv(path, self.temps_c)


@dataclass(frozen=True)
class ChargingProblem:
    """Everything the schedule optimizer needs apart from the weights."""

    pack: PackParams
    tariff: TariffProfile
    temps: TempForecast
    rho: float
    battery_age_h: float = 1000.0

    def __post_init__(self):
        if len(self.tariff) != len(self.temps):
            raise ConfigError(
                f"tariff has {len(self.tariff)} intervals but forecast "
                f"has {len(self.temps)}"
            )
        if not (0.0 <= self.rho <= 1.0):
            raise ConfigError(f"rho must be in [0, 1], got {self.rho}",
                              field="rho")
        if self.battery_age_h < 0:
            raise ConfigError("battery_age_h must be >= 0",
                              field="battery_age_h")

    @property
    def horizon(self) -> int:
        return len(self.tariff)

    def horizon_times_h(self) -> np.ndarray:
        """Battery age at each interval midpoint."""
        i = np.arange(self.horizon)
        return self.battery_age_h + (i + 0.5) * self.pack.dt

    def with_rho(self, rho: float) -> "ChargingProblem":
        return ChargingProblem(pack=self.pack, tariff=self.tariff,
                               temps=self.temps, rho=rho,
                               battery_age_h=self.battery_age_h)


# ---------------------------------------------------------------------------
# Objective terms


def _check_horizon(u, T):
    u = np.asarray(u, dtype=float)
    if u.shape != (T,):
        raise ValueError(f"schedule must have shape ({T},), got {u.shape}")
    return u


def _require_convex_weights(weights: PicnnWeights):
    for i in range(1, weights.arch.k):
        if np.min(weights.W_z[i]) < 0:
            raise NetworkShapeError(
                "weights violate the convexity constraint "
                "(negative W_z entry); run enforce_convexity",
                layer=i,
                path="convex",
            )


def charging_cost(u, tariff: TariffProfile, dt: float) -> float:
    """Money paid over the horizon: sum of price * power * dt."""
    u = _check_horizon(u, len(tariff))
    return float(np.sum(tariff.alpha * u) * dt)


def degradation_cost(u, temps: TempForecast, horizon_times_h, pack: PackParams,
                     weights: PicnnWeights) -> float:
    """Predicted capacity-fade cost in EUR: per-interval network
    evaluations at (age, temperature, C-rate), summed and priced."""
    u = _check_horizon(u, len(temps))
    _require_convex_weights(weights)
    times = np.asarray(horizon_times_h, dtype=float)
    if times.shape != u.shape:
        raise ValueError("horizon_times_h length must match the schedule")
    X = np.column_stack([times, temps.temps_c])
    Y = (u / pack.capacity_kwh)[:, None]
    q = picnn_forward_batch(weights, X, Y)
    return float(pack.zeta_eur_per_cell_ah * np.sum(q))


def objective_terms(u, problem: ChargingProblem, weights: PicnnWeights):
    """(charging cost, degradation cost) for one schedule."""
    return (
        charging_cost(u, problem.tariff, problem.pack.dt),
        degradation_cost(u, problem.temps, problem.horizon_times_h(),
                         problem.pack, weights),
    )


def total_objective(u, problem: ChargingProblem,
                    weights: PicnnWeights) -> float:
    """rho-weighted sum of the two cost terms; convex in u."""
    c_charge, c_degr = objective_terms(u, problem, weights)
    return problem.rho * c_charge + (1.0 - problem.rho) * c_degr


def objective_gradient(u, problem: ChargingProblem,
                       weights: PicnnWeights) -> np.ndarray:
    """Exact gradient of total_objective in u.

    The charging term contributes rho * alpha * dt; the degradation
    term chains the network's per-interval C-rate gradient through the
    affine map u -> u / capacity.
    """
    pack = problem.pack
    u = _check_horizon(u, problem.horizon)
    _require_convex_weights(weights)
    grad = problem.rho * problem.tariff.alpha * pack.dt
    if problem.rho < 1.0:
        X = np.column_stack([problem.horizon_times_h(), problem.temps.temps_c])
        Y = (u / pack.capacity_kwh)[:, None]
        _, _, grad_Y = picnn_value_and_grads(weights, X, Y)
        grad = grad + ((1.0 - problem.rho) * pack.zeta_eur_per_cell_ah
                       / pack.capacity_kwh) * grad_Y[:, 0]
    return grad
