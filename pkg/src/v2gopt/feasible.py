"""The feasible schedule polytope and Euclidean projection onto it.

A schedule u (kW, length T) is feasible when

* every entry lies in the power box [-p_max, p_max],
* the stored energy e0 + kappa * cumsum(u) stays inside [e_lo, e_hi]
  after every interval, where kappa = eta_avg * dt / capacity_kwh
  converts kW to per-unit energy,
* the terminal energy lands within epsilon of e_des.

All constraints are affine, so the set is a compact polytope (possibly
empty; emptiness is detected at construction by exact interval
propagation on the energy state).  Projection uses Dykstra's
alternating projections over the box and the individual energy slabs;
each slab touches a prefix of coordinates, which keeps one sweep at
O(T) scalar work plus a single vector update.
"""

import json
from dataclasses import dataclass

import numpy as np

from .exceptions import InfeasibleProblemError, ProjectionError
from .objectives import PackParams

PROJECTION_TOL = 1e-10
PROJECTION_FEAS_TOL = 1e-9
SWEEPS_PER_CONSTRAINT = 100


@dataclass(frozen=True)
class Violation:
    constraint: str
    t: int
    slack: float  # negative = violated by that much


@dataclass(frozen=True)
class ViolationReport:
    ok: bool
    violations: tuple

    def __bool__(self) -> bool:
        return self.ok

    def to_json(self) -> str:
        return json.dumps(
            {
                "feasible": self.ok,
                "violations": [
                    {"constraint": v.constraint, "t": v.t, "slack": v.slack}
                    for v in self.violations
                ],
            },
            indent=2,
        )


class FeasibleSet:
    """Immutable feasible polytope for one charging session."""

    def __init__(self, T: int, p_max: float, e0: float, e_lo: float,
                 e_hi: float, e_des: float, epsilon: float, eta_avg: float,
                 dt: float, capacity_kwh: float):
        if T < 1:
            raise ValueError("horizon T must be >= 1")
        self.T = int(T)
        self.p_max = float(p_max)
        self.e0 = float(e0)
        self.e_lo = float(e_lo)
        self.e_hi = float(e_hi)
        self.e_des = float(e_des)
        self.epsilon = float(epsilon)
        self.eta_avg = float(eta_avg)
        self.dt = float(dt)
        self.capacity_kwh = float(capacity_kwh)
        self.kappa = self.eta_avg * self.dt / self.capacity_kwh
        # cumulative-sum windows: energy bounds for every t, terminal
        # band intersected at t = T
        self._bands = self._reachable_bands()
        if self.e0 < self._bands[0][0] - 1e-12 or \
                self.e0 > self._bands[0][1] + 1e-12:
            raise InfeasibleProblemError(self._infeasibility_reason())

    @classmethod
    def from_pack(cls, pack: PackParams, T: int) -> "FeasibleSet":
        return cls(T=T, p_max=pack.p_max, e0=pack.e0, e_lo=pack.e_lo,
                   e_hi=pack.e_hi, e_des=pack.e_des, epsilon=pack.epsilon,
                   eta_avg=pack.eta_avg, dt=pack.dt,
                   capacity_kwh=pack.capacity_kwh)

    # -- feasibility geometry ------------------------------------------------

    def _reachable_bands(self):
        """bands[t] = interval of energy states at time t from which a
        feasible completion exists.  Exact for this chain of interval
        constraints; bands[0] tests the problem itself."""
        step = self.kappa * self.p_max
        lo = max(self.e_lo, self.e_des - self.epsilon)
        hi = min(self.e_hi, self.e_des + self.epsilon)
        if lo > hi:
            raise InfeasibleProblemError(
                f"terminal band [{self.e_des - self.epsilon:.4g}, "
                f"{self.e_des + self.epsilon:.4g}] does not intersect the "
                f"energy bounds [{self.e_lo:.4g}, {self.e_hi:.4g}]"
            )
        bands = [None] * (self.T + 1)
        bands[self.T] = (lo, hi)
        for t in range(self.T - 1, -1, -1):
            lo = bands[t + 1][0] - step
            hi = bands[t + 1][1] + step
            if t >= 1:
                lo = max(lo, self.e_lo)
                hi = min(hi, self.e_hi)
            if lo > hi:
                raise InfeasibleProblemError(
                    f"energy window collapses at interval {t}: the band "
                    f"[{self.e_des - self.epsilon:.4g}, "
                    f"{self.e_des + self.epsilon:.4g}] cannot be held "
                    f"inside [{self.e_lo:.4g}, {self.e_hi:.4g}]"
                )
            bands[t] = (lo, hi)
        return bands

    def _infeasibility_reason(self) -> str:
        lo0, hi0 = self._bands[0]
        reach = self.T * self.kappa * self.p_max
        if self.e0 < lo0:
            return (
                f"cannot reach e_des - epsilon = "
                f"{self.e_des - self.epsilon:.4g} p.u. from e0 = "
                f"{self.e0:.4g} in T = {self.T} intervals at p_max = "
                f"{self.p_max:g} kW (maximum gain {reach:.4g} p.u., "
                f"need {lo0 - self.e0 + reach:.4g})"
            )
        return (
            f"cannot get down to e_des + epsilon = "
            f"{self.e_des + self.epsilon:.4g} p.u. from e0 = {self.e0:.4g} "
            f"in T = {self.T} intervals at p_max = {self.p_max:g} kW "
            f"(maximum drop {reach:.4g} p.u., need {self.e0 - hi0:.4g})"
        )

    def energy_trajectory(self, u) -> np.ndarray:
        """Per-unit stored energy after each interval (length T)."""
        u = np.asarray(u, dtype=float)
        return self.e0 + self.kappa * np.cumsum(u)

    def is_feasible(self, u, tol: float = 1e-8) -> ViolationReport:
        """Check every constraint; slacks below -tol are reported."""
        u = np.asarray(u, dtype=float)
        if u.shape != (self.T,):
            raise ValueError(f"schedule must have shape ({self.T},), "
                             f"got {u.shape}")
        bad = []
        for t in range(self.T):
            s = self.p_max - abs(u[t])
            if s < -tol:
                bad.append(Violation("power_box", t, float(s)))
        energy = self.energy_trajectory(u)
        for t in range(self.T):
            s_lo = energy[t] - self.e_lo
            s_hi = self.e_hi - energy[t]
            if s_lo < -tol:
                bad.append(Violation("energy_lower", t, float(s_lo)))
            if s_hi < -tol:
                bad.append(Violation("energy_upper", t, float(s_hi)))
        s_term = self.epsilon - abs(self.e_des - energy[-1])
        if s_term < -tol:
            bad.append(Violation("terminal_band", self.T - 1, float(s_term)))
        return ViolationReport(ok=not bad, violations=tuple(bad))

    # -- projection ------------------------------------------------------

    def project(self, v) -> np.ndarray:
        """Euclidean projection onto the polytope via Dykstra's
        alternating projections.

        The cycle is: power box, then the T cumulative-energy slabs in
        time order, then the terminal slab.  Slab corrections are
        scalars on the prefix indicator normals, so a full sweep does
        O(T) bookkeeping and one O(T) vector materialization.
        """
        v = np.asarray(v, dtype=float)
        if v.shape != (self.T,):
            raise ValueError(f"point must have shape ({self.T},), "
                             f"got {v.shape}")
        T = self.T
        # prefix-sum windows, in cumulative-kW units
        cum_lo = (self.e_lo - self.e0) / self.kappa
        cum_hi = (self.e_hi - self.e0) / self.kappa
        term_lo = (self.e_des - self.epsilon - self.e0) / self.kappa
        term_hi = (self.e_des + self.epsilon - self.e0) / self.kappa

        x = v.copy()
        p_box = np.zeros(T)
        q_slab = np.zeros(T + 1)  # per-prefix-slab scalar corrections
        q_term = 0.0
        max_sweeps = SWEEPS_PER_CONSTRAINT * T * (T + 2)
        ts = np.arange(1, T + 1, dtype=float)

        for _ in range(max_sweeps):
            x_prev = x.copy()
            p_box_prev = p_box.copy()
            q_slab_prev = q_slab.copy()
            q_term_prev = q_term

            # power box
            w = x + p_box
            x = np.clip(w, -self.p_max, self.p_max)
            p_box = w - x

            # cumulative-energy slabs, t = 1..T, each constraining the
            # prefix sum s_t = sum(x[:t]); the correction q[t] means a
            # pending addition of q[t] to each of the first t entries.
            prefix = 0.0  # prefix sum of x including updates from slabs <= t
            carry = 0.0   # total down-stream addition owed to entry j
            adds = np.zeros(T + 1)
            for t in range(1, T + 1):
                prefix += x[t - 1]
                s_w = prefix + carry + t * q_slab[t]
                s_new = min(max(s_w, cum_lo), cum_hi)
                q_new = (s_w - s_new) / t
                adds[t] = q_slab[t] - q_new
                carry += t * adds[t]
                q_slab[t] = q_new

            # terminal band slab on the full sum
            s_w = prefix + carry + T * q_term
            s_new = min(max(s_w, term_lo), term_hi)
            q_new = (s_w - s_new) / T
            add_term = q_term - q_new
            carry += T * add_term
            q_term = q_new

            # materialize: entry j (0-based) gains all slab additions
            # with t > j, i.e. a suffix sum of adds, plus the terminal one
            suffix = np.cumsum(adds[::-1])[::-1]
            x = x + suffix[1:] + add_term

            # The iterate alone is a bad stop signal: it can sit still
            # at a feasible non-optimal point for several sweeps while a
            # correction drains (box overshoot being repaid to a slab,
            # for instance).  A fixed point of the Dykstra map needs the
            # corrections stationary as well, and that plus feasibility
            # certifies the projection.
            stationary = (
                np.max(np.abs(x - x_prev)) <= PROJECTION_TOL
                and np.max(np.abs(p_box - p_box_prev)) <= PROJECTION_TOL
                and np.max(np.abs(q_slab - q_slab_prev)) <= PROJECTION_TOL
                and abs(q_term - q_term_prev) <= PROJECTION_TOL
            )
            if stationary:
                cs = np.cumsum(x)
                viol = max(
                    float(np.max(np.abs(x) - self.p_max, initial=0.0)),
                    float(np.max(cum_lo - cs, initial=0.0)),
                    float(np.max(cs - cum_hi, initial=0.0)),
                    max(term_lo - cs[-1], 0.0),
                    max(cs[-1] - term_hi, 0.0),
                )
                if viol <= PROJECTION_FEAS_TOL:
                    break
        else:
            raise ProjectionError(
                f"projection did not converge within {max_sweeps} sweeps",
                residual=float(np.max(np.abs(x - x_prev))),
            )
        return x

    def sample_feasible(self, rng: np.random.Generator,
                        n: int = 1) -> np.ndarray:
        """Draw schedules inside the polytope by walking the energy
        state forward inside the reachable bands; returns (n, T)."""
        out = np.empty((n, self.T))
        for i in range(n):
            e = self.e0
            for t in range(1, self.T + 1):
                lo_b, hi_b = self._bands[t]
                u_lo = max(-self.p_max, (lo_b - e) / self.kappa)
                u_hi = min(self.p_max, (hi_b - e) / self.kappa)
                u = rng.uniform(u_lo, u_hi)
                out[i, t - 1] = u
                e += self.kappa * u
        return out
