"""Battery cycling data: ingestion, featurization, synthetic oracle.

Raw input is a CSV of per-cell cycling rows (voltage, current,
temperature) with occasional reference-capacity measurements.  The
featurizer turns the stream into (elapsed time, temperature, C-rate) →
capacity-loss samples, one per time window, apportioning each measured
capacity drop across its windows by charge throughput.

A synthetic degradation oracle with a known closed form (Arrhenius in
temperature, power law in C-rate and in age) generates desk-scale
stand-in cells so fit quality can be scored against exact ground truth.

Units are normalized at ingestion: hours, °C, 1/h (C-rate), Ah.
"""

import csv
import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .exceptions import DataFormatError

CSV_HEADER = ["cell_id", "timestamp_s", "voltage_v", "current_a",
              "temp_c", "capacity_ah"]


@dataclass(frozen=True)
class CyclingRecord:
    """One logged row of a cycling test.

    ``current_a`` is signed, positive = charge.  ``capacity_ah`` is None
    except on reference-capacity measurement rows.
    """

    cell_id: str
    timestamp_s: float
    voltage_v: float
    current_a: float
    temp_c: float
    capacity_ah: Optional[float] = None


@dataclass(frozen=True)
class DegradationSample:
    """One training pair: context (elapsed_h, temp_c), convex input
    c_rate, target capacity loss over the window in Ah."""

    elapsed_h: float
    temp_c: float
    c_rate: float
    q_loss_ah: float
    cell_id: str


@dataclass
class FeaturizeReport:
    cells_processed: int = 0
    samples_emitted: int = 0
    skipped_cells: list = field(default_factory=list)
    warnings: list = field(default_factory=list)

    def to_json(self) -> str:
        return json.dumps(
            {
                "cells_processed": self.cells_processed,
                "samples_emitted": self.samples_emitted,
                "skipped_cells": self.skipped_cells,
                "warnings": self.warnings,
            },
            indent=2,
        )


# ---------------------------------------------------------------------------
# CSV ingestion


def _parse_float(text, line, what):
    try:
        v = float(text)
    except ValueError:
        raise DataFormatError(f"{what} is not a number: {text!r}", line=line)
    if not math.isfinite(v):
        raise DataFormatError(f"{what} must be finite, got {text!r}", line=line)
    return v


def load_cycling_csv(path) -> list:
    """Parse a cycling CSV; see CSV_HEADER for the required columns.

    Enforces per-cell strictly increasing timestamps and physical range
    checks (temperature in (-40, 100) °C, voltage in (0, 5) V).
    """
    records = []
    last_t = {}
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataFormatError("file is empty; expected header row", line=1)
        if header != CSV_HEADER:
            raise DataFormatError(
                f"header must be exactly {','.join(CSV_HEADER)}", line=1
            )
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(CSV_HEADER):
                raise DataFormatError(
                    f"expected {len(CSV_HEADER)} fields, got {len(row)}",
                    line=lineno,
                )
            cell_id = row[0].strip()
            if not cell_id:
                raise DataFormatError("empty cell_id", line=lineno)
            t = _parse_float(row[1], lineno, "timestamp_s")
            v = _parse_float(row[2], lineno, "voltage_v")
            i = _parse_float(row[3], lineno, "current_a")
            temp = _parse_float(row[4], lineno, "temp_c")
            cap = None
            if row[5].strip() != "":
                cap = _parse_float(row[5], lineno, "capacity_ah")
            if not (-40.0 < temp < 100.0):
                raise DataFormatError(
                    f"temperature {temp} °C outside (-40, 100)", line=lineno
                )
            if not (0.0 < v < 5.0):
                raise DataFormatError(
                    f"voltage {v} V outside (0, 5)", line=lineno
                )
            if cell_id in last_t and t <= last_t[cell_id]:
                raise DataFormatError(
                    f"cell {cell_id}: timestamp {t} not after {last_t[cell_id]}",
                    line=lineno,
                )
            last_t[cell_id] = t
            records.append(CyclingRecord(cell_id, t, v, i, temp, cap))
    return records


def write_cycling_csv(path, records) -> None:
    """Write records in the documented schema; floats keep full
    precision (shortest round-trip decimal)."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_HEADER)
        for r in records:
            writer.writerow([
                r.cell_id,
                repr(float(r.timestamp_s)),
                repr(float(r.voltage_v)),
                repr(float(r.current_a)),
                repr(float(r.temp_c)),
                "" if r.capacity_ah is None else repr(float(r.capacity_ah)),
            ])


# ---------------------------------------------------------------------------
# Featurization


def featurize(records, window_s: float = 900.0,
              rated_capacity_ah: Optional[float] = None):
    """Derive (elapsed_h, temp_c, c_rate) → q_loss samples per window.

    Between consecutive capacity references the span is cut into
    round(span/window) equal windows.  Each window gets:

    * elapsed_h: window midpoint relative to the cell's first record,
    * temp_c: mean of row temperatures inside the window,
    * c_rate: RMS(current)/rated capacity, signed by net charge flow,
    * q_loss_ah: the span's measured capacity drop apportioned by the
      window's share of charge throughput (falls back to duration share
      when the whole span carries no current).

    The rated capacity defaults to each cell's first reference
    measurement.  Returns (samples, FeaturizeReport); cells with fewer
    than two capacity references are skipped with a warning.
    """
    if window_s <= 0:
        raise ValueError("window_s must be positive")
    by_cell = {}
    for r in records:
        by_cell.setdefault(r.cell_id, []).append(r)

    samples = []
    report = FeaturizeReport()
    for cell_id, rows in by_cell.items():
        times = np.array([r.timestamp_s for r in rows])
        temps = np.array([r.temp_c for r in rows])
        currents = np.array([r.current_a for r in rows])
        ref_idx = [j for j, r in enumerate(rows) if r.capacity_ah is not None]
        if len(ref_idx) < 2:
            report.skipped_cells.append(cell_id)
            report.warnings.append(
                f"cell {cell_id}: {len(ref_idx)} capacity reference(s), "
                "need >= 2; skipped"
            )
            continue
        rated = rated_capacity_ah
        if rated is None:
            rated = rows[ref_idx[0]].capacity_ah
        if rated <= 0:
            report.skipped_cells.append(cell_id)
            report.warnings.append(
                f"cell {cell_id}: non-positive rated capacity {rated}; skipped"
            )
            continue
        t0_cell = times[0]
        emitted = 0
        for a_idx, b_idx in zip(ref_idx[:-1], ref_idx[1:]):
            t_a, t_b = times[a_idx], times[b_idx]
            drop = rows[a_idx].capacity_ah - rows[b_idx].capacity_ah
            span = t_b - t_a
            n_win = max(1, round(span / window_s))
            bounds = t_a + span * np.arange(n_win + 1) / n_win
            lo = np.searchsorted(times, bounds[:-1], side="left")
            hi = np.searchsorted(times, bounds[1:], side="left")
            rms = np.zeros(n_win)
            signs = np.ones(n_win)
            mean_temp = np.zeros(n_win)
            throughput = np.zeros(n_win)
            for w in range(n_win):
                sl = slice(lo[w], hi[w])
                cur = currents[sl]
                if cur.size == 0:
                    mid = 0.5 * (bounds[w] + bounds[w + 1])
                    mean_temp[w] = float(np.interp(mid, times, temps))
                    continue
                rms[w] = float(np.sqrt(np.mean(cur**2)))
                if float(np.sum(cur)) < 0:
                    signs[w] = -1.0
                mean_temp[w] = float(np.mean(temps[sl]))
                throughput[w] = float(np.sum(np.abs(cur)))
            total_thr = float(throughput.sum())
            if total_thr > 0:
                share = throughput / total_thr
            else:
                share = np.full(n_win, 1.0 / n_win)
            for w in range(n_win):
                mid_h = (0.5 * (bounds[w] + bounds[w + 1]) - t0_cell) / 3600.0
                samples.append(DegradationSample(
                    elapsed_h=float(mid_h),
                    temp_c=float(mean_temp[w]),
                    c_rate=float(signs[w] * rms[w] / rated),
                    q_loss_ah=drop * float(share[w]),
                    cell_id=cell_id,
                ))
                emitted += 1
        report.cells_processed += 1
        report.samples_emitted += emitted
    return samples, report


def samples_to_arrays(samples):
    """Stack samples into (X context, Y c-rate, targets, cell_ids)."""
    X = np.array([[s.elapsed_h, s.temp_c] for s in samples], dtype=float)
    Y = np.array([[s.c_rate] for s in samples], dtype=float)
    t = np.array([s.q_loss_ah for s in samples], dtype=float)
    ids = [s.cell_id for s in samples]
    return X, Y, t, ids


SAMPLES_HEADER = ["elapsed_h", "temp_c", "c_rate", "q_loss_ah", "cell_id"]
FEATURES_HEADER = SAMPLES_HEADER[:3]


def write_samples_csv(samples, path) -> None:
    """Write featurized samples; floats use shortest round-trip reprs."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(SAMPLES_HEADER) + "\n")
        for s in samples:
            fh.write(f"{s.elapsed_h!r},{s.temp_c!r},{s.c_rate!r},"
                     f"{s.q_loss_ah!r},{s.cell_id}\n")


def load_samples_csv(path):
    """Parse featurized samples.

    Accepts either the full samples header or the three feature columns
    alone; in the latter case targets are NaN and cell ids empty.
    Returns (samples, has_targets).
    """
    samples = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataFormatError("file is empty; expected header row",
                                  line=1)
        if header == SAMPLES_HEADER:
            has_targets = True
        elif header == FEATURES_HEADER:
            has_targets = False
        else:
            raise DataFormatError(
                f"header must be {','.join(SAMPLES_HEADER)} or "
                f"{','.join(FEATURES_HEADER)}", line=1)
        n_cols = len(header)
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != n_cols:
                raise DataFormatError(
                    f"expected {n_cols} fields, got {len(row)}", line=lineno)
            try:
                elapsed = float(row[0])
                temp = float(row[1])
                c_rate = float(row[2])
                q_loss = float(row[3]) if has_targets else float("nan")
            except ValueError as exc:
                raise DataFormatError(f"bad numeric field: {exc}",
                                      line=lineno) from None
            if not np.isfinite([elapsed, temp, c_rate]).all():
                raise DataFormatError("feature fields must be finite",
                                      line=lineno)
            if has_targets and not np.isfinite(q_loss):
                raise DataFormatError("q_loss_ah must be finite",
                                      line=lineno)
            if elapsed < 0:
                raise DataFormatError(
                    f"elapsed_h must be >= 0, got {elapsed}", line=lineno)
            cell = row[4].strip() if has_targets else ""
            samples.append(DegradationSample(
                elapsed_h=elapsed, temp_c=temp, c_rate=c_rate,
                q_loss_ah=q_loss, cell_id=cell))
    if not samples:
        raise DataFormatError("no data rows found")
    return samples, has_targets


# ---------------------------------------------------------------------------
# Synthetic degradation oracle


@dataclass(frozen=True)
class OracleParams:
    """Closed-form fade model.

    Cumulative loss under constant conditions:
        Q(t) = arrh(temp) * stress(c_rate) * t**age_exponent
    with stress convex in c_rate and minimal at rest, and arrh an
    Arrhenius factor normalized to 1 at 25 °C.
    """

    age_exponent: float = 0.8
    rate_exponent: float = 2.0
    k_calendar: float = 1.65e-4
    k_cycle: float = 5.0e-4
    charge_weight: float = 1.0
    discharge_weight: float = 1.15
    arrhenius_k: float = 3000.0
    ref_temp_c: float = 25.0

    def __post_init__(self):
        for name in ("age_exponent", "rate_exponent", "k_calendar",
                     "k_cycle", "charge_weight", "discharge_weight",
                     "arrhenius_k"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


def oracle_arrhenius(params: OracleParams, temp_c):
    temp_c = np.asarray(temp_c, dtype=float)
    t_k = temp_c + 273.15
    ref_k = params.ref_temp_c + 273.15
    return np.exp(params.arrhenius_k * (1.0 / ref_k - 1.0 / t_k))


def oracle_stress(params: OracleParams, c_rate):
    """Convex, increasing in |c_rate|, minimum at rest (calendar-only)."""
    r = np.asarray(c_rate, dtype=float)
    p = params.rate_exponent
    cyc = (params.charge_weight * np.maximum(r, 0.0) ** p
           + params.discharge_weight * np.maximum(-r, 0.0) ** p)
    return params.k_calendar + params.k_cycle * cyc


def oracle_q_loss_window(params: OracleParams, c_rate, temp_c,
                         t_start_h, t_end_h):
    """Exact capacity loss over [t_start_h, t_end_h] at constant
    conditions: arrh * stress * (t_end**z - t_start**z)."""
    z = params.age_exponent
    t1 = np.asarray(t_start_h, dtype=float)
    t2 = np.asarray(t_end_h, dtype=float)
    return (oracle_arrhenius(params, temp_c) * oracle_stress(params, c_rate)
            * (t2**z - t1**z))


def oracle_q_loss_rate(params: OracleParams, c_rate, temp_c, age_h):
    """Instantaneous fade rate dQ/dt at the given age (Ah per hour)."""
    z = params.age_exponent
    age = np.asarray(age_h, dtype=float)
    return (oracle_arrhenius(params, temp_c) * oracle_stress(params, c_rate)
            * z * age ** (z - 1.0))


def generate_synthetic_cell(cell_id: str, seed: int, base_temp_c: float,
                            duration_h: float = 1200.0,
                            window_h: float = 0.25,
                            rows_per_window: int = 3,
                            initial_capacity_ah: float = 2.1,
                            params: Optional[OracleParams] = None) -> list:
    """Simulate one cell under randomized cycling.

    Current and temperature are held constant inside each window, so
    featurize() with the same window recovers the exact per-window
    conditions and the apportioned targets equal the oracle's closed
    form.  A capacity reference row opens every window and closes the
    stream.
    """
    if params is None:
        params = OracleParams()
    rng = np.random.default_rng(seed)
    n_win = int(round(duration_h / window_h))
    window_s = window_h * 3600.0
    period_s = window_s / rows_per_window

    records = []
    soc = 0.5
    q_cum = 0.0
    for w in range(n_win):
        t_lo_h = w * window_h
        t_hi_h = (w + 1) * window_h
        # pick the window's constant conditions
        if soc >= 0.9:
            c_rate = -rng.uniform(0.3, 2.2)
        elif soc <= 0.1:
            c_rate = rng.uniform(0.3, 2.2)
        elif rng.uniform() < 0.15:
            c_rate = 0.0
        else:
            c_rate = rng.uniform(-2.2, 2.2)
        temp = (base_temp_c + 6.0 * np.sin(2.0 * np.pi * t_lo_h / 24.0)
                + rng.normal(scale=0.8))
        volt = 3.2 + soc
        current = c_rate * initial_capacity_ah
        for j in range(rows_per_window):
            records.append(CyclingRecord(
                cell_id=cell_id,
                timestamp_s=t_lo_h * 3600.0 + j * period_s,
                voltage_v=volt,
                current_a=current,
                temp_c=temp,
                capacity_ah=(initial_capacity_ah - q_cum) if j == 0 else None,
            ))
        q_cum += float(oracle_q_loss_window(params, c_rate, temp,
                                            t_lo_h, t_hi_h))
        soc = float(np.clip(soc + c_rate * window_h, 0.05, 0.95))
    records.append(CyclingRecord(
        cell_id=cell_id,
        timestamp_s=duration_h * 3600.0,
        voltage_v=3.2 + soc,
        current_a=0.0,
        temp_c=base_temp_c,
        capacity_ah=initial_capacity_ah - q_cum,
    ))
    return records


# Four stand-in cells; the third base temperature sits between the others
# so a model trained on the rest must interpolate, not extrapolate.
SYNTH_CELL_DEFS = (
    ("SYN1", 15.0),
    ("SYN2", 33.0),
    ("SYN3", 21.0),
    ("SYN4", 27.0),
)


def generate_synthetic_fleet(seed: int, duration_h: float = 1200.0,
                             window_h: float = 0.25,
                             params: Optional[OracleParams] = None,
                             cell_defs=SYNTH_CELL_DEFS) -> list:
    """All stand-in cells in one record list, each with its own derived
    seed and ambient base temperature."""
    records = []
    for idx, (cell_id, base_temp) in enumerate(cell_defs):
        records.extend(generate_synthetic_cell(
            cell_id=cell_id,
            seed=seed * 1000 + idx,
            base_temp_c=base_temp,
            duration_h=duration_h,
            window_h=window_h,
            params=params,
        ))
    return records
