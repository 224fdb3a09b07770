"""Drive-cycle loading and demand-power computation.

A cycle is a timestamped speed trace; longitudinal dynamics with the
configured vehicle parameters turn it into a wheel-power demand series.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from .errors import CycleError

MPS_PER_MPH = 0.44704
MPS_PER_KMH = 1.0 / 3.6
SPEED_UNIT_FACTORS = {"mps": 1.0, "mph": MPS_PER_MPH, "kmh": MPS_PER_KMH}


@dataclass(frozen=True)
class DriveCycle:
    """Speed-vs-time trace; times strictly increasing, speeds non-negative."""

    time_s: np.ndarray
    speed_mps: np.ndarray
    name: str = "cycle"

    def __post_init__(self):
        t = np.asarray(self.time_s, dtype=float)
        v = np.asarray(self.speed_mps, dtype=float)
        if t.shape != v.shape or t.ndim != 1:
            raise CycleError(f"time/speed shape mismatch: {t.shape} vs {v.shape}")
        if t.shape[0] < 2:
            raise CycleError(f"cycle {self.name!r} needs at least 2 samples, got {t.shape[0]}")
        if not (np.all(np.isfinite(t)) and np.all(np.isfinite(v))):
            raise CycleError(f"cycle {self.name!r} contains non-finite values")
        if np.any(np.diff(t) <= 0):
            bad = int(np.argmax(np.diff(t) <= 0)) + 1
            raise CycleError(f"cycle {self.name!r} time not strictly increasing at sample {bad}")
        if np.any(v < 0):
            raise CycleError(f"cycle {self.name!r} has negative speeds")
        t.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "time_s", t)
        object.__setattr__(self, "speed_mps", v)

    def __len__(self):
        return self.time_s.shape[0]


@dataclass(frozen=True)
class VehicleParams:
    """Longitudinal-dynamics parameters; defaults match the simulated sedan."""

    mass_kg: float = 1635.0
    frontal_area_m2: float = 2.04
    tire_radius_m: float = 0.28
    drag_coeff: float = 0.41
    rolling_coeff: float = 0.03
    drivetrain_eff: float = 0.9
    air_density_kg_m3: float = 1.225
    gravity_m_s2: float = 9.81

    def __post_init__(self):
        for name, value in self.__dict__.items():
            if not (value > 0 and np.isfinite(value)):
                raise ValueError(f"{name} must be positive and finite, got {value}")
        if self.drivetrain_eff > 1.0:
            raise ValueError(f"drivetrain_eff must be <= 1, got {self.drivetrain_eff}")


@dataclass(frozen=True)
class PowerTrace:
    """Demand power aligned with the source cycle timestamps."""

    time_s: np.ndarray
    power_w: np.ndarray
    speed_mps: np.ndarray
    accel_mps2: np.ndarray
    name: str = "cycle"

    def __len__(self):
        return self.time_s.shape[0]


def load_cycle(source, units: str = "mps", name: str = None) -> DriveCycle:
    """Read a ``time,speed`` CSV (path or byte/text stream) into a DriveCycle.

    Speeds are converted from the given unit to m/s. Rows must already be in
    time order; unsorted input is rejected rather than silently sorted.
    """
    if units not in SPEED_UNIT_FACTORS:
        raise CycleError(f"unknown speed unit {units!r}; pick one of {sorted(SPEED_UNIT_FACTORS)}")
    factor = SPEED_UNIT_FACTORS[units]

    if hasattr(source, "read"):
        data = source.read()
        text = data.decode("utf-8-sig") if isinstance(data, bytes) else data
        label = name or getattr(source, "name", "stream")
    else:
        with open(source, "rb") as fh:
            text = fh.read().decode("utf-8-sig")
        label = name or str(source)

    reader = csv.reader(io.StringIO(text))
    rows = list(reader)
    if not rows:
        raise CycleError(f"{label}: empty file")
    header = [cell.strip().lower() for cell in rows[0]]
    if header != ["time", "speed"]:
        raise CycleError(f"{label}: header must be 'time,speed', got {','.join(header)!r}")

    times, speeds = [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row or (len(row) == 1 and not row[0].strip()):
            continue
        if len(row) != 2:
            raise CycleError(f"{label}: line {lineno}: expected 2 fields, got {len(row)}")
        try:
            t, v = float(row[0]), float(row[1])
        except ValueError:
            raise CycleError(f"{label}: line {lineno}: non-numeric value in {row!r}") from None
        if not (np.isfinite(t) and np.isfinite(v)):
            raise CycleError(f"{label}: line {lineno}: non-finite value")
        if times and t <= times[-1]:
            raise CycleError(f"{label}: line {lineno}: time {t} not after {times[-1]}")
        times.append(t)
        speeds.append(v * factor)

    if len(times) < 2:
        raise CycleError(f"{label}: cycle needs at least 2 samples, got {len(times)}")
    return DriveCycle(time_s=np.array(times), speed_mps=np.array(speeds), name=label)


def demand_power(cycle: DriveCycle, params: VehicleParams) -> PowerTrace:
    """Wheel-power demand from longitudinal dynamics.

    Acceleration is the backward difference of speed (zero at the first
    sample, keeping the series causal). The wheel force is inertia + aero
    drag + rolling resistance, with the rolling term suppressed at standstill;
    positive wheel power is divided by the drivetrain efficiency, regenerated
    power is multiplied by it.
    """
    t, v = cycle.time_s, cycle.speed_mps
    accel = np.zeros_like(v)
    accel[1:] = np.diff(v) / np.diff(t)

    drag = 0.5 * params.air_density_kg_m3 * params.drag_coeff * params.frontal_area_m2 * v**2
    rolling = params.mass_kg * params.gravity_m_s2 * params.rolling_coeff * (v > 0)
    force = params.mass_kg * accel + drag + rolling

    wheel = force * v
    eff = params.drivetrain_eff
    power = np.where(wheel >= 0, wheel / eff, wheel * eff)
    return PowerTrace(time_s=t, power_w=power, speed_mps=v, accel_mps2=accel, name=cycle.name)
