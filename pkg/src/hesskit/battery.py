"""Equivalent-circuit battery pack model with a lumped thermal state.

The circuit is an ideal source u_oc behind a bulk capacitance (accumulating
long-term charge drift), one polarization RC branch, and a series ohmic
resistance. Discharge current is positive throughout. State transitions are
pure: each step function takes a state and returns the updated quantity.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace
from typing import NamedTuple

from .errors import DepletedPackError, StabilityWarning


@dataclass(frozen=True)
class BatteryParams:
    """Pack-level electrical parameters.

    The source voltage is constant by default; pass ``ocv_table`` as a tuple
    of (soc, volts) pairs for a SOC-dependent open-circuit voltage.
    """

    u_oc_v: float = 330.0
    r_ohm: float = 0.08
    r_pol: float = 0.02
    c_pol_f: float = 1000.0
    c_bulk_f: float = 20000.0
    q_rated_ah: float = 40.0
    n_parallel: int = 2
    eta_coulomb: float = 0.85
    i_max_a: float = 250.0
    soc_min: float = 0.1
    soc_max: float = 1.0
    symmetric_eta: bool = False
    ocv_table: tuple = None

    def __post_init__(self):
        for name in ("u_oc_v", "r_ohm", "r_pol", "c_pol_f", "c_bulk_f", "q_rated_ah", "i_max_a"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        if not 0 < self.eta_coulomb <= 1:
            raise ValueError(f"eta_coulomb must be in (0, 1], got {self.eta_coulomb}")
        if self.n_parallel < 1:
            raise ValueError(f"n_parallel must be >= 1, got {self.n_parallel}")
        if not 0 <= self.soc_min < self.soc_max <= 1:
            raise ValueError(f"need 0 <= soc_min < soc_max <= 1, got {self.soc_min}, {self.soc_max}")
        if self.ocv_table is not None:
            pts = tuple((float(s), float(v)) for s, v in self.ocv_table)
            if any(b[0] <= a[0] for a, b in zip(pts, pts[1:])):
                raise ValueError("ocv_table soc values must be strictly increasing")
            object.__setattr__(self, "ocv_table", pts)

    @property
    def tau_s(self) -> float:
        return self.r_pol * self.c_pol_f

    def u_oc(self, soc: float) -> float:
        if self.ocv_table is None:
            return self.u_oc_v
        pts = self.ocv_table
        if soc <= pts[0][0]:
            return pts[0][1]
        if soc >= pts[-1][0]:
            return pts[-1][1]
        for (s0, v0), (s1, v1) in zip(pts, pts[1:]):
            if soc <= s1:
                return v0 + (v1 - v0) * (soc - s0) / (s1 - s0)
        return pts[-1][1]


@dataclass(frozen=True)
class ThermalParams:
    """Lumped pack thermal model: ohmic heating vs convection to ambient."""

    heat_capacity_j_k: float = 80000.0
    h_conv_w_k: float = 30.0
    t_ambient_k: float = 298.15

    def __post_init__(self):
        for name, value in self.__dict__.items():
            if not value > 0:
                raise ValueError(f"{name} must be positive, got {value}")


@dataclass(frozen=True)
class BatteryState:
    soc: float = 1.0
    i_pol_a: float = 0.0
    u_bulk_v: float = 0.0
    temp_k: float = 298.15
    q_loss_j: float = 0.0
    ah_throughput: float = 0.0
    last_current_a: float = 0.0


class CurrentDraw(NamedTuple):
    amps: float
    saturated: bool


def source_voltage(state: BatteryState, params: BatteryParams) -> float:
    """Effective source voltage before the ohmic drop."""
    return params.u_oc(state.soc) - state.u_bulk_v - params.r_pol * state.i_pol_a


def terminal_voltage(state: BatteryState, params: BatteryParams, i: float) -> float:
    return source_voltage(state, params) - params.r_ohm * i


def current_from_power(state: BatteryState, params: BatteryParams, p_w: float) -> CurrentDraw:
    """Terminal current delivering power p_w (discharge positive).

    Solves r·I² − V_eff·I + p = 0 and returns the physical (smaller) root.
    Past the maximum-power point (negative discriminant) the peak-power
    current V_eff/2r is returned with the saturated flag set.
    """
    if not math.isfinite(p_w):
        raise ValueError(f"power must be finite, got {p_w}")
    v_eff = source_voltage(state, params)
    if v_eff <= 0:
        raise DepletedPackError(f"effective source voltage {v_eff:.3f} V <= 0")
    if p_w == 0.0:
        return CurrentDraw(0.0, False)
    disc = v_eff * v_eff - 4.0 * params.r_ohm * p_w
    if disc < 0:
        return CurrentDraw(v_eff / (2.0 * params.r_ohm), True)
    return CurrentDraw((v_eff - math.sqrt(disc)) / (2.0 * params.r_ohm), False)


def max_discharge_power(state: BatteryState, params: BatteryParams) -> float:
    """Terminal power at the current limit (used by the dispatcher)."""
    v_eff = source_voltage(state, params)
    i = min(params.i_max_a, v_eff / (2.0 * params.r_ohm))
    return max(0.0, (v_eff - params.r_ohm * i) * i)


def max_charge_power(state: BatteryState, params: BatteryParams) -> float:
    """Magnitude of terminal power at the charge current limit."""
    v_eff = source_voltage(state, params)
    i = params.i_max_a
    return (v_eff + params.r_ohm * i) * i


def battery_step(state: BatteryState, params: BatteryParams, i: float, dt: float) -> BatteryState:
    """Advance polarization current, bulk drift, and throughput by dt.

    The polarization branch uses the exact exponential step for its linear
    relaxation (equal to the continuous solution for constant current within
    the step), so accuracy does not degrade near dt ~ tau.
    """
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    tau = params.tau_s
    if dt >= tau:
        warnings.warn(
            f"dt={dt} s not below polarization time constant {tau} s; dynamics under-resolved",
            StabilityWarning,
            stacklevel=2,
        )
    decay = math.exp(-dt / tau)
    return replace(
        state,
        i_pol_a=i + (state.i_pol_a - i) * decay,
        u_bulk_v=state.u_bulk_v + dt * i / params.c_bulk_f,
        ah_throughput=state.ah_throughput + abs(i) * dt / 3600.0,
        last_current_a=i,
    )


class SocUpdate(NamedTuple):
    soc: float
    saturated: bool


def soc_update(state: BatteryState, params: BatteryParams, i: float, dt: float) -> SocUpdate:
    """Coulomb-counting SOC; charge current is derated by the coulomb
    efficiency, discharge counts in full. Clamped to [0, 1]."""
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    eta = 1.0 if (i >= 0 and not params.symmetric_eta) else params.eta_coulomb
    soc = state.soc - eta * i * dt / (3600.0 * params.q_rated_ah)
    clamped = min(max(soc, 0.0), 1.0)
    return SocUpdate(clamped, clamped != soc)


def loss_increment(
    state: BatteryState, params: BatteryParams, i: float, u_terminal: float, dt: float
) -> float:
    """Joules lost over dt: per-branch ohmic heating plus the coulombic
    inefficiency share of the transferred energy."""
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    ohmic = i * i * params.r_ohm / params.n_parallel
    coulombic = abs(u_terminal * i) * (1.0 - params.eta_coulomb)
    return dt * (ohmic + coulombic)


def thermal_step(
    state: BatteryState,
    thermal: ThermalParams,
    i: float,
    params: BatteryParams,
    dt: float,
) -> float:
    """New pack temperature after ohmic heating and convective cooling."""
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    heating = i * i * params.r_ohm / params.n_parallel
    cooling = thermal.h_conv_w_k * (state.temp_k - thermal.t_ambient_k)
    return state.temp_k + dt * (heating - cooling) / thermal.heat_capacity_j_k
