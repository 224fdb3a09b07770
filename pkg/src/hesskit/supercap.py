"""Two-branch RC supercapacitor bank model with voltage-linear SOC.

Circuit (re-derived by Kirchhoff analysis from the two-branch equivalent
circuit; the derivation below is normative):

            i_sc ->
    o----[R_t]----x----[R_bulk]----(C_b at u_b)----o gnd
                  |
                  +----[R_fast]----(C_s at u_s)----o gnd

Both storage branches hang off the internal node x; R_t connects x to the
terminal. With discharge current i_sc > 0 leaving the terminal, KCL at x
gives the node voltage

    u_x = (R_fast·u_b + R_bulk·u_s - R_bulk·R_fast·i_sc) / (R_bulk + R_fast)

and the branch dynamics

    du_b/dt = -(u_b - u_s + R_fast·i_sc) / (C_b·(R_bulk + R_fast))
    du_s/dt = -(u_s - u_b + R_bulk·i_sc) / (C_s·(R_bulk + R_fast))

so total stored charge C_b·u_b + C_s·u_s changes by exactly -i_sc per second
(charge only moves between the branches when i_sc = 0). The terminal voltage
is u_x - R_t·i_sc: a convex combination of the branch voltages minus the drop
over R_t + R_bulk∥R_fast. There is no shunt path to ground, so the bank holds
its charge at rest (self-discharge is out of scope).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace
from typing import NamedTuple

from .errors import StabilityWarning, SupercapUnavailableError

# below this total series resistance the power->current inversion uses the
# ideal p/V form to dodge the degenerate quadratic
_R_TINY = 1e-12


@dataclass(frozen=True)
class SupercapParams:
    """Bank-level parameters; the DC/DC converter on the supercap path is a
    constant efficiency applied to power flowing either way."""

    c_bulk_f: float = 32.0
    c_fast_f: float = 2.0
    r_term: float = 0.05
    r_fast: float = 0.5
    r_bulk: float = 0.05
    u_min_v: float = 120.0
    u_max_v: float = 240.0
    eta_coulomb: float = 0.95
    dcdc_eff: float = 0.95
    p_max_w: float = 45000.0

    def __post_init__(self):
        for name in ("c_bulk_f", "c_fast_f", "r_term", "r_fast", "r_bulk", "p_max_w"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")
        if not 0 <= self.u_min_v < self.u_max_v:
            raise ValueError(f"need 0 <= u_min < u_max, got {self.u_min_v}, {self.u_max_v}")
        for name in ("eta_coulomb", "dcdc_eff"):
            if not 0 < getattr(self, name) <= 1:
                raise ValueError(f"{name} must be in (0, 1], got {getattr(self, name)}")

    @property
    def r_branch_parallel(self) -> float:
        """Effective resistance of the two storage branches in parallel."""
        return self.r_bulk * self.r_fast / (self.r_bulk + self.r_fast)

    @property
    def r_total(self) -> float:
        return self.r_term + self.r_branch_parallel

    @property
    def tau_fastest_s(self) -> float:
        """Inter-branch equalization time constant (the fastest mode)."""
        c_series = self.c_bulk_f * self.c_fast_f / (self.c_bulk_f + self.c_fast_f)
        return (self.r_bulk + self.r_fast) * c_series


@dataclass(frozen=True)
class SupercapState:
    u_b_v: float
    u_s_v: float
    q_loss_j: float = 0.0


def initial_state(params: SupercapParams, soc: float) -> SupercapState:
    """Rested state (both branches equal) at the given voltage-linear SOC."""
    u = params.u_min_v + soc * (params.u_max_v - params.u_min_v)
    return SupercapState(u_b_v=u, u_s_v=u)


def sc_open_voltage(state: SupercapState, params: SupercapParams) -> float:
    """Terminal voltage at zero current: the branch-resistance weighted mix."""
    rb, rf = params.r_bulk, params.r_fast
    return (rf * state.u_b_v + rb * state.u_s_v) / (rb + rf)


def sc_terminal_voltage(state: SupercapState, params: SupercapParams, i_sc: float) -> float:
    """Terminal voltage under load (discharge current positive)."""
    return sc_open_voltage(state, params) - params.r_total * i_sc


def sc_soc(state: SupercapState, params: SupercapParams) -> float:
    """Voltage-linear SOC from the zero-current terminal voltage, so resistive
    sag does not alias into state of charge. Clamped to [0, 1]."""
    u0 = sc_open_voltage(state, params)
    soc = (u0 - params.u_min_v) / (params.u_max_v - params.u_min_v)
    return min(max(soc, 0.0), 1.0)


def sc_step(state: SupercapState, params: SupercapParams, i_sc: float, dt: float) -> SupercapState:
    """Explicit-Euler update of the branch voltages plus loss bookkeeping.

    The accumulated loss uses i²·(R_t + R_bulk∥R_fast) for the ohmic part
    (exact when the branches are balanced) plus the coulombic share of the
    transferred energy.
    """
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if dt > params.tau_fastest_s:
        warnings.warn(
            f"dt={dt} s above fastest branch time constant {params.tau_fastest_s:.3f} s",
            StabilityWarning,
            stacklevel=2,
        )
    rsum = params.r_bulk + params.r_fast
    du_b = -(state.u_b_v - state.u_s_v + params.r_fast * i_sc) / (params.c_bulk_f * rsum)
    du_s = -(state.u_s_v - state.u_b_v + params.r_bulk * i_sc) / (params.c_fast_f * rsum)
    u_term = sc_terminal_voltage(state, params, i_sc)
    loss = dt * (i_sc * i_sc * params.r_total + abs(u_term * i_sc) * (1.0 - params.eta_coulomb))
    return replace(
        state,
        u_b_v=state.u_b_v + dt * du_b,
        u_s_v=state.u_s_v + dt * du_s,
        q_loss_j=state.q_loss_j + loss,
    )


class ScCurrentDraw(NamedTuple):
    amps: float
    saturated: bool


def sc_current_from_power(state: SupercapState, params: SupercapParams, p_sc_w: float) -> ScCurrentDraw:
    """Bank current serving bus-side power p_sc_w through the converter.

    Discharge (p > 0) pulls p/eff from the bank; charge pushes p·eff into it.
    Solves u(i)·i = bank power for the physical root; past the bank's
    maximum-power point the peak-power current is returned flagged.
    """
    if not math.isfinite(p_sc_w):
        raise ValueError(f"power must be finite, got {p_sc_w}")
    if p_sc_w == 0.0:
        return ScCurrentDraw(0.0, False)
    v0 = sc_open_voltage(state, params)
    if p_sc_w > 0 and v0 <= params.u_min_v:
        raise SupercapUnavailableError(
            f"bank at {v0:.2f} V <= floor {params.u_min_v:.2f} V; cannot discharge"
        )
    p_bank = p_sc_w / params.dcdc_eff if p_sc_w > 0 else p_sc_w * params.dcdc_eff
    r = params.r_total
    if r < _R_TINY:
        return ScCurrentDraw(p_bank / v0, False)
    disc = v0 * v0 - 4.0 * r * p_bank
    if disc < 0:
        return ScCurrentDraw(v0 / (2.0 * r), True)
    return ScCurrentDraw((v0 - math.sqrt(disc)) / (2.0 * r), False)


def stored_energy(state: SupercapState, params: SupercapParams) -> float:
    """Joules stored in both branch capacitances."""
    return 0.5 * (params.c_bulk_f * state.u_b_v**2 + params.c_fast_f * state.u_s_v**2)


def energy_at_voltage(params: SupercapParams, u: float) -> float:
    """Stored energy of a rested bank at branch voltage u."""
    return 0.5 * (params.c_bulk_f + params.c_fast_f) * u * u
