"""Per-step energy dispatch and whole-cycle simulation.

Each step of the hybrid pipeline: fuzzy controller proposes the battery
share, the windowed-fit stage smooths the commanded battery power, the rule
stage guards against overshoot, and a constraint re-dispatch enforces device
power/SOC limits (regeneration goes to the supercap first). Plant models are
then advanced one step. The single-ESS baseline routes everything through
the battery.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, replace

import numpy as np

from . import battery as bat
from . import supercap as sc
from .config import SimConfig, config_echo
from .drive_cycle import DriveCycle, demand_power
from .errors import DepletedPackError, SimulationAbort
from .fuzzy import FuzzyRuleBase, evaluate
from .life import FadeState, estimate_cycle_life, fade_from_trace
from .sgfilter import (
    TAG_FILTERED,
    TAG_FUZZY_FALLBACK,
    Window,
    mode1_select,
    mode2_select,
    rule_select,
)

TAG_REDISPATCH = "constraint-redispatch"
TAG_SINGLE_ESS = "single-ess"

# dispatch powers closer than this (in watts) count as unchanged
_P_EPS = 1e-9


@dataclass(frozen=True)
class PowerSplit:
    """One step's dispatch decision (bus-side powers; converter losses live
    inside the supercap model)."""

    t: float
    p_req: float
    k_bat: float
    p_bat: float
    p_sc: float
    tag: str
    p_bat_selected: float  # post-rule-selection, before constraint re-dispatch
    bat_saturated: bool = False
    sc_saturated: bool = False
    curtailed_w: float = 0.0


@dataclass(frozen=True)
class DispatchLimits:
    """Non-negative power magnitudes each device can accept this step."""

    bat_discharge_max: float
    bat_charge_max: float
    sc_discharge_max: float
    sc_charge_max: float


@dataclass
class SimulationReport:
    """Full per-step traces plus fade results; arrays share the cycle length."""

    mode: str
    dt_s: float
    t: np.ndarray
    speed_mps: np.ndarray
    p_req_w: np.ndarray
    k_bat: np.ndarray
    p_bat_w: np.ndarray
    p_sc_w: np.ndarray
    i_bat_a: np.ndarray
    i_sc_a: np.ndarray
    soc_bat: np.ndarray
    soc_sc: np.ndarray
    temp_k: np.ndarray
    tags: list
    bat_loss_j: np.ndarray       # per-step increments
    sc_loss_j: np.ndarray        # per-step increments, bank side
    dcdc_loss_j: np.ndarray      # per-step converter losses on the supercap path
    curtailed_w: np.ndarray
    fade: FadeState
    per_cycle_fade_pct: float
    est_life_cycles: object      # int or None for a fade-free run
    config: dict


def split_step(
    t: float,
    p_req: float,
    bat_state: bat.BatteryState,
    sc_state: sc.SupercapState,
    controller: FuzzyRuleBase,
    cfg: SimConfig,
    history,
) -> PowerSplit:
    """Decide the battery/supercap split for one step.

    ``history`` holds the previously commanded battery powers (may be short
    during warm-up); the current raw fuzzy command is appended internally so
    the trailing windows include the present step.
    """
    if cfg.mode == "single_ess":
        p_bat, p_sc_w, sat_b, _, curtailed = _redispatch(
            p_req, 0.0, _limits(bat_state, sc_state, cfg, sc_allowed=False), p_req
        )
        return PowerSplit(
            t=t, p_req=p_req, k_bat=1.0, p_bat=p_bat, p_sc=p_sc_w,
            tag=TAG_SINGLE_ESS, p_bat_selected=p_req,
            bat_saturated=sat_b, curtailed_w=curtailed,
        )

    p_norm = p_req / cfg.fuzzy.p_peak_w
    k_bat = evaluate(controller, p_norm, bat_state.soc, sc_soc_of(sc_state, cfg))
    raw_p_bat = k_bat * p_req

    series = np.append(np.asarray(history, dtype=float), raw_p_bat)
    fit1 = fit2 = None
    fcfg = cfg.filter
    n1 = 2 * fcfg.mode1_half_width + 1
    if series.shape[0] >= n1:
        fit1 = mode1_select(Window(fcfg.mode1_half_width, series[-n1:]), fcfg.mode1_max_order)
    admissible = [m for m in fcfg.mode2_half_widths if 2 * m + 1 <= series.shape[0]]
    if admissible:
        fit2 = mode2_select(series, admissible, fcfg.mode2_order)

    p_selected, tag = rule_select(raw_p_bat, fit1, fit2, p_req)

    limits = _limits(bat_state, sc_state, cfg, sc_allowed=True)
    p_bat, p_sc_w, sat_b, sat_s, curtailed = _redispatch(
        p_selected, p_req - p_selected, limits, p_req
    )
    if abs(p_bat - p_selected) > _P_EPS:
        tag = TAG_REDISPATCH
    return PowerSplit(
        t=t, p_req=p_req, k_bat=k_bat, p_bat=p_bat, p_sc=p_sc_w, tag=tag,
        p_bat_selected=p_selected, bat_saturated=sat_b, sc_saturated=sat_s,
        curtailed_w=curtailed,
    )


def sc_soc_of(state: sc.SupercapState, cfg: SimConfig) -> float:
    return sc.sc_soc(state, cfg.supercap)


def redispatch(p_bat: float, p_sc_w: float, limits: DispatchLimits):
    """Clamp a proposed split to device limits, moving any deficit to the
    other device; what neither can take is curtailed. Regenerative demand
    (negative total) is routed supercap-first. Returns (p_bat, p_sc)."""
    p_req = p_bat + p_sc_w
    new_bat, new_sc, _, _, _ = _redispatch(p_bat, p_sc_w, limits, p_req)
    return new_bat, new_sc


def _redispatch(p_bat, p_sc_w, limits: DispatchLimits, p_req):
    # curtailment is only computed in the both-saturated branches so that
    # ordinary steps keep p_bat + p_sc = p_req without rounding residue
    sat_b = sat_s = False
    curtailed = 0.0
    if p_req < 0:
        # regen: supercap absorbs first, remainder charges the battery
        p_sc_w = max(p_req, -limits.sc_charge_max)
        sat_s = p_sc_w > p_req
        p_bat = p_req - p_sc_w
        if p_bat < -limits.bat_charge_max:
            sat_b = True
            p_bat = -limits.bat_charge_max
            curtailed = p_req - p_bat - p_sc_w
    else:
        p_bat = min(max(p_bat, -limits.bat_charge_max), limits.bat_discharge_max)
        p_sc_w = p_req - p_bat
        if p_sc_w > limits.sc_discharge_max:
            sat_s = True
            p_sc_w = limits.sc_discharge_max
            p_bat = p_req - p_sc_w
            if p_bat > limits.bat_discharge_max:
                sat_b = True
                p_bat = limits.bat_discharge_max
                curtailed = p_req - p_bat - p_sc_w
        elif p_sc_w < -limits.sc_charge_max:
            sat_s = True
            p_sc_w = -limits.sc_charge_max
            p_bat = p_req - p_sc_w
            if p_bat < -limits.bat_charge_max:
                sat_b = True
                p_bat = -limits.bat_charge_max
                curtailed = p_req - p_bat - p_sc_w
    return p_bat, p_sc_w, sat_b, sat_s, curtailed


def _limits(bat_state, sc_state, cfg: SimConfig, sc_allowed: bool) -> DispatchLimits:
    bp, sp, dt = cfg.battery, cfg.supercap, cfg.dt_s

    bat_dis = bat.max_discharge_power(bat_state, bp) if bat_state.soc > bp.soc_min else 0.0
    bat_chg = bat.max_charge_power(bat_state, bp) if bat_state.soc < bp.soc_max else 0.0

    if not sc_allowed:
        return DispatchLimits(bat_dis, bat_chg, 0.0, 0.0)

    e_now = sc.stored_energy(sc_state, sp)
    e_min = sc.energy_at_voltage(sp, sp.u_min_v)
    e_max = sc.energy_at_voltage(sp, sp.u_max_v)
    v0 = sc.sc_open_voltage(sc_state, sp)
    # bank-side deliverable is bounded by the quadratic's peak and by the
    # energy window over this step; converter efficiency maps it to the bus
    peak_bank = v0 * v0 / (4.0 * sp.r_total)
    sc_dis = min(sp.p_max_w, sp.dcdc_eff * peak_bank, sp.dcdc_eff * max(0.0, e_now - e_min) / dt)
    sc_chg = min(sp.p_max_w, max(0.0, e_max - e_now) / (dt * sp.dcdc_eff))
    return DispatchLimits(bat_dis, bat_chg, max(0.0, sc_dis), max(0.0, sc_chg))


def run_simulation(cycle: DriveCycle, cfg: SimConfig) -> SimulationReport:
    """Step the whole pipeline over the cycle; deterministic for fixed inputs."""
    trace = demand_power(cycle, cfg.vehicle)
    n = len(trace)
    controller = cfg.fuzzy.rule_base() if cfg.mode == "hess" else None

    bat_state = bat.BatteryState(soc=cfg.soc_bat_init, temp_k=cfg.temp_init_k)
    sc_state = sc.initial_state(cfg.supercap, cfg.soc_sc_init)

    out = {
        name: np.zeros(n)
        for name in (
            "p_req", "k_bat", "p_bat", "p_sc", "i_bat", "i_sc",
            "soc_bat", "soc_sc", "temp", "bat_loss", "sc_loss",
            "dcdc_loss", "curtailed",
        )
    }
    tags = []
    history = []

    for step in range(n):
        t = float(trace.time_s[step])
        p_req = float(trace.power_w[step])
        try:
            split = split_step(t, p_req, bat_state, sc_state, controller, cfg, history)

            i_bat, _ = bat.current_from_power(bat_state, cfg.battery, split.p_bat)
            u_term = bat.terminal_voltage(bat_state, cfg.battery, i_bat)
            loss_b = bat.loss_increment(bat_state, cfg.battery, i_bat, u_term, cfg.dt_s)
            new_temp = bat.thermal_step(bat_state, cfg.thermal, i_bat, cfg.battery, cfg.dt_s)
            new_soc, _ = bat.soc_update(bat_state, cfg.battery, i_bat, cfg.dt_s)
            bat_state = bat.battery_step(bat_state, cfg.battery, i_bat, cfg.dt_s)
            bat_state = replace(
                bat_state, soc=new_soc, temp_k=new_temp, q_loss_j=bat_state.q_loss_j + loss_b
            )

            i_sc = 0.0
            dcdc_loss = 0.0
            loss_s = 0.0
            if cfg.mode == "hess":
                if split.p_sc != 0.0:
                    i_sc, _ = sc.sc_current_from_power(sc_state, cfg.supercap, split.p_sc)
                    p_bank = (
                        split.p_sc / cfg.supercap.dcdc_eff
                        if split.p_sc > 0
                        else split.p_sc * cfg.supercap.dcdc_eff
                    )
                    dcdc_loss = abs(split.p_sc - p_bank) * cfg.dt_s
                prev_loss = sc_state.q_loss_j
                sc_state = sc.sc_step(sc_state, cfg.supercap, i_sc, cfg.dt_s)
                loss_s = sc_state.q_loss_j - prev_loss
        except DepletedPackError as exc:
            raise SimulationAbort(
                f"step {step} (t={t:.1f} s): {exc}",
                step=step,
                state_dump={
                    "battery": dataclass_dump(bat_state),
                    "supercap": dataclass_dump(sc_state),
                    "p_req_w": p_req,
                },
            ) from exc

        if cfg.mode == "hess":
            history.append(
                split.p_bat_selected if cfg.filter.history_source == "commanded"
                else split.k_bat * p_req
            )

        out["p_req"][step] = p_req
        out["k_bat"][step] = split.k_bat
        out["p_bat"][step] = split.p_bat
        out["p_sc"][step] = split.p_sc
        out["i_bat"][step] = i_bat
        out["i_sc"][step] = i_sc
        out["soc_bat"][step] = bat_state.soc
        out["soc_sc"][step] = sc.sc_soc(sc_state, cfg.supercap)
        out["temp"][step] = bat_state.temp_k
        out["bat_loss"][step] = loss_b
        out["sc_loss"][step] = loss_s
        out["dcdc_loss"][step] = dcdc_loss
        out["curtailed"][step] = split.curtailed_w
        tags.append(split.tag)

    fade = fade_from_trace(out["i_bat"], out["temp"], cfg.dt_s, cfg.battery.q_rated_ah, cfg.fade)
    life = estimate_cycle_life(fade.q_loss_pct, cfg.fade.eol_loss_pct) if fade.q_loss_pct > 0 else None

    return SimulationReport(
        mode=cfg.mode,
        dt_s=cfg.dt_s,
        t=trace.time_s.copy(),
        speed_mps=trace.speed_mps.copy(),
        p_req_w=out["p_req"],
        k_bat=out["k_bat"],
        p_bat_w=out["p_bat"],
        p_sc_w=out["p_sc"],
        i_bat_a=out["i_bat"],
        i_sc_a=out["i_sc"],
        soc_bat=out["soc_bat"],
        soc_sc=out["soc_sc"],
        temp_k=out["temp"],
        tags=tags,
        bat_loss_j=out["bat_loss"],
        sc_loss_j=out["sc_loss"],
        dcdc_loss_j=out["dcdc_loss"],
        curtailed_w=out["curtailed"],
        fade=fade,
        per_cycle_fade_pct=fade.q_loss_pct,
        est_life_cycles=life,
        config=config_echo(cfg),
    )


def dataclass_dump(obj) -> dict:
    return {f.name: getattr(obj, f.name) for f in dataclasses.fields(obj)}
