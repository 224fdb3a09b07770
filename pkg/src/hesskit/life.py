"""Semi-empirical capacity-fade model and cycle-life extrapolation.

Per-ampere-hour capacity loss follows an Arrhenius law whose activation
energy falls linearly with C-rate and whose pre-exponential factor decays
exponentially with C-rate; throughput enters through a sub-linear power law.
Simulated current/temperature traces are bucketed by C-rate and accumulated
incrementally, then extrapolated to the number of identical cycles reaching
the end-of-life capacity loss.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

from .errors import CalibrationWarning, UndefinedLifeError


@dataclass(frozen=True)
class FadeParams:
    """Calibrated fade-model constants (lithium iron phosphate chemistry)."""

    e_a0_j_mol: float = 31500.0
    b_rate_j_mol: float = -370.3
    ln_a_scale: float = 1.251
    ln_a_decay: float = 0.2539
    ln_a_floor: float = 9.21
    tau_exp: float = 0.824
    r_gas: float = 8.314
    eol_loss_pct: float = 20.0
    c_rate_bin: float = 0.25
    c_rate_calibrated_max: float = 10.0

    def __post_init__(self):
        if not 0 < self.eol_loss_pct < 100:
            raise ValueError(f"eol_loss_pct must be in (0, 100), got {self.eol_loss_pct}")
        for name in ("r_gas", "tau_exp", "c_rate_bin"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive, got {getattr(self, name)}")


@dataclass
class FadeState:
    """Accumulated fade: percent capacity lost plus per-C-rate Ah throughput."""

    q_loss_pct: float = 0.0
    ah_by_rate: dict = field(default_factory=dict)

    def copy(self) -> "FadeState":
        return FadeState(q_loss_pct=self.q_loss_pct, ah_by_rate=dict(self.ah_by_rate))


def activation_energy(c_rate: float, params: FadeParams = FadeParams()) -> float:
    """Arrhenius activation energy in J/mol, falling linearly with C-rate."""
    if c_rate < 0:
        raise ValueError(f"c_rate must be >= 0, got {c_rate}")
    if c_rate > params.c_rate_calibrated_max:
        warnings.warn(
            f"C-rate {c_rate:.2f} above calibrated range ({params.c_rate_calibrated_max}C)",
            CalibrationWarning,
            stacklevel=2,
        )
    return params.e_a0_j_mol + params.b_rate_j_mol * c_rate


def ln_pre_exponential(c_rate: float, params: FadeParams = FadeParams()) -> float:
    """Natural log of the pre-exponential factor (decays toward its floor)."""
    if c_rate < 0:
        raise ValueError(f"c_rate must be >= 0, got {c_rate}")
    return params.ln_a_scale * math.exp(-params.ln_a_decay * c_rate) + params.ln_a_floor


def capacity_loss_step(
    c_rate: float, t_bat_k: float, ah: float, params: FadeParams = FadeParams()
) -> float:
    """Percent capacity lost by ah ampere-hours at the given rate and
    temperature, starting from zero accumulated throughput."""
    if ah < 0:
        raise ValueError(f"ah must be >= 0, got {ah}")
    if not t_bat_k > 0:
        raise ValueError(f"t_bat_k must be positive, got {t_bat_k}")
    if ah == 0.0:
        return 0.0
    ln_a = ln_pre_exponential(c_rate, params)
    e = activation_energy(c_rate, params)
    return math.exp(ln_a) * math.exp(-e / (params.r_gas * t_bat_k)) * ah**params.tau_exp


def accumulate_loss(state: FadeState, steps, params: FadeParams = FadeParams()) -> FadeState:
    """Fold (c_rate, t_bat_k, ah) increments into a new fade state.

    C-rates are rounded to the configured bin width. Each increment adds the
    power-law difference A·e^(-E/RT)·(Ah_new^τ - Ah_old^τ) for its bucket, so
    splitting a constant-condition stretch into sub-steps telescopes exactly
    and the accumulated loss can never decrease.
    """
    new = state.copy()
    for c_rate, t_bat_k, ah in steps:
        if ah < 0:
            raise ValueError(f"ah must be >= 0, got {ah}")
        if ah == 0.0:
            continue
        if not t_bat_k > 0:
            raise ValueError(f"t_bat_k must be positive, got {t_bat_k}")
        bucket = round(c_rate / params.c_rate_bin) * params.c_rate_bin
        ah_old = new.ah_by_rate.get(bucket, 0.0)
        ah_new = ah_old + ah
        ln_a = ln_pre_exponential(bucket, params)
        e = activation_energy(bucket, params)
        scale = math.exp(ln_a) * math.exp(-e / (params.r_gas * t_bat_k))
        new.q_loss_pct += scale * (ah_new**params.tau_exp - ah_old**params.tau_exp)
        new.ah_by_rate[bucket] = ah_new
    return new


def fade_from_trace(
    currents_a,
    temps_k,
    dt_s: float,
    q_rated_ah: float,
    params: FadeParams = FadeParams(),
) -> FadeState:
    """Bucket a simulated battery current/temperature trace into fade."""
    if len(currents_a) != len(temps_k):
        raise ValueError(f"trace length mismatch: {len(currents_a)} vs {len(temps_k)}")
    steps = (
        (abs(i) / q_rated_ah, t, abs(i) * dt_s / 3600.0)
        for i, t in zip(currents_a, temps_k)
    )
    return accumulate_loss(FadeState(), steps, params)


def estimate_cycle_life(per_cycle_loss_pct: float, eol_loss_pct: float = 20.0) -> int:
    """Whole cycles until the end-of-life loss, assuming identical cycles."""
    if per_cycle_loss_pct <= 0:
        raise UndefinedLifeError(
            f"per-cycle loss must be positive, got {per_cycle_loss_pct}"
        )
    return int(eol_loss_pct / per_cycle_loss_pct)
