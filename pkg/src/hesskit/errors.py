"""Exception and warning types shared across the package."""


class HessError(Exception):
    """Base class for all hesskit domain errors."""


class CycleError(HessError):
    """Drive-cycle file is malformed, too short, or out of order."""


class ConfigError(HessError):
    """Simulation config or monomer file cannot be parsed or validated."""


class RuleBaseError(HessError):
    """Fuzzy rule-base file fails to parse or leaves input regions uncovered."""


class FitError(HessError):
    """Windowed polynomial fit is infeasible (order too high, singular system)."""


class InsufficientHistoryError(FitError):
    """No admissible window fits within the available history."""


class DepletedPackError(HessError):
    """Battery effective source voltage fell to zero or below."""


class SupercapUnavailableError(HessError):
    """Supercap bank cannot serve the requested power at its current state."""


class UndefinedLifeError(HessError):
    """Cycle-life estimate requested for a non-positive per-cycle fade."""


class SimulationAbort(HessError):
    """A plant model failed mid-run; carries the step index and a state dump."""

    def __init__(self, message, step, state_dump=None):
        super().__init__(message)
        self.step = step
        self.state_dump = dict(state_dump or {})


class StabilityWarning(UserWarning):
    """Integration step is large relative to the fastest time constant."""


class CalibrationWarning(UserWarning):
    """Model evaluated outside its calibrated range (e.g. C-rate above 10C)."""
