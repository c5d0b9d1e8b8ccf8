"""Exception types raised by the reconstruction pipeline."""


class ReconstructionError(Exception):
    """Base class; ``stage`` names the pipeline step that failed, if known."""

    stage = None


class HypothesisError(ReconstructionError):
    stage = "hypotheses"

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(str(v) for v in self.violations))


class ResonanceError(ReconstructionError):
    stage = "resonances"


class GroupMismatch(ReconstructionError, ValueError):
    pass


class NonCommutingPhases(ReconstructionError):
    stage = "phases"


class NotInTorus(ReconstructionError):
    stage = "logarithms"


class ZeroFrequency(ReconstructionError):
    stage = "lifts"


class PeriodMismatch(ReconstructionError):
    stage = "phases"


class FitUnstable(ReconstructionError):
    stage = "verify"
