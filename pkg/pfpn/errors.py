from __future__ import annotations


class PFPNError(Exception):
    """Base class for every error raised on purpose by this package."""


class ConfigurationError(PFPNError, ValueError):
    pass


class InputError(PFPNError, ValueError):
    pass


class CheckpointError(PFPNError):
    pass


class TrainingDivergedError(PFPNError, RuntimeError):
    def __init__(self, step: int, value: float):
        super().__init__(f"non-finite total loss {value!r} at step {step}")
        self.step = step
        self.value = value
