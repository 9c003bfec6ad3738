"""Exceptions and warnings raised across the lab."""


class LabError(Exception):
    """Base class for every error raised by the lab"""


class ShapeError(LabError, ValueError):
    """Input or tensor shape does not match what the network expects"""


class StaleCacheError(LabError):
    """A forward cache was used with parameters it was not computed from"""


class NonFiniteGradientError(LabError, FloatingPointError):
    def __init__(self, tensor_name):
        super().__init__(f"Non-finite gradient in tensor '{tensor_name}'")
        self.tensor_name = tensor_name


class UnknownTaskError(LabError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else "unknown task"


class InvalidActionError(LabError, ValueError):
    """Action id outside the task's action subset"""


class EpisodeFinishedError(LabError):
    """step() called on a terminal state"""


class ReplayError(LabError, ValueError):
    """Invalid replay buffer operation"""


class SurgeryError(LabError, ValueError):
    """Weight surgery cannot be carried out"""


class CheckpointError(LabError):
    def __init__(self, message, tensor_name=None):
        super().__init__(message)
        self.tensor_name = tensor_name


class ConfigError(LabError, ValueError):
    """Invalid configuration value"""


class ScheduleError(LabError, ValueError):
    """Invalid task scheduling strategy"""


class RenderError(LabError, ValueError):
    """A figure cannot be rendered from the given series"""


class CheckpointWarning(UserWarning):
    """Checkpoint loaded but its manifest does not match expectations"""


class AggregationWarning(UserWarning):
    """Logs had to be truncated to a common iteration grid"""
