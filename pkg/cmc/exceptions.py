class CmcError(Exception):
    """Base class for every error raised by the estimation tool."""


class InputError(CmcError):
    """Raised when input data or configuration is malformed.

    The reason is given as the exception message.
    """


class ModelError(CmcError):
    """Raised when a numerical or model failure prevents a result."""


class ModelInconsistencyError(ModelError):
	"""Counts or draws need a branch that divides by a zero non-deterioration probability"""


class InfeasibleError(ModelError):
	"""The linear constraint system has no feasible point"""


class DegenerateDirectionError(ModelError):
	"""A direction or normal vector is numerically zero"""
