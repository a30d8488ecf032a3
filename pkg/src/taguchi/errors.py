class TaguchiError(Exception):
    """Base class for all package errors."""


class DesignError(TaguchiError, ValueError):
    """Malformed design space, array or plan."""


class ObjectiveError(TaguchiError, ValueError):
    """Bad objective/norm specification or measurement outside a scaler's domain."""


class RecordError(TaguchiError, ValueError):
    """Run records are missing, duplicated or inconsistent with the plan."""


class EvaluatorError(TaguchiError, RuntimeError):
    """An evaluator could not produce a record."""
