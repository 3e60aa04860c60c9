class ParameterError(ValueError):
    """Raised when an operation is called with out-of-contract parameters."""
