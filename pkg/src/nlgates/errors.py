class ValidationError(ValueError):
    """Raised when an input violates a documented domain or shape constraint."""
