"""Exception types carrying a machine-readable category for the CLI."""


class QSTError(Exception):
    category = "ERROR"


class ConfigError(QSTError, ValueError):
    """Invalid system configuration or solver input."""

    category = "CONFIG"


class ParityError(QSTError, ValueError):
    """Target spectrum cannot be reached by the requested cavity-emitter structure."""

    category = "PARITY"


class NonConvergenceError(QSTError):
    """Raised by callers that treat an unconverged anneal as fatal."""

    category = "NONCONVERGENCE"
