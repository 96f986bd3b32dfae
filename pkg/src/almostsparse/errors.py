"""Exception types shared by the solver modules and mapped to CLI exit codes."""


class InputError(ValueError):
    """Malformed or out-of-contract input (exit code 2)."""


class ConfigurationError(ValueError):
    """A configuration limit was exceeded, e.g. the exhaustion cap (exit code 3)."""


class SolverError(RuntimeError):
    """The LP solver failed internally, e.g. the cycling guard tripped (exit code 4)."""
