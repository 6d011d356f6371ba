"""Exception types shared across the package."""


class ParameterError(ValueError):
    """Invalid or inconsistent code/ring parameters."""


class FilterError(ValueError):
    """A filter coefficient whose multiplication map is not a bijection."""


class InputError(ValueError):
    """Input symbols violating the configured input constraint."""
