"""Exception types shared across the package.

The CLI maps these onto exit codes: InputError -> 2, CapacityError -> 3.
"""


class InputError(ValueError):
    """Malformed or out-of-domain input."""


class CapacityError(RuntimeError):
    """Requested object is larger than the configured dimension cap."""


class StructureError(ValueError):
    """An algebraic precondition (commutation, multiplicativity) failed."""


class UnsupportedError(NotImplementedError):
    """Operation is only defined for a narrower class of inputs."""
