"""Exception hierarchy shared by all orbitpool modules."""


class OrbitPoolError(Exception):
    """Base class for every error raised by orbitpool."""


class InvalidArgumentError(OrbitPoolError, ValueError):
    """Arguments are inconsistent, e.g. elements of two different groups."""


class UnsupportedMethodError(OrbitPoolError, ValueError):
    """A computation method was requested where it has no closed form."""


class DegenerateInputError(OrbitPoolError, ValueError):
    """Input would silently lose mass or resolution (margin, grid size)."""


class DegenerateBasisError(OrbitPoolError, ValueError):
    """Two tangent fields are numerically linearly dependent."""
