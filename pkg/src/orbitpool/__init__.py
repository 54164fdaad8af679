"""Group-orbit pooling of images and numerical checks of its geometry."""

from .errors import (
    DegenerateBasisError,
    DegenerateInputError,
    InvalidArgumentError,
    OrbitPoolError,
    UnsupportedMethodError,
)
from .groups import GroupElement, GroupId, LieAlgebraElement
from .kernels import BACKEND

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "DegenerateBasisError",
    "DegenerateInputError",
    "GroupElement",
    "GroupId",
    "InvalidArgumentError",
    "LieAlgebraElement",
    "OrbitPoolError",
    "UnsupportedMethodError",
]
