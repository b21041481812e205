"""A general computer-control agent runtime: observe the screen, act through
keyboard and mouse primitives, remember skills and experience."""

from .errors import CradleError

__version__ = "0.1.0"

__all__ = ["CradleError", "__version__"]
