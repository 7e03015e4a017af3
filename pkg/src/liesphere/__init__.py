"""Numerical laboratory for Lie sphere geometry of surfaces and hypersurfaces."""
__version__ = "0.1.0"

from .errors import LieSphereError  # noqa: F401
