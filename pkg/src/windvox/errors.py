"""Exception types shared across the package.

I/O failures raise the builtin ``OSError``; out-of-range face indices raise
the builtin ``IndexError``.  Everything else domain-specific lives here.
"""


class ParseError(ValueError):
    """A mesh file is malformed under its declared format."""


class DegenerateError(ValueError):
    """Geometry is too degenerate for the operation (zero extent, zero area,
    all-zero normals, ...)."""


class OnSurfaceError(ValueError):
    """A query point lies on (or within tolerance of) the surface, where the
    requested quantity is undefined."""


class DivergedError(RuntimeError):
    """An iterative optimization produced a non-finite loss."""
