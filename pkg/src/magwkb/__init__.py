"""WKB quasimodes for the magnetic Laplacian near a non-degenerate magnetic well.

Modules: ``series`` (truncated Taylor series), ``field`` (normalization and
gauge), ``eikonal`` (phase), ``wkb`` (transport induction and residuals),
``validator`` (Peierls discretization and eigensolver), ``cli``.
"""

__version__ = "0.1.0"

from .kernels import BACKEND  # noqa: E402,F401
