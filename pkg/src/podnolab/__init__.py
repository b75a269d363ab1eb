"""podnolab: operator learning on dispersive and elliptic PDEs.

Spectral ground-truth solvers, POD snapshot bases, and an operator network
whose kernel integration runs through either the truncated Fourier
transform or a data-driven POD transform.
"""

__version__ = "0.1.0"

from .grids import Field, Grid2D, inner_product, l2_norm, make_grid
from .spectral import ModeSet, Spectrum2D, dft2, idft2, sorted_mode_index, truncate_modes

__all__ = [
    "__version__", "Field", "Grid2D", "inner_product", "l2_norm", "make_grid",
    "ModeSet", "Spectrum2D", "dft2", "idft2", "sorted_mode_index", "truncate_modes",
]
