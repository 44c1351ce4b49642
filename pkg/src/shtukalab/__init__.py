"""Computational toolkit for local shtukas, sigma-modules over F_q((z))
and Hodge-Pink structures."""
import warnings

# numba (pulled in by galois) complains about an old TBB; it falls back to another layer
warnings.filterwarnings("ignore", message="The TBB threading layer")

__version__ = "0.1.0"
