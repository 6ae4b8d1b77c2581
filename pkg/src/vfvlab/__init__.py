"""2D compressible-Euler finite-volume laboratory with measure-valued diagnostics."""

__version__ = "0.1.0"

from .eos import GasParams
from .grid import ConservativeField, Mesh
from .initdata import KhSpec
from .scheme import SchemeParams

__all__ = ["GasParams", "Mesh", "ConservativeField", "KhSpec", "SchemeParams", "__version__"]
