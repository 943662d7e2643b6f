"""Exact Fourier analysis and sparsity testing for Boolean-valued functions
on groups of the form Z_{p1}^{n1} x ... x Z_{pt}^{nt}."""

__version__ = "0.1.0"

from .cyclotomic import CycInt, CycRational
from .groups import Coset, GroupElement, GroupSpec, PrimeSubspace, ProductSubspace
from .spectrum import DenseFunction, QueryOracle, Spectrum

__all__ = [
    "__version__",
    "CycInt",
    "CycRational",
    "GroupSpec",
    "GroupElement",
    "PrimeSubspace",
    "ProductSubspace",
    "Coset",
    "DenseFunction",
    "QueryOracle",
    "Spectrum",
]
