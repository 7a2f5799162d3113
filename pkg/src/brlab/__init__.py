"""Qualitative analysis toolkit for the reduced Basener-Ross planar system.

The package is organized as one module per concern:

    model          parameters, reduction from the full model, field evaluation
    exactpoly      exact rational polynomial arithmetic and cofactor algebra
    darboux        invariant algebraic curves, first integrals, drift checks
    localanalysis  finite singular points and their classification
    compactify     charts at infinity and the global disc field
    flow           numeric integration, separatrix skeletons, (S, R) counts
    bifurcation    the parameter-plane arrangement and the census of portraits
    cli            command-line front end
"""

from .model import DomainError, FullParams, Params, PlanePoint, exact_params, reduce

__version__ = "0.1.0"

__all__ = [
    "DomainError",
    "FullParams",
    "Params",
    "PlanePoint",
    "exact_params",
    "reduce",
    "__version__",
]
