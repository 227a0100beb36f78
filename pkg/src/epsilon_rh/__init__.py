"""Epsilon factors of rank-one connections on P^1.

Closed-form local Gauss sums, de Rham cohomology, rapid-decay period integrals,
and the global product-formula check, with independent numerical oracles.
"""

__all__ = [
    "exactalg",
    "lines",
    "connection",
    "derham",
    "periods",
    "localeps",
    "oracle",
]

__version__ = "0.1.0"
