"""Numerical toolkit for Weierstrass elliptic K3 surfaces.

Modules: ``binaryforms`` (forms on P^1), ``elliptic`` (period lattices and the
Weierstrass p-function), ``fibration`` (Weierstrass data, discriminant,
Kodaira fibers, the uniformizing map), ``k3lattice`` (the K3 lattice and
Neron-Severi computations), ``eisenman`` (pseudovolume upper bounds) and
``cli``.
"""

__version__ = "0.1.0"
