"""Covers of spheres by caps and short closed sets.

n+2 caps on S^n are enough to cover it and fewer never are; coverage by
n+2 caps is decided by finite intersection tests.  The modules provide
the geometry (``geom``, ``caps``), the certificates (``certify``), a solver
for the closed-cover Sperner variant (``solver``), brute-force oracles
(``oracle``) and a command-line front end (``cli``).
"""

__version__ = "0.1.0"
