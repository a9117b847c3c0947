"""c2 invariants of graphs at small primes.

Two independent routes: brute-force point counting of Kirchhoff / Dodgson
polynomials (:mod:`c2inv.poly`), and the transfer-matrix recurrence over
products of spanning forest polynomials for the circulant families
``C_n(1,3)`` and ``C_n(2,3)`` (:mod:`c2inv.transfer`).
"""

__version__ = "0.1.0"
