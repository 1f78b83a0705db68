"""Numerical laboratory for the integral equation of |zeta(sigma + it)|^2.

Modules
-------
special      log-gamma, digamma, Hurwitz and Riemann zeta
quadrature   adaptive Gauss-Kronrod, principal values, contour integrals
kernel       the kernel K, the forcing term G and the windowed integral equation
expsums      double exponential sums, their index sets and exact identities
asymptotics  stationary-phase and Hankel-contour asymptotic formulas
cli          command-line experiment runner
"""

__version__ = "0.1.0"
