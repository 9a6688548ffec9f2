"""Qubit states, relative entropy and its chi^2_lambda decomposition."""
import numpy as np

from naqtur.divergence import (
    BURES_HELLINGER,
    KL,
    chi2_lambda,
    f_divergence_via_weights,
    gauss_legendre,
    hellinger_affinity,
    relative_entropy,
)
from naqtur.qcore import SIGMA_Y, I2, bloch_state, hermitian_eig

rho = (I2 + 0.7 * SIGMA_Y) / 2
print("spectrum of (I + 0.7 sigma_y)/2:", hermitian_eig(rho).eigenvalues)

a = bloch_state(0.8, [0, 0, 1])
b = bloch_state(0.5, [1, 0, 0])
D = relative_entropy(a, b)
print(f"\nD(a||b) = {D:.15f}")

# The relative entropy is a lambda-weighted integral of quadratic contrasts.
lams = np.linspace(0.05, 0.95, 7)
print("\nlambda   chi2_lambda(a||b)")
for lam in lams:
    print(f"{lam:5.2f}   {chi2_lambda(a, b, lam):.6f}")

print("\nquadrature order   int lam*chi2   |residual|")
for order in (4, 8, 16, 32, 64):
    val = f_divergence_via_weights(a, b, KL, gauss_legendre(order))
    print(f"{order:15d}   {val:.15f}   {abs(val - D):.2e}")

# Same modes, different weight: the affinity 1 - Tr sqrt(a) sqrt(b).
H = hellinger_affinity(a, b)
approx = f_divergence_via_weights(a, b, BURES_HELLINGER, gauss_legendre(64))
print(f"\naffinity {H:.8f}  via weights {approx:.8f}  (square-root endpoints converge slowly)")
