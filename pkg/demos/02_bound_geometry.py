"""The scalar collapse F(s), its inverse G(D), and the matrix witness."""
import math

import numpy as np

from naqtur.tur import F_closed, G_of_D, bound_B, matrix_tur_check

print("s        F(s)          s/2 - s^2/12   log(s)")
for s in (1e-3, 1e-2, 0.1, 1.0, 10.0, 100.0, 1e4):
    print(f"{s:<8g} {F_closed(s):.10f}  {s / 2 - s * s / 12:+.6e}  {math.log(s):+.4f}")

# G undoes F: the largest signal-to-noise compatible with a given dissipation.
print("\nD        G(D)           F(G(D)) - D")
for D in (1e-4, 0.01, 0.5, 2.0):
    G = G_of_D(D)
    print(f"{D:<8g} {G:.10e}  {F_closed(G) - D:+.1e}")

# With V' = V the matrix bound collapses onto F(s) with s = dq^T V^-1 dq.
V = np.array([[0.20, 0.03], [0.03, 0.12]])
dq = np.array([0.15, -0.08])
s = dq @ np.linalg.solve(V, dq)
rep = bound_B(dq, V, V)
print(f"\ns = {s:.6f}   B = {rep.B:.12f}   F(s) = {F_closed(s):.12f}")

# Changing the covariance after the collision moves B away from F(s).
Vp = V + np.array([[0.02, -0.01], [-0.01, 0.03]])
print(f"V' != V:      B = {bound_B(dq, V, Vp).B:.12f}")

# Matrix form: V - f(D) dq dq^T is PSD exactly when s <= G(D).
for D in (0.5 * F_closed(s), F_closed(s), 2 * F_closed(s)):
    print(f"D = {D:.5f}  min eig = {matrix_tur_check(V, dq, D):+.3e}  G(D) - s = {G_of_D(D) - s:+.3e}")
