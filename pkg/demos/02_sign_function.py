"""What a finite phase-estimation register does to the indicator.

With M ancilla qubits the post-selected circuit multiplies each basis state by
a projection factor built from an approximate sign function of g(x).  It is
exact on integers in range and smooth in between.

Run: python3 demos/02_sign_function.py
"""

import numpy as np

from ifqaoa.theta import build_theta_table, projection_factor, theta_direct, theta_lookup

for M in (3, 4, 6):
    table = build_theta_table(M)
    ints = np.arange(-(1 << (M - 1)), 1 << (M - 1))
    err = np.max(np.abs(theta_lookup(table, ints) - np.where(ints >= 0, 1, -1)))
    print(f"M={M}: max error on integers {err:.1e}; theta(-0.5) = {theta_direct(-0.5, M):+.3f}")

print("\nM=4 across the transition strip:")
for g in np.arange(-1.5, 1.01, 0.25):
    print(f"  g={g:+.2f}  theta={theta_direct(g, 4):+.4f}")

# A state sitting in the strip only partly survives the measurement.
gamma_f = 1.2
for g in (-2.0, -0.5, 0.0, 0.3):
    pf = projection_factor(gamma_f, theta_direct(g, 4))
    print(f"g={g:+.1f}: |P|^2 = {abs(pf) ** 2:.4f}")
