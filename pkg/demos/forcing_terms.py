"""Forcing terms generated by a history, and the mollification limit.

For the indicator history, f(t) has jumps where the delayed history jumps.
Smoothing the history with ramps of width eps gives continuous forcings that
converge to f in L^1 as eps shrinks.
"""
import numpy as np

from mildrfde import G_forcing, History, Kernel, f_forcing, forcing_report
from mildrfde.forcing import density_argument_errors, undefined_points

K = Kernel.from_parts(1.0, [(-1.0, -0.5)], [((-1.0, 0.0), [0.4])], n=1)
phi = History.indicator(1.0, -1.0, -0.5)

print("times where f is undefined:", undefined_points(K, phi))
for t in (0.1, 0.4, 0.6, 0.9, 1.5):
    print(f"t={t}: f={f_forcing(K, phi, t)[0]: .4f}  G={G_forcing(K, phi, t)[0]: .4f}")

rep = forcing_report(K, phi, 2.0)
print(f"\nmax |f| on [r, 2r]: {rep.tail_max:.1e}; max |G(t) - G(r)|: {rep.constancy_defect:.1e}")

eps = [0.1, 0.05, 0.025, 0.0125]
for e, err in zip(eps, density_argument_errors(K, phi, eps, p=1.0)):
    print(f"eps={e:<7} ||g(phi_eps) - f||_1 = {err:.3e}")
