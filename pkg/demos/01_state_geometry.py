"""
Qubit state geometry
====================

A qubit state is a 2x2 density matrix, or equivalently a point of the
closed unit ball.  This script walks through the conversions, the Bures
distance and how the open-loop Lyapunov function compares with the distance
to the pair of sigma_z eigenstates.

Run with ``python demos/01_state_geometry.py``.
"""
import math

import numpy as np

from spinstab.dynamics import lyapunov_qsr
from spinstab.state import (
    TargetState,
    bloch_to_density,
    bures_distance,
    bures_distance_to_set,
    clamp_to_physical,
    density_to_bloch,
    random_states,
)

# %% Bloch coordinates and matrices
# The poles of the ball are the two sigma_z eigenstates; the centre is the
# maximally mixed state.
for label, v in [("north pole", (0, 0, 1)), ("south pole", (0, 0, -1)), ("+x", (1, 0, 0)),
                 ("centre", (0, 0, 0))]:
    rho = bloch_to_density(v)
    print(f"{label:>10}: {np.round(rho.entries.real, 3).tolist()}  back to {tuple(density_to_bloch(rho))}")

# The labels E1 and E2 carry their Bloch height explicitly.
for t in TargetState:
    print(f"{t.name}: z_bar = {t.z_bar:+d}, projector diag = {np.diag(t.projector).real}")

# %% Bures distance
# Orthogonal pure states are sqrt(2) apart, the centre is sqrt(2 - sqrt(2))
# from either pole, and that is also the largest distance from the pair.
mixed = bloch_to_density((0, 0, 0))
print("\nd_B(E1, E2)      =", bures_distance(TargetState.E1.projector, TargetState.E2.projector))
print("d_B(mixed, E2)   =", bures_distance(mixed, TargetState.E2.projector))
print("sqrt(2-sqrt(2))  =", math.sqrt(2 - math.sqrt(2)))
print("d_B((0,0,.5), E) =", bures_distance_to_set(bloch_to_density((0, 0, 0.5))))

# Near a pole the distance behaves like sqrt(gap); the implementation keeps
# full relative precision even when the gap is far below machine epsilon.
tiny = np.diag([1e-30, 1 - 1e-30]).astype(complex)
print("d_B for gap 1e-30:", bures_distance(tiny, TargetState.E2.projector))

# %% The open-loop Lyapunov function is sandwiched by the distance
# V = sqrt(1 - z^2) satisfies C1 d_B <= V <= C2 d_B with
# C1 = sqrt(1 + sqrt(2)/2) and C2 = 2.
vs = random_states(20_000, np.random.default_rng(0), pure_fraction=0.1)
ratios = []
for v in vs:
    rho = bloch_to_density(v)
    d = bures_distance_to_set(rho)
    if d > 0:
        ratios.append(lyapunov_qsr(rho) / d)
print(f"\nV / d_B ranges over [{min(ratios):.5f}, {max(ratios):.5f}]; "
      f"C1 = {math.sqrt(1 + math.sqrt(2) / 2):.5f}, C2 = 2")

# %% Repairing round-off
# Integrators may leave a matrix a hair outside the state space; the clamp
# clips the negative eigenvalue and renormalises.
print("\nclamped:", clamp_to_physical(np.diag([1.0000001, -0.0000001])).entries.real.tolist())
