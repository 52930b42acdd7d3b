"""Directional exponents and entropy along rays in Z^2.

For a unit vector v the action is followed through the lattice points
closest to n v.  The directional rates are sum_i v_i lambda_ij and the
entropy is the positive part of those rates.  On the cat pair this gives
h(theta) = |cos theta + 2 sin theta| * log((3 + sqrt 5)/2), which vanishes
on the non-expansive direction (2, -1) and is continuous through it.
"""
import math

import numpy as np

from zkdyn.directional import direction_sweep, directional_entropy, lattice_path
from zkdyn.spectrum import EstimatorConfig
from zkdyn.toral import MODELS, analytic_spectrum, from_matrices

action = from_matrices(MODELS["cat_pair"])
exact = analytic_spectrum(MODELS["cat_pair"])
x0 = np.array([0.1234, 0.5678])

v = np.array([3.0, 1.0]) / math.sqrt(10)
print("first lattice points along (3,1)/sqrt10:", lattice_path(v, 6).targets.tolist())

sweep = direction_sweep(action, exact, 32, x0, EstimatorConfig(n_steps=20000))
print("theta     formula    from estimated rates")
for row in sweep.rows:
    print(f"{row.theta:6.3f}   {row.entropy_formula:8.5f}   {row.entropy_from_estimated_rates:8.5f}")
print(f"largest jump between neighbouring nodes: {sweep.modulus:.4f}")

kink = np.array([2.0, -1.0]) / math.sqrt(5)
print(f"entropy at (2,-1)/sqrt5: {directional_entropy(exact, kink).value:.2e}")
