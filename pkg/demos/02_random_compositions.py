"""Random compositions of the generators.

At each step the cat-pair action applies A with probability m_1 and A^2
with probability m_2.  The random exponents are the m-weighted sums of the
generator exponents, so they are non-random and affine in m_1.  The entropy
of the random action follows from the positive part of the combined rates.
"""
import numpy as np

from zkdyn.random_action import RandomModel, random_entropy_pesin, random_exponents
from zkdyn.spectrum import EstimatorConfig
from zkdyn.toral import MODELS, analytic_spectrum, from_matrices

action = from_matrices(MODELS["cat_pair"])
exact = analytic_spectrum(MODELS["cat_pair"])
x0 = np.array([0.1234, 0.5678])

print("m1     mean top exponent   weighted oracle   cross-omega stddev   entropy")
for m1 in (0.0, 0.25, 0.5, 0.75, 1.0):
    model = RandomModel((m1, 1 - m1))
    res = random_exponents(action, model, x0, EstimatorConfig(n_steps=10**5), n_omegas=10)
    oracle = exact.combined_rates(model.weights).max()
    h = random_entropy_pesin(exact, model).value
    print(f"{m1:4.2f}   {res.mean[0]:.6f}            {oracle:.6f}          {res.stddev[0]:.2e}"
          f"             {h:.6f}")

# the spread across samples shrinks as orbits get longer
model = RandomModel((0.7, 0.3))
for n in (10**4, 10**5, 10**6):
    res = random_exponents(action, model, x0, EstimatorConfig(n_steps=n), n_omegas=10)
    print(f"n_steps = {n:>7}: stddev of the exponents {res.stddev}")
