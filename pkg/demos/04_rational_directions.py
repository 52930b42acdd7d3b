"""Rational directions reduce to a single map.

If t v = w is a primitive integer vector, the directional entropy at v equals
h(T^w)/t.  For the linear cat pair, T^w is the integer matrix
A^{w_1} (A^2)^{w_2} whose entropy is known exactly, so both sides can be
compared with an oracle.
"""
import math

import numpy as np

from zkdyn.directional import rational_check
from zkdyn.spectrum import EstimatorConfig
from zkdyn.toral import MODELS, analytic_spectrum, from_matrices

action = from_matrices(MODELS["cat_pair"])
exact = analytic_spectrum(MODELS["cat_pair"])
x0 = np.array([0.1234, 0.5678])
cfg = EstimatorConfig(n_steps=5000, burn_in=100)

print("w          t        lhs        rhs (estimated)   rhs (matrix)")
for w in [(1, 0), (1, 1), (2, -1), (3, 5), (-7, 4), (12, 11)]:
    v = np.array(w, dtype=float) / math.hypot(*w)
    chk = rational_check(action, v, x0, cfg, spectrum=exact)
    print(f"{str(w):9}  {chk.t:7.4f}  {chk.lhs.value:9.6f}  {chk.rhs.value:9.6f}"
          f"         {chk.rhs_oracle.value:9.6f}")
