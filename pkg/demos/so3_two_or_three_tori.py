"""
Two or three tori in T^2 x SO(3)
================================

X = d/dphi1 + sqrt(2) d/dphi2 + g.(f1(phi1) + f2(phi2)) e_z carries a
left SO(3) symmetry. Whether its orbits fill 2-tori or 3-tori depends on
the mean rotation rate (c1 + c2) / 2 pi against the frequencies (1, sqrt 2).

Run with ``python3 demos/so3_two_or_three_tori.py`` (about half a minute).
"""

import math
from fractions import Fraction

import numpy as np

from reltori import check_hypotheses, extract_frequencies, reconstruct, sample_trajectory
from reltori.catalog import so3_example

# %% Resonant: c1 = c2 = pi/3 gives a rotation rate of exactly 1/3 turn.
spec = so3_example(math.pi / 3, math.pi / 3, exact_mean_turns=Fraction(1, 3))
print("hypothesis violations:", check_hypotheses(spec))
R = reconstruct(spec, mode="exact")
print("nu =", [str(x) for x in R.t1.nu], " r =", R.t2.r, " d0 =", R.t2.d0)
print(f"-> {spec.k + R.t2.d0}-tori, base {R.t2.base_label}")

# %% Generic: c1 = c2 = 1 rad. The numeric search finds no relation up to
# height 50, so the drift adds a third frequency. This is heuristic: a
# relation of larger height cannot be excluded by floating point search.
spec = so3_example(1.0, 1.0)
N = reconstruct(spec, mode="numeric", height_bound=50)
print("nu =", [f"{x:.10f}" for x in N.t1.nu_float], " l =", N.t2.l, " d0 =", N.t2.d0,
      " heuristic =", N.t2.heuristic)
print(f"-> {spec.k + N.t2.d0}-tori")

# The third frequency is the rotation rate about the common axis.
traj = sample_trajectory(spec.field, N.phase_data.base_point, np.arange(2001) * 0.01)
fit = extract_frequencies(traj, N.phase_data.torus)
for label, s in zip(fit.labels, fit.slopes):
    print(f"  {label:5s} {s:.8f}")
print(f"  (c1 + c2) / 2 pi = {2 / (2 * math.pi):.8f}")

# %% A nonconstant profile f1 = 0.7 + sin(2 pi phi1) keeps the hypotheses:
# the lift S_1 = d/dphi1 + g.f1 e_z still commutes with X. Only the mean
# of f1 enters the phase, so the answer matches constant f1 = 0.7.
spec = so3_example(0.7, 0.4, f1_terms=[(1, 0.0, 1.0)])
print("sin profile violations:", check_hypotheses(spec))
F = reconstruct(spec, mode="numeric")
print("nu =", [f"{x:.10f}" for x in F.t1.nu_float], " d0 =", F.t2.d0)
