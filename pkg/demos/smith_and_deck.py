"""
Smith normal form and the deck group
====================================

Resonances among (omega, nu) are integer vectors. Their Smith normal form
decides the covering j' of the reconstructed torus: r^k sheets, glued by the
deck group Z_r^k, with the subgroup K acting trivially on the base.

Run with ``python3 demos/smith_and_deck.py``.
"""

import numpy as np

from reltori import exact_linalg as xl
from reltori import reconstruct
from reltori.catalog import torus3_example
from reltori.reconstruct import deck_subgroup, finite_group_factors
from reltori.verify import check_deck_invariance, deck_images

# %% Exact integer arithmetic: U A V = D with unimodular U, V.
A = [[2, 4, 4], [-6, 6, 12], [10, -4, -16]]
dec = xl.snf(A)
print("D =", dec.D)
print("invariant factors:", dec.invariant_factors)
print("U A V == D:", xl.matmul(xl.matmul(dec.U, A), dec.V) == [list(r) for r in dec.D])
print("det U, det V:", xl.det(dec.U), xl.det(dec.V))

# %% The subgroup K of Z_r^k for a single resonance p = (-1, 0), r = 2.
K = deck_subgroup(((-1, 0),), (2,), 2, 2)
print("K =", K, " F0 factors =", finite_group_factors(K, 2, 2))

# %% On the three-torus example, all four deck images of (0, e) land on
# the same point of phase space under j'.
R = reconstruct(torus3_example())
U, a2, G2 = deck_images(R, np.zeros((1, 2)), R.phase_data.group.identity().payload)
for u, a, g in zip(U, a2, G2):
    print(f"  u = {tuple(int(x) for x in u)}: alpha = {np.round(a, 6)}, g = {np.round(g, 6)}")
row = check_deck_invariance(R)
print(f"spread of j' over the deck orbit: {row.residual:.2e}")
