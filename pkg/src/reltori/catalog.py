"""Ready-made systems used by the demos and tests."""

from __future__ import annotations

from fractions import Fraction

import numpy as np

from . import groups as gc
from .dynsys import CoeffFunction, Lift, SystemSpec
from .freqs import QBasis

SQRT2_BASIS = QBasis.from_mapping({"sqrt2": "sqrt(2)"})


def torus3_example() -> SystemSpec:
    """X = d/da1 + sqrt(2) d/da2 + 1/2 d/da3 on T^2 x S^1, with lift S_1 = d/da1."""
    G = gc.torus(1)
    B = SQRT2_BASIS
    a = CoeffFunction.constant(G, 2, [0.5], exact_mean=(B.rational(Fraction(1, 2)),))
    return SystemSpec(G, 2, (B.rational(1), B.element("sqrt2")), a,
                      (Lift(0, CoeffFunction.zero(G, 2)),), basis=B)


def _profile(c, terms, slot, k=2):
    """Scalar Fourier profile in phi_slot as ``(mode, cos, sin)`` triples over T^k."""
    out = [((0,) * k, c, 0.0)]
    for n, ca, sa in terms:
        mode = [0] * k
        mode[slot] = int(n)
        out.append((tuple(mode), float(ca), float(sa)))
    return out


def so3_example(c1: float, c2: float, f1_terms=(), f2_terms=(), xi=(0.0, 0.0, 1.0),
                exact_mean_turns=None) -> SystemSpec:
    """X = d/dphi1 + sqrt(2) d/dphi2 + g.(f1(phi1) + f2(phi2)) xi on T^2 x SO(3).

    ``f_i = c_i + sum(a cos 2 pi n phi_i + b sin 2 pi n phi_i)`` with terms
    ``(n, a, b)``. The given lift is S_1 = d/dphi1 + g.f1 xi. An exact value
    of c1 + c2 in turns (radians / 2 pi) may be supplied, which for xi
    along a coordinate axis enables exact external frequencies.
    """
    G = gc.SO3
    B = SQRT2_BASIS
    xi = np.asarray(xi, dtype=float)
    f1 = _profile(c1, f1_terms, 0)
    f2 = _profile(c2, f2_terms, 1)
    mean = None
    if exact_mean_turns is not None:
        q = Fraction(exact_mean_turns)
        mean = tuple(B.rational(q * Fraction(x).limit_denominator()) for x in xi)
    a = CoeffFunction.from_terms(G, 2, [(n, ca * xi, sa * xi) for n, ca, sa in f1 + f2],
                                 exact_mean=mean)
    b1 = CoeffFunction.from_terms(G, 2, [(n, ca * xi, sa * xi) for n, ca, sa in f1])
    return SystemSpec(G, 2, (B.rational(1), B.element("sqrt2")), a, (Lift(0, b1),), basis=B)
