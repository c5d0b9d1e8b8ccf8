import math
from fractions import Fraction

import numpy as np
import pytest

from reltori import groups as gc
from reltori.catalog import SQRT2_BASIS, so3_example, torus3_example
from reltori.dynsys import CoeffFunction, Lift, StatePoint, SystemSpec
from reltori.freqs import ExactScalar, QBasis
from reltori.reconstruct import (compute_phase_data, covering_map, deck_action, deck_subgroup,
                                 finite_group_factors, reconstruct, reconstruction_map)

B = SQRT2_BASIS
SO3 = gc.SO3
T1 = gc.torus(1)


def test_torus_phase_data(torus3):
    pd = torus3.phase_data
    assert pd.torus.dim == 1
    assert pd.phases[0] == T1.identity()
    np.testing.assert_allclose(pd.H, [[0.0, 1 / (2 * math.sqrt(2))]], atol=1e-12)
    assert pd.exact_nu2 == (B.rational(Fraction(1, 2)),)
    assert pd.branch.tolist() == [[0, 0]]


def test_so3_phase_data_closed_form():
    c1, c2 = 0.9, 2.6
    pd = compute_phase_data(so3_example(c1, c2))
    assert gc.distance(pd.phases[0], gc.exp_algebra(gc.AlgebraVector(SO3, (0, 0, c1)))) < 1e-12
    assert gc.distance(pd.phases[1], gc.exp_algebra(gc.AlgebraVector(SO3, (0, 0, c2 / math.sqrt(2))))) < 1e-12
    want = gc.wrap_half(np.array([c1, c2 / math.sqrt(2)]) / (2 * math.pi))
    np.testing.assert_allclose(pd.H[0], want, atol=1e-12)


def test_branch_shift_is_recorded():
    # c2 / sqrt(2) exceeds half a turn, so the principal log of phase 2 wraps
    pd = compute_phase_data(so3_example(0.5, 6.0))
    assert pd.branch.tolist() == [[0, -1]]


def test_trivial_vertical_parts():
    G = SO3
    spec = SystemSpec(G, 2, (B.rational(1), B.element("sqrt2")), CoeffFunction.zero(G, 2),
                      (so3_example(0, 0).lifts[0],), basis=B)
    R = reconstruct(spec)
    assert R.phase_data.torus.dim == 0
    assert R.t1.d1 == 0 and R.t1.nu == ()
    assert R.t2.l == 0 and R.t2.r == 1 and R.t2.d0 == 0
    assert R.t2.F0_order == 1 and R.t2.covering_degree == 1
    assert R.t2.base_label == "SO(3)"


def test_theorem1_torus(torus3):
    t1 = torus3.t1
    assert t1.nu == (B.rational(Fraction(1, 2)),)
    assert t1.d1 == 1 and t1.exact and not t1.heuristic
    assert t1.omega_eta_residual < 1e-10
    assert t1.base_label == "S^1/S^1"


def test_theorem2_torus(torus3):
    t2 = torus3.t2
    assert t2.l == 1
    assert [tuple(v) for v in t2.lattice] in ([(1, 0, -2)], [(-1, 0, 2)])
    assert t2.p == ((-1, 0),) and t2.r_factors == (2,) and t2.r == 2
    assert t2.d0 == 0 and t2.nu_pp == ()
    assert t2.omega_prime == (B.rational(Fraction(1, 2)), B.element("sqrt2") / 2)
    np.testing.assert_allclose(t2.delta[0].array, -t2.xi_prime[0].array)
    assert t2.delta[1].array.tolist() == [0.0]
    assert t2.K == ((0, 0), (0, 1))
    assert t2.K_order == 2 and t2.F0_order == 2 and t2.F0_factors == (2,)
    assert t2.covering_degree == 4
    assert t2.base_label == "S^1/Z_2"
    assert t2.reduced_nonresonant and t2.exact and not t2.heuristic


def test_theorem2_invariants(torus3, so3_resonant):
    for R in (torus3, so3_resonant):
        t2 = R.t2
        assert all(isinstance(x, ExactScalar) and x.is_zero() for x in t2.resonance_residuals)
        assert all(b % a == 0 for a, b in zip(t2.r_factors, t2.r_factors[1:]))
        for d in t2.delta:
            assert gc.distance(gc.exp_algebra(d), R.phase_data.group.identity()) < 1e-12
        for eta, dl, eta_p in zip(R.phase_data.logs, t2.delta, t2.eta_prime):
            np.testing.assert_allclose(eta_p.array, t2.r * eta.array + dl.array)


def test_so3_resonant(so3_resonant):
    R = so3_resonant
    assert R.t1.nu == (B.rational(Fraction(1, 3)),) and R.t1.exact
    assert R.t2.l == 1 and R.t2.r == 3 and R.t2.d0 == 0
    assert R.t2.base_label == "SO(3)/Z_3"
    assert R.notes == ()


def test_so3_generic_is_heuristic(so3_generic):
    R = so3_generic
    assert R.t1.nu_float[0] == pytest.approx(1 / math.pi, abs=1e-10)
    assert R.t2.l == 0 and R.t2.d0 == 1 and R.t2.r == 1
    assert R.t2.heuristic
    assert R.t2.base_label == "SO(3)/S^1"


def test_exact_mode_falls_back_with_note():
    R = reconstruct(so3_example(math.pi / 3, math.pi / 3), mode="exact")
    assert R.notes and "numeric" in R.notes[0]
    assert R.t2.heuristic and R.t2.r == 3


def test_nonresonant_degenerates_to_theorem1():
    B3 = QBasis.from_mapping({"sqrt2": "sqrt(2)", "sqrt3": "sqrt(3)"})
    a = CoeffFunction.constant(T1, 2, [math.sqrt(3) / 4], exact_mean=(B3.element("sqrt3") / 4,))
    spec = SystemSpec(T1, 2, (B3.rational(1), B3.element("sqrt2")), a,
                      (Lift(0, CoeffFunction.zero(T1, 2)),), basis=B3)
    R = reconstruct(spec)
    assert R.t1.exact and R.t1.d1 == 1
    assert R.t1.nu == (B3.element("sqrt3") / 4,)
    assert R.t2.l == 0 and R.t2.r == 1 and R.t2.d0 == 1
    assert R.t2.K == ((0, 0),) and R.t2.F0_order == 1 and R.t2.covering_degree == 1
    assert R.t2.nu_pp == R.t1.nu
    assert R.t2.base_label == "S^1/S^1"


def test_j_at_origin_is_base_point(so3_fourier):
    pd = so3_fourier.phase_data
    m = reconstruction_map(pd, (0.0, 0.0), SO3.identity())
    assert gc.distance(m.g, pd.base_point.g) < 1e-14 and m.phi == pd.base_point.phi
    m2 = covering_map(pd, so3_fourier.t2, (0.0, 0.0), SO3.identity())
    assert gc.distance(m2.g, pd.base_point.g) < 1e-14


def test_j_is_periodic(so3_fourier):
    pd = so3_fourier.phase_data
    g = gc.GroupElement(SO3, (0.2, 0.4, -0.1, 0.9))
    a = reconstruction_map(pd, (0.3, 0.6), g)
    b = reconstruction_map(pd, (1.3, -0.4), g)
    assert gc.distance(a.g, b.g) < 1e-8
    np.testing.assert_allclose(a.phi, b.phi, atol=1e-12)


def test_j_closed_form_on_torus_example(torus3):
    pd = torus3.phase_data
    for alpha, g in [((0.2, 0.7), 0.4), ((0.9, 0.1), 0.05)]:
        m = reconstruction_map(pd, alpha, gc.GroupElement(T1, (g,)))
        np.testing.assert_allclose(m.phi, alpha, atol=1e-14)
        assert gc.distance(m.g, gc.GroupElement(T1, (g,))) < 1e-12


def test_deck_action_examples(torus3):
    t2 = torus3.t2
    g = gc.GroupElement(T1, (0.3,))
    a, h = deck_action(t2, (0, 0), (0.2, 0.4), g)
    assert a == pytest.approx((0.2, 0.4)) and gc.distance(h, g) < 1e-15
    a, h = deck_action(t2, (1, 0), (0.2, 0.4), g)
    assert a == pytest.approx((0.7, 0.4))
    assert gc.distance(h, gc.GroupElement(T1, (0.8,))) < 1e-15
    with pytest.raises(ValueError):
        deck_action(t2, (2, 0), (0, 0), g)


def test_deck_action_is_additive(so3_resonant):
    t2 = so3_resonant.t2
    g = gc.GroupElement(SO3, (0.6, 0.0, 0.8, 0.0))
    r = t2.r
    for u in [(1, 2), (2, 2)]:
        for v in [(2, 1), (1, 0)]:
            a1, h1 = deck_action(t2, v, *deck_action(t2, u, (0.1, 0.3), g))
            w = tuple((x + y) % r for x, y in zip(u, v))
            a2, h2 = deck_action(t2, w, (0.1, 0.3), g)
            np.testing.assert_allclose(gc.wrap_half(np.subtract(a1, a2)), 0, atol=1e-14)
            assert gc.distance(h1, h2) < 1e-12


def test_deck_subgroup_and_quotient():
    K = deck_subgroup(((-1, 0),), (2,), 2, 2)
    assert K == ((0, 0), (0, 1))
    assert finite_group_factors(K, 2, 2) == (2,)
    K = deck_subgroup(((1, 1),), (4,), 4, 2)
    assert len(K) == 4
    assert finite_group_factors(K, 4, 2) == (4,)
    assert finite_group_factors(((0, 0),), 2, 2) == (2, 2)


def test_base_point_choice_changes_nothing_structural():
    spec = torus3_example().with_base_point(StatePoint((0.3, 0.1), gc.GroupElement(T1, (0.6,))))
    R = reconstruct(spec)
    assert R.t2.r == 2 and R.t2.d0 == 0 and R.t1.nu == (B.rational(Fraction(1, 2)),)
