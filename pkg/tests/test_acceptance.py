"""Acceptance criteria, one test per criterion.

Each test rebuilds what it needs so that its wall time includes the
pipeline, and asserts its own runtime budget. The terminal summary prints
one PASS/FAIL line per criterion.
"""

import math
import random
import time
from fractions import Fraction

import numpy as np
import pytest

from reltori import exact_linalg as xl
from reltori import groups as gc
from reltori.catalog import SQRT2_BASIS, so3_example, torus3_example
from reltori.dynsys import (CoeffFunction, Lift, StatePoint, SystemSpec, VectorField, check_hypotheses,
                            complete_lifts, flow, flow_batch, phase)
from reltori.reconstruct import reconstruct
from reltori.verify import (check_conjugacy, check_deck_invariance, extract_frequencies,
                            linear_angle_invariant, sample_trajectory, check_torus_residency)

from oracles import invariant_factors_by_minors

B = SQRT2_BASIS
SO3 = gc.SO3


class Budget:
    def __init__(self, seconds):
        self.seconds = seconds

    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.start
        if exc[0] is None:
            assert self.elapsed < self.seconds, f"took {self.elapsed:.1f} s, budget {self.seconds} s"


@pytest.mark.criterion(1, "T^3 example: nu = 1/2, r = 2, d0 = 0, covering degree 4")
def test_criterion_1_torus_example():
    with Budget(5):
        R = reconstruct(torus3_example(), mode="exact")
    t1, t2 = R.t1, R.t2
    assert t1.nu == (B.rational(Fraction(1, 2)),) and t1.exact
    assert t1.d1 == 1 and t2.l == 1
    assert [tuple(v) for v in t2.lattice] in ([(-1, 0, 2)], [(1, 0, -2)])
    assert (t2.r, t2.d0, t2.K_order, t2.F0_order, t2.covering_degree) == (2, 0, 2, 2, 4)
    assert t2.base_label == "S^1/Z_2"
    assert R.spec.k + t2.d0 == 2


@pytest.mark.criterion(2, "T^3 residency of a1 - 2 a3 over [0, 100] within 1e-6")
def test_criterion_2_torus_residency():
    with Budget(30):
        spec = torus3_example()
        times = np.arange(10001) * 0.01
        inv = linear_angle_invariant([1, 0, -2])
        rng = np.random.default_rng(2)
        for _ in range(3):
            m0 = StatePoint(tuple(rng.random(2)), gc.GroupElement(gc.torus(1), (rng.random(),)))
            traj = sample_trajectory(spec.field, m0, times, step=1e-3)
            (row,) = check_torus_residency(traj, [inv], tol=1e-6)
            assert row.passed, row.residual


@pytest.mark.criterion(3, "SO(3) example: checker, pi/3 gives 2-tori, c = 1 gives heuristic 3-tori")
def test_criterion_3_so3_example():
    with Budget(60):
        c = math.pi / 3
        resonant = so3_example(c, c, exact_mean_turns=Fraction(1, 3))
        generic = so3_example(1.0, 1.0)
        assert check_hypotheses(resonant) == [] and check_hypotheses(generic) == []

        R = reconstruct(resonant, mode="exact")
        assert R.t1.nu == (B.rational(Fraction(1, 3)),) and R.t1.exact
        assert R.t2.r == 3 and R.t2.d0 == 0 and R.spec.k + R.t2.d0 == 2

        N = reconstruct(generic, mode="numeric", height_bound=50)
        assert N.t2.l == 0 and N.t2.d0 == 1 and N.spec.k + N.t2.d0 == 3
        assert N.t2.heuristic

        traj = sample_trajectory(generic.field, N.phase_data.base_point, np.arange(2001) * 0.01)
        fit = extract_frequencies(traj, N.phase_data.torus)
        assert fit.labels[2] == "axis"
        assert abs(fit.slopes[2] - 2.0 / (2 * math.pi)) < 1e-5


CONJUGACY_SYSTEMS = [
    ("torus3", lambda: reconstruct(torus3_example())),
    ("so3 pi/3", lambda: reconstruct(so3_example(math.pi / 3, math.pi / 3, exact_mean_turns=Fraction(1, 3)))),
    ("so3 c=1", lambda: reconstruct(so3_example(1.0, 1.0), mode="numeric", height_bound=50)),
    ("so3 f1=sin", lambda: reconstruct(so3_example(0.0, 0.0, f1_terms=[(1, 0.0, 1.0)]), mode="numeric")),
]


@pytest.mark.criterion(4, "flow on j and linear conjugacy below 1e-7")
def test_criterion_4_conjugacy():
    with Budget(60):
        for name, build in CONJUGACY_SYSTEMS:
            rows = {r.name: r for r in check_conjugacy(build(), sample_count=20, t_max=5.0, seed=4,
                                                       include_covering=False)}
            for key in ("flow_on_j", "linear_conjugacy"):
                assert rows[key].samples == 20
                assert rows[key].residual < 1e-7, (name, key, rows[key].residual)


def _common_axis_system(rng):
    """Lifts b_i = d_i F + c_i along one axis, X = sum w_i S_i; all brackets vanish."""
    u = rng.normal(size=3)
    u /= np.linalg.norm(u)
    k = 2
    modes = [(1, 0), (0, 1), (1, 1), (1, -1), (2, 0)]
    picks = rng.choice(len(modes), size=3, replace=False)
    F = [(modes[i], rng.normal(), rng.normal()) for i in picks]
    c = rng.normal(size=k)

    def b(i):
        # d/dphi_i of A cos 2 pi n.phi + S sin 2 pi n.phi
        terms = [((0, 0), c[i] * u, None)]
        for n, A, S in F:
            w = 2 * math.pi * n[i]
            terms.append((n, w * S * u, -w * A * u))
        return CoeffFunction.from_terms(SO3, k, terms)

    omega = (B.rational(1), B.element("sqrt2"))
    w = np.array([1.0, math.sqrt(2)])
    a = CoeffFunction.from_terms(
        SO3, k, [((0, 0), float(w @ c) * u, None)]
        + [(n, float(w @ (2 * math.pi * np.array(n))) * S * u, -float(w @ (2 * math.pi * np.array(n))) * A * u)
           for n, A, S in F])
    return SystemSpec(SO3, k, omega, a, (Lift(0, b(0)),), basis=B)


@pytest.mark.criterion(5, "phases commute and are invariant along lift flows within 1e-8")
def test_criterion_5_phase_properties():
    rng = np.random.default_rng(5)
    with Budget(60):
        for _ in range(10):
            spec = _common_axis_system(rng)
            assert check_hypotheses(spec) == []
            S = complete_lifts(spec)
            m = StatePoint(tuple(rng.random(2)), gc.GroupElement(SO3, rng.normal(size=4)))
            gam = [phase(s, m) for s in S]
            assert gc.commutator_defect(gam[0], gam[1]) < 1e-8
            for i, j in ((0, 1), (1, 0)):
                for t in (0.1, 0.37, 0.9):
                    moved = flow(S[j].field, m, t)
                    assert gc.distance(phase(S[i], moved), gam[i]) < 1e-8


@pytest.mark.criterion(6, "SNF invariant factors equal the gcd-of-minors oracle on 500 matrices")
def test_criterion_6_snf_oracle():
    rnd = random.Random(6)
    with Budget(10):
        for _ in range(500):
            n, m = rnd.randint(1, 6), rnd.randint(1, 6)
            A = [[rnd.randint(-10, 10) for _ in range(m)] for _ in range(n)]
            dec = xl.snf(A)
            assert xl.matmul(xl.matmul(dec.U, A), dec.V) == [list(r) for r in dec.D]
            assert abs(xl.det(dec.U)) == 1 and abs(xl.det(dec.V)) == 1
            f = list(dec.invariant_factors)
            assert all(b % a == 0 for a, b in zip(f, f[1:]))
            assert f == invariant_factors_by_minors(A)


@pytest.mark.criterion(7, "T^3 deck images of (0, e) share one j' image; K = {(0,0), (0,1)}")
def test_criterion_7_deck_structure():
    with Budget(5):
        R = reconstruct(torus3_example())
        row = check_deck_invariance(R, tol=1e-8)
    assert row.samples == 4 and row.passed, row.residual
    assert R.t2.K == ((0, 0), (0, 1))


@pytest.mark.criterion(8, "group integrator error is fourth order (Richardson ratio in [12, 20])")
def test_criterion_8_integrator_order():
    # c(phi) = 0.8 + 0.6 sin 2 pi phi along z, phi = t: theta(t) = 0.8 t + 0.6 (1 - cos 2 pi t) / 2 pi
    ez = np.array([0.0, 0.0, 1.0])
    fld = VectorField((1.0,), CoeffFunction.from_terms(SO3, 1, [((0,), 0.8 * ez, None), ((1,), None, 0.6 * ez)]))
    with Budget(5):
        for t in (0.3, 0.7):
            theta = 0.8 * t + 0.6 * (1 - math.cos(2 * math.pi * t)) / (2 * math.pi)
            exact = gc.exp_algebra(gc.AlgebraVector(SO3, theta * ez)).payload
            errs = []
            for h in (0.05, 0.025):
                _, G = flow_batch(fld, [[0.0]], [SO3.identity().payload], [t], h)
                errs.append(gc.distance_batch(SO3, G, np.array([exact]))[0])
            assert 12 <= errs[0] / errs[1] <= 20, errs
