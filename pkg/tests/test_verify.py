import math
from dataclasses import replace

import numpy as np
import pytest

from reltori import groups as gc
from reltori.catalog import SQRT2_BASIS
from reltori.dynsys import CoeffFunction, Lift, StatePoint, SystemSpec
from reltori.errors import FitUnstable
from reltori.reconstruct import reconstruct
from reltori.verify import (CheckRow, Tolerances, Trajectory, axis_invariant, check_conjugacy,
                            check_deck_invariance, check_frequencies, check_torus_residency,
                            extract_frequencies, linear_angle_invariant, sample_trajectory,
                            verify_reconstruction)

B = SQRT2_BASIS


def by_name(rows):
    return {r.name: r for r in rows}


def test_row_passes_iff_residual_within_tolerance():
    assert CheckRow("x", 1e-8, 1e-8).passed
    assert not CheckRow("x", 2e-8, 1e-8).passed
    assert not CheckRow("x", float("inf"), 1.0).passed


def test_zero_time_gives_zero_residual(so3_fourier):
    rows = by_name(check_conjugacy(so3_fourier, t_grid=[0.0], sample_count=5))
    for name in ("flow_on_j", "linear_conjugacy", "symmetry_invariance", "flow_on_covering"):
        assert rows[name].residual == 0.0


def test_torus_example_conjugacy(torus3):
    rows = check_conjugacy(torus3, sample_count=20, seed=1)
    assert all(r.passed for r in rows)
    assert by_name(rows)["flow_on_j"].residual < 1e-7


def test_trivial_group_reduces_to_flow_commutation():
    G = gc.torus(0)
    zero = CoeffFunction.zero(G, 2)
    spec = SystemSpec(G, 2, (B.rational(1), B.element("sqrt2")), zero, (Lift(0, zero),), basis=B)
    R = reconstruct(spec)
    assert R.t1.d1 == 0 and R.t2.r == 1
    assert all(r.passed for r in check_conjugacy(R, sample_count=4))


def test_residual_growth_is_at_most_linear(so3_fourier):
    res = [by_name(check_conjugacy(so3_fourier, t_grid=[t], sample_count=4, include_covering=False))
           ["flow_on_j"].residual for t in (1.0, 4.0)]
    assert res[1] <= 1e-7 * 4.0 + 4 * res[0] + 1e-13


def test_deck_invariance(torus3, so3_resonant):
    for R in (torus3, so3_resonant):
        row = check_deck_invariance(R)
        assert row.samples == R.t2.r ** 2
        assert row.passed


def test_torus_residency_short(torus3):
    traj = sample_trajectory(torus3.spec.field, torus3.phase_data.base_point, np.arange(1001) * 0.01)
    (row,) = check_torus_residency(traj, [linear_angle_invariant([1, 0, -2])])
    assert row.residual < 1e-6


def test_constant_trajectory_has_no_drift():
    G = gc.torus(1)
    traj = Trajectory(np.arange(5.0), np.zeros((5, 1)), np.full((5, 1), 0.3), G)
    (row,) = check_torus_residency(traj, [linear_angle_invariant([1, 1])])
    assert row.residual == 0.0
    fit = extract_frequencies(traj)
    np.testing.assert_allclose(fit.slopes, 0.0, atol=1e-15)


def test_axis_component_is_constant(so3_resonant):
    pd = so3_resonant.phase_data
    traj = sample_trajectory(so3_resonant.spec.field,
                             StatePoint((0.2, 0.5), gc.GroupElement(gc.SO3, (0.7, 0.2, 0.5, 0.1))),
                             np.arange(501) * 0.01)
    (row,) = check_torus_residency(traj, [axis_invariant(pd.torus.axis)])
    assert row.residual < 1e-7


def test_synthetic_linear_flow_frequencies():
    t = np.arange(10001) * 1e-2
    G = gc.torus(0)
    phi = np.mod(np.outer(t, [1.0, math.sqrt(2)]), 1.0)
    fit = extract_frequencies(Trajectory(t, phi, np.zeros((t.size, 0)), G))
    np.testing.assert_allclose(fit.slopes, [1.0, math.sqrt(2)], atol=1e-6)


def test_torus_example_third_angle(torus3):
    t = np.arange(2001) * 0.01
    traj = sample_trajectory(torus3.spec.field, torus3.phase_data.base_point, t)
    fit = extract_frequencies(traj)
    assert fit.labels == ("phi1", "phi2", "g1")
    assert fit.slopes[2] == pytest.approx(0.5, abs=1e-6)


def test_fit_unstable_on_erratic_data():
    rng = np.random.default_rng(0)
    t = np.arange(50.0)
    traj = Trajectory(t, rng.random((50, 1)), np.zeros((50, 0)), gc.torus(0))
    with pytest.raises(FitUnstable):
        extract_frequencies(traj)


def test_shifted_branch_fails_frequency_check(torus3):
    t = np.arange(2001) * 0.01
    traj = sample_trajectory(torus3.spec.field, torus3.phase_data.base_point, t)
    fit = extract_frequencies(traj)
    assert check_frequencies(torus3, fit).passed
    pd = torus3.phase_data
    bad_pd = replace(pd, H=pd.H + np.array([[0.0, 1.0]]))
    assert not check_frequencies(replace(torus3, phase_data=bad_pd), fit).passed


def test_full_report(torus3):
    rep = verify_reconstruction(torus3, horizon=10.0, invariants=[linear_angle_invariant([1, 0, -2])])
    assert rep.passed and not rep.heuristic
    names = [r.name for r in rep.rows]
    assert "frequencies" in names and "residency:angles.1,0,-2" in names
    np.testing.assert_allclose(rep.frequencies.slopes, rep.predicted, atol=1e-6)


def test_tolerances_from_mapping():
    tol = Tolerances.from_mapping({"conjugacy": 1e-6})
    assert tol.conjugacy == 1e-6 and tol.fit == 1e-3
    with pytest.raises(ValueError):
        Tolerances.from_mapping({"bogus": 1.0})
