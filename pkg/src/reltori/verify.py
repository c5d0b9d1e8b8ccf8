"""
Numerical certification of a reconstruction.

Every check produces ``CheckRow`` entries (name, residual, tolerance,
passed). Residuals are maxima over samples, and a row passes exactly when
its residual does not exceed its tolerance.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields, replace

import numpy as np

from . import groups as gc
from .dynsys import DEFAULT_STEP, StatePoint, VectorField, flow_batch
from .errors import FitUnstable
from .reconstruct import (Reconstruction, deck_action_batch, flow_X_batch, j_batch,
                          jprime_batch)


@dataclass(frozen=True)
class Tolerances:
    conjugacy: float = 1e-7
    omega_eta: float = 1e-10
    deck: float = 1e-8
    exp_delta: float = 1e-10
    residency: float = 1e-6
    frequency: float = 1e-5
    fit: float = 1e-3

    @classmethod
    def from_mapping(cls, mapping) -> Tolerances:
        names = {f.name for f in fields(cls)}
        unknown = set(mapping) - names
        if unknown:
            raise ValueError(f"unknown tolerance keys {sorted(unknown)}")
        return replace(cls(), **{k: float(v) for k, v in mapping.items()})

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass(frozen=True)
class CheckRow:
    name: str
    residual: float
    tolerance: float
    samples: int = 0
    note: str = ""

    @property
    def passed(self) -> bool:
        return bool(self.residual <= self.tolerance)


@dataclass(frozen=True, eq=False)
class Trajectory:
    times: np.ndarray
    phi: np.ndarray
    payload: np.ndarray
    group: gc.Group
    field_id: str = "X"
    step: float = DEFAULT_STEP

    def __post_init__(self):
        if self.times.ndim != 1 or np.any(np.diff(self.times) <= 0):
            raise ValueError("trajectory times must be strictly increasing")

    def __len__(self):
        return len(self.times)

    def point(self, i) -> StatePoint:
        return StatePoint(tuple(self.phi[i]), gc.GroupElement(self.group, self.payload[i]))


@dataclass(frozen=True, eq=False)
class FrequencyFit:
    labels: tuple
    slopes: np.ndarray
    residuals: np.ndarray


@dataclass(frozen=True, eq=False)
class VerificationReport:
    rows: tuple
    frequencies: FrequencyFit | None = None
    predicted: np.ndarray | None = None
    heuristic: bool = False
    tolerances: Tolerances = field(default_factory=Tolerances)
    trajectory: Trajectory | None = None

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.rows)


# --- sampling ------------------------------------------------------------------

def sample_trajectory(fld: VectorField, m0: StatePoint, times, step: float = DEFAULT_STEP,
                      field_id: str = "X") -> Trajectory:
    """Integrate ``fld`` from ``m0`` and record the state at ``times`` (which start at 0).

    Each interval between samples is integrated on its own with equal
    substeps no longer than ``step``. For a commutative group the interval
    increments do not depend on the group state, so they are computed in
    one batch and accumulated.
    """
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size == 0 or times[0] != 0.0:
        raise ValueError("times must be a nonempty 1-d grid starting at 0")
    group = fld.c.group
    u = np.array(fld.u)
    phi0 = np.array(m0.phi)
    phi = np.mod(phi0 + np.outer(times, u), 1.0)
    phi[phi >= 1.0] = 0.0
    dt = np.diff(times)
    starts = phi0 + np.outer(times[:-1], u)
    P = np.empty((times.size, group.payload_dim))
    P[0] = m0.g.payload
    if group.kind == "torus":
        zero = np.zeros((dt.size, group.payload_dim))
        _, inc = flow_batch(fld, starts, zero, dt, step)
        inc = np.mod(inc + 0.5, 1.0) - 0.5
        P[1:] = np.mod(P[0] + np.cumsum(inc, axis=0), 1.0)
        P[P >= 1.0] = 0.0
    else:
        g = P[:1]
        for i, h in enumerate(dt):
            _, g = flow_batch(fld, starts[i:i + 1], g, [h], step)
            P[i + 1] = g[0]
    return Trajectory(times, phi, P, group, field_id, step)


def _payload_gap(group, A, B):
    return gc.distance_batch(group, A, B) if group.payload_dim else np.zeros(len(A))


def _state_gap(group, phiA, GA, phiB, GB):
    d_phi = np.abs(np.mod(phiA - phiB + 0.5, 1.0) - 0.5)
    d_phi = d_phi.max(axis=1) if d_phi.shape[1] else np.zeros(len(phiA))
    return np.maximum(d_phi, _payload_gap(group, GA, GB))


def random_group_payloads(group, n, rng) -> np.ndarray:
    if group.kind == "so3":
        return gc._canon(group, rng.normal(size=(n, 4)))
    return rng.random((n, group.dim))


# --- conjugacy checks --------------------------------------------------------

def _times(rng, sample_count, t_grid, t_max):
    if t_grid is None:
        return rng.uniform(0.0, t_max, sample_count)
    return np.asarray(t_grid, dtype=float)


def check_conjugacy(recon: Reconstruction, t_grid=None, sample_count: int = 20,
                    tol: Tolerances | None = None, seed: int = 0, t_max: float = 5.0,
                    include_covering: bool = True):
    """Residual rows for the conjugacy identities of the reconstruction.

    With ``t_grid`` given, each of the ``sample_count`` random points is
    paired with every time of the grid; otherwise each point gets its own
    uniform random time in ``[0, t_max]``.
    """
    tol = tol or Tolerances()
    spec, pd, t1, t2 = recon.spec, recon.phase_data, recon.t1, recon.t2
    group, k = pd.group, pd.k
    rng = np.random.default_rng(seed)
    alpha0 = rng.random((sample_count, k))
    g0 = random_group_payloads(group, sample_count, rng)
    t = _times(rng, sample_count, t_grid, t_max)
    if t_grid is not None:
        alpha0 = np.repeat(alpha0, t.size, axis=0)
        g0 = np.repeat(g0, t.size, axis=0)
        t = np.tile(t, sample_count)
    n = len(t)
    w = spec.omega_float
    E = pd.log_matrix()
    rows = []

    def drift(coeffs, basis_rows):
        # exp(t * sum_i coeffs_i basis_i) for each sample
        if basis_rows.size == 0:
            return np.tile(group.identity().payload, (n, 1))
        return gc.exp_batch(group, t[:, None] * (np.asarray(coeffs, dtype=float) @ basis_rows)[None, :])

    def flowed(phi, G):
        return flow_X_batch(spec, pd, phi, G, t)

    # Phi_t(j(a, g)) = j(a + t w, g exp(t w*eta))
    lhs = flowed(*j_batch(pd, alpha0, g0))
    a1 = np.mod(alpha0 + t[:, None] * w, 1.0)
    rhs = j_batch(pd, a1, gc.mul_batch(group, g0, drift(w, E)))
    rows.append(CheckRow("flow_on_j", float(_state_gap(group, *lhs, *rhs).max(initial=0.0)),
                         tol.conjugacy, n))

    # i_g(a, b) = j(a, g exp(b*xi)) conjugates X to the linear flow (w, nu)
    Xi = t1.T1.basis_matrix().T if t1.d1 else np.zeros((0, group.algebra_dim))
    beta = rng.random((n, t1.d1))
    nu = t1.nu_float

    def i_g(a, b):
        return j_batch(pd, a, gc.mul_batch(group, g0, gc.exp_batch(group, b @ Xi)))

    lhs = flowed(*i_g(alpha0, beta))
    rhs = i_g(a1, beta + t[:, None] * nu)
    rows.append(CheckRow("linear_conjugacy", float(_state_gap(group, *lhs, *rhs).max(initial=0.0)),
                         tol.conjugacy, n))

    # J_(a,g) commutes with the flow, where J_(a,g)(j(b, h)) = j(a + b, g h)
    b0 = rng.random((n, k))
    h0 = random_group_payloads(group, n, rng)
    lhs = flowed(*j_batch(pd, np.mod(alpha0 + b0, 1.0), gc.mul_batch(group, g0, h0)))
    b1 = np.mod(b0 + t[:, None] * w, 1.0)
    h1 = gc.mul_batch(group, h0, drift(w, E))
    rhs = j_batch(pd, np.mod(alpha0 + b1, 1.0), gc.mul_batch(group, g0, h1))
    rows.append(CheckRow("symmetry_invariance", float(_state_gap(group, *lhs, *rhs).max(initial=0.0)),
                         tol.conjugacy, n))

    rows.append(CheckRow("omega_eta_equals_nu_xi", t1.omega_eta_residual, tol.omega_eta, 1))

    if not include_covering:
        return rows
    if t2.d0:
        Xpp = np.array([x.array for x in t2.xi_prime[t2.l:]]).reshape(t2.d0, group.algebra_dim)
    else:
        Xpp = np.zeros((0, group.algebra_dim))
    wp = t2.omega_prime_float
    lhs = flowed(*jprime_batch(pd, t2, alpha0, g0))
    rhs = jprime_batch(pd, t2, np.mod(alpha0 + t[:, None] * wp, 1.0),
                       gc.mul_batch(group, g0, drift(t2.nu_pp_float, Xpp)))
    rows.append(CheckRow("flow_on_covering", float(_state_gap(group, *lhs, *rhs).max(initial=0.0)),
                         tol.conjugacy, n))
    rows.append(check_deck_invariance(recon, tol.deck, alpha0[:1], g0[:1]))
    D = np.array([d.array for d in t2.delta]).reshape(k, group.algebra_dim)
    gap = _payload_gap(group, gc.exp_batch(group, D), np.tile(group.identity().payload, (k, 1)))
    rows.append(CheckRow("exp_delta_is_identity", float(gap.max(initial=0.0)), tol.exp_delta, k))
    return rows


def deck_images(recon: Reconstruction, alpha, g):
    """All r^k images of ``(alpha, g)`` under the deck transformations, with their labels."""
    t2 = recon.t2
    k = recon.phase_data.k
    grids = np.meshgrid(*[np.arange(t2.r)] * k, indexing="ij")
    U = np.stack(grids, axis=-1).reshape(-1, k)
    n = len(U)
    a = np.tile(np.atleast_2d(alpha), (n, 1))
    G = np.tile(np.atleast_2d(g), (n, 1))
    a2, G2 = deck_action_batch(t2, U, a, G, recon.phase_data.group)
    return U, a2, G2


def check_deck_invariance(recon: Reconstruction, tol: float = 1e-8, alpha=None, g=None) -> CheckRow:
    """j' is constant on the orbit of the deck group."""
    pd = recon.phase_data
    group = pd.group
    alpha = np.zeros((1, pd.k)) if alpha is None else np.atleast_2d(alpha)
    g = np.atleast_2d(group.identity().payload if g is None else g)
    U, a2, G2 = deck_images(recon, alpha, g)
    phi, G = jprime_batch(pd, recon.t2, a2, G2)
    ref_phi, ref_G = jprime_batch(pd, recon.t2, alpha, g)
    gap = _state_gap(group, phi, G, np.tile(ref_phi, (len(U), 1)), np.tile(ref_G, (len(U), 1)))
    return CheckRow("deck_invariance", float(gap.max()), tol, len(U))


# --- torus residency -----------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Invariant:
    """A function of the state that should stay constant along orbits.

    ``fn`` maps a trajectory to an ``(n,)`` or ``(n, m)`` array. With
    ``periodic`` set, values are angles mod 1 and drift is measured on the
    circle.
    """

    name: str
    fn: object
    periodic: bool = True


def linear_angle_invariant(coeffs, name: str | None = None) -> Invariant:
    """sum_i c_i x_i mod 1 over the angles (phi, then torus-group payload)."""
    c = np.asarray(coeffs, dtype=float)

    def fn(traj):
        X = np.hstack([traj.phi, traj.payload]) if traj.group.kind == "torus" else traj.phi
        if X.shape[1] != c.size:
            raise ValueError(f"invariant has {c.size} coefficients for {X.shape[1]} angles")
        return X @ c

    label = name or "angles." + ",".join(f"{x:g}" for x in c)
    return Invariant(label, fn, True)


def axis_invariant(axis, name: str = "rotated_axis") -> Invariant:
    """R(g) u; constant when g only moves by right multiplication about ``u``."""
    u = np.asarray(axis, dtype=float)

    def fn(traj):
        return np.array([gc.rotation_matrix(q) @ u for q in traj.payload])

    return Invariant(name, fn, False)


def check_torus_residency(traj: Trajectory, invariants, tol: float = 1e-6):
    rows = []
    for inv in invariants:
        v = np.asarray(inv.fn(traj), dtype=float)
        v = v.reshape(len(traj), -1)
        d = v - v[0]
        if inv.periodic:
            d = np.mod(d + 0.5, 1.0) - 0.5
        drift = np.linalg.norm(d, axis=1).max(initial=0.0)
        rows.append(CheckRow(f"residency:{inv.name}", float(drift), tol, len(traj)))
    return rows


# --- frequency extraction ------------------------------------------------------

def _axis_angle_turns(traj: Trajectory, axis):
    """Rotation of g(0)^-1 g(t) about ``axis`` in turns, and the largest off-axis part."""
    group = traj.group
    rel = gc.mul_batch(group, gc.inv_batch(group, traj.payload[:1]), traj.payload)
    u = np.asarray(axis, dtype=float)
    along = rel[:, 1:] @ u
    off = np.linalg.norm(rel[:, 1:] - np.outer(along, u), axis=1).max(initial=0.0)
    return np.arctan2(along, rel[:, 0]) / np.pi, float(off)


def detect_axis(traj: Trajectory):
    group = traj.group
    rel = gc.mul_batch(group, gc.inv_batch(group, traj.payload[:1]), traj.payload)
    i = int(np.argmax(np.linalg.norm(rel[:, 1:], axis=1)))
    v = rel[i, 1:]
    nv = np.linalg.norm(v)
    if nv < 1e-12:
        return None
    v = v / nv
    j = int(np.flatnonzero(np.abs(v) > 1e-12)[0])
    return tuple(-v if v[j] < 0 else v)


def extract_frequencies(traj: Trajectory, torus: gc.TorusDescriptor | None = None,
                        fit_tol: float = 1e-3) -> FrequencyFit:
    """Least-squares slopes of the unwrapped angles of a trajectory.

    Angles are the phi's followed by the torus-group payload, or for SO(3)
    the rotation of g(0)^-1 g(t) about an axis: the axis of ``torus`` when
    it is an axis torus, else one detected from the samples. The fit
    residual of each angle is its RMS deviation from the fitted line
    divided by the time span, a rough bound on the slope error that stays
    meaningful for bounded oscillations riding on the drift.

    Samples must resolve the motion (each angle moves less than half a turn
    between samples); a horizon of 50 over the smallest frequency gap of
    interest is a reasonable default.
    """
    if len(traj) < 3:
        raise FitUnstable("need at least three samples to fit frequencies")
    group = traj.group
    cols, labels = [traj.phi[:, i] for i in range(traj.phi.shape[1])], [f"phi{i + 1}" for i in
                                                                         range(traj.phi.shape[1])]
    if group.kind == "torus":
        cols += [traj.payload[:, i] for i in range(group.dim)]
        labels += [f"g{i + 1}" for i in range(group.dim)]
    else:
        axis = torus.axis if torus is not None and torus.kind == "axis" else detect_axis(traj)
        if axis is not None:
            ang, off = _axis_angle_turns(traj, axis)
            if off > fit_tol:
                raise FitUnstable(f"group motion leaves the axis circle by {off:.3e}")
            cols.append(ang)
            labels.append("axis")
    t = traj.times
    span = t[-1] - t[0]
    slopes, resid = [], []
    for c in cols:
        y = np.unwrap(np.asarray(c, dtype=float), period=1.0)
        coef = np.polyfit(t, y, 1)
        rms = float(np.sqrt(np.mean((y - np.polyval(coef, t)) ** 2)))
        slopes.append(float(coef[0]))
        resid.append(rms / span)
    resid = np.array(resid)
    if resid.size and resid.max() > fit_tol:
        raise FitUnstable(f"frequency fit residual {resid.max():.3e} exceeds {fit_tol:.1e}")
    return FrequencyFit(tuple(labels), np.array(slopes), resid)


def predicted_frequencies(recon: Reconstruction) -> np.ndarray:
    """(omega, vertical drift) on the canonical branch, in T2 coordinates.

    The vertical drift along an orbit is H omega minus the branch shifts
    omega . z recorded with the phase data.
    """
    pd = recon.phase_data
    w = recon.spec.omega_float
    vert = pd.H @ w - (pd.branch @ w if pd.branch is not None and pd.H.size else 0.0)
    return np.concatenate([w, np.atleast_1d(vert)]) if pd.torus.dim else w


def check_frequencies(recon: Reconstruction, fit: FrequencyFit, tol: float = 1e-5) -> CheckRow:
    pred = predicted_frequencies(recon)
    got = fit.slopes
    if got.size != pred.size:
        return CheckRow("frequencies", float("inf"), tol, 0,
                        f"extracted {got.size} frequencies, predicted {pred.size}")
    return CheckRow("frequencies", float(np.max(np.abs(got - pred), initial=0.0)), tol, got.size)


# --- assembled report ------------------------------------------------------------

def verify_reconstruction(recon: Reconstruction, tol: Tolerances | None = None, seed: int = 0,
                          sample_count: int = 20, t_grid=None, t_max: float = 5.0,
                          horizon: float = 20.0, dt: float = 0.01, invariants=(),
                          frequencies: bool = True) -> VerificationReport:
    """Conjugacy, residency and frequency checks for one reconstruction."""
    tol = tol or Tolerances()
    pd = recon.phase_data
    rows = list(check_conjugacy(recon, t_grid, sample_count, tol, seed, t_max))
    times = np.arange(int(round(horizon / dt)) + 1) * dt
    traj = sample_trajectory(recon.spec.field, pd.base_point, times, pd.step)
    invs = list(invariants)
    if pd.group.kind == "so3" and pd.torus.kind == "axis" and all(
            f.lies_in(pd.torus) for f in [recon.spec.a] + [s.b for s in pd.lifts]):
        invs.append(axis_invariant(pd.torus.axis))
    rows += check_torus_residency(traj, invs, tol.residency)
    fit = pred = None
    if frequencies and len(traj) >= 3:
        try:
            fit = extract_frequencies(traj, pd.torus, tol.fit)
        except FitUnstable as exc:
            rows.append(CheckRow("frequencies", float("inf"), tol.frequency, 0, str(exc)))
        else:
            pred = predicted_frequencies(recon)
            rows.append(check_frequencies(recon, fit, tol.frequency))
    heuristic = recon.t1.heuristic or recon.t2.heuristic
    return VerificationReport(tuple(rows), fit, pred, heuristic, tol, traj)
