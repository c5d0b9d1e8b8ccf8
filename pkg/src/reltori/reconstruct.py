"""
Reconstruction of a relative quasi-periodic torus.

Pipeline: phases of the k lifts at the base point -> commuting torus T2 and
principal logarithms eta -> external frequencies nu and the torus T1
(invariant tori of dimension k + d1) -> resonance resolution of (omega, nu)
through a Smith normal form (tori of dimension k + d0, an r^k : 1 covering
with deck group Z_r^k, subgroup K and finite group F0).

Exact external frequencies
--------------------------
``H`` (logs in T2 coordinates) comes from integrated phases and is a float
matrix. Its product ``H omega`` is nevertheless available exactly when the
vertical data all lie in the Lie algebra of T2: the logarithm of each phase
is then the constant Fourier term of its lift up to an integer lattice
vector z_i, and since the vertical part of X is sum_i omega_i b_i,

    H omega = mean(a) + sum_i omega_i z_i

in T2 coordinates. The integers z_i are read off the numerical logs, the
constant term of ``a`` comes exact from the configuration, and the result is
cross-checked against the float product.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import exact_linalg as xl
from . import groups as gc
from .dynsys import (DEFAULT_STEP, StatePoint, SystemSpec, VectorField, check_hypotheses,
                     complete_lifts, flow_batch, phase)
from .errors import HypothesisError, ResonanceError
from .freqs import (DEFAULT_HEIGHT_BOUND, DEFAULT_TOL, ExactScalar, RelationLattice, as_floats,
                    common_basis, is_exact, resonance_lattice, to_exact)

LOG_MATCH_TOL = 1e-8
EXACT_CROSSCHECK_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class PhaseData:
    phases: tuple
    torus: gc.TorusDescriptor
    logs: tuple
    H: np.ndarray
    lifts: tuple
    base_point: StatePoint
    step: float
    omega: tuple
    exact_nu2: tuple | None = None
    exact_note: str = ""
    branch: np.ndarray | None = None

    @property
    def k(self) -> int:
        return len(self.phases)

    @property
    def group(self) -> gc.Group:
        return self.torus.group

    def log_matrix(self) -> np.ndarray:
        """k x dim(G): row i holds eta_i in algebra coordinates."""
        return np.array([eta.array for eta in self.logs]).reshape(self.k, self.group.algebra_dim)


def branch_shifts(spec, lifts, T2, H):
    """Integers z with H[:, i] = mean(b_i) + z_i in T2 coordinates, or None.

    Defined when the lifts' vertical parts lie in the Lie algebra of T2; the
    principal logarithm then differs from the mean of b_i by a lattice vector.
    """
    if T2.dim == 0:
        return np.zeros((0, len(lifts)), dtype=np.int64)
    if not all(s.b.lies_in(T2) for s in lifts):
        return None
    M = np.column_stack([T2.coords(gc.AlgebraVector(spec.group, s.b.mean())) for s in lifts])
    Z = np.rint(H - M)
    if np.max(np.abs(H - M - Z)) > LOG_MATCH_TOL:
        return None
    return Z.astype(np.int64)


def _exact_external(spec, T2, H, Z):
    """Exact T2 coordinates of omega*eta, or (None, reason)."""
    if not all(is_exact(w) for w in spec.omega):
        return None, "omega is not exact"
    if T2.dim == 0:
        return (), ""
    basis = spec.basis
    if spec.a.exact_mean is None:
        return None, "constant term of the vertical part is not exact"
    if Z is None or not spec.a.lies_in(T2):
        return None, "vertical data leave the Lie algebra of T2"
    mean = [x if isinstance(x, ExactScalar) else basis.rational(Fraction(x)) for x in spec.a.exact_mean]
    if T2.kind == "full":
        a_coords = mean
    elif T2.kind == "axis":
        u = np.array(T2.axis)
        j = int(np.argmax(np.abs(u)))
        if abs(u[j]) != 1.0:
            return None, "T2 axis is not a coordinate axis"
        if any(not mean[i].is_zero() for i in range(3) if i != j):
            return None, "exact constant term is not along the T2 axis"
        a_coords = [mean[j]]
    else:
        return None, f"unsupported T2 kind {T2.kind}"
    z = [[int(Z[row, i]) for row in range(T2.dim)] for i in range(Z.shape[1])]
    nu2 = []
    for row in range(T2.dim):
        acc = a_coords[row]
        for i, w in enumerate(spec.omega):
            acc = acc + w * z[i][row] if isinstance(w, ExactScalar) else acc + Fraction(w) * z[i][row]
        nu2.append(acc if isinstance(acc, ExactScalar) else basis.rational(acc))
    gap = np.max(np.abs(as_floats(nu2) - H @ spec.omega_float), initial=0.0)
    if gap > EXACT_CROSSCHECK_TOL:
        return None, f"exact H.omega disagrees with the integrated phases by {gap:.3e}"
    return tuple(nu2), ""


def compute_phase_data(spec: SystemSpec, step: float = DEFAULT_STEP) -> PhaseData:
    """Phases of the completed lifts at the base point, their torus and logs."""
    violations = check_hypotheses(spec)
    if violations:
        raise HypothesisError(violations)
    lifts = complete_lifts(spec)
    m = spec.base_point
    phases = tuple(phase(s, m, step) for s in lifts)
    T2 = gc.commuting_torus(phases)
    coords = [gc.principal_coords(p, T2) for p in phases]
    logs = tuple(T2.from_coords(c) if T2.dim else spec.group.zero() for c in coords)
    H = np.column_stack(coords) if T2.dim else np.zeros((0, spec.k))
    Z = branch_shifts(spec, lifts, T2, H)
    nu2, note = _exact_external(spec, T2, H, Z)
    return PhaseData(phases, T2, logs, H, lifts, m, step, tuple(spec.omega), nu2, note, Z)


# --- external frequencies and T1 ----------------------------------------------

@dataclass(frozen=True, eq=False)
class Theorem1Data:
    nu: tuple
    d1: int
    T1: gc.TorusDescriptor
    T1_in_T2: tuple
    nu2: np.ndarray
    nu2_relations: RelationLattice
    exact: bool
    heuristic: bool
    base_label: str
    omega_eta_residual: float

    @property
    def nu_float(self) -> np.ndarray:
        return as_floats(self.nu)


def _left_inverse(B):
    Bt = xl.transpose(B)
    return xl.matmul(xl.inverse(xl.matmul(Bt, B)), Bt)


def _apply_rational(M, vec, zero):
    out = []
    for row in M:
        acc = zero
        for q, v in zip(row, vec):
            if q:
                acc = acc + v * Fraction(q)
        out.append(acc)
    return tuple(out)


def _torus_label(d):
    return "" if d == 0 else ("S^1" if d == 1 else f"T^{d}")


def theorem1(omega, pd: PhaseData, mode: str = "exact", height_bound: int = DEFAULT_HEIGHT_BOUND,
             tol: float = DEFAULT_TOL) -> Theorem1Data:
    """External frequencies nu = H omega, expressed in an integral basis of T1.

    T1 is the closure of t -> exp(t omega*eta). Its dimension is d2 minus the
    rank of the integer relations among the T2 coordinates of omega*eta, and
    its integral lattice is the integer kernel of those relations.
    """
    T2 = pd.torus
    d2 = T2.dim
    w = as_floats(omega)
    nu2 = pd.H @ w if d2 else np.zeros(0)
    exact = mode == "exact" and pd.exact_nu2 is not None and all(is_exact(x) for x in omega)
    if d2 == 0:
        rel = RelationLattice((), 0, False)
    elif exact:
        rel = resonance_lattice(pd.exact_nu2, mode="exact")
    else:
        rel = resonance_lattice(nu2, height_bound=height_bound, tol=tol, mode="numeric")
    B_cols = xl.kernel_lattice_cols([list(v) for v in rel], d2) if d2 else []
    d1 = len(B_cols)
    B = [[B_cols[j][i] for j in range(d1)] for i in range(d2)]  # d2 x d1
    if d1 == 0:
        nu = ()
    elif exact:
        L = _left_inverse(B)
        nu = _apply_rational(L, pd.exact_nu2, pd.exact_nu2[0] * 0)
    else:
        Bf = np.array(B, dtype=float)
        nu = tuple(float(x) for x in np.linalg.lstsq(Bf, nu2, rcond=None)[0])
    T1 = T2.subtorus(B) if d1 else gc.trivial_torus(T2.group)
    lhs = w @ pd.log_matrix()
    rhs = T1.basis_matrix() @ as_floats(nu) if d1 else np.zeros(T2.group.algebra_dim)
    resid = float(np.max(np.abs(lhs - rhs), initial=0.0))
    G = T2.group
    label = G.name if d1 == 0 else f"{G.name}/{_torus_label(d1)}"
    return Theorem1Data(nu, d1, T1, tuple(tuple(r) for r in B), nu2, rel, exact,
                        rel.heuristic or not exact, label, resid)


# --- resonances and covering --------------------------------------------------

@dataclass(frozen=True, eq=False)
class Theorem2Data:
    l: int
    lattice: RelationLattice
    p: tuple
    r_factors: tuple
    r: int
    snf: xl.SNFDecomposition | None
    xi_prime: tuple
    xi_prime_in_T2: tuple
    nu_prime: tuple
    nu_pp: tuple
    d0: int
    T0: gc.TorusDescriptor
    omega_prime: tuple
    delta: tuple
    delta_coords: tuple
    eta_prime: tuple
    K: tuple
    K_generators: tuple
    F0_order: int
    F0_factors: tuple
    covering_degree: int
    base_label: str
    exact: bool
    heuristic: bool
    resonance_residuals: tuple
    reduced_nonresonant: bool

    @property
    def K_order(self) -> int:
        return len(self.K)

    @property
    def nu_pp_float(self) -> np.ndarray:
        return as_floats(self.nu_pp)

    @property
    def omega_prime_float(self) -> np.ndarray:
        return as_floats(self.omega_prime)


def _subgroup_generators(elements, r, k):
    """Greedy generating set of a subgroup of Z_r^k given by its element list."""
    gens, span = [], {(0,) * k}
    for e in elements:
        if e in span:
            continue
        gens.append(e)
        frontier = list(span)
        while frontier:
            nxt = []
            for x in frontier:
                for gvec in gens:
                    y = tuple((a + b) % r for a, b in zip(x, gvec))
                    if y not in span:
                        span.add(y)
                        nxt.append(y)
            frontier = nxt
    return tuple(gens)


def deck_subgroup(p, r_factors, r, k):
    """K = {u in Z_r^k : u.p^j / r_j is an integer for all j}."""
    elems = []
    for u in itertools.product(range(r), repeat=k):
        if all(sum(a * b for a, b in zip(u, pj)) % rj == 0 for pj, rj in zip(p, r_factors)):
            elems.append(tuple(u))
    return tuple(elems)


def finite_group_factors(K, r, k):
    """Invariant factors (> 1) of Z_r^k / K, from the SNF of K + r Z^k."""
    gens = [list(u) for u in K if any(u)] + [[r * int(i == j) for j in range(k)] for i in range(k)]
    M = xl.transpose(gens)  # k x m
    return tuple(f for f in xl.snf(M).invariant_factors if f > 1)


def _finite_label(factors):
    return " x ".join(f"Z_{f}" for f in factors)


def theorem2(omega, t1: Theorem1Data, pd: PhaseData, mode: str = "exact",
             height_bound: int = DEFAULT_HEIGHT_BOUND, tol: float = DEFAULT_TOL) -> Theorem2Data:
    """Resolve resonances of (omega, nu) and build the covering data."""
    k, d1, G = pd.k, t1.d1, pd.group
    exact = t1.exact and mode == "exact"
    if exact:
        basis = common_basis(list(omega) + list(t1.nu))
        omega = tuple(to_exact(w, basis) for w in omega)
    else:
        omega = tuple(float(w) for w in omega)
    vec = list(omega) + list(t1.nu)
    if exact:
        lattice = resonance_lattice(vec, mode="exact")
    else:
        lattice = resonance_lattice(as_floats(vec), height_bound=height_bound, tol=tol, mode="numeric")
    l = lattice.rank
    heuristic = t1.heuristic or lattice.heuristic
    B = [list(r) for r in t1.T1_in_T2]  # d2 x d1
    zero = (omega[0] * 0) if exact else 0.0
    if l == 0:
        Z = xl.identity(d1)
        p, r_factors, snf = (), (), None
    else:
        Qt = [list(v[k:]) for v in lattice]  # l x d1, rows are q~^j
        Q = xl.transpose(Qt)  # d1 x l
        if xl.rank(Q) != l:
            raise ResonanceError("resonance lattice has a q-block of deficient rank; "
                                 "omega is probably resonant or the numeric search is inconsistent")
        snf = xl.snf(Q)
        Z = [list(row) for row in snf.U]
        C = xl.transpose([list(row) for row in snf.V])  # C = V^T
        r_factors = tuple(snf.D[i][i] for i in range(l))
        pt = [list(v[:k]) for v in lattice]
        p = tuple(tuple(sum(C[i][j] * pt[j][c] for j in range(l)) for c in range(k)) for i in range(l))
    r = max(r_factors, default=1)
    # xi'_i = sum_j Z_ij xi_j; columns of B Z^T in T2 coordinates
    Bp = xl.matmul(B, xl.transpose(Z)) if d1 else []
    xi_prime_cols = tuple(tuple(Bp[i][j] for i in range(len(Bp))) for j in range(d1))
    xi_prime = tuple(pd.torus.from_coords(c) for c in xi_prime_cols)
    Zinv = xl.inverse(Z) if d1 else []
    ZinvT = xl.transpose(Zinv) if d1 else []
    nu_prime = _apply_rational(ZinvT, t1.nu, zero) if exact else tuple(
        float(x) for x in (np.array(ZinvT, dtype=float) @ t1.nu_float if d1 else []))
    nu_pp = tuple(nu_prime[l:])
    d0 = d1 - l
    residuals = []
    for pi, ri, nui in zip(p, r_factors, nu_prime):
        res = sum((w * c for w, c in zip(omega, pi)), zero) + nui * ri
        residuals.append(res if exact else float(res))
    if exact and any(not x.is_zero() for x in residuals):
        raise ResonanceError("exact resonance relations fail after normalization")
    omega_prime = tuple(w / r for w in omega) if exact else tuple(float(w) / r for w in omega)
    delta_coords = tuple(tuple((r // r_factors[j]) * p[j][i] if j < l else 0 for j in range(d1))
                         for i in range(k))
    delta = tuple(
        sum((xi_prime[j] * c for j, c in enumerate(dc) if c), G.zero()) if d1 else G.zero()
        for dc in delta_coords)
    eta_prime = tuple(eta * r + dl for eta, dl in zip(pd.logs, delta))
    T0_cols = [list(c) for c in xi_prime_cols[l:]]
    if d0:
        T0 = pd.torus.subtorus(xl.transpose(T0_cols))
    else:
        T0 = gc.trivial_torus(G)
    reduced = list(omega_prime) + list(nu_pp)
    if exact:
        reduced_nonres = resonance_lattice(reduced, mode="exact").rank == 0
    else:
        reduced_nonres = resonance_lattice(as_floats(reduced), height_bound=height_bound,
                                           tol=tol, mode="numeric").rank == 0
    K = deck_subgroup(p, r_factors, r, k)
    F0_order = r ** k // len(K)
    F0_factors = finite_group_factors(K, r, k)
    if math.prod(F0_factors) != F0_order:
        raise ResonanceError("F0 invariant factors disagree with |Z_r^k / K|")
    parts = [s for s in (_torus_label(d0), _finite_label(F0_factors)) if s]
    if not parts:
        label = G.name
    elif len(parts) == 1:
        label = f"{G.name}/{parts[0]}"
    else:
        label = f"{G.name}/({' x '.join(parts)})"
    return Theorem2Data(
        l=l, lattice=lattice, p=p, r_factors=r_factors, r=r, snf=snf,
        xi_prime=xi_prime, xi_prime_in_T2=xi_prime_cols, nu_prime=nu_prime, nu_pp=nu_pp, d0=d0,
        T0=T0, omega_prime=omega_prime, delta=delta, delta_coords=delta_coords,
        eta_prime=eta_prime, K=K, K_generators=_subgroup_generators(K, r, k), F0_order=F0_order,
        F0_factors=F0_factors, covering_degree=r ** k, base_label=label, exact=exact,
        heuristic=heuristic, resonance_residuals=tuple(residuals), reduced_nonresonant=reduced_nonres,
    )


# --- maps on T^k x G ---------------------------------------------------------

def lift_flows(pd: PhaseData, alpha, phi, G, scale: float = 1.0):
    """Phi^{S_1}_{s a_1} o ... o Phi^{S_k}_{s a_k} applied to a batch of points."""
    alpha = np.atleast_2d(np.asarray(alpha, dtype=float))
    for i in reversed(range(pd.k)):
        phi, G = flow_batch(pd.lifts[i].field, phi, G, scale * alpha[:, i], pd.step)
    return phi, G


def _base_batch(pd, n):
    m = pd.base_point
    return np.tile(np.array(m.phi), (n, 1)), np.tile(np.array(m.g.payload), (n, 1))


def _as_payloads(group, g, n):
    if isinstance(g, gc.GroupElement):
        return np.tile(np.array(g.payload), (n, 1))
    return np.asarray(g, dtype=float).reshape(n, group.payload_dim)


def j_batch(pd: PhaseData, alpha, g, logs=None, scale: float = 1.0):
    """j(alpha, g) = g exp(-alpha*eta) . Phi^{S}_alpha(m), batched.

    With ``logs`` = eta' and ``scale`` = r this is the covering map j'.
    """
    alpha = np.atleast_2d(np.asarray(alpha, dtype=float))
    n = len(alpha)
    group = pd.group
    E = pd.log_matrix() if logs is None else np.array([e.array for e in logs]).reshape(pd.k, -1)
    phi, Gm = lift_flows(pd, alpha, *_base_batch(pd, n), scale=scale)
    left = gc.mul_batch(group, _as_payloads(group, g, n), gc.exp_batch(group, -alpha @ E))
    return phi, gc._canon(group, gc.mul_batch(group, left, Gm))


def jprime_batch(pd: PhaseData, t2: Theorem2Data, alpha, g):
    return j_batch(pd, alpha, g, logs=t2.eta_prime, scale=float(t2.r))


def _point(pd, phi, G):
    return StatePoint(tuple(phi[0]), gc.GroupElement(pd.group, G[0]))


def reconstruction_map(pd: PhaseData, alpha, g: gc.GroupElement) -> StatePoint:
    return _point(pd, *j_batch(pd, [alpha], g))


def covering_map(pd: PhaseData, t2: Theorem2Data, alpha, g: gc.GroupElement) -> StatePoint:
    return _point(pd, *jprime_batch(pd, t2, [alpha], g))


def deck_action_batch(t2: Theorem2Data, u, alpha, G, group):
    u = np.atleast_2d(np.asarray(u, dtype=float))
    D = np.array([d.array for d in t2.delta]).reshape(len(t2.delta), group.algebra_dim)
    a = np.mod(np.atleast_2d(alpha) + u / t2.r, 1.0)
    return a, gc.mul_batch(group, np.atleast_2d(G), gc.exp_batch(group, (u @ D) / t2.r))


def deck_action(t2: Theorem2Data, u, alpha, g: gc.GroupElement):
    """Psi_u(alpha, g) = (alpha + u/r mod 1, g exp(u*delta / r))."""
    u = tuple(int(x) for x in u)
    if any(not 0 <= x < t2.r for x in u):
        raise ValueError(f"u must have entries in [0, {t2.r})")
    a, G = deck_action_batch(t2, [u], [alpha], [g.payload], g.group)
    a[a >= 1.0] = 0.0
    return tuple(float(x) for x in a[0]), gc.GroupElement(g.group, G[0])


def flow_X_batch(spec_or_omega, pd: PhaseData, phi, G, t):
    """Flow of X = sum omega_j S_j, integrated directly from its own vector field."""
    fld = _x_field(spec_or_omega, pd)
    return flow_batch(fld, phi, G, t, pd.step)


def _x_field(spec_or_omega, pd):
    if isinstance(spec_or_omega, SystemSpec):
        return spec_or_omega.field
    w = as_floats(spec_or_omega)
    a = None
    for s in pd.lifts:
        term = s.b.scale(w[s.direction])
        a = term if a is None else a + term
    return VectorField(tuple(w), a)


@dataclass(frozen=True, eq=False)
class Reconstruction:
    """Everything the pipeline computes for one system."""

    spec: SystemSpec
    phase_data: PhaseData
    t1: Theorem1Data
    t2: Theorem2Data
    mode: str
    height_bound: int
    tol: float
    notes: tuple = field(default_factory=tuple)


def reconstruct(spec: SystemSpec, mode: str = "exact", step: float = DEFAULT_STEP,
                height_bound: int = DEFAULT_HEIGHT_BOUND, tol: float = DEFAULT_TOL) -> Reconstruction:
    """Run the full pipeline; exact mode falls back to numeric where exactness is unavailable."""
    if mode not in ("exact", "numeric"):
        raise ValueError(f"unknown mode {mode!r}")
    pd = compute_phase_data(spec, step)
    notes = []
    if mode == "exact" and pd.exact_nu2 is None:
        notes.append(f"exact external frequencies unavailable ({pd.exact_note}); used numeric search")
    t1 = theorem1(spec.omega, pd, mode, height_bound, tol)
    t2 = theorem2(spec.omega, t1, pd, mode, height_bound, tol)
    return Reconstruction(spec, pd, t1, t2, mode, height_bound, tol, tuple(notes))
