"""
Vector fields on T^k x G and their flows.

Every field handled here has the form

    Y(phi, g) = sum_j u_j d/dphi_j + g . c(phi)

with a constant horizontal part ``u`` and a vertical part given by a finite
Fourier series ``c : T^k -> Lie(G)``, left-trivialized (the field g -> g.xi
is invariant under left multiplication, which is the G-action used
throughout). Such fields are automatically G-invariant and their brackets
are again of this form, which makes the commutation hypotheses a finite
computation on Fourier coefficients.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from . import groups as gc
from .errors import PeriodMismatch, ZeroFrequency
from .freqs import ExactScalar, QBasis, RATIONALS

DEFAULT_STEP = 1e-3
BRACKET_TOL = 1e-12
TWO_PI = 2.0 * math.pi


def _canonical_mode(n):
    """Representative of {n, -n}: first nonzero entry positive. Returns (mode, sign)."""
    for x in n:
        if x > 0:
            return tuple(n), 1
        if x < 0:
            return tuple(-y for y in n), -1
    return tuple(n), 1


@dataclass(frozen=True, eq=False)
class CoeffFunction:
    """Finite Fourier series T^k -> Lie(G).

    Evaluates to sum_n cos(2 pi n.phi) C_n + sin(2 pi n.phi) S_n. Modes are
    stored once per {n, -n} pair. ``exact_mean`` optionally carries the
    constant term exactly, in turn units (algebra coordinates divided by
    ``group.turn``); arithmetic does not propagate it.
    """

    group: gc.Group
    k: int
    modes: np.ndarray
    cos: np.ndarray
    sin: np.ndarray
    exact_mean: tuple | None = None

    @classmethod
    def from_terms(cls, group, k, terms, exact_mean=None) -> CoeffFunction:
        """Build from an iterable of ``(n, cos_vector, sin_vector)``."""
        dim = group.algebra_dim
        acc: dict = {}
        for n, c, s in terms:
            n = tuple(int(x) for x in n)
            if len(n) != k:
                raise ValueError(f"mode {n} does not have {k} entries")
            c = np.zeros(dim) if c is None else np.asarray(c, dtype=float).reshape(dim)
            s = np.zeros(dim) if s is None else np.asarray(s, dtype=float).reshape(dim)
            key, sign = _canonical_mode(n)
            if not any(key):
                s = np.zeros(dim)
            cc, ss = acc.get(key, (np.zeros(dim), np.zeros(dim)))
            acc[key] = (cc + c, ss + sign * s)
        keys = sorted(k_ for k_, (c, s) in acc.items() if np.any(c) or np.any(s))
        modes = np.array(keys, dtype=np.int64).reshape(len(keys), k)
        C = np.array([acc[key][0] for key in keys]).reshape(len(keys), dim)
        S = np.array([acc[key][1] for key in keys]).reshape(len(keys), dim)
        if exact_mean is not None:
            exact_mean = tuple(exact_mean)
            if len(exact_mean) != dim:
                raise ValueError("exact mean has wrong dimension")
        return cls(group, k, modes, C, S, exact_mean)

    @classmethod
    def zero(cls, group, k) -> CoeffFunction:
        return cls.from_terms(group, k, [], exact_mean=(0,) * group.algebra_dim)

    @classmethod
    def constant(cls, group, k, vec, exact_mean=None) -> CoeffFunction:
        return cls.from_terms(group, k, [((0,) * k, vec, None)], exact_mean=exact_mean)

    def terms(self):
        return [(tuple(int(x) for x in n), c.copy(), s.copy())
                for n, c, s in zip(self.modes, self.cos, self.sin)]

    def __call__(self, phi) -> np.ndarray:
        phi = np.asarray(phi, dtype=float)
        single = phi.ndim == 1
        P = phi.reshape(-1, self.k)
        if len(self.modes) == 0:
            out = np.zeros((len(P), self.group.algebra_dim))
        else:
            ang = TWO_PI * (P @ self.modes.T)
            out = np.cos(ang) @ self.cos + np.sin(ang) @ self.sin
        return out[0] if single else out

    def mean(self) -> np.ndarray:
        for n, c in zip(self.modes, self.cos):
            if not n.any():
                return c.copy()
        return np.zeros(self.group.algebra_dim)

    def max_norm(self) -> float:
        if len(self.modes) == 0:
            return 0.0
        return float(max(np.linalg.norm(self.cos, axis=1).max(), np.linalg.norm(self.sin, axis=1).max()))

    def _combine(self, other, a, b):
        if other.group != self.group or other.k != self.k:
            raise ValueError("coefficient functions on different spaces")
        terms = [(n, a * c, a * s) for n, c, s in self.terms()]
        terms += [(n, b * c, b * s) for n, c, s in other.terms()]
        return CoeffFunction.from_terms(self.group, self.k, terms)

    def __add__(self, other):
        return self._combine(other, 1.0, 1.0)

    def __sub__(self, other):
        return self._combine(other, 1.0, -1.0)

    def scale(self, s) -> CoeffFunction:
        return CoeffFunction.from_terms(self.group, self.k, [(n, s * c, s * ss) for n, c, ss in self.terms()])

    def derivative(self, j: int) -> CoeffFunction:
        """Partial derivative in phi_j (0-based)."""
        terms = []
        for n, c, s in self.terms():
            f = TWO_PI * n[j]
            terms.append((n, f * s, -f * c))
        return CoeffFunction.from_terms(self.group, self.k, terms)

    def directional(self, u) -> CoeffFunction:
        """sum_j u_j d/dphi_j of the series."""
        u = [float(x) for x in u]
        terms = []
        for n, c, s in self.terms():
            f = TWO_PI * sum(uj * nj for uj, nj in zip(u, n))
            terms.append((n, f * s, -f * c))
        return CoeffFunction.from_terms(self.group, self.k, terms)

    def bracket(self, other) -> CoeffFunction:
        """Pointwise Lie bracket [self(phi), other(phi)], expanded exactly in modes."""
        if self.group.kind == "torus":
            return CoeffFunction.zero(self.group, self.k)
        br = lambda x, y: gc.bracket_batch(self.group, x, y)
        terms = []
        for (n, c1, s1), (m, c2, s2) in itertools.product(self.terms(), other.terms()):
            n_, m_ = np.array(n), np.array(m)
            plus, minus = tuple(n_ + m_), tuple(n_ - m_)
            cc, ss, cs, sc = br(c1, c2), br(s1, s2), br(c1, s2), br(s1, c2)
            # cos A cos B, sin A sin B, cos A sin B, sin A cos B with A = 2 pi n.phi, B = 2 pi m.phi
            terms.append((plus, 0.5 * (cc - ss), 0.5 * (cs + sc)))
            terms.append((minus, 0.5 * (cc + ss), 0.5 * (sc - cs)))
        return CoeffFunction.from_terms(self.group, self.k, terms)

    def lies_in(self, T: gc.TorusDescriptor, tol: float = 1e-12) -> bool:
        """True if every coefficient vector lies in the Lie algebra of ``T``."""
        B = T.basis_matrix()
        vecs = np.vstack([self.cos, self.sin]) if len(self.modes) else np.zeros((0, self.group.algebra_dim))
        if B.shape[1] == 0:
            return bool(np.all(np.abs(vecs) <= tol))
        Q, _ = np.linalg.qr(B)
        resid = vecs - (vecs @ Q) @ Q.T
        return bool(np.all(np.linalg.norm(resid, axis=1) <= tol * max(1.0, self.max_norm())))


@dataclass(frozen=True, eq=False)
class VectorField:
    """u . d/dphi + g . c(phi)."""

    u: tuple
    c: CoeffFunction

    def __post_init__(self):
        object.__setattr__(self, "u", tuple(float(x) for x in self.u))
        if len(self.u) != self.c.k:
            raise ValueError("horizontal part has wrong length")


@dataclass(frozen=True, eq=False)
class Lift:
    """S_i = d/dphi_i + g . b(phi); ``direction`` is 0-based."""

    direction: int
    b: CoeffFunction

    @property
    def field(self) -> VectorField:
        u = [0.0] * self.b.k
        u[self.direction] = 1.0
        return VectorField(tuple(u), self.b)


@dataclass(frozen=True)
class StatePoint:
    phi: tuple
    g: gc.GroupElement

    def __post_init__(self):
        p = np.mod(np.asarray(self.phi, dtype=float), 1.0)
        p[p >= 1.0] = 0.0
        object.__setattr__(self, "phi", tuple(float(x) for x in p))


@dataclass(frozen=True, eq=False)
class SystemSpec:
    """X = sum_j omega_j d/dphi_j + g . a(phi) on T^k x G, with lifts S_i.

    ``omega`` entries are ``ExactScalar`` (preferred) or floats. ``lifts``
    holds k-1 lifts as declared, or all k after ``complete_lifts``.
    """

    group: gc.Group
    k: int
    omega: tuple
    a: CoeffFunction
    lifts: tuple
    base_point: StatePoint | None = None
    basis: QBasis = field(default=RATIONALS)

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be at least 1")
        if len(self.omega) != self.k:
            raise ValueError("omega must have k entries")
        if self.base_point is None:
            object.__setattr__(self, "base_point", StatePoint((0.0,) * self.k, self.group.identity()))

    @property
    def omega_float(self) -> np.ndarray:
        return np.array([float(w) for w in self.omega])

    @property
    def field(self) -> VectorField:
        return VectorField(tuple(self.omega_float), self.a)

    def with_lifts(self, lifts) -> SystemSpec:
        return SystemSpec(self.group, self.k, self.omega, self.a, tuple(lifts), self.base_point, self.basis)

    def with_base_point(self, m: StatePoint) -> SystemSpec:
        return SystemSpec(self.group, self.k, self.omega, self.a, self.lifts, m, self.basis)


# --- hypotheses --------------------------------------------------------------

def bracket_defect(u, c: CoeffFunction, v, d: CoeffFunction) -> CoeffFunction:
    """Vertical part of [Y, Z] for Y = u.d/dphi + g.c and Z = v.d/dphi + g.d."""
    return d.directional(u) - c.directional(v) + c.bracket(d)


@dataclass(frozen=True)
class Violation:
    kind: str
    members: tuple
    defect: float
    message: str

    def __str__(self):
        return self.message


def _defect_norm(u, c, v, d):
    scale = max(1.0, c.max_norm(), d.max_norm()) * max(1.0, *(abs(x) for x in (*u, *v)))
    return bracket_defect(u, c, v, d).max_norm(), BRACKET_TOL * scale


def check_hypotheses(spec: SystemSpec):
    """Return the list of violated hypotheses (empty when all hold).

    Checked: lift directions are distinct and in range, there are k-1 or k
    lifts, every pair of lifts commutes, every lift commutes with X, and
    when k lifts are given, X = sum_j omega_j S_j.
    """
    out = []
    lifts = list(spec.lifts)
    dirs = [s.direction for s in lifts]
    for s in lifts:
        if not 0 <= s.direction < spec.k:
            out.append(Violation("structure", (s.direction + 1,), math.nan,
                                 f"lift direction {s.direction + 1} outside 1..{spec.k}"))
        if s.b.group != spec.group or s.b.k != spec.k:
            out.append(Violation("structure", (s.direction + 1,), math.nan,
                                 f"lift S_{s.direction + 1} is not a field on T^{spec.k} x {spec.group.name}"))
    if len(set(dirs)) != len(dirs):
        out.append(Violation("structure", tuple(d + 1 for d in dirs), math.nan, "lift directions repeat"))
    if len(lifts) not in (spec.k - 1, spec.k):
        out.append(Violation("structure", tuple(d + 1 for d in dirs), math.nan,
                             f"expected {spec.k - 1} or {spec.k} lifts, got {len(lifts)}"))
    if out:
        return out
    for s, t in itertools.combinations(lifts, 2):
        fs, ft = s.field, t.field
        norm, tol = _defect_norm(fs.u, fs.c, ft.u, ft.c)
        if norm >= tol:
            i, j = s.direction + 1, t.direction + 1
            out.append(Violation("lift-lift", (i, j), norm,
                                 f"lifts S_{i} and S_{j} do not commute (bracket defect {norm:.3e})"))
    X = spec.field
    for s in lifts:
        fs = s.field
        norm, tol = _defect_norm(fs.u, fs.c, X.u, X.c)
        if norm >= tol:
            i = s.direction + 1
            out.append(Violation("lift-X", (i, "X"), norm,
                                 f"lift S_{i} does not commute with X (bracket defect {norm:.3e})"))
    if len(lifts) == spec.k:
        w = spec.omega_float
        total = CoeffFunction.zero(spec.group, spec.k)
        for s in lifts:
            total = total + s.b.scale(w[s.direction])
        gap = (spec.a - total).max_norm()
        if gap >= BRACKET_TOL * max(1.0, spec.a.max_norm()):
            out.append(Violation("decomposition", ("X",), gap,
                                 f"X differs from sum omega_j S_j (gap {gap:.3e})"))
    return out


def complete_lifts(spec: SystemSpec):
    """All k lifts, sorted by direction; the missing one is (X - sum w_j S_j) / w_k."""
    lifts = sorted(spec.lifts, key=lambda s: s.direction)
    if len(lifts) == spec.k:
        return tuple(lifts)
    missing = sorted(set(range(spec.k)) - {s.direction for s in lifts})
    if len(missing) != 1:
        raise ValueError(f"need k-1 = {spec.k - 1} lifts to complete, got {len(lifts)}")
    i = missing[0]
    wk = spec.omega[i]
    if (isinstance(wk, ExactScalar) and wk.is_zero()) or float(wk) == 0.0:
        raise ZeroFrequency(f"omega_{i + 1} vanishes; cannot solve for S_{i + 1}")
    w = spec.omega_float
    rem = spec.a
    for s in lifts:
        rem = rem - s.b.scale(w[s.direction])
    bk = rem.scale(1.0 / w[i])
    return tuple(sorted(lifts + [Lift(i, bk)], key=lambda s: s.direction))


# --- integration -------------------------------------------------------------

def _dexpinv(group, theta, A):
    """Inverse left-trivialized dexp at -theta, truncated after the order-4 term."""
    if group.kind == "torus":
        return A
    ta = gc.bracket_batch(group, theta, A)
    return A + 0.5 * ta + gc.bracket_batch(group, theta, ta) / 12.0


_CHUNK = 1 << 17


def _abelian_increment(c, phi0, u, h, nsteps):
    """Sum of the RK4 stage averages over all steps, for a commutative group.

    Steps do not feed back into one another here, so every step of every
    point is evaluated in one vectorized pass (in chunks to bound memory).
    """
    out = np.zeros((len(phi0), c.group.algebra_dim))
    owner = np.repeat(np.arange(len(phi0)), nsteps)
    index = np.arange(owner.size) - np.repeat(np.cumsum(nsteps) - nsteps, nsteps)
    for lo in range(0, owner.size, _CHUNK):
        o = owner[lo:lo + _CHUNK]
        hh = h[o][:, None]
        start = phi0[o] + (index[lo:lo + _CHUNK] * h[o])[:, None] * u
        theta = hh / 6.0 * (c(start) + 4.0 * c(start + 0.5 * hh * u) + c(start + hh * u))
        np.add.at(out, o, theta)
    return out


def flow_batch(fld: VectorField, phi0, G0, t, step: float = DEFAULT_STEP):
    """Flow a batch of points for per-point times ``t``.

    The angle part is advanced exactly. The group part solves
    g' = g . c(phi0 + s u) with a fixed-step 4th order Runge-Kutta-Munthe-Kaas
    scheme: stages live in the Lie algebra and the update is
    g <- g exp(Theta). Each point takes ceil(|t|/step) equal steps, so it
    lands exactly on its own final time.

    Returns ``(phi, G)`` arrays; angles reduced mod 1, group payloads
    canonicalized.
    """
    if step <= 0:
        raise ValueError("step must be positive")
    group = fld.c.group
    phi0 = np.atleast_2d(np.asarray(phi0, dtype=float))
    G = np.array(np.atleast_2d(np.asarray(G0, dtype=float)), copy=True)
    if G.shape[1] != group.payload_dim:
        G = G.reshape(len(phi0), group.payload_dim)
    t = np.broadcast_to(np.asarray(t, dtype=float), (len(phi0),)).copy()
    u = np.array(fld.u)
    nsteps = np.ceil(np.abs(t) / step - 1e-12).astype(np.int64)
    nsteps[(nsteps == 0) & (t != 0)] = 1
    h = np.where(nsteps > 0, t / np.maximum(nsteps, 1), 0.0)
    c = fld.c
    trivial = len(c.modes) == 0 or group.payload_dim == 0
    if not trivial and group.kind == "torus":
        G = np.mod(G + _abelian_increment(c, phi0, u, h, nsteps), 1.0)
    elif not trivial:
        for n in range(int(nsteps.max(initial=0))):
            idx = np.flatnonzero(n < nsteps)
            hh = h[idx][:, None]
            start = phi0[idx] + (n * h[idx])[:, None] * u
            A1 = c(start)
            A2 = c(start + 0.5 * hh * u)
            A4 = c(start + hh * u)
            k1 = A1
            k2 = _dexpinv(group, 0.5 * hh * k1, A2)
            k3 = _dexpinv(group, 0.5 * hh * k2, A2)
            k4 = _dexpinv(group, hh * k3, A4)
            theta = hh / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            G[idx] = gc.mul_batch(group, G[idx], gc.exp_batch(group, theta))
            if group.kind == "so3":
                G[idx] /= np.linalg.norm(G[idx], axis=1, keepdims=True)
    phi = np.mod(phi0 + t[:, None] * u, 1.0)
    phi[phi >= 1.0] = 0.0
    moved = nsteps > 0
    if group.payload_dim and moved.any():
        G[moved] = gc._canon(group, G[moved])
    return phi, G


def flow(fld: VectorField, m0: StatePoint, t: float, step: float = DEFAULT_STEP) -> StatePoint:
    phi, G = flow_batch(fld, [m0.phi], [m0.g.payload], [t], step)
    return StatePoint(tuple(phi[0]), gc.GroupElement(m0.g.group, G[0]))


def act(h: gc.GroupElement, m: StatePoint) -> StatePoint:
    """Left action h.(phi, g) = (phi, h g)."""
    return StatePoint(m.phi, gc.mul(h, m.g))


def phase(lift, m: StatePoint, step: float = DEFAULT_STEP) -> gc.GroupElement:
    """gamma with Phi^S_1(m) = gamma . m, for a lift with unit reduced period."""
    fld = lift.field if isinstance(lift, Lift) else lift
    u = np.array(fld.u)
    if not np.allclose(u, np.rint(u), atol=0.0, rtol=0.0):
        raise PeriodMismatch("lift horizontal part is not an integer vector; period 1 does not close")
    end = flow(fld, m, 1.0, step)
    gap = np.abs(np.mod(np.array(end.phi) - np.array(m.phi) + 0.5, 1.0) - 0.5)
    if gap.size and gap.max() > 1e-12:
        raise PeriodMismatch(f"angles fail to close after one period (gap {gap.max():.3e})")
    return gc.mul(end.g, m.g.inverse())
