"""
Compact groups supported by the pipeline: tori T^d and SO(3).

Conventions
-----------

T^d
    Elements are stored as d reals in [0, 1). The Lie algebra is R^d and
    ``exp`` is reduction mod 1, so the standard basis is already integral.

SO(3)
    Elements are unit quaternions (w, x, y, z) with the double cover
    quotiented out by a sign rule: w > 0, or w == 0 and the first nonzero
    component positive. Algebra coordinates are over (e_x, e_y, e_z) with
    exp(theta * e_u) the rotation by theta (radians) about the unit axis u.
    The integral lattice of the circle about u is generated by 2*pi*u.

The group set is a closed enumeration (``Group.kind``). Adding another
compact group (SU(2), SO(n)) means adding a kind and filling in the batch
kernels ``_canon``, ``exp_batch``, ``mul_batch``, ``inv_batch`` and
``bracket_batch`` plus a branch in ``commuting_torus``/``principal_log``.

The ``*_batch`` functions work on arrays of shape (N, payload_dim) and are
what the integrator uses; the element-level functions wrap them.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import GroupMismatch, NonCommutingPhases, NotInTorus

TOL_COMM = 1e-9
TOL_MEM = 1e-9
AXIS_TOL = 1e-8
TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class Group:
    kind: str
    dim: int

    def __post_init__(self):
        if self.kind not in ("torus", "so3"):
            raise ValueError(f"unsupported group kind {self.kind!r}")
        if self.kind == "so3" and self.dim != 3:
            raise ValueError("so3 has algebra dimension 3")
        if self.dim < 0:
            raise ValueError("negative dimension")

    @property
    def algebra_dim(self) -> int:
        return self.dim

    @property
    def payload_dim(self) -> int:
        return 4 if self.kind == "so3" else self.dim

    @property
    def rank(self) -> int:
        return 1 if self.kind == "so3" else self.dim

    @property
    def turn(self) -> float:
        """Length of the integral generator of a one-parameter circle."""
        return TWO_PI if self.kind == "so3" else 1.0

    @property
    def name(self) -> str:
        if self.kind == "so3":
            return "SO(3)"
        if self.dim == 1:
            return "S^1"
        return f"T^{self.dim}"

    @property
    def group_id(self) -> str:
        return "so3" if self.kind == "so3" else f"torus({self.dim})"

    def identity(self) -> GroupElement:
        return GroupElement(self, _identity_payload(self))

    def zero(self) -> AlgebraVector:
        return AlgebraVector(self, (0.0,) * self.algebra_dim)


def torus(d: int) -> Group:
    return Group("torus", d)


SO3 = Group("so3", 3)


def parse_group(group_id: str) -> Group:
    """Parse ``"so3"``, ``"torus(d)"`` or ``"torus"`` (d = 1)."""
    s = group_id.strip().lower().replace(" ", "")
    if s in ("so3", "so(3)"):
        return SO3
    if s == "torus":
        return torus(1)
    if s.startswith("torus(") and s.endswith(")"):
        return torus(int(s[6:-1]))
    raise ValueError(f"unknown group {group_id!r}")


# --- batch kernels ---------------------------------------------------------

def _identity_payload(group):
    if group.kind == "so3":
        return (1.0, 0.0, 0.0, 0.0)
    return (0.0,) * group.dim


def _canon(group, P):
    P = np.array(P, dtype=float, copy=True)
    if group.kind == "torus":
        P = np.mod(P, 1.0)
        P[P >= 1.0] = 0.0
        return P
    shape = P.shape
    P = P.reshape(-1, 4)
    P /= np.linalg.norm(P, axis=-1, keepdims=True)
    # sign of the first component that is nonzero decides the representative
    lead = np.argmax(P != 0, axis=1)
    flip = P[np.arange(len(P)), lead] < 0
    P[flip] *= -1.0
    P[P == 0] = 0.0  # no -0.0
    P = P.reshape(shape)
    return P


def exp_batch(group, V):
    V = np.asarray(V, dtype=float)
    if group.kind == "torus":
        return np.mod(V, 1.0)
    theta = np.linalg.norm(V, axis=-1, keepdims=True)
    w = np.cos(0.5 * theta)
    vec = 0.5 * np.sinc(theta / TWO_PI) * V
    return np.concatenate([w, vec], axis=-1)


def mul_batch(group, A, B):
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if group.kind == "torus":
        return np.mod(A + B, 1.0)
    aw, ax, ay, az = A[..., 0], A[..., 1], A[..., 2], A[..., 3]
    bw, bx, by, bz = B[..., 0], B[..., 1], B[..., 2], B[..., 3]
    return np.stack([
        aw * bw - ax * bx - ay * by - az * bz,
        aw * bx + ax * bw + ay * bz - az * by,
        aw * by - ax * bz + ay * bw + az * bx,
        aw * bz + ax * by - ay * bx + az * bw,
    ], axis=-1)


def inv_batch(group, A):
    A = np.asarray(A, dtype=float)
    if group.kind == "torus":
        return np.mod(-A, 1.0)
    return A * np.array([1.0, -1.0, -1.0, -1.0])


def bracket_batch(group, X, Y):
    if group.kind == "torus":
        return np.zeros(np.broadcast_shapes(np.shape(X), np.shape(Y)))
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    x1, x2, x3 = X[..., 0], X[..., 1], X[..., 2]
    y1, y2, y3 = Y[..., 0], Y[..., 1], Y[..., 2]
    # explicit components: np.cross is an order of magnitude slower on small batches
    return np.stack([x2 * y3 - x3 * y2, x3 * y1 - x1 * y3, x1 * y2 - x2 * y1], axis=-1)


def distance_batch(group, A, B):
    """Payload distance, insensitive to the mod-1 and quaternion-sign ambiguities."""
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if group.kind == "torus":
        d = np.mod(A - B + 0.5, 1.0) - 0.5
        return np.linalg.norm(d, axis=-1)
    return np.minimum(np.linalg.norm(A - B, axis=-1), np.linalg.norm(A + B, axis=-1))


def rotation_matrix(q) -> np.ndarray:
    w, x, y, z = q
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


# --- element-level API -----------------------------------------------------

@dataclass(frozen=True)
class GroupElement:
    group: Group
    payload: tuple = field(compare=True)

    def __post_init__(self):
        p = np.asarray(self.payload, dtype=float)
        if p.shape != (self.group.payload_dim,):
            raise ValueError(f"payload shape {p.shape} does not fit {self.group.group_id}")
        object.__setattr__(self, "payload", tuple(float(x) for x in _canon(self.group, p)))

    @property
    def array(self) -> np.ndarray:
        return np.array(self.payload)

    def inverse(self) -> GroupElement:
        return GroupElement(self.group, inv_batch(self.group, self.array))

    def __matmul__(self, other):
        return mul(self, other)


@dataclass(frozen=True)
class AlgebraVector:
    group: Group
    coeffs: tuple

    def __post_init__(self):
        c = tuple(float(x) for x in np.asarray(self.coeffs, dtype=float).ravel())
        if len(c) != self.group.algebra_dim:
            raise ValueError("algebra vector has wrong dimension")
        object.__setattr__(self, "coeffs", c)

    @property
    def array(self) -> np.ndarray:
        return np.array(self.coeffs)

    def __add__(self, other):
        _same_group(self, other)
        return AlgebraVector(self.group, self.array + other.array)

    def __sub__(self, other):
        _same_group(self, other)
        return AlgebraVector(self.group, self.array - other.array)

    def __neg__(self):
        return AlgebraVector(self.group, -self.array)

    def __mul__(self, s):
        return AlgebraVector(self.group, float(s) * self.array)

    __rmul__ = __mul__


def _same_group(a, b):
    if a.group != b.group:
        raise GroupMismatch(f"{a.group.group_id} vs {b.group.group_id}")


def mul(a: GroupElement, b: GroupElement) -> GroupElement:
    _same_group(a, b)
    return GroupElement(a.group, mul_batch(a.group, a.array, b.array))


def exp_algebra(v: AlgebraVector) -> GroupElement:
    return GroupElement(v.group, exp_batch(v.group, v.array))


def distance(a: GroupElement, b: GroupElement) -> float:
    _same_group(a, b)
    return float(distance_batch(a.group, a.array, b.array))


def commutator_defect(a: GroupElement, b: GroupElement) -> float:
    return distance(mul(a, b), mul(b, a))


def wrap_half(x):
    """Representative of x mod 1 in [-1/2, 1/2)."""
    x = np.asarray(x, dtype=float)
    return x - np.floor(x + 0.5)


def _first_nonzero_positive(u):
    u = np.asarray(u, dtype=float)
    nz = np.flatnonzero(np.abs(u) > 0)
    if nz.size and u[nz[0]] < 0:
        return -u
    return u


@dataclass(frozen=True)
class TorusDescriptor:
    """A torus subgroup given by an integral basis of its Lie algebra.

    ``kind`` is one of ``"full"`` (all of T^d), ``"axis"`` (circle in SO(3)),
    ``"trivial"`` or ``"sub"`` (a subtorus given by its basis only).
    """

    group: Group
    basis: tuple
    kind: str
    axis: tuple | None = None

    @property
    def dim(self) -> int:
        return len(self.basis)

    def basis_matrix(self) -> np.ndarray:
        """Columns are the integral basis vectors in algebra coordinates."""
        if not self.basis:
            return np.zeros((self.group.algebra_dim, 0))
        return np.column_stack([b.array for b in self.basis])

    def from_coords(self, c) -> AlgebraVector:
        c = np.asarray(c, dtype=float).reshape(self.dim)
        return AlgebraVector(self.group, self.basis_matrix() @ c)

    def coords(self, v: AlgebraVector) -> np.ndarray:
        if self.dim == 0:
            return np.zeros(0)
        c, *_ = np.linalg.lstsq(self.basis_matrix(), v.array, rcond=None)
        return c

    def subtorus(self, int_columns) -> TorusDescriptor:
        """Subtorus whose integral basis has the given integer coordinates here."""
        M = np.asarray(int_columns, dtype=float).reshape(self.dim, -1)
        B = self.basis_matrix() @ M
        basis = tuple(AlgebraVector(self.group, B[:, j]) for j in range(B.shape[1]))
        if not basis:
            return TorusDescriptor(self.group, (), "trivial")
        if self.kind == "axis":
            return TorusDescriptor(self.group, basis, "axis", self.axis)
        if self.kind == "full" and M.shape[1] == self.dim and abs(round(np.linalg.det(M))) == 1:
            return TorusDescriptor(self.group, basis, "full")
        return TorusDescriptor(self.group, basis, "sub", self.axis)


def full_torus(group: Group) -> TorusDescriptor:
    if group.kind != "torus":
        raise ValueError("only T^d is its own maximal torus here")
    basis = tuple(AlgebraVector(group, np.eye(group.dim)[i]) for i in range(group.dim))
    kind = "full" if group.dim else "trivial"
    return TorusDescriptor(group, basis, kind)


def axis_torus(axis) -> TorusDescriptor:
    u = np.asarray(axis, dtype=float)
    u = _first_nonzero_positive(u / np.linalg.norm(u))
    return TorusDescriptor(SO3, (AlgebraVector(SO3, TWO_PI * u),), "axis", tuple(u))


def trivial_torus(group: Group) -> TorusDescriptor:
    return TorusDescriptor(group, (), "trivial")


def commuting_torus(phases, tol_comm: float = TOL_COMM) -> TorusDescriptor:
    """Torus containing a list of pairwise commuting group elements.

    For T^d this is the whole group. For SO(3) it is the circle about the
    common rotation axis (trivial if every phase is the identity).

    Raises
    ------
    NonCommutingPhases
        If two phases fail to commute within ``tol_comm``, or if SO(3)
        phases commute without sharing an axis (half-turns about orthogonal
        axes), in which case no torus contains them.
    """
    phases = list(phases)
    if not phases:
        raise ValueError("need at least one phase")
    group = phases[0].group
    for p in phases:
        _same_group(p, phases[0])
    for (i, a), (j, b) in itertools.combinations(enumerate(phases), 2):
        d = commutator_defect(a, b)
        if d > tol_comm:
            raise NonCommutingPhases(f"phases {i + 1} and {j + 1} do not commute (defect {d:.3e})")
    if group.kind == "torus":
        return full_torus(group)
    vecs = [np.array(p.payload[1:]) for p in phases]
    norms = [float(np.linalg.norm(v)) for v in vecs]
    if max(norms) <= TOL_MEM:
        return trivial_torus(group)
    u = vecs[int(np.argmax(norms))]
    u = u / np.linalg.norm(u)
    for i, (v, n) in enumerate(zip(vecs, norms)):
        perp = float(np.linalg.norm(v - np.dot(v, u) * u))
        if perp > TOL_MEM and perp > AXIS_TOL * n:
            raise NonCommutingPhases(f"phase {i + 1} is not a rotation about the common axis")
    return axis_torus(u)


def principal_coords(gamma: GroupElement, T: TorusDescriptor, tol_mem: float = TOL_MEM) -> np.ndarray:
    """Integral-basis coordinates in [-1/2, 1/2) of the principal logarithm of ``gamma`` in ``T``.

    Reading them back from the algebra vector with ``T.coords`` can land an
    ulp outside the interval, so callers that need the branch use these.
    """
    if gamma.group != T.group:
        raise GroupMismatch("element and torus live in different groups")
    if T.kind == "trivial":
        c = np.zeros(0)
    elif T.kind == "full":
        c = np.linalg.solve(T.basis_matrix(), wrap_half(gamma.array))
        c = wrap_half(c)
    elif T.kind == "axis":
        u = np.array(T.axis)
        w, vec = gamma.payload[0], np.array(gamma.payload[1:])
        theta = 2.0 * math.atan2(float(np.dot(vec, u)), w)
        c = wrap_half(np.array([theta / TWO_PI]))
    else:
        raise NotImplementedError("principal_log needs a full, axis or trivial torus")
    eta = T.from_coords(c) if T.dim else gamma.group.zero()
    miss = distance(exp_algebra(eta), gamma)
    if miss > tol_mem:
        raise NotInTorus(f"element is {miss:.3e} away from the torus")
    return c


def principal_log(gamma: GroupElement, T: TorusDescriptor, tol_mem: float = TOL_MEM) -> AlgebraVector:
    """Logarithm of ``gamma`` inside ``T`` with integral coordinates in [-1/2, 1/2)."""
    c = principal_coords(gamma, T, tol_mem)
    return T.from_coords(c) if T.dim else gamma.group.zero()
