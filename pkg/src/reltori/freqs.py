"""
Frequencies: exact scalars over a declared Q-independent basis, and
resonance lattices.

An ``ExactScalar`` is a rational combination q0*1 + q1*b1 + ... + qs*bs of
the reals in a ``QBasis``. Q-independence of the basis is the caller's
promise; it is not (and in general cannot be) checked. Under that promise,
an integer vector p annihilates a vector of exact scalars iff it
annihilates every coefficient row, so exact resonance lattices reduce to
integer kernels.

Numerically obtained frequencies go through ``bounded_relations``, an
exhaustive search over a height box. Results from that path are labelled
heuristic.
"""

from __future__ import annotations

import ast
import math
import operator
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational

import numpy as np

from . import exact_linalg as xl

DEFAULT_HEIGHT_BOUND = 50
DEFAULT_TOL = 1e-9


@dataclass(frozen=True)
class QBasis:
    """Reals (1, b1, ..., bs) assumed independent over Q. ``labels[0]`` is ``"1"``."""

    labels: tuple = ("1",)
    values: tuple = (1.0,)

    def __post_init__(self):
        if len(self.labels) != len(self.values):
            raise ValueError("labels and values differ in length")
        if not self.labels or self.values[0] != 1.0:
            raise ValueError("the first basis element must be 1")
        if len(set(self.labels)) != len(self.labels):
            raise ValueError("duplicate basis labels")

    @classmethod
    def from_mapping(cls, mapping) -> QBasis:
        labels, values = ["1"], [1.0]
        for label, value in mapping.items():
            labels.append(str(label))
            values.append(eval_real(value) if isinstance(value, str) else float(value))
        return cls(tuple(labels), tuple(values))

    def __len__(self):
        return len(self.labels)

    def scalar(self, *coeffs) -> ExactScalar:
        return ExactScalar(tuple(Fraction(c) for c in coeffs), self)

    def rational(self, q) -> ExactScalar:
        return ExactScalar((Fraction(q),), self)

    def element(self, label: str) -> ExactScalar:
        i = self.labels.index(label)
        return ExactScalar(tuple(Fraction(int(j == i)) for j in range(i + 1)), self)


RATIONALS = QBasis()


@dataclass(frozen=True)
class ExactScalar:
    coeffs: tuple
    basis: QBasis = field(default=RATIONALS, compare=True)

    def __post_init__(self):
        c = [Fraction(x) for x in self.coeffs]
        if len(c) > len(self.basis):
            if any(c[len(self.basis):]):
                raise ValueError("more coefficients than basis elements")
            c = c[: len(self.basis)]
        c += [Fraction(0)] * (len(self.basis) - len(c))
        object.__setattr__(self, "coeffs", tuple(c))

    def __float__(self):
        return math.fsum(float(q) * b for q, b in zip(self.coeffs, self.basis.values))

    @property
    def is_rational(self) -> bool:
        return not any(self.coeffs[1:])

    def is_zero(self) -> bool:
        return not any(self.coeffs)

    def _coerce(self, other):
        if isinstance(other, ExactScalar):
            if other.basis != self.basis:
                raise ValueError("exact scalars over different bases")
            return other
        if isinstance(other, (int, Rational)):
            return ExactScalar((Fraction(other),), self.basis)
        return NotImplemented

    def __add__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return float(self) + other
        return ExactScalar(tuple(a + b for a, b in zip(self.coeffs, o.coeffs)), self.basis)

    __radd__ = __add__

    def __neg__(self):
        return ExactScalar(tuple(-a for a in self.coeffs), self.basis)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, ExactScalar):
            other = self._coerce(other)
            if other.is_rational:
                other = other.coeffs[0]
            elif self.is_rational:
                return other * self.coeffs[0]
            else:
                raise ArithmeticError("product of two irrational exact scalars is not in the basis span")
        if isinstance(other, (int, Rational)):
            q = Fraction(other)
            return ExactScalar(tuple(q * a for a in self.coeffs), self.basis)
        return float(self) * other

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, ExactScalar):
            if not other.is_rational:
                raise ArithmeticError("division by an irrational exact scalar")
            other = other.coeffs[0]
        if isinstance(other, (int, Rational)):
            return self * (1 / Fraction(other))
        return float(self) / other

    def __str__(self):
        terms = [f"{q}*{lab}" if lab != "1" else f"{q}" for q, lab in zip(self.coeffs, self.basis.labels) if q]
        return " + ".join(terms) or "0"

    def __repr__(self):
        return f"ExactScalar({self})"


def is_exact(x) -> bool:
    return isinstance(x, (ExactScalar, int, Rational)) and not isinstance(x, bool)


def common_basis(values) -> QBasis:
    bases = {v.basis for v in values if isinstance(v, ExactScalar)}
    if len(bases) > 1:
        raise ValueError("frequency vector mixes exact bases")
    return bases.pop() if bases else RATIONALS


def to_exact(x, basis: QBasis) -> ExactScalar:
    if isinstance(x, ExactScalar):
        return x
    return ExactScalar((Fraction(x),), basis)


def as_floats(values) -> np.ndarray:
    return np.array([float(v) for v in values], dtype=float)


def coefficient_matrix(values):
    """Rows are basis components, columns are entries of ``values``."""
    basis = common_basis(values)
    cols = [to_exact(v, basis).coeffs for v in values]
    return [[cols[j][i] for j in range(len(cols))] for i in range(len(basis))]


@dataclass(frozen=True)
class RelationLattice:
    """Z-basis of integer relations; iterates like the list of basis vectors."""

    basis: tuple
    dim: int
    heuristic: bool = False

    def __iter__(self):
        return iter(self.basis)

    def __len__(self):
        return len(self.basis)

    def __getitem__(self, i):
        return self.basis[i]

    @property
    def rank(self) -> int:
        return len(self.basis)


def bounded_relations(values, height_bound: int = DEFAULT_HEIGHT_BOUND, tol: float = DEFAULT_TOL):
    """All nonzero p with max|p_i| <= height_bound and |p . values| < tol.

    Exhaustive: every coordinate but the one of largest modulus is
    enumerated, and that one is solved for by rounding (its neighbours are
    checked too, which covers tolerances that are large relative to it).
    """
    v = np.asarray(values, dtype=float)
    n = v.size
    H = int(height_bound)
    if n == 0:
        return []
    s = int(np.argmax(np.abs(v)))
    others = [i for i in range(n) if i != s]
    rng = np.arange(-H, H + 1)
    found = []
    vs = v[s]
    if abs(vs) < tol:
        # every vector in the box is a relation; the unit vectors generate them
        return [tuple(int(i == j) for j in range(n)) for i in range(n)]
    lead = [rng] if others else [np.zeros(1, dtype=int)]
    rest_axes = [rng] * (len(others) - 1) if others else []
    if rest_axes:
        grids = np.meshgrid(*rest_axes, indexing="ij")
        tail = np.stack(grids, axis=-1).reshape(-1, len(rest_axes)).astype(np.int64)
    else:
        tail = np.zeros((1, 0), dtype=np.int64)
    v_others = v[others]
    for first in lead[0]:
        if others:
            P = np.column_stack([np.full(len(tail), first, dtype=np.int64), tail])
            rest = P @ v_others
        else:
            P = np.zeros((1, 0), dtype=np.int64)
            rest = np.zeros(1)
        base = np.rint(-rest / vs).astype(np.int64)
        for shift in (-1, 0, 1):
            ps = base + shift
            ok = (np.abs(ps) <= H) & (np.abs(rest + ps * vs) < tol)
            if not np.any(ok):
                continue
            full = np.zeros((int(ok.sum()), n), dtype=np.int64)
            full[:, others] = P[ok]
            full[:, s] = ps[ok]
            for row in full:
                if row.any():
                    found.append(tuple(int(x) for x in row))
    return sorted(set(found))


def resonance_lattice(values, height_bound: int | None = None, tol: float | None = None,
                      mode: str | None = None) -> RelationLattice:
    """Integer relations of a frequency vector.

    In exact mode (all entries exact, the default when possible) the result
    is the exact Z-basis of the relation lattice. Otherwise, or when
    ``mode="numeric"``, the height-box search is run and the saturation of
    what it finds is returned with ``heuristic=True``.
    """
    values = list(values)
    n = len(values)
    exact = all(is_exact(v) for v in values)
    if mode is None:
        mode = "exact" if exact else "numeric"
    if mode == "exact":
        if not exact:
            raise ValueError("exact mode needs exact entries")
        basis = xl.rational_kernel_lattice(coefficient_matrix(values), n)
        return RelationLattice(tuple(basis), n, False)
    if mode != "numeric":
        raise ValueError(f"unknown mode {mode!r}")
    H = DEFAULT_HEIGHT_BOUND if height_bound is None else height_bound
    tol = DEFAULT_TOL if tol is None else tol
    found = bounded_relations(as_floats(values), H, tol)
    return RelationLattice(tuple(xl.saturate(found, n)), n, True)


def is_nonresonant(values) -> bool:
    return resonance_lattice(values, mode="exact").rank == 0


# --- small real-expression evaluator for declaring basis values ------------

_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul,
           ast.Div: operator.truediv, ast.Pow: operator.pow}
_FUNCS = {"sqrt": math.sqrt, "cbrt": np.cbrt, "log": math.log, "exp": math.exp,
          "cos": math.cos, "sin": math.sin}
_NAMES = {"pi": math.pi, "e": math.e}


def eval_real(expr: str) -> float:
    """Evaluate ``"sqrt(2)"``, ``"pi/3"``, ``"2**(1/3)"`` and the like."""

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return node.value
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            x = ev(node.operand)
            return -x if isinstance(node.op, ast.USub) else x
        if isinstance(node, ast.Name) and node.id in _NAMES:
            return _NAMES[node.id]
        if (isinstance(node, ast.Call) and isinstance(node.func, ast.Name)
                and node.func.id in _FUNCS and len(node.args) == 1):
            return _FUNCS[node.func.id](ev(node.args[0]))
        raise ValueError(f"unsupported expression {expr!r}")

    return float(ev(ast.parse(expr, mode="eval")))
