"""
Exact integer and rational matrix algebra.

Matrices are plain lists of rows holding Python ints (arbitrary precision)
or ``fractions.Fraction``. Nothing here touches floating point.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import lcm

IntMatrix = list  # list[list[int]]


def shape(A):
    n = len(A)
    m = len(A[0]) if n else 0
    return n, m


def identity(n: int) -> IntMatrix:
    return [[int(i == j) for j in range(n)] for i in range(n)]


def matmul(A, B):
    n, p = shape(A)
    p2, m = shape(B)
    if n and p != p2:
        raise ValueError(f"shape mismatch {shape(A)} x {shape(B)}")
    if p == 0:
        return [[0] * m for _ in range(n)]
    return [[sum(A[i][t] * B[t][j] for t in range(p)) for j in range(m)] for i in range(n)]


def transpose(A):
    n, m = shape(A)
    return [[A[i][j] for i in range(n)] for j in range(m)]


def as_int_matrix(A, cols: int | None = None) -> IntMatrix:
    rows = [[int(x) for x in row] for row in A]
    for x, row in zip(A, rows):
        if any(int(v) != v for v in x):
            raise ValueError("matrix entries must be integers")
    if cols is not None and rows and any(len(r) != cols for r in rows):
        raise ValueError("ragged matrix")
    if rows and len({len(r) for r in rows}) != 1:
        raise ValueError("ragged matrix")
    return rows


def det(A) -> int:
    """Determinant of a square integer matrix (fraction-free Bareiss)."""
    n, m = shape(A)
    if n != m:
        raise ValueError("det of non-square matrix")
    if n == 0:
        return 1
    M = [list(r) for r in A]
    sign, prev = 1, 1
    for k in range(n - 1):
        if M[k][k] == 0:
            for i in range(k + 1, n):
                if M[i][k] != 0:
                    M[k], M[i] = M[i], M[k]
                    sign = -sign
                    break
            else:
                return 0
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                M[i][j] = (M[i][j] * M[k][k] - M[i][k] * M[k][j]) // prev
        prev = M[k][k]
    return sign * M[n - 1][n - 1]


def rank(A) -> int:
    return sum(1 for row in rref(A) if any(row))


def rref(A):
    """Reduced row echelon form over Q."""
    M = [[Fraction(x) for x in row] for row in A]
    n, m = shape(M)
    r = 0
    for c in range(m):
        piv = next((i for i in range(r, n) if M[i][c] != 0), None)
        if piv is None:
            continue
        M[r], M[piv] = M[piv], M[r]
        p = M[r][c]
        M[r] = [x / p for x in M[r]]
        for i in range(n):
            if i != r and M[i][c] != 0:
                f = M[i][c]
                M[i] = [a - f * b for a, b in zip(M[i], M[r])]
        r += 1
        if r == n:
            break
    return M


def inverse(A):
    """Exact inverse over Q; integer entries are returned as ints when possible."""
    n, m = shape(A)
    if n != m:
        raise ValueError("inverse of non-square matrix")
    aug = [list(row) + [int(i == j) for j in range(n)] for i, row in enumerate(A)]
    R = rref(aug)
    if any(R[i][i] != 1 for i in range(n)):
        raise ZeroDivisionError("singular matrix")
    inv = [row[n:] for row in R]
    return [[int(x) if x.denominator == 1 else x for x in row] for row in inv]


# --- Hermite normal form ---------------------------------------------------

def _row_sub(M, i, r, q):
    if q:
        Mr = M[r]
        M[i] = [a - q * b for a, b in zip(M[i], Mr)]


def hnf_with_transform(A):
    """Row-style Hermite normal form.

    Returns ``(H, U)`` with ``U`` unimodular and ``U A = H``; ``H`` is in
    row echelon form with positive pivots and the entries above each pivot
    reduced into ``[0, pivot)``. Zero rows sit at the bottom.
    """
    H = [list(map(int, row)) for row in A]
    n, m = shape(H)
    U = identity(n)
    r = 0
    for c in range(m):
        if r == n:
            break
        while True:
            nz = [i for i in range(r, n) if H[i][c] != 0]
            if not nz:
                break
            i0 = min(nz, key=lambda i: abs(H[i][c]))
            H[r], H[i0] = H[i0], H[r]
            U[r], U[i0] = U[i0], U[r]
            clean = True
            for i in range(r + 1, n):
                if H[i][c]:
                    q = H[i][c] // H[r][c]
                    _row_sub(H, i, r, q)
                    _row_sub(U, i, r, q)
                    if H[i][c]:
                        clean = False
            if clean:
                break
        if H[r][c] == 0:
            continue
        if H[r][c] < 0:
            H[r] = [-x for x in H[r]]
            U[r] = [-x for x in U[r]]
        for i in range(r):
            q = H[i][c] // H[r][c]
            _row_sub(H, i, r, q)
            _row_sub(U, i, r, q)
        r += 1
    return H, U


def hnf(A):
    return hnf_with_transform(A)[0]


def lattice_basis(vectors, dim: int | None = None):
    """Canonical (HNF) Z-basis of the lattice spanned by integer ``vectors``."""
    vectors = [list(map(int, v)) for v in vectors]
    if not vectors:
        return []
    H = hnf(vectors)
    return [tuple(row) for row in H if any(row)]


def hnf_kernel(A):
    """Z-basis of {x in Z^cols : A x = 0}, returned in canonical HNF form.

    The basis comes from the transform rows of the Hermite form of ``A^T``
    that hit zero rows; since the transform is unimodular these rows are a
    basis of the integer kernel, not merely a generating set.
    """
    A = as_int_matrix(A)
    n, m = shape(A)
    if m == 0 and n:
        return []
    if n == 0:
        return []
    H, U = hnf_with_transform(transpose(A))
    kernel = [U[i] for i in range(m) if not any(H[i])]
    return lattice_basis(kernel)


def kernel_lattice_cols(A, cols: int):
    """Like ``hnf_kernel`` but also handles a matrix with zero rows."""
    if not A:
        return [tuple(int(i == j) for j in range(cols)) for i in range(cols)]
    return hnf_kernel(A)


def clear_denominators(A):
    out = []
    for row in A:
        row = [Fraction(x) for x in row]
        den = lcm(*(x.denominator for x in row)) if row else 1
        out.append([int(x * den) for x in row])
    return out


def rational_kernel_lattice(A, cols: int | None = None):
    """Z-basis of the integer kernel of a rational matrix."""
    if cols is None:
        cols = len(A[0]) if A else 0
    rows = [r for r in clear_denominators(A) if any(r)]
    return kernel_lattice_cols(rows, cols)


def saturate(vectors, dim: int):
    """Z^dim intersected with the rational span of ``vectors``, as an HNF basis."""
    vectors = [list(map(int, v)) for v in vectors if any(v)]
    if not vectors:
        return []
    perp = hnf_kernel(vectors)
    return kernel_lattice_cols([list(p) for p in perp], dim)


# --- Smith normal form -----------------------------------------------------

@dataclass(frozen=True)
class SNFDecomposition:
    """``U @ A @ V == D`` with ``U``, ``V`` unimodular and ``D`` diagonal."""

    U: tuple
    D: tuple
    V: tuple

    @property
    def invariant_factors(self) -> tuple:
        n, m = shape(self.D)
        return tuple(self.D[i][i] for i in range(min(n, m)) if self.D[i][i] != 0)

    @property
    def rank(self) -> int:
        return len(self.invariant_factors)


def _freeze(M):
    return tuple(tuple(row) for row in M)


def snf(A) -> SNFDecomposition:
    """Smith normal form with transforms.

    Elimination with smallest-pivot selection: clear the pivot row and
    column, and whenever a remaining entry is not divisible by the pivot,
    fold its row into the pivot row and repeat. Negative pivots are fixed
    by negating the pivot column of ``V`` (not the row of ``U``), so a
    one-column input keeps ``U`` as close to the identity as possible.
    """
    D = [list(map(int, row)) for row in A]
    n, m = shape(D)
    U = identity(n)
    V = identity(m)

    def col_sub(j, t, q):
        # column j -= q * column t
        if q:
            for M in (D, V):
                for row in M:
                    row[j] -= q * row[t]

    def swap_cols(a, b):
        for M in (D, V):
            for row in M:
                row[a], row[b] = row[b], row[a]

    for t in range(min(n, m)):
        while True:
            cand = [(abs(D[i][j]), i, j) for i in range(t, n) for j in range(t, m) if D[i][j]]
            if not cand:
                return SNFDecomposition(_freeze(U), _freeze(D), _freeze(V))
            _, i0, j0 = min(cand)
            D[t], D[i0] = D[i0], D[t]
            U[t], U[i0] = U[i0], U[t]
            swap_cols(t, j0)
            p = D[t][t]
            clean = True
            for i in range(t + 1, n):
                if D[i][t]:
                    q = D[i][t] // p
                    _row_sub(D, i, t, q)
                    _row_sub(U, i, t, q)
                    clean = clean and D[i][t] == 0
            for j in range(t + 1, m):
                if D[t][j]:
                    col_sub(j, t, D[t][j] // p)
                    clean = clean and D[t][j] == 0
            if not clean:
                continue
            bad = next(((i, j) for i in range(t + 1, n) for j in range(t + 1, m) if D[i][j] % p), None)
            if bad is None:
                break
            i = bad[0]
            D[t] = [a + b for a, b in zip(D[t], D[i])]
            U[t] = [a + b for a, b in zip(U[t], U[i])]
        if D[t][t] < 0:
            for M in (D, V):
                for row in M:
                    row[t] = -row[t]
    return SNFDecomposition(_freeze(U), _freeze(D), _freeze(V))
