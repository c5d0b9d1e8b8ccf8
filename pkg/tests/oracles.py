"""Independent reference computations used by the tests."""

import itertools
from fractions import Fraction
from math import gcd


def det_laplace(M):
    n = len(M)
    if n == 0:
        return 1
    if n == 1:
        return M[0][0]
    return sum((-1) ** j * M[0][j] * det_laplace([row[:j] + row[j + 1:] for row in M[1:]])
               for j in range(n) if M[0][j])


def determinantal_divisors(A):
    """gcd of all j x j minors, for j = 1 .. min(n, m)."""
    n, m = len(A), len(A[0]) if A else 0
    out = []
    for j in range(1, min(n, m) + 1):
        g = 0
        for rows in itertools.combinations(range(n), j):
            for cols in itertools.combinations(range(m), j):
                g = gcd(g, det_laplace([[A[r][c] for c in cols] for r in rows]))
        out.append(g)
    return out


def invariant_factors_by_minors(A):
    """Nonzero invariant factors d_j = D_j / D_(j-1)."""
    out, prev = [], 1
    for Dj in determinantal_divisors(A):
        if Dj == 0:
            break
        out.append(Dj // prev)
        prev = Dj
    return out


def small_kernel_vectors(A, height):
    m = len(A[0])
    for x in itertools.product(range(-height, height + 1), repeat=m):
        if any(x) and all(sum(a * b for a, b in zip(row, x)) == 0 for row in A):
            yield x


def in_integer_span(x, basis):
    """Whether x is an integer combination of the (independent) basis vectors."""
    if not basis:
        return not any(x)
    m = len(x)
    # solve over Q, then require integrality of the coefficients
    cols = [list(map(Fraction, b)) for b in basis]
    M = [[cols[j][i] for j in range(len(cols))] + [Fraction(x[i])] for i in range(m)]
    r, piv = 0, []
    for c in range(len(cols)):
        p = next((i for i in range(r, m) if M[i][c] != 0), None)
        if p is None:
            continue
        M[r], M[p] = M[p], M[r]
        M[r] = [v / M[r][c] for v in M[r]]
        for i in range(m):
            if i != r and M[i][c] != 0:
                f = M[i][c]
                M[i] = [a - f * b for a, b in zip(M[i], M[r])]
        piv.append(c)
        r += 1
    if any(M[i][-1] != 0 for i in range(r, m)):
        return False
    return all(M[i][-1].denominator == 1 for i in range(r))
