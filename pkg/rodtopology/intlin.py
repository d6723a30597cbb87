#!/usr/bin/env python3

"""Exact integer matrix algorithms.

All matrices are numpy arrays of dtype=object holding Python ints, so no
operation can overflow or round.  Rod structures are stored as columns.
"""

import itertools
import logging
import operator
from dataclasses import dataclass
from math import gcd
from typing import List, Sequence, Tuple

import numpy as np

from . import RodTopologyError

logger = logging.getLogger(__name__)


class IntLinError(RodTopologyError):
    pass


@dataclass(frozen=True, eq=False)
class HermiteResult:
    """Q @ A == H with Q unimodular and H in Hermite normal form."""

    H: np.ndarray
    Q: np.ndarray
    pivots: Tuple[Tuple[int, int], ...]

    @property
    def rank(self) -> int:
        return len(self.pivots)


@dataclass(frozen=True, eq=False)
class SmithResult:
    """U @ A @ V == S with U, V unimodular and S diagonal."""

    S: np.ndarray
    U: np.ndarray
    V: np.ndarray
    divisors: Tuple[int, ...]

    @property
    def rank(self) -> int:
        return sum(1 for s in self.divisors if s != 0)


def as_int_matrix(A) -> np.ndarray:
    """Copy a nested sequence (or array) of integers into an object matrix.

    Floats are rejected rather than truncated.
    """
    try:
        rows = [[operator.index(x) for x in row] for row in A]
    except TypeError as e:
        raise IntLinError(f"matrix entries must be integers: {e}") from e
    if not rows or not rows[0]:
        raise IntLinError("matrix must have at least one row and one column")
    if any(len(row) != len(rows[0]) for row in rows):
        raise IntLinError("matrix rows have different lengths")
    return np.array(rows, dtype=object)


def column_matrix(vectors: Sequence[Sequence[int]]) -> np.ndarray:
    """Matrix whose columns are the given vectors."""
    return as_int_matrix(vectors).T.copy()


def identity(n: int) -> np.ndarray:
    M = np.zeros((n, n), dtype=object)
    for i in range(n):
        M[i, i] = 1
    return M


def exgcd(a: int, b: int) -> np.ndarray:
    """Extended GCD.

    Returns:
        A 2x2 integer matrix M of determinant 1 with M @ [a, b] == [g, 0],
        where g = gcd(a, b) >= 0.  M is the identity when a == b == 0.
        When a divides b, M only subtracts a multiple of the first row and
        keeps |a| in place.
    """
    if a != 0 and b % a == 0:
        if a > 0:
            return np.array([[1, 0], [-(b // a), 1]], dtype=object)
        return np.array([[-1, 0], [b // a, -1]], dtype=object)
    r0, r1 = a, b
    x0, x1 = 1, 0
    y0, y1 = 0, 1
    while r1 != 0:
        k = r0 // r1
        r0, r1 = r1, r0 - k * r1
        x0, x1 = x1, x0 - k * x1
        y0, y1 = y1, y0 - k * y1
    if r0 < 0:
        r0, x0, y0 = -r0, -x0, -y0
    if r0 == 0:
        return identity(2)
    return np.array([[x0, y0], [-b // r0, a // r0]], dtype=object)


def hermite_normal_form(A) -> HermiteResult:
    """Row-style Hermite normal form of A with its transformation matrix.

    Columns are processed left to right.  For each column the rows below the
    current pivot row are folded into it with exgcd steps, the pivot is made
    positive and the entries above it are reduced into [0, pivot).
    """
    A = as_int_matrix(A)
    H = A.copy()
    m, k = H.shape
    Q = identity(m)
    pivots: List[Tuple[int, int]] = []
    row = 0
    for col in range(k):
        if row == m:
            break
        for i in range(row + 1, m):
            if H[i, col] != 0:
                M = exgcd(H[row, col], H[i, col])
                H[[row, i]] = M @ H[[row, i]]
                Q[[row, i]] = M @ Q[[row, i]]
        if H[row, col] == 0:
            continue
        if H[row, col] < 0:
            H[row] = -H[row]
            Q[row] = -Q[row]
        pivot = H[row, col]
        for i in range(row):
            f = H[i, col] // pivot
            if f != 0:
                H[i] = H[i] - f * H[row]
                Q[i] = Q[i] - f * Q[row]
        pivots.append((row, col))
        row += 1

    assert (Q @ A == H).all()
    logger.debug("hermite_normal_form %dx%d rank %d", m, k, len(pivots))
    return HermiteResult(H=H, Q=Q, pivots=tuple(pivots))


def is_hermite_normal_form(H) -> bool:
    """Check the three Hermite properties: zero rows last, positive
    right-moving pivots, entries above each pivot in [0, pivot)."""
    H = as_int_matrix(H)
    last_col = -1
    seen_zero_row = False
    for i, row in enumerate(H):
        nonzero = [j for j, x in enumerate(row) if x != 0]
        if not nonzero:
            seen_zero_row = True
            continue
        if seen_zero_row:
            return False
        j = nonzero[0]
        if j <= last_col or H[i, j] <= 0:
            return False
        if any(not 0 <= H[r, j] < H[i, j] for r in range(i)):
            return False
        last_col = j
    return True


def smith_normal_form(A) -> SmithResult:
    """Smith normal form by alternating row and column gcd reduction."""
    A = as_int_matrix(A)
    D = A.copy()
    m, k = D.shape
    U = identity(m)
    V = identity(k)
    size = min(m, k)

    def clear_col(i):
        for j in range(i + 1, m):
            if D[j, i] != 0:
                M = exgcd(D[i, i], D[j, i])
                D[[i, j]] = M @ D[[i, j]]
                U[[i, j]] = M @ U[[i, j]]

    def clear_row(i):
        for j in range(i + 1, k):
            if D[i, j] != 0:
                M = exgcd(D[i, i], D[i, j]).T
                D[:, [i, j]] = D[:, [i, j]] @ M
                V[:, [i, j]] = V[:, [i, j]] @ M

    def diagonalize(start):
        for i in range(start, size):
            nonzero = np.argwhere(D[i:, i:] != 0)
            if len(nonzero) == 0:
                return
            r, c = (int(x) + i for x in nonzero[0])
            if r != i:
                D[[i, r]] = D[[r, i]]
                U[[i, r]] = U[[r, i]]
            if c != i:
                D[:, [i, c]] = D[:, [c, i]]
                V[:, [i, c]] = V[:, [c, i]]
            while True:
                clear_col(i)
                if (D[i, i + 1:] == 0).all():
                    break
                clear_row(i)
                if (D[i + 1:, i] == 0).all():
                    break

    diagonalize(0)

    # s_i | s_{i+1}: adding row j to row i and re-diagonalizing replaces
    # D[i, i] by gcd(D[i, i], D[j, j]).
    rank = sum(1 for i in range(size) if D[i, i] != 0)
    fixed = False
    while not fixed:
        fixed = True
        for i, j in itertools.combinations(range(rank), 2):
            if D[j, j] % D[i, i] != 0:
                D[i] = D[i] + D[j]
                U[i] = U[i] + U[j]
                diagonalize(i)
                fixed = False
                break

    for i in range(size):
        if D[i, i] < 0:
            D[i] = -D[i]
            U[i] = -U[i]

    assert (U @ A @ V == D).all()
    divisors = tuple(int(D[i, i]) for i in range(size))
    logger.debug("smith_normal_form %dx%d divisors %s", m, k, divisors)
    return SmithResult(S=D, U=U, V=V, divisors=divisors)


def integer_determinant(A) -> int:
    """Exact determinant by fraction-free (Bareiss) elimination."""
    A = as_int_matrix(A)
    n = A.shape[0]
    if A.shape[1] != n:
        raise IntLinError(f"determinant of a non-square {A.shape} matrix")
    M = [[int(x) for x in row] for row in A]
    sign, prev = 1, 1
    for i in range(n - 1):
        if M[i][i] == 0:
            swap = next((r for r in range(i + 1, n) if M[r][i] != 0), None)
            if swap is None:
                return 0
            M[i], M[swap] = M[swap], M[i]
            sign = -sign
        for r in range(i + 1, n):
            for c in range(i + 1, n):
                M[r][c] = (M[r][c] * M[i][i] - M[r][i] * M[i][c]) // prev
        prev = M[i][i]
    return sign * M[n - 1][n - 1]


def determinant_divisor(A, k: int) -> int:
    """The k-th determinant divisor: gcd of all k x k minors of A."""
    A = as_int_matrix(A)
    m, c = A.shape
    if not 1 <= k <= min(m, c):
        raise IntLinError(f"k={k} out of range for a {m}x{c} matrix")
    g = 0
    for rows in itertools.combinations(range(m), k):
        sub = A[list(rows)]
        for cols in itertools.combinations(range(c), k):
            g = gcd(g, integer_determinant(sub[:, list(cols)]))
            if g == 1:
                return 1
    return g


def span_divisor(vectors: Sequence[Sequence[int]]) -> int:
    """Det_k of k vectors taken as columns; Det_2(v, w) for a pair."""
    return determinant_divisor(column_matrix(vectors), len(vectors))


def is_primitive_vector(v: Sequence[int]) -> bool:
    return gcd(*(int(x) for x in v)) == 1


def is_primitive_set(vectors: Sequence[Sequence[int]]) -> bool:
    """Independent with Det_k == 1, i.e. extendable to a basis of Z^n."""
    if len(vectors) > len(vectors[0]):
        return False
    return span_divisor(vectors) == 1


def hermite_upper_block_is_identity(vectors: Sequence[Sequence[int]]) -> bool:
    k = len(vectors)
    if k > len(vectors[0]):
        return False
    H = hermite_normal_form(column_matrix(vectors)).H
    return (H[:k, :k] == identity(k)).all()


def unimodular_inverse(Q) -> np.ndarray:
    """Exact inverse of a unimodular matrix (its Hermite transform)."""
    Q = as_int_matrix(Q)
    if Q.shape[0] != Q.shape[1]:
        raise IntLinError(f"cannot invert a non-square {Q.shape} matrix")
    result = hermite_normal_form(Q)
    if not (result.H == identity(Q.shape[0])).all():
        raise IntLinError("matrix is not unimodular")
    return result.Q


def complete_to_basis(vectors: Sequence[Sequence[int]]) -> np.ndarray:
    """Unimodular matrix whose first columns are exactly the given vectors."""
    k = len(vectors)
    A = column_matrix(vectors)
    if not is_primitive_set(vectors):
        raise IntLinError(f"{[list(v) for v in vectors]} is not a primitive set")
    B = unimodular_inverse(hermite_normal_form(A).Q)
    assert (B[:, :k] == A).all()
    return B


def continued_fraction(p: int, q: int) -> List[int]:
    """Regular continued fraction terms of p/q, q > 0."""
    if q <= 0:
        raise IntLinError(f"denominator must be positive, got {q}")
    terms = []
    while q:
        a = p // q
        terms.append(a)
        p, q = q, p - a * q
    return terms


def convergents(terms: Sequence[int]) -> List[Tuple[int, int]]:
    """Convergents (h_j, k_j) of a continued fraction."""
    h_prev, h = 0, 1
    k_prev, k = 1, 0
    result = []
    for a in terms:
        h_prev, h = h, a * h + h_prev
        k_prev, k = k, a * k + k_prev
        result.append((h, k))
    return result
