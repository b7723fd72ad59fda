"""Exact linear algebra over the rationals (tiny dense systems only)."""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence


class RationalEchelon:
    """Incremental row-echelon accumulator for exact rank tracking."""

    def __init__(self, ncols: int):
        self.ncols = ncols
        self.rows: list[list[Fraction]] = []
        self.pivots: list[int] = []

    @property
    def rank(self) -> int:
        return len(self.rows)

    def _reduce(self, vec: Sequence[Fraction]) -> list[Fraction]:
        v = [Fraction(x) for x in vec]
        for row, piv in zip(self.rows, self.pivots):
            if v[piv] != 0:
                factor = v[piv] / row[piv]
                v = [a - factor * b for a, b in zip(v, row)]
        return v

    def contains(self, vec: Sequence[Fraction]) -> bool:
        return all(x == 0 for x in self._reduce(vec))

    def add(self, vec: Sequence[Fraction]) -> bool:
        """Add a vector; returns True when it increased the rank."""
        if len(vec) != self.ncols:
            raise ValueError("vector length mismatch")
        v = self._reduce(vec)
        for i, x in enumerate(v):
            if x != 0:
                self.rows.append(v)
                self.pivots.append(i)
                return True
        return False


def rational_matrix_inverse(
    matrix: Sequence[Sequence[Fraction]],
) -> list[list[Fraction]]:
    """Exact inverse of a square rational matrix; raises on singularity."""
    n = len(matrix)
    aug = [
        [Fraction(x) for x in row]
        + [Fraction(1) if i == j else Fraction(0) for j in range(n)]
        for i, row in enumerate(matrix)
    ]
    for col in range(n):
        pivot_row = next((r for r in range(col, n) if aug[r][col] != 0), None)
        if pivot_row is None:
            raise ValueError("matrix is singular")
        aug[col], aug[pivot_row] = aug[pivot_row], aug[col]
        pivot = aug[col][col]
        aug[col] = [x / pivot for x in aug[col]]
        for r in range(n):
            if r != col and aug[r][col] != 0:
                factor = aug[r][col]
                aug[r] = [a - factor * b for a, b in zip(aug[r], aug[col])]
    return [row[n:] for row in aug]


def rational_matvec(
    matrix: Sequence[Sequence[Fraction]], vec: Sequence[Fraction]
) -> list[Fraction]:
    return [sum((a * b for a, b in zip(row, vec)), Fraction(0)) for row in matrix]


def rational_solve(
    matrix: Sequence[Sequence[Fraction]], rhs: Sequence[Fraction]
) -> list[Fraction]:
    return rational_matvec(rational_matrix_inverse(matrix), rhs)
