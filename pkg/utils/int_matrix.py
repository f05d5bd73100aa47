"""
Dense arbitrary-precision integer matrices.

IntMat is immutable and row-major. A matrix may have zero columns (an empty
kernel basis) or zero rows (an empty dual basis); everything else about it is
plain Python integers, never floats.
"""

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, List, Sequence, Tuple

from sympy import Matrix

from utils.errors import ParseError, ShapeMismatch

IntVec = Tuple[int, ...]
RatVec = Tuple[Fraction, ...]


@dataclass(frozen=True)
class IntMat:
    nrows: int
    ncols: int
    data: Tuple[Tuple[int, ...], ...]

    def __post_init__(self):
        if len(self.data) != self.nrows or any(len(row) != self.ncols for row in self.data):
            raise ShapeMismatch(f"IntMat data does not match shape {self.nrows}x{self.ncols}")

    # Construction

    @classmethod
    def from_rows(cls, rows: Iterable[Sequence[int]], ncols: int = None) -> 'IntMat':
        data = tuple(tuple(int(v) for v in row) for row in rows)
        if ncols is None:
            ncols = len(data[0]) if data else 0
        return cls(len(data), ncols, data)

    @classmethod
    def from_columns(cls, columns: Iterable[Sequence[int]], nrows: int = None) -> 'IntMat':
        cols = [tuple(int(v) for v in col) for col in columns]
        if nrows is None:
            nrows = len(cols[0]) if cols else 0
        if any(len(col) != nrows for col in cols):
            raise ShapeMismatch("columns have different lengths")
        data = tuple(tuple(col[i] for col in cols) for i in range(nrows))
        return cls(nrows, len(cols), data)

    @classmethod
    def identity(cls, n: int) -> 'IntMat':
        return cls(n, n, tuple(tuple(1 if i == j else 0 for j in range(n)) for i in range(n)))

    @classmethod
    def row_vector(cls, vec: Sequence[int]) -> 'IntMat':
        return cls.from_rows([vec])

    # Access

    @property
    def shape(self) -> Tuple[int, int]:
        return self.nrows, self.ncols

    def row(self, i: int) -> IntVec:
        return self.data[i]

    def column(self, j: int) -> IntVec:
        return tuple(row[j] for row in self.data)

    def columns(self) -> List[IntVec]:
        return [self.column(j) for j in range(self.ncols)]

    def rows(self) -> List[IntVec]:
        return list(self.data)

    def __getitem__(self, index: Tuple[int, int]) -> int:
        i, j = index
        return self.data[i][j]

    # Algebra

    def transpose(self) -> 'IntMat':
        return IntMat.from_columns(self.data, nrows=self.ncols)

    def matmul(self, other: 'IntMat') -> 'IntMat':
        if self.ncols != other.nrows:
            raise ShapeMismatch(f"cannot multiply {self.shape} by {other.shape}")
        other_cols = other.columns()
        return IntMat(self.nrows, other.ncols, tuple(
            tuple(dot(row, col) for col in other_cols) for row in self.data
        ))

    def __matmul__(self, other: 'IntMat') -> 'IntMat':
        return self.matmul(other)

    def apply(self, vec: Sequence) -> tuple:
        """Matrix times column vector; works for int or Fraction entries"""
        if len(vec) != self.ncols:
            raise ShapeMismatch(f"vector of length {len(vec)} against {self.ncols} columns")
        return tuple(dot(row, vec) for row in self.data)

    def left_apply(self, vec: Sequence) -> tuple:
        """Row vector times matrix"""
        if len(vec) != self.nrows:
            raise ShapeMismatch(f"row vector of length {len(vec)} against {self.nrows} rows")
        return tuple(dot(vec, col) for col in self.columns())

    def stack(self, other: 'IntMat') -> 'IntMat':
        """Rows of self followed by rows of other"""
        if self.ncols != other.ncols:
            raise ShapeMismatch("cannot stack matrices with different column counts")
        return IntMat(self.nrows + other.nrows, self.ncols, self.data + other.data)

    def select_rows(self, indices: Sequence[int]) -> 'IntMat':
        return IntMat(len(indices), self.ncols, tuple(self.data[i] for i in indices))

    def select_columns(self, indices: Sequence[int]) -> 'IntMat':
        return IntMat.from_columns([self.column(j) for j in indices], nrows=self.nrows)

    def _sympy(self) -> Matrix:
        if self.nrows != self.ncols:
            raise ShapeMismatch(f"square matrix required, got {self.nrows}x{self.ncols}")
        return Matrix(self.nrows, self.ncols, [v for row in self.data for v in row])

    def determinant(self) -> int:
        """Exact determinant (sympy Bareiss)"""
        if self.nrows == 0 and self.ncols == 0:
            return 1
        return int(self._sympy().det(method='bareiss'))

    def inverse(self) -> List[List[Fraction]]:
        """Exact rational inverse"""
        M = self._sympy()
        if self.nrows == 0:
            return []
        try:
            inv = M.inv()
        except ValueError:
            raise ShapeMismatch("matrix is singular")
        return [[Fraction(int(inv[i, j].p), int(inv[i, j].q)) for j in range(self.ncols)]
                for i in range(self.nrows)]

    def integer_inverse(self) -> 'IntMat':
        """Inverse of a unimodular matrix, as an IntMat"""
        inv = self.inverse()
        if any(v.denominator != 1 for row in inv for v in row):
            raise ShapeMismatch("matrix is not unimodular")
        return IntMat.from_rows([[int(v) for v in row] for row in inv], ncols=self.ncols)

    def is_zero(self) -> bool:
        return all(v == 0 for row in self.data for v in row)

    # Text format: "rows cols" then row-major integers

    def to_text(self) -> str:
        lines = [f"{self.nrows} {self.ncols}"]
        lines.extend(' '.join(str(v) for v in row) for row in self.data if row)
        return '\n'.join(lines) + '\n'

    @classmethod
    def from_text(cls, text: str) -> 'IntMat':
        tokens = text.split()
        if len(tokens) < 2:
            raise ParseError("matrix text needs a 'rows cols' header")
        try:
            nrows, ncols = int(tokens[0]), int(tokens[1])
            values = [int(t) for t in tokens[2:]]
        except ValueError as e:
            raise ParseError(f"non-integer token in matrix text: {e}")
        if nrows < 0 or ncols < 0 or len(values) != nrows * ncols:
            raise ParseError(f"expected {nrows * ncols} entries, found {len(values)}")
        return cls(nrows, ncols, tuple(
            tuple(values[i * ncols:(i + 1) * ncols]) for i in range(nrows)
        ))


def dot(u: Sequence, v: Sequence):
    return sum((a * b for a, b in zip(u, v)), 0)


def norm_sq(v: Sequence):
    return dot(v, v)


def canonical_sign(v: Sequence[int]) -> IntVec:
    """Flip v so its first nonzero entry is positive"""
    for x in v:
        if x != 0:
            return tuple(v) if x > 0 else tuple(-y for y in v)
    return tuple(v)


def parse_int_list(text: str) -> IntVec:
    """'1,-2,3' -> (1, -2, 3)"""
    try:
        return tuple(int(t) for t in text.replace(' ', '').split(',') if t != '')
    except ValueError:
        raise ParseError(f"not a comma-separated integer list: {text!r}")
