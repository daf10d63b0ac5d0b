import math
from dataclasses import dataclass
from typing import Any, Dict, List, Sequence, Tuple, Union

import sympy as sp
from loguru import logger
from sympy import ImmutableMatrix, Matrix

from denseorbit.errors import DegenerateFormError, DimensionMismatchError, SignatureError
from denseorbit.utils.serialization import as_rational, columns_to_json, matrix_from_json, matrix_to_json

VectorLike = Union[Matrix, Sequence[Any]]


def vector(values: VectorLike) -> Matrix:
    """Exact rational column vector from any sequence of scalars"""
    if isinstance(values, sp.MatrixBase):
        return Matrix(values).reshape(len(values), 1).applyfunc(as_rational)
    return Matrix([as_rational(x) for x in values])


def clear_denominators(v: Matrix) -> Matrix:
    """Scale a rational vector to the primitive integral vector on the same ray"""
    if all(x == 0 for x in v):
        return Matrix(v)
    lcm = math.lcm(*[int(sp.Rational(x).q) for x in v])
    scaled = (v * lcm).applyfunc(sp.Integer)
    return scaled / math.gcd(*[int(x) for x in scaled])


@dataclass(frozen=True)
class Signature:
    plus: int
    minus: int
    zero: int = 0

    @property
    def dim(self) -> int:
        return self.plus + self.minus + self.zero

    def as_tuple(self) -> Tuple[int, int, int]:
        return (self.plus, self.minus, self.zero)

    def __str__(self) -> str:
        return f"({self.plus},{self.minus},{self.zero})"


class QuadraticSpace:
    """Rational vector space with a symmetric bilinear form given by its Gram matrix"""

    def __init__(self, gram: Any, allow_degenerate: bool = False):
        g = gram if isinstance(gram, sp.MatrixBase) else Matrix(gram)
        g = Matrix(g).applyfunc(as_rational)
        if g.rows != g.cols:
            raise DimensionMismatchError(f"Gram matrix must be square, got {g.rows}x{g.cols}")
        if g != g.T:
            raise ValueError("Gram matrix must be symmetric")
        self.gram = ImmutableMatrix(g)
        self.allow_degenerate = allow_degenerate
        if not allow_degenerate and self.dim > 0 and self.gram.det() == 0:
            raise DegenerateFormError("Gram matrix is degenerate (determinant 0)")

    @classmethod
    def diagonal(cls, entries: Sequence[Any]) -> "QuadraticSpace":
        return cls(sp.diag(*[as_rational(x) for x in entries]))

    @property
    def dim(self) -> int:
        return self.gram.rows

    def __eq__(self, other: object) -> bool:
        return isinstance(other, QuadraticSpace) and self.gram == other.gram

    def __hash__(self) -> int:
        return hash(self.gram)

    def __repr__(self) -> str:
        return f"QuadraticSpace(dim={self.dim}, gram={self.gram.tolist()})"

    def to_dict(self) -> Dict[str, Any]:
        return {"dim": self.dim, "gram": matrix_to_json(self.gram)}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "QuadraticSpace":
        space = cls(matrix_from_json(data["gram"]))
        if "dim" in data and int(data["dim"]) != space.dim:
            raise DimensionMismatchError(f"Declared dim {data['dim']} does not match gram size {space.dim}")
        return space


class Subspace:
    """
    Rational subspace of a quadratic space

    The basis is kept in canonical form: reduced row echelon over Q with cleared
    denominators, stored as columns.
    """

    def __init__(self, ambient: QuadraticSpace, vectors: Any):
        self.ambient = ambient
        self.basis = ImmutableMatrix(_canonical_basis(ambient.dim, vectors))

    @classmethod
    def whole(cls, ambient: QuadraticSpace) -> "Subspace":
        return cls(ambient, sp.eye(ambient.dim))

    @property
    def dim(self) -> int:
        return self.basis.cols

    @property
    def vectors(self) -> List[Matrix]:
        return [Matrix(self.basis.col(j)) for j in range(self.dim)]

    def contains(self, v: VectorLike) -> bool:
        v = vector(v)
        if v.rows != self.ambient.dim:
            raise DimensionMismatchError(f"Vector of length {v.rows} in space of dim {self.ambient.dim}")
        if self.dim == 0:
            return all(x == 0 for x in v)
        return Matrix(self.basis).row_join(v).rank() == self.dim

    def contains_subspace(self, other: "Subspace") -> bool:
        return all(self.contains(v) for v in other.vectors)

    def sum(self, other: Union["Subspace", VectorLike]) -> "Subspace":
        extra = other.basis if isinstance(other, Subspace) else vector(other)
        return Subspace(self.ambient, Matrix(self.basis).row_join(Matrix(extra)))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Subspace) or other.ambient.dim != self.ambient.dim:
            return False
        return self.dim == other.dim and self.contains_subspace(other) and other.contains_subspace(self)

    def __hash__(self) -> int:
        return hash(self.basis)

    def __repr__(self) -> str:
        return f"Subspace(dim={self.dim}, basis={[list(v) for v in self.vectors]})"

    def to_dict(self) -> Dict[str, Any]:
        return {"basis": columns_to_json(Matrix(self.basis))}


def _canonical_basis(n: int, vectors: Any) -> Matrix:
    if isinstance(vectors, sp.MatrixBase):
        cols = [vector(vectors.col(j)) for j in range(vectors.cols)]
    else:
        cols = [vector(v) for v in vectors]
    for c in cols:
        if c.rows != n:
            raise DimensionMismatchError(f"Vector of length {c.rows} in space of dim {n}")
    if not cols:
        return Matrix.zeros(n, 0)
    rows = Matrix.hstack(*cols).T
    reduced, pivots = rows.rref()
    kept = [clear_denominators(reduced.row(i).T) for i in range(len(pivots))]
    if not kept:
        return Matrix.zeros(n, 0)
    return Matrix.hstack(*kept)


def inner(space: QuadraticSpace, v: VectorLike, w: VectorLike) -> sp.Rational:
    """Exact pairing vᵀ·G·w"""
    v, w = vector(v), vector(w)
    if v.rows != space.dim or w.rows != space.dim:
        raise DimensionMismatchError(
            f"Vectors of length {v.rows} and {w.rows} in space of dim {space.dim}"
        )
    return (v.T * space.gram * w)[0, 0]


def norm(space: QuadraticSpace, v: VectorLike) -> sp.Rational:
    return inner(space, v, v)


def diagonalize(space: QuadraticSpace) -> Tuple[Matrix, List[sp.Rational]]:
    """
    Congruence-diagonalize the Gram matrix

    Returns:
        (S, entries) with Sᵀ·G·S = diag(entries), entries grouped positive, negative, zero
    """
    n = space.dim
    a = Matrix(space.gram)
    s = sp.eye(n)
    for k in range(n):
        if a[k, k] == 0:
            swap = next((j for j in range(k + 1, n) if a[j, j] != 0), None)
            if swap is not None:
                a.row_swap(k, swap)
                a.col_swap(k, swap)
                s.col_swap(k, swap)
            else:
                partner = next((j for j in range(k + 1, n) if a[k, j] != 0), None)
                if partner is None:
                    continue
                # all remaining diagonal entries vanish, so the new pivot is 2·a[k, partner]
                a[k, :] = a[k, :] + a[partner, :]
                a[:, k] = a[:, k] + a[:, partner]
                s[:, k] = s[:, k] + s[:, partner]
        pivot = a[k, k]
        for i in range(k + 1, n):
            if a[i, k] == 0:
                continue
            c = a[i, k] / pivot
            a[i, :] = a[i, :] - c * a[k, :]
            a[:, i] = a[:, i] - c * a[:, k]
            s[:, i] = s[:, i] - c * s[:, k]

    entries = [a[i, i] for i in range(n)]
    order = (
        [i for i in range(n) if entries[i] > 0]
        + [i for i in range(n) if entries[i] < 0]
        + [i for i in range(n) if entries[i] == 0]
    )
    s = Matrix.hstack(*[s.col(i) for i in order]) if n else s
    return s, [entries[i] for i in order]


def signature(space: QuadraticSpace) -> Signature:
    _, entries = diagonalize(space)
    sig = Signature(
        plus=sum(1 for d in entries if d > 0),
        minus=sum(1 for d in entries if d < 0),
        zero=sum(1 for d in entries if d == 0),
    )
    logger.debug(f"Signature {sig} for form of dim {space.dim}")
    return sig


def orthogonal_complement(space: QuadraticSpace, w: Subspace) -> Subspace:
    if w.dim == 0:
        return Subspace.whole(space)
    constraints = Matrix(w.basis).T * space.gram
    return Subspace(space, constraints.nullspace())


def restrict_form(space: QuadraticSpace, w: Subspace) -> QuadraticSpace:
    basis = Matrix(w.basis)
    return QuadraticSpace(basis.T * space.gram * basis, allow_degenerate=True)


def subspace_signature(space: QuadraticSpace, w: Subspace) -> Signature:
    return signature(restrict_form(space, w))


def is_nondegenerate(space: QuadraticSpace, w: Subspace) -> bool:
    return w.dim == 0 or restrict_form(space, w).gram.det() != 0


def require_signature(space: QuadraticSpace, w: Subspace, expected: Tuple[int, int, int], label: str) -> None:
    actual = subspace_signature(space, w)
    if actual.as_tuple() != tuple(expected):
        raise SignatureError(f"{label} has signature {actual}, expected {Signature(*expected)}")


def project(space: QuadraticSpace, w: Subspace, v: VectorLike) -> Matrix:
    """Form-orthogonal projection of v onto the nondegenerate subspace w"""
    v = vector(v)
    basis = Matrix(w.basis)
    gram_w = basis.T * space.gram * basis
    if gram_w.det() == 0:
        raise DegenerateFormError("Cannot project onto a degenerate subspace")
    coeffs = gram_w.LUsolve(basis.T * space.gram * v)
    return basis * coeffs


def diagonal_vectors(space: QuadraticSpace, w: Subspace) -> List[Tuple[Matrix, sp.Rational]]:
    """Rational orthogonal basis of w with the norm of each vector, grouped (+, -, 0)"""
    if w.dim == 0:
        return []
    s, entries = diagonalize(restrict_form(space, w))
    basis = Matrix(w.basis)
    vectors = [clear_denominators(basis * s.col(j)) for j in range(len(entries))]
    return [(v, inner(space, v, v)) for v in vectors]


