import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple, Union

import sympy as sp
from loguru import logger
from sympy import ZZ, ImmutableMatrix, Matrix
from sympy.matrices.normalforms import invariant_factors
from sympy.polys.matrices import DomainMatrix

from denseorbit.errors import (
    DimensionMismatchError,
    IsotropicVectorError,
    NotContainedError,
    NotIntegralError,
    NotRationalError,
)
from denseorbit.models.quadratic_space import QuadraticSpace, Subspace, VectorLike, inner, vector
from denseorbit.utils.serialization import as_rational, columns_to_json, matrix_to_json

IndexValue = Union[int, float]


def xgcd(a: int, b: int) -> Tuple[int, int, int]:
    """Extended gcd: returns (g, x, y) with x·a + y·b = g ≥ 0"""
    old_r, r = a, b
    old_x, x = 1, 0
    old_y, y = 0, 1
    while r != 0:
        q = old_r // r
        old_r, r = r, old_r - q * r
        old_x, x = x, old_x - q * x
        old_y, y = y, old_y - q * y
    if old_r < 0:
        old_r, old_x, old_y = -old_r, -old_x, -old_y
    return old_r, old_x, old_y


def _column_echelon(rows: List[List[int]], pivot_rows: int) -> int:
    """
    Integer column reduction of the first `pivot_rows` rows, in place

    Column operations are unimodular and act on every row, so trailing rows carry the
    transformation. Pivots are positive and entries left of a pivot are reduced modulo it.

    Returns:
        Number of pivots; columns from that index on vanish on the pivot rows
    """
    n = len(rows[0]) if rows else 0
    col = 0
    for i in range(pivot_rows):
        if col >= n:
            break
        row = rows[i]
        for j in range(col + 1, n):
            if row[j] == 0:
                continue
            a, b = row[col], row[j]
            g, x, y = xgcd(a, b)
            pa, pb = a // g, b // g
            for r in rows:
                ca, cb = r[col], r[j]
                r[col] = x * ca + y * cb
                r[j] = -pb * ca + pa * cb
        pivot = row[col]
        if pivot == 0:
            continue
        if pivot < 0:
            for r in rows:
                r[col] = -r[col]
            pivot = -pivot
        for c in range(col):
            q = row[c] // pivot
            if q:
                for r in rows:
                    r[c] -= q * r[col]
        col += 1
    return col


def _integerize(m: Matrix) -> Tuple[List[List[int]], int]:
    entries = [as_rational(x) for x in m]
    d = math.lcm(*[int(x.q) for x in entries]) if entries else 1
    rows = [[int(as_rational(m[i, j]) * d) for j in range(m.cols)] for i in range(m.rows)]
    return rows, d


def hnf_basis(m: Matrix) -> Matrix:
    """Canonical basis (column Hermite normal form) of the group generated by the columns of m"""
    if m.cols == 0:
        return Matrix.zeros(m.rows, 0)
    rows, d = _integerize(m)
    rank = _column_echelon(rows, len(rows))
    if rank == 0:
        return Matrix.zeros(m.rows, 0)
    return Matrix([[sp.Rational(rows[i][j], d) for j in range(rank)] for i in range(m.rows)])


def integer_kernel(a: Matrix) -> Matrix:
    """Basis (as columns) of {c ∈ ℤʳ : a·c = 0} for a rational m×r matrix a"""
    r = a.cols
    if r == 0:
        return Matrix.zeros(0, 0)
    if a.rows == 0:
        return sp.eye(r)
    rows, _ = _integerize(a)
    rows += [[1 if i == j else 0 for j in range(r)] for i in range(r)]
    rank = _column_echelon(rows, a.rows)
    kernel = [[rows[a.rows + i][j] for j in range(rank, r)] for i in range(r)]
    if rank == r:
        return Matrix.zeros(r, 0)
    return Matrix(kernel)


class Lattice:
    """Finitely generated free subgroup of a rational quadratic space, given by a basis"""

    def __init__(self, ambient: QuadraticSpace, basis: Any):
        b = _as_columns(ambient.dim, basis)
        if b.cols and b.rank() != b.cols:
            raise ValueError("Lattice basis vectors must be linearly independent")
        self.ambient = ambient
        self.basis = ImmutableMatrix(b)
        self._pinv: Optional[Matrix] = None
        self._canonical: Optional[ImmutableMatrix] = None

    @classmethod
    def standard(cls, ambient: QuadraticSpace) -> "Lattice":
        return cls(ambient, sp.eye(ambient.dim))

    @classmethod
    def from_generators(cls, ambient: QuadraticSpace, generators: Any) -> "Lattice":
        """Lattice spanned by possibly dependent generators, in canonical basis"""
        return cls(ambient, hnf_basis(_as_columns(ambient.dim, generators)))

    @property
    def rank(self) -> int:
        return self.basis.cols

    @property
    def gram(self) -> Matrix:
        b = Matrix(self.basis)
        return b.T * self.ambient.gram * b

    @property
    def span(self) -> Subspace:
        return Subspace(self.ambient, Matrix(self.basis))

    def canonical_basis(self) -> ImmutableMatrix:
        if self._canonical is None:
            self._canonical = ImmutableMatrix(hnf_basis(Matrix(self.basis)))
        return self._canonical

    def coordinates(self, v: VectorLike) -> Optional[Matrix]:
        """Coordinates of v in the lattice basis, or None if v is outside the rational span"""
        v = vector(v)
        if v.rows != self.ambient.dim:
            raise DimensionMismatchError(f"Vector of length {v.rows} in space of dim {self.ambient.dim}")
        if self.rank == 0:
            return Matrix.zeros(0, 1) if all(x == 0 for x in v) else None
        if self._pinv is None:
            b = Matrix(self.basis)
            self._pinv = (b.T * b).inv() * b.T
        c = self._pinv * v
        if Matrix(self.basis) * c != v:
            return None
        return c

    def contains(self, v: VectorLike) -> bool:
        c = self.coordinates(v)
        return c is not None and all(x.is_integer for x in c)

    def contains_lattice(self, other: "Lattice") -> bool:
        return all(self.contains(other.basis.col(j)) for j in range(other.rank))

    def scaled(self, m: int) -> "Lattice":
        return Lattice(self.ambient, Matrix(self.basis) * m)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Lattice) or other.ambient != self.ambient:
            return False
        return self.canonical_basis() == other.canonical_basis()

    def __hash__(self) -> int:
        return hash(self.canonical_basis())

    def __repr__(self) -> str:
        return f"Lattice(rank={self.rank}, basis={[list(self.basis.col(j)) for j in range(self.rank)]})"

    def to_dict(self, generators: Optional[List["IntegralIsometry"]] = None) -> Dict[str, Any]:
        return {
            "dim": self.ambient.dim,
            "gram": matrix_to_json(self.ambient.gram),
            "basis": columns_to_json(Matrix(self.basis)),
            "generators": [matrix_to_json(g.matrix) for g in (generators or [])],
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> Tuple["Lattice", List["IntegralIsometry"]]:
        ambient = QuadraticSpace.from_dict(data)
        basis = data.get("basis")
        lattice = cls(ambient, [vector(b) for b in basis]) if basis else cls.standard(ambient)
        generators = [
            IntegralIsometry.checked(lattice, Matrix(g), label=f"supplied #{i}")
            for i, g in enumerate(data.get("generators", []))
        ]
        return lattice, generators


@dataclass(frozen=True)
class IntegralIsometry:
    """Isometry of the ambient space preserving a lattice; matrix acts in ambient coordinates"""

    matrix: ImmutableMatrix
    lattice: Lattice = field(compare=False, repr=False)
    label: str = field(default="", compare=False)

    @classmethod
    def checked(cls, lattice: Lattice, matrix: Any, label: str = "") -> "IntegralIsometry":
        m = ImmutableMatrix(Matrix(matrix).applyfunc(as_rational))
        if not is_integral_isometry(lattice, m):
            raise NotIntegralError(f"Matrix {label or m.tolist()} is not an integral isometry of the lattice")
        return cls(matrix=m, lattice=lattice, label=label)

    @property
    def lattice_matrix(self) -> Matrix:
        b = Matrix(self.lattice.basis)
        return Matrix.hstack(*[self.lattice.coordinates(self.matrix * b.col(j)) for j in range(b.cols)])


def _as_columns(n: int, basis: Any) -> Matrix:
    if isinstance(basis, sp.MatrixBase):
        m = Matrix(basis).applyfunc(as_rational)
        if m.rows != n:
            raise DimensionMismatchError(f"Basis rows {m.rows} do not match dim {n}")
        return m
    cols = [vector(v) for v in basis]
    for c in cols:
        if c.rows != n:
            raise DimensionMismatchError(f"Vector of length {c.rows} in space of dim {n}")
    return Matrix.hstack(*cols) if cols else Matrix.zeros(n, 0)


def saturate(l: Lattice, w: Subspace) -> Lattice:
    """The lattice W ∩ L"""
    if w.dim == 0:
        return Lattice(l.ambient, Matrix.zeros(l.ambient.dim, 0))
    annihilators = Matrix(w.basis).T.nullspace()
    if not annihilators:
        return Lattice.from_generators(l.ambient, Matrix(l.basis))
    constraints = Matrix.hstack(*annihilators).T * Matrix(l.basis)
    kernel = integer_kernel(constraints)
    if kernel.cols == 0:
        return Lattice(l.ambient, Matrix.zeros(l.ambient.dim, 0))
    return Lattice.from_generators(l.ambient, Matrix(l.basis) * kernel)


def reduced_basis(l: Lattice) -> Lattice:
    """
    The same lattice in an LLL-reduced basis

    Reduction uses the Euclidean product of ambient coordinates, so short basis vectors
    have small entries whatever the signature of the form.
    """
    if l.rank < 2:
        return l
    rows, _ = _integerize(Matrix(l.basis).T)
    _, transform = DomainMatrix.from_Matrix(Matrix(rows)).convert_to(ZZ).lll_transform()
    t = transform.to_Matrix()
    reduced = Lattice(l.ambient, Matrix(l.basis) * t.T)
    logger.debug(f"Reduced lattice basis: {reduced}")
    return reduced


def lattice_sum(l0: Lattice, l1: Lattice) -> Lattice:
    if l0.ambient != l1.ambient:
        raise DimensionMismatchError("Lattices live in different ambient spaces")
    return Lattice.from_generators(l0.ambient, Matrix(l0.basis).row_join(Matrix(l1.basis)))


def intersect(l: Lattice, lp: Lattice) -> Lattice:
    if l.ambient != lp.ambient:
        raise DimensionMismatchError("Lattices live in different ambient spaces")
    if l.span != lp.span:
        logger.warning("Intersecting lattices with different rational spans; result is rank-deficient")
    stacked = Matrix(l.basis).row_join(-Matrix(lp.basis))
    kernel = integer_kernel(stacked)
    if kernel.cols == 0:
        return Lattice(l.ambient, Matrix.zeros(l.ambient.dim, 0))
    return Lattice.from_generators(l.ambient, Matrix(l.basis) * kernel[: l.rank, :])


def index_in(sub: Lattice, sup: Lattice) -> IndexValue:
    """|sup / sub|, or math.inf when sub has smaller rank"""
    if not sup.contains_lattice(sub):
        raise NotContainedError("Sublattice is not contained in the lattice")
    if sub.rank != sup.rank:
        return math.inf
    if sub.rank == 0:
        return 1
    return int(abs(_inclusion_matrix(sub, sup).det()))


def _inclusion_matrix(sub: Lattice, sup: Lattice) -> Matrix:
    cols = [sup.coordinates(sub.basis.col(j)) for j in range(sub.rank)]
    if any(c is None or not all(x.is_integer for x in c) for c in cols):
        raise NotContainedError("Sublattice is not contained in the lattice")
    return Matrix.hstack(*cols)


def elementary_divisors(sub: Lattice, sup: Lattice) -> List[int]:
    """Invariant factors of the inclusion sub ⊆ sup (Smith normal form)"""
    if sub.rank == 0:
        return []
    return [int(abs(d)) for d in invariant_factors(_inclusion_matrix(sub, sup), domain=ZZ)]


def is_primitive_sublattice(sub: Lattice, sup: Lattice) -> bool:
    """True iff sup/sub is torsion-free"""
    return saturate(sup, sub.span) == sub


def commensurability_exponent(sub: Lattice, sup: Lattice) -> int:
    """Least m > 0 with m·sup ⊆ sub ⊆ sup"""
    if sub.rank != sup.rank:
        raise NotContainedError("Lattices of different rank are not commensurable")
    divisors = elementary_divisors(sub, sup)
    return max(divisors) if divisors else 1


def reflection_matrix(space: QuadraticSpace, r: VectorLike) -> Matrix:
    """Matrix of v ↦ v − (2⟨v,r⟩/⟨r,r⟩)·r on the ambient space"""
    r = vector(r)
    q = inner(space, r, r)
    if q == 0:
        raise IsotropicVectorError(f"Cannot reflect in isotropic vector {list(r)}")
    return sp.eye(space.dim) - (2 / q) * r * (r.T * space.gram)


def reflection_in_vector(l: Lattice, r: VectorLike) -> IntegralIsometry:
    """
    The reflection in r as an integral isometry of l

    Raises:
        IsotropicVectorError: ⟨r,r⟩ = 0
        NotIntegralError: 2⟨x,r⟩/⟨r,r⟩ is not an integer for some x in l; callers that
            scan candidate roots (e.g. preset generators) catch it and skip r
    """
    m = reflection_matrix(l.ambient, r)
    if not is_integral_isometry(l, m):
        raise NotIntegralError(f"Reflection in {list(vector(r))} does not preserve the lattice")
    return IntegralIsometry(matrix=ImmutableMatrix(m), lattice=l, label=f"reflection r={list(vector(r))}")


def is_integral_isometry(l: Lattice, m: Any, second: Optional[Lattice] = None) -> bool:
    """
    Whether m preserves the form and maps the lattice onto itself

    Args:
        l: Lattice to test against
        m: Square matrix in ambient coordinates
        second: Optional sublattice that must be preserved as well (stabilizer test)
    """
    try:
        m = Matrix(m).applyfunc(as_rational)
    except NotRationalError:
        return False
    g = l.ambient.gram
    if m.shape != g.shape:
        return False
    if m.T * g * m != g:
        return False
    for lat in [l] + ([second] if second is not None else []):
        if lat.rank == 0:
            continue
        cols = [lat.coordinates(m * lat.basis.col(j)) for j in range(lat.rank)]
        if any(c is None or not all(x.is_integer for x in c) for c in cols):
            return False
        if abs(Matrix.hstack(*cols).det()) != 1:
            return False
    return True


def stabilizes_modulo(g: Any, sup: Lattice, sub: Lattice) -> bool:
    """
    Stabilizer test through the finite quotient sup / m·sup

    With m the commensurability exponent, g ∈ O(sup) preserves sub iff it preserves the
    image of sub in sup / m·sup.
    """
    if not is_integral_isometry(sup, g):
        return False
    m = commensurability_exponent(sub, sup)
    image_gens = _inclusion_matrix(sub, sup).row_join(sp.eye(sup.rank) * m)
    reduced = Lattice.from_generators(QuadraticSpace(sp.eye(sup.rank)), image_gens)
    g = Matrix(g).applyfunc(as_rational)
    for j in range(sub.rank):
        y = sup.coordinates(g * sub.basis.col(j))
        if not reduced.contains(y.applyfunc(lambda x: x % m)):
            return False
    return True
