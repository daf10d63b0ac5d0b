import math
import random

import pytest
import sympy as sp
from sympy import Matrix

from denseorbit.errors import IsotropicVectorError, NotContainedError, NotIntegralError, UnknownPresetError
from denseorbit.models.lattice import (
    IntegralIsometry,
    Lattice,
    commensurability_exponent,
    elementary_divisors,
    hnf_basis,
    index_in,
    integer_kernel,
    intersect,
    is_integral_isometry,
    is_primitive_sublattice,
    lattice_sum,
    reflection_in_vector,
    reduced_basis,
    reflection_matrix,
    saturate,
    stabilizes_modulo,
    xgcd,
)
from denseorbit.models.presets import preset
from denseorbit.models.quadratic_space import QuadraticSpace, Subspace, orthogonal_complement


@pytest.fixture
def standard():
    return Lattice.standard(QuadraticSpace.diagonal([1, 1, -1]))


def test_xgcd():
    g, x, y = xgcd(240, 46)
    assert g == 2
    assert 240 * x + 46 * y == 2
    assert xgcd(0, -5)[0] == 5


def test_hnf_basis_of_dependent_generators():
    lattice_gens = Matrix([[2, 4, 6], [0, 2, 2]])
    basis = hnf_basis(lattice_gens)
    assert basis.cols == 2
    # same group: index of each in the other is 1
    assert abs(basis.det()) == abs(Matrix([[2, 4], [0, 2]]).det())
    assert all(x.is_integer for x in basis.solve(lattice_gens.col(2)))


def test_integer_kernel():
    kernel = integer_kernel(Matrix([[1, 2, 3]]))
    assert kernel.cols == 2
    assert Matrix([[1, 2, 3]]) * kernel == Matrix.zeros(1, 2)


def test_coordinates_and_containment(standard):
    sub = Lattice(standard.ambient, [[2, 0, 0], [0, 1, 0], [0, 0, 1]])
    assert sub.contains([4, 3, -1])
    assert not sub.contains([1, 0, 0])
    assert sub.coordinates([1, 0, 0]) == Matrix([sp.Rational(1, 2), 0, 0])
    assert standard.contains_lattice(sub)
    assert not sub.contains_lattice(standard)


def test_index_and_exponent(standard):
    sub = Lattice(standard.ambient, [[2, 0, 0], [0, 3, 0], [0, 0, 1]])
    assert index_in(sub, standard) == 6
    assert sorted(elementary_divisors(sub, standard)) == [1, 1, 6]
    assert commensurability_exponent(sub, standard) == 6
    assert index_in(standard, standard) == 1
    with pytest.raises(NotContainedError):
        index_in(standard, sub)


def test_index_of_smaller_rank_is_infinite(standard):
    line = saturate(standard, Subspace(standard.ambient, [[1, 1, 0]]))
    assert line.rank == 1
    assert index_in(line, standard) == math.inf


def test_saturate_and_primitivity(standard):
    plane = Subspace(standard.ambient, [[2, 2, 0], [0, 0, 3]])
    sat = saturate(standard, plane)
    assert sat.rank == 2
    assert sat.contains([1, 1, 0]) and sat.contains([0, 0, 1])
    assert is_primitive_sublattice(sat, standard)
    thin = Lattice(standard.ambient, [[2, 2, 0], [0, 0, 1]])
    assert not is_primitive_sublattice(thin, standard)


def test_split_sum_of_unimodular_lattice(standard):
    w = Subspace(standard.ambient, [[1, 1, 1]])
    l0 = saturate(standard, w)
    l1 = saturate(standard, orthogonal_complement(standard.ambient, w))
    total = lattice_sum(l0, l1)
    assert total.rank == 3
    # ⟨r,r⟩ = 1 splits L off orthogonally
    assert index_in(total, standard) == 1


def test_intersect(standard):
    a = Lattice(standard.ambient, [[2, 0, 0], [0, 1, 0], [0, 0, 1]])
    b = Lattice(standard.ambient, [[1, 0, 0], [0, 3, 0], [0, 0, 1]])
    meet = intersect(a, b)
    assert meet == Lattice(standard.ambient, [[2, 0, 0], [0, 3, 0], [0, 0, 1]])


def test_reflections(standard):
    m = reflection_matrix(standard.ambient, [1, 1, 1])
    assert m == Matrix([[-1, -2, 2], [-2, -1, 2], [-2, -2, 3]])
    assert is_integral_isometry(standard, m)
    iso = reflection_in_vector(standard, [2, 1, 2])
    assert iso.matrix * iso.matrix == sp.eye(3)
    with pytest.raises(NotIntegralError):
        reflection_in_vector(standard, [1, 2, 0])
    with pytest.raises(IsotropicVectorError):
        reflection_matrix(standard.ambient, [1, 0, 1])


def test_integral_isometry_checks(standard):
    with pytest.raises(NotIntegralError):
        IntegralIsometry.checked(standard, [[2, 0, 0], [0, 1, 0], [0, 0, 1]])
    rotation = IntegralIsometry.checked(standard, [[0, -1, 0], [1, 0, 0], [0, 0, 1]], label="rotation")
    assert rotation.label == "rotation"
    assert rotation.lattice_matrix == Matrix([[0, -1, 0], [1, 0, 0], [0, 0, 1]])


def test_stabilizer_through_finite_quotient(standard):
    sub = Lattice(standard.ambient, [[2, 0, 0], [0, 1, 0], [0, 0, 1]])
    flip_x = reflection_matrix(standard.ambient, [1, 0, 0])
    swap = reflection_matrix(standard.ambient, [1, -1, 0])
    assert stabilizes_modulo(flip_x, standard, sub)
    assert is_integral_isometry(standard, flip_x, second=sub)
    assert not stabilizes_modulo(swap, standard, sub)
    assert not is_integral_isometry(standard, swap, second=sub)


def test_lattice_dict_round_trip(standard):
    gens = [reflection_in_vector(standard, [1, 0, 0])]
    lattice, restored = Lattice.from_dict(standard.to_dict(gens))
    assert lattice == standard
    assert restored[0].matrix == gens[0].matrix
    assert restored[0].label == "supplied #0"


def test_presets():
    lattice, gens = preset("minkowski-2-1")
    assert lattice.rank == 3
    assert gens
    assert all(is_integral_isometry(lattice, g.matrix) for g in gens)
    assert preset("minkowski-2-1") is preset("minkowski-2-1")
    with pytest.raises(UnknownPresetError):
        preset("e7")


def test_reflection_involution_and_gram_preservation():
    rng = random.Random(21)
    lattice, _ = preset("minkowski-3-1")
    gram = lattice.ambient.gram
    checked = 0
    while checked < 100:
        r = [rng.randint(-4, 4) for _ in range(4)]
        if sum(x * x for x in r[:3]) - r[3] ** 2 == 0:
            continue
        m = reflection_matrix(lattice.ambient, r)
        assert m * m == sp.eye(4)
        assert m.T * gram * m == gram
        assert m * Matrix(r) == -Matrix(r)
        checked += 1


def test_index_is_multiplicative():
    rng = random.Random(22)
    standard = Lattice.standard(QuadraticSpace.diagonal([1, 1, -1]))
    for _ in range(100):
        a = Matrix(3, 3, lambda i, j: rng.randint(-3, 3))
        b = Matrix(3, 3, lambda i, j: rng.randint(-3, 3))
        if a.det() == 0 or b.det() == 0:
            continue
        middle = Lattice(standard.ambient, a)
        inner_lattice = Lattice(standard.ambient, a * b)
        assert index_in(inner_lattice, standard) == index_in(inner_lattice, middle) * index_in(middle, standard)
        assert is_primitive_sublattice(saturate(standard, middle.span), standard)


def test_saturation_is_torsion_free():
    rng = random.Random(23)
    standard = Lattice.standard(QuadraticSpace.diagonal([1, 1, 1, -1]))
    checked = 0
    while checked < 100:
        vectors = [[rng.randint(-6, 6) for _ in range(4)] for _ in range(2)]
        plane = Subspace(standard.ambient, vectors)
        if plane.dim != 2:
            continue
        sat = saturate(standard, plane)
        assert sat.rank == 2
        assert sat.span == plane
        assert all(d == 1 for d in elementary_divisors(sat, standard))
        checked += 1


def test_saturate_is_idempotent(standard):
    line = saturate(standard, Subspace(standard.ambient, [[2, 4, 0]]))
    assert line == Lattice(standard.ambient, [[1, 2, 0]])
    assert saturate(standard, line.span) == line
    plane = saturate(standard, Subspace(standard.ambient, [[3, 0, 3], [0, 2, 4]]))
    assert saturate(standard, plane.span) == plane


def test_intersect_with_index_two_sublattice():
    square = Lattice.standard(QuadraticSpace.diagonal([1, -1]))
    diagonal = Lattice(square.ambient, [[1, 1], [1, -1]])
    meet = intersect(square, diagonal)
    assert meet == diagonal
    assert index_in(meet, square) == abs(Matrix(diagonal.basis).det()) == 2
    assert sorted(elementary_divisors(meet, square)) == [1, 2]


def test_isometries_stay_integral_on_scaled_lattices():
    lattice, gens = preset("minkowski-3-1")
    for m in range(1, 6):
        scaled = lattice.scaled(m)
        assert all(is_integral_isometry(scaled, g.matrix) for g in gens)
        assert all(is_integral_isometry(lattice, g.matrix, second=scaled) for g in gens)


def test_reduced_basis_keeps_the_lattice(standard):
    skewed = Lattice(standard.ambient, [[1, 0, 0], [7, 1, 0], [13, 5, 1]])
    assert skewed == standard
    reduced = reduced_basis(skewed)
    assert reduced == standard
    assert abs(Matrix(reduced.basis).det()) == 1
    assert max(abs(x) for x in reduced.basis) <= 2

    sub = Lattice(standard.ambient, [[2, 0, 0], [10, 3, 0]])
    assert reduced_basis(sub) == sub
    line = saturate(standard, Subspace(standard.ambient, [[1, 1, 0]]))
    assert reduced_basis(line) is line
