import random

import pytest
import sympy as sp
from sympy import Matrix

from denseorbit.errors import DegenerateFormError, DimensionMismatchError, NotRationalError, SignatureError
from denseorbit.models.presets import preset
from denseorbit.models.quadratic_space import (
    QuadraticSpace,
    Subspace,
    clear_denominators,
    diagonal_vectors,
    diagonalize,
    inner,
    is_nondegenerate,
    orthogonal_complement,
    project,
    require_signature,
    restrict_form,
    signature,
    subspace_signature,
)
from denseorbit.utils.serialization import as_rational


@pytest.fixture
def minkowski():
    return QuadraticSpace.diagonal([1, 1, -1])


def test_signature_of_hyperbolic_plane():
    space = QuadraticSpace([[0, 1], [1, 0]])
    assert signature(space).as_tuple() == (1, 1, 0)


def test_signature_of_k3_lattice():
    lattice, _ = preset("k3")
    assert signature(lattice.ambient).as_tuple() == (3, 19, 0)


def test_diagonalize_is_a_congruence():
    space = QuadraticSpace([[2, 1, 0], [1, 0, 3], [0, 3, -1]])
    s, entries = diagonalize(space)
    assert s.T * space.gram * s == sp.diag(*entries)
    assert all(d != 0 for d in entries)


def test_degenerate_and_asymmetric_forms_are_rejected():
    with pytest.raises(DegenerateFormError):
        QuadraticSpace([[1, 1], [1, 1]])
    with pytest.raises(ValueError):
        QuadraticSpace([[1, 2], [0, 1]])
    degenerate = QuadraticSpace([[1, 1], [1, 1]], allow_degenerate=True)
    assert signature(degenerate).as_tuple() == (1, 0, 1)


def test_subspace_basis_is_canonical(minkowski):
    a = Subspace(minkowski, [[1, 1, 0], [1, -1, 0]])
    b = Subspace(minkowski, [[1, 0, 0], [0, 2, 0]])
    assert a == b
    assert a.dim == 2
    assert a.contains([3, -7, 0])
    assert not a.contains([0, 0, 1])


def test_subspace_rejects_wrong_length(minkowski):
    with pytest.raises(DimensionMismatchError):
        Subspace(minkowski, [[1, 0]])


def test_orthogonal_complement_and_projection(minkowski):
    line = Subspace(minkowski, [[1, 0, 0]])
    comp = orthogonal_complement(minkowski, line)
    assert comp == Subspace(minkowski, [[0, 1, 0], [0, 0, 1]])
    assert subspace_signature(minkowski, comp).as_tuple() == (1, 1, 0)
    assert project(minkowski, line, [1, 2, 3]) == Matrix([1, 0, 0])


def test_projection_onto_degenerate_subspace_fails(minkowski):
    null_line = Subspace(minkowski, [[1, 0, 1]])
    assert not is_nondegenerate(minkowski, null_line)
    with pytest.raises(DegenerateFormError):
        project(minkowski, null_line, [1, 0, 0])


def test_inner_is_exact(minkowski):
    v = [sp.Rational(1, 2), 0, sp.Rational(1, 3)]
    assert inner(minkowski, v, v) == sp.Rational(1, 4) - sp.Rational(1, 9)


def test_diagonal_vectors_are_orthogonal(minkowski):
    plane = Subspace(minkowski, [[1, 0, 1], [0, 1, 1]])
    vectors = diagonal_vectors(minkowski, plane)
    assert len(vectors) == 2
    (v, q), (w, r) = vectors
    assert inner(minkowski, v, w) == 0
    assert q > 0 and r < 0


def test_require_signature_names_the_subspace(minkowski):
    plane = Subspace(minkowski, [[1, 0, 0], [0, 1, 0]])
    require_signature(minkowski, plane, (2, 0, 0), "C0")
    with pytest.raises(SignatureError, match="C0"):
        require_signature(minkowski, plane, (1, 1, 0), "C0")


def test_clear_denominators():
    assert clear_denominators(Matrix([sp.Rational(1, 2), sp.Rational(1, 3)])) == Matrix([3, 2])
    assert clear_denominators(Matrix([4, -6])) == Matrix([2, -3])


def test_space_round_trip_checks_dimension(minkowski):
    data = minkowski.to_dict()
    assert QuadraticSpace.from_dict(data) == minkowski
    with pytest.raises(DimensionMismatchError):
        QuadraticSpace.from_dict({**data, "dim": 4})


def test_restrict_form():
    space = QuadraticSpace.diagonal([1, 1, -1])
    assert restrict_form(space, Subspace(space, [[0, 1, 0], [0, 0, 1]])).gram == sp.diag(1, -1)
    null = restrict_form(space, Subspace(space, [[1, 0, 1]]))
    assert null.gram == Matrix([[0]])


def _random_rational(rng, bound=5):
    return sp.Rational(rng.randint(-bound, bound), rng.randint(1, 3))


def _random_invertible(rng, n):
    while True:
        s = Matrix(n, n, lambda i, j: _random_rational(rng))
        if s.det() != 0:
            return s


def test_signature_is_invariant_under_congruence():
    rng = random.Random(11)
    base = [QuadraticSpace.diagonal([1, 1, -1]), QuadraticSpace([[0, 1, 0], [1, 0, 0], [0, 0, 2]])]
    for k in range(100):
        space = base[k % 2]
        s = _random_invertible(rng, 3)
        assert signature(QuadraticSpace(s.T * space.gram * s)) == signature(space)


def test_inner_is_bilinear_and_symmetric():
    rng = random.Random(12)
    space = QuadraticSpace([[2, 1, 0, 0], [1, -3, 0, 1], [0, 0, 1, 0], [0, 1, 0, -1]])
    for _ in range(100):
        u, v, w = ([_random_rational(rng) for _ in range(4)] for _ in range(3))
        a = _random_rational(rng)
        combo = [a * x + y for x, y in zip(v, w)]
        assert inner(space, combo, u) == a * inner(space, v, u) + inner(space, w, u)
        assert inner(space, v, u) == inner(space, u, v)


def test_double_complement():
    rng = random.Random(13)
    space = QuadraticSpace.diagonal([1, 1, 1, -1])
    checked = 0
    while checked < 100:
        w = Subspace(space, [[_random_rational(rng) for _ in range(4)] for _ in range(rng.randint(1, 3))])
        if not is_nondegenerate(space, w):
            continue
        comp = orthogonal_complement(space, w)
        assert w.dim + comp.dim == space.dim
        assert orthogonal_complement(space, comp) == w
        checked += 1


def test_as_rational_conversions():
    assert as_rational(3) == 3
    assert as_rational("-2/6") == sp.Rational(-1, 3)
    assert as_rational("0.25") == sp.Rational(1, 4)
    assert as_rational(0.1) == sp.Rational(1, 10)
    for bad in (True, "abc", sp.sqrt(2), float("nan")):
        with pytest.raises(NotRationalError):
            as_rational(bad)
