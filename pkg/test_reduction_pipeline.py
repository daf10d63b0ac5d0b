import math
import random

import pytest
from sympy import Matrix, Rational, eye

from denseorbit.core.reduction import (
    PlaneTarget,
    build_U0,
    build_W,
    complement_within,
    descend,
    dualize,
    glue_stabilizers,
    harvest_generators,
    plane_distance,
    rationalize_plane,
    split_lattice,
)
from denseorbit.errors import (
    DegenerateConfigurationError,
    DegenerateFormError,
    DimensionMismatchError,
    RationalizationError,
    SignatureError,
)
from denseorbit.models.lattice import Lattice, is_integral_isometry, reduced_basis, reflection_in_vector, saturate
from denseorbit.models.presets import preset
from denseorbit.models.quadratic_space import QuadraticSpace, Subspace, subspace_signature

TARGET = [[0, 1, 0, 0], [1, 0, 2, 1]]
# rounds to span{e1, (0,3,0,1)}, which is orthogonal to e3
NEAR_TARGET = [[1.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.3333333]]


@pytest.fixture
def minkowski():
    return preset("minkowski-3-1")


@pytest.fixture
def space(minkowski):
    return minkowski[0].ambient


def test_rationalize_exact_target(space):
    target = rationalize_plane(space, TARGET, 10000)
    assert target.kind == "++"
    assert target.plane == Subspace(space, TARGET)


def test_rationalize_float_target(space):
    target = rationalize_plane(space, [[0.5, 0.25, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0]], 10000)
    assert target.plane == Subspace(space, [[1, 0, 0, 0], [0, 1, 0, 0]])
    near = rationalize_plane(space, NEAR_TARGET, 10000)
    assert near.plane == Subspace(space, [[1, 0, 0, 0], [0, 3, 0, 1]])
    assert 0 < plane_distance(near, NEAR_TARGET) < 1e-7


def test_rationalize_refines_until_close(space):
    target = [[1.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.123456789]]
    coarse = rationalize_plane(space, target, 10)
    assert coarse.plane == Subspace(space, [[1, 0, 0, 0], [0, 8, 0, 1]])
    fine = rationalize_plane(space, target, 10, max_distance=1e-4)
    assert fine.plane == Subspace(space, [[1, 0, 0, 0], [0, 81, 0, 10]])
    assert plane_distance(fine, target) < 1e-4
    with pytest.raises(RationalizationError):
        rationalize_plane(space, target, 10, retries=1, max_distance=1e-4)


def test_rationalize_rejects_bad_targets(space):
    with pytest.raises(RationalizationError):
        rationalize_plane(space, [[1.0, 0.0, 0.0, 0.0], [2.0, 0.0, 0.0, 0.0]], 10000)
    with pytest.raises(SignatureError):
        rationalize_plane(space, [[1, 0, 0, 0], [0, 0, 0, 1]], 10000)
    with pytest.raises(DimensionMismatchError):
        rationalize_plane(space, [[1, 0, 0, 0]], 10000)


def test_plane_distance():
    a = [[1, 0, 0], [0, 1, 0]]
    b = [[1, 0, 0], [0, 1, 0.5]]
    assert plane_distance(a, a) == pytest.approx(0.0, abs=1e-12)
    assert plane_distance(a, b) == pytest.approx(math.atan(0.5))
    with pytest.raises(DimensionMismatchError):
        plane_distance(a, [[1, 0, 0, 0], [0, 1, 0, 0]])


def test_build_U0(space):
    c0 = PlaneTarget.checked(space, Subspace(space, TARGET), "++")
    u0 = build_U0(space, [1, 0, 0, 0], c0)
    assert u0.contains([1, 0, 0, 0])
    assert u0.contains_subspace(c0.plane)
    assert subspace_signature(space, u0).as_tuple() == (3, 1, 0)
    c1 = complement_within(space, c0.plane, u0)
    assert subspace_signature(space, c1).as_tuple() == (1, 1, 0)


def test_build_U0_needs_room():
    small = QuadraticSpace.diagonal([1, 1, -1])
    c0 = PlaneTarget.checked(small, Subspace(small, [[1, 0, 0], [0, 1, 0]]), "++")
    with pytest.raises(SignatureError):
        build_U0(small, [1, 0, 0], c0)


def test_dualize_swaps_kind(space):
    c0 = PlaneTarget.checked(space, Subspace(space, TARGET), "++")
    g0 = dualize(c0)
    assert g0.kind == "+-"
    assert g0.plane == Subspace(space, [[1, 0, 0, 1], [0, 0, 1, 2]])
    assert dualize(g0).plane == c0.plane


def test_build_W(space):
    g0 = PlaneTarget.checked(space, Subspace(space, [[1, 0, 0, 1], [0, 0, 1, 2]]), "+-")
    w = build_W(space, [1, 0, 0, 0], g0)
    assert w == Subspace(space, [[1, 0, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1]])
    with pytest.raises(DegenerateConfigurationError):
        build_W(space, [1, 0, 0, 1], g0)


def test_split_lattice(minkowski, space):
    lattice, _ = minkowski
    w = Subspace(space, [[1, 0, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1]])
    l0, l1, total = split_lattice(lattice, w)
    assert (l0.rank, l1.rank) == (3, 1)
    assert total == lattice
    with pytest.raises(DegenerateFormError):
        split_lattice(lattice, Subspace(space, [[1, 0, 0, 1]]))


def _assert_generators_stabilize(problem):
    b_w = Matrix(problem.back_map)
    for lift, g in zip(problem.lifts, problem.generators3):
        assert is_integral_isometry(problem.lattice, lift)
        assert Matrix(lift) * b_w == b_w * Matrix(g.matrix)


def test_descend_full_chain(minkowski):
    lattice, gens = minkowski
    problem = descend(lattice.ambient, lattice, gens, [1, 0, 0, 0], TARGET)
    stages = [s.stage for s in problem.trace.stages]
    assert stages == ["V", "C0", "C1", "U0", "L∩U0", "G0", "W", "L∩W", "generators"]
    assert problem.kind == "++"
    assert problem.w == Subspace(lattice.ambient, [[1, 0, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1]])
    assert problem.target.plane == Subspace(lattice.ambient, TARGET)
    assert problem.to_v(problem.l3) == Matrix([1, 0, 0, 0])
    assert problem.source_geodesic is not None
    assert not problem.target_geodesic.contains(list(problem.l3))
    assert problem.generators3
    _assert_generators_stabilize(problem)
    frame = problem.trace.to_frame()
    assert list(frame["stage"]) == stages
    assert frame.loc[frame["stage"] == "W", "signature"].item() == "(2,1,0)"


def test_descend_completes_W_when_l_lies_in_G0(minkowski):
    lattice, gens = minkowski
    problem = descend(lattice.ambient, lattice, gens, [0, 0, 1, 0], NEAR_TARGET)
    w_stage = next(s for s in problem.trace.stages if s.stage == "W")
    assert "completed with" in w_stage.notes
    assert problem.target_geodesic.contains(list(problem.l3))
    _assert_generators_stabilize(problem)
    assert any(label.startswith("glue stabilizer") for label in problem.provenance)


def test_descend_raw_2_1_problem():
    lattice, gens = preset("minkowski-2-1")
    problem = descend(lattice.ambient, lattice, gens, [1, 0, 0], [[1, 0, 2], [0, 1, 0]])
    assert [s.stage for s in problem.trace.stages] == ["V", "G0", "W", "L∩W", "generators"]
    assert problem.kind == "+-"
    assert problem.u0 is None
    assert problem.target.kind == "+-"
    _assert_generators_stabilize(problem)


def test_descend_errors(minkowski):
    lattice, gens = minkowski
    with pytest.raises(DimensionMismatchError):
        descend(lattice.ambient, lattice, gens, [1, 0, 0], TARGET)
    euclidean = Lattice.standard(QuadraticSpace.diagonal([1, 1, 1, 1]))
    with pytest.raises(SignatureError):
        descend(euclidean.ambient, euclidean, [], [1, 0, 0, 0], [[0, 1, 0, 0], [0, 0, 1, 0]])


def test_harvest_adds_glue_stabilizers(space, minkowski):
    lattice, _ = minkowski
    w = Subspace(space, [[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 3]])
    lw = reduced_basis(saturate(lattice, w))
    assert abs(lw.gram.det()) == 8
    harvested = harvest_generators(space, lattice, w, lw, height=3)
    glue = [h for h in harvested if h.provenance.startswith("glue stabilizer")]
    assert glue
    b_w = Matrix(lw.basis)
    for h in harvested:
        assert is_integral_isometry(lattice, h.matrix_v)
        assert Matrix(h.matrix_v) * b_w == b_w * Matrix(h.matrix_w)
    # glue elements act as ±1 on W⊥
    normal = Matrix([0, 3, 0, 1])
    assert all(Matrix(h.matrix_v) * normal in (normal, -normal) for h in glue)
    # the reflection in the negative root (0,1,0,3) of L∩W only extends with -1 on W⊥
    assert Matrix.diag(1, -1, 1, -1) in [Matrix(h.matrix_v) for h in glue]


def test_glue_stabilizer_of_a_negative_reflection(space, minkowski):
    lattice, _ = minkowski
    w = Subspace(space, [[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 3]])
    lw = saturate(lattice, w)
    c = lw.coordinates(Matrix([0, 1, 0, 3]))
    gram3 = lw.gram
    m_w = eye(3) - Rational(2, (c.T * gram3 * c)[0, 0]) * c * (c.T * gram3)
    found = glue_stabilizers(space, lattice, w, lw, [(m_w, tuple(c))])
    assert [(h, sigma) for h, sigma, _ in found] == [(m_w, -1)]
    assert found[0][2].endswith("(-1 on W⊥)")
    assert glue_stabilizers(space, lattice, w, lw, []) == []


def test_harvest_keeps_supplied_stabilizers(space, minkowski):
    lattice, gens = minkowski
    w = Subspace(space, [[1, 0, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1]])
    lw = saturate(lattice, w)
    harvested = harvest_generators(space, lattice, w, lw, gens, height=1)
    assert any(h.provenance.startswith("supplied reflection") for h in harvested)
    e2 = Matrix([0, 1, 0, 0])
    # the reflection in e2 acts trivially on W and is dropped
    assert all(Matrix(h.matrix_v) * e2 == e2 for h in harvested)
    keys = [Matrix(h.matrix_v).as_immutable() for h in harvested]
    assert len(keys) == len(set(keys))


def test_dualize_twice_is_the_identity(space):
    rng = random.Random(31)
    checked = 0
    while checked < 50:
        vectors = [[rng.randint(-5, 5) for _ in range(4)] for _ in range(2)]
        plane = Subspace(space, vectors)
        if plane.dim != 2 or subspace_signature(space, plane).as_tuple() != (2, 0, 0):
            continue
        c0 = PlaneTarget.checked(space, plane, "++")
        g0 = dualize(c0)
        assert g0.kind == "+-"
        assert dualize(g0).plane == c0.plane
        checked += 1


def test_rationalize_avoids_a_vector(space):
    plain = rationalize_plane(space, NEAR_TARGET, 10000, max_distance=0.01)
    assert plain.plane.contains([1, 0, 0, 0])
    moved = rationalize_plane(space, NEAR_TARGET, 10000, max_distance=0.01, avoid=[1, 0, 0, 0])
    assert not moved.plane.contains([1, 0, 0, 0])
    assert moved.kind == "++"
    assert plane_distance(moved, NEAR_TARGET) <= 0.01


def test_descend_keeps_l_out_of_C0(minkowski):
    lattice, gens = minkowski
    problem = descend(lattice.ambient, lattice, gens, [1, 0, 0, 0], NEAR_TARGET, {"search": {"epsilon": 0.1}})
    assert not problem.target.plane.contains([1, 0, 0, 0])
    assert plane_distance(problem.target, NEAR_TARGET) <= 0.1 / 3
    c0_stage = next(s for s in problem.trace.stages if s.stage == "C0")
    assert c0_stage.notes == "rounding perturbed to keep l out of C0"
    assert subspace_signature(lattice.ambient, problem.u0).as_tuple() == (3, 1, 0)
    _assert_generators_stabilize(problem)


def _u_vector(block, a, b):
    v = [0] * 22
    v[2 * block], v[2 * block + 1] = a, b
    return v


def test_descend_k3_problem():
    lattice, gens = preset("k3")
    assert gens == ()
    space = lattice.ambient
    l = _u_vector(0, 1, 1)
    target = [_u_vector(1, 1, 1), _u_vector(2, 1, 1)]
    supplied = [reflection_in_vector(lattice, l), reflection_in_vector(lattice, _u_vector(1, 1, 1))]
    problem = descend(space, lattice, supplied, l, target)
    assert problem.kind == "++"
    assert problem.target.plane == Subspace(space, target)
    assert subspace_signature(space, problem.u0).as_tuple() == (3, 1, 0)
    assert problem.u0.contains(l) and problem.u0.contains_subspace(problem.target.plane)
    assert subspace_signature(space, problem.w).as_tuple() == (2, 1, 0)
    assert problem.w.contains(l)
    e = Matrix(problem.back_map)
    assert e.T * space.gram * e == Matrix(problem.space3.gram)
    assert problem.to_v(problem.l3) == Matrix(l)
    _assert_generators_stabilize(problem)


def test_minkowski_2_1_harvest_is_rich():
    lattice, gens = preset("minkowski-2-1")
    assert len(gens) >= 6
    problem = descend(lattice.ambient, lattice, gens, [1, 0, 0], [[1, 0, 2], [0, 1, 0]])
    assert len(problem.generators3) >= 6
    assert problem.non_elementary
    e = Matrix(problem.back_map)
    assert e.T * lattice.ambient.gram * e == Matrix(problem.space3.gram)


def test_descend_flags_elementary_groups():
    lattice, _ = preset("minkowski-2-1")
    flip = reflection_in_vector(lattice, [1, 0, 0])
    problem = descend(
        lattice.ambient, lattice, [flip], [0, 1, 0], [[1, 0, 2], [0, 1, 0]], {"reduction": {"harvest_height": 0}}
    )
    assert len(problem.generators3) == 1
    assert not problem.non_elementary
    notes = next(s for s in problem.trace.stages if s.stage == "generators").notes
    assert notes.endswith("elementary group")


def test_descend_reduces_the_basis_of_L_cap_W(minkowski):
    lattice, gens = minkowski
    problem = descend(lattice.ambient, lattice, gens, [1, 0, 0, 0], TARGET)
    assert max(abs(x) for x in problem.back_map) == 1
    lw_stage = next(s for s in problem.trace.stages if s.stage == "L∩W")
    assert "reduced basis" in lw_stage.notes
