import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
import sympy as sp
from loguru import logger
from scipy.linalg import subspace_angles
from sympy import ImmutableMatrix, Matrix

from denseorbit.core.atlas import GeneratorSet, is_non_elementary
from denseorbit.errors import (
    DegenerateConfigurationError,
    DegenerateFormError,
    DimensionMismatchError,
    EmptyGeneratorSetError,
    RationalizationError,
    SignatureError,
)
from denseorbit.models.hyperbolic_plane import Geodesic, KleinModel
from denseorbit.models.lattice import (
    IntegralIsometry,
    Lattice,
    index_in,
    is_integral_isometry,
    lattice_sum,
    reduced_basis,
    reflection_matrix,
    saturate,
)
from denseorbit.models.presets import primitive_vectors
from denseorbit.models.quadratic_space import (
    QuadraticSpace,
    Subspace,
    diagonal_vectors,
    inner,
    is_nondegenerate,
    norm,
    orthogonal_complement,
    project,
    require_signature,
    signature,
    subspace_signature,
    vector,
)
from denseorbit.utils.serialization import as_rational, columns_to_json, format_rational

KIND_SIGNATURES = {"++": (2, 0, 0), "+-": (1, 1, 0)}


@dataclass(frozen=True)
class PlaneTarget:
    """Rational 2-plane tagged with the signature it must carry"""

    ambient: QuadraticSpace
    plane: Subspace
    kind: str

    @classmethod
    def checked(cls, ambient: QuadraticSpace, plane: Subspace, kind: str) -> "PlaneTarget":
        if kind not in KIND_SIGNATURES:
            raise ValueError(f"Unknown plane kind '{kind}'")
        if plane.dim != 2:
            raise DimensionMismatchError(f"Target must be a 2-plane, got dimension {plane.dim}")
        require_signature(ambient, plane, KIND_SIGNATURES[kind], f"{kind} plane")
        return cls(ambient=ambient, plane=plane, kind=kind)


@dataclass
class StageRecord:
    stage: str
    basis: List[List[str]]
    signature: str
    notes: str = ""


@dataclass
class PipelineTrace:
    """Ordered audit record of the reduction stages"""

    stages: List[StageRecord] = field(default_factory=list)

    def record(self, stage: str, space: QuadraticSpace, w: Optional[Subspace] = None, notes: str = "") -> None:
        if w is None:
            self.stages.append(StageRecord(stage=stage, basis=[], signature="", notes=notes))
        else:
            sig = str(subspace_signature(space, w)) if w.dim else "(0,0,0)"
            self.stages.append(StageRecord(stage, columns_to_json(Matrix(w.basis)), sig, notes))
        logger.info(f"Pipeline stage {stage}: {self.stages[-1].signature} {notes}".rstrip())

    def to_dict(self) -> Dict[str, Any]:
        return {
            "stages": [
                {"stage": s.stage, "basis": s.basis, "signature": s.signature, "notes": s.notes}
                for s in self.stages
            ]
        }

    def to_frame(self) -> pd.DataFrame:
        rows = [
            {
                "stage": s.stage,
                "dim": len(s.basis),
                "signature": s.signature,
                "basis": ";".join(",".join(v) for v in s.basis),
                "notes": s.notes,
            }
            for s in self.stages
        ]
        return pd.DataFrame(rows, columns=["stage", "dim", "signature", "basis", "notes"])


@dataclass(frozen=True)
class HarvestedGenerator:
    """Isometry of V stabilizing W, with its integral matrix in L∩W coordinates"""

    matrix_v: ImmutableMatrix
    matrix_w: ImmutableMatrix
    provenance: str


@dataclass
class HyperbolicProblem:
    """
    The (2,1) problem produced by the descent

    All hyperbolic data (space3, lattice3, generators3, geodesics, l3) is written in the
    basis of L∩W; back_map sends those coordinates into V.
    """

    ambient: QuadraticSpace
    lattice: Lattice
    l: Matrix
    target: PlaneTarget
    space3: QuadraticSpace
    lattice3: Lattice
    generators3: List[IntegralIsometry]
    lifts: List[ImmutableMatrix]
    source_geodesic: Optional[Geodesic]
    target_geodesic: Geodesic
    back_map: ImmutableMatrix
    l3: Matrix
    model: KleinModel
    u0: Optional[Subspace] = None
    w: Optional[Subspace] = None
    raw_target: Any = None
    trace: PipelineTrace = field(default_factory=PipelineTrace)
    non_elementary: bool = True

    @property
    def kind(self) -> str:
        """Kind of the planes certified in V: "++" after a full descent, "+-" for raw (2,1) input"""
        return "++" if self.u0 is not None else "+-"

    @property
    def provenance(self) -> List[str]:
        return [g.label for g in self.generators3]

    def to_v(self, x: Any) -> Matrix:
        """Map L∩W coordinates into V"""
        return Matrix(self.back_map) * vector(x)


def plane_distance(a: Any, b: Any) -> float:
    """Largest principal angle between two subspaces under the coordinate Euclidean product"""
    fa, fb = _float_columns(a), _float_columns(b)
    if fa.shape[0] != fb.shape[0]:
        raise DimensionMismatchError("Subspaces live in spaces of different dimension")
    return float(np.max(subspace_angles(fa, fb)))


def _float_columns(x: Any) -> np.ndarray:
    if isinstance(x, PlaneTarget):
        x = x.plane
    if isinstance(x, Subspace):
        return np.array(x.basis.tolist(), dtype=float)
    if isinstance(x, sp.MatrixBase):
        return np.array(x.tolist(), dtype=float)
    # list of vectors
    return np.array([[float(as_rational(c)) if not isinstance(c, float) else c for c in v] for v in x]).T


def _is_exact_vectors(vectors: Sequence[Sequence[Any]]) -> bool:
    return not any(isinstance(c, (float, np.floating)) for v in vectors for c in v)


def _float_echelon(a: np.ndarray) -> Tuple[np.ndarray, List[int]]:
    """Reduced row echelon form with full pivoting; pivot columns become unit columns"""
    a = a.astype(float).copy()
    rows = a.shape[0]
    pivots: List[int] = []
    for i in range(rows):
        sub = np.abs(a[i:, :])
        sub[:, pivots] = 0.0
        r, c = np.unravel_index(int(np.argmax(sub)), sub.shape)
        if sub[r, c] < 1e-14:
            raise RationalizationError("Target vectors are linearly dependent")
        r += i
        a[[i, r]] = a[[r, i]]
        a[i] /= a[i, c]
        for k in range(rows):
            if k != i:
                a[k] -= a[k, c] * a[i]
        pivots.append(int(c))
    for i, c in enumerate(pivots):
        a[:, c] = 0.0
        a[i, c] = 1.0
    return a, pivots


def _round_rows(echelon: np.ndarray, bound: int) -> List[List[Fraction]]:
    return [[Fraction(float(x)).limit_denominator(bound) for x in row] for row in echelon]


def _bound_schedule(denom_bound: int, retries: int, max_distance: Optional[float]) -> List[int]:
    """
    Denominator bounds to try, in order

    Without a distance budget the bound is used as given and doubled on each retry.
    With one, bounds double from 1 up to a ceiling that starts at `denom_bound` and grows
    tenfold per retry, so the first acceptable plane has the smallest denominators.
    """
    if max_distance is None:
        return [denom_bound * 2**k for k in range(retries)]
    bounds: List[int] = []
    ceiling = denom_bound
    for _ in range(retries):
        bound = 1
        while bound < ceiling:
            if not bounds or bound > bounds[-1]:
                bounds.append(bound)
            bound *= 2
        if not bounds or ceiling > bounds[-1]:
            bounds.append(ceiling)
        ceiling *= 10
    return bounds


def rationalize_plane(
    space: QuadraticSpace,
    target: Any,
    denom_bound: int,
    kind: str = "++",
    retries: int = 3,
    max_distance: Optional[float] = None,
    avoid: Optional[Any] = None,
) -> PlaneTarget:
    """
    Rational plane near a float target, with the exact signature of its kind

    Entries of the echelon form are rounded to the best rationals under a denominator
    bound (see `_bound_schedule`); the first rounding with the right signature, within
    `max_distance` of the target and not containing `avoid` is returned.

    Args:
        space: Ambient quadratic space
        target: Subspace, PlaneTarget or two vectors (floats are rationalized)
        denom_bound: Denominator bound of the rounding
        kind: "++" or "+-"
        retries: Number of bound ceilings tried
        max_distance: Largest principal angle allowed between the rounded plane and the target
        avoid: Vector the rounded plane must not contain; the target is perturbed by a
            fixed pattern of size max_distance/4 before rounding
    """
    if isinstance(target, PlaneTarget):
        return PlaneTarget.checked(space, target.plane, kind)
    if isinstance(target, Subspace):
        return PlaneTarget.checked(space, target, kind)
    vectors = [list(v) for v in target]
    if len(vectors) != 2:
        raise DimensionMismatchError(f"Target must be spanned by 2 vectors, got {len(vectors)}")
    if _is_exact_vectors(vectors):
        return PlaneTarget.checked(space, Subspace(space, vectors), kind)

    raw = np.array(vectors, dtype=float)
    if avoid is not None:
        size = (max_distance if max_distance is not None else 1.0 / denom_bound) / 4
        pattern = np.random.default_rng(0).uniform(-1.0, 1.0, size=raw.shape)
        raw = raw + size * pattern * np.linalg.norm(raw, axis=1, keepdims=True)
    echelon, _ = _float_echelon(raw)
    bounds = _bound_schedule(int(denom_bound), retries, max_distance)
    for bound in bounds:
        plane = Subspace(space, _round_rows(echelon, bound))
        if plane.dim != 2 or subspace_signature(space, plane).as_tuple() != KIND_SIGNATURES[kind]:
            logger.debug(f"Rounded plane with bound {bound} misses signature {kind}")
            continue
        if avoid is not None and plane.contains(avoid):
            logger.debug(f"Rounded plane with bound {bound} contains {list(vector(avoid))}")
            continue
        distance = plane_distance(plane, vectors)
        if max_distance is None or distance <= max_distance:
            logger.debug(f"Rationalized target with denominators <= {bound}, distance {distance:.3e}")
            return PlaneTarget(ambient=space, plane=plane, kind=kind)
        logger.debug(f"Rounded plane with bound {bound} lies {distance:.3e} from the target")
    raise RationalizationError(
        f"No rational {kind} plane found with denominators up to {bounds[-1]}; use a larger denom_bound"
    )


def build_U0(space: QuadraticSpace, l: Any, c0: PlaneTarget) -> Subspace:
    """Rational (3,1) subspace C₀ ⊕ C₁ containing l and C₀"""
    sig = signature(space)
    if sig.plus < 3 or sig.minus < 1 or sig.zero:
        raise SignatureError(f"Ambient signature {sig} needs at least 3 positive and 1 negative squares")
    if c0.kind != "++":
        raise SignatureError("C0 must be a ++ plane")
    l = vector(l)
    c1 = l - project(space, c0.plane, l)
    comp = orthogonal_complement(space, c0.plane)

    if all(x == 0 for x in c1):
        # l ∈ C₀: any (+,−) plane of C₀⊥ will do
        diag = diagonal_vectors(space, comp)
        pos = next(v for v, q in diag if q > 0)
        neg = next(v for v, q in diag if q < 0)
        logger.warning("l lies in C0; completing U0 with an arbitrary (+,-) plane of C0-perp")
        c1_plane = Subspace(space, [pos, neg])
    else:
        q = norm(space, c1)
        if q == 0:
            partner = next(v for v, _ in diagonal_vectors(space, comp) if inner(space, c1, v) != 0)
        else:
            rest = orthogonal_complement(space, c0.plane.sum(c1))
            wanted_negative = q > 0
            partner = next(v for v, n in diagonal_vectors(space, rest) if bool(n < 0) == wanted_negative and n != 0)
        c1_plane = Subspace(space, [c1, partner])

    require_signature(space, c1_plane, (1, 1, 0), "C1")
    u0 = c0.plane.sum(c1_plane)
    require_signature(space, u0, (3, 1, 0), "U0")
    return u0


def split_lattice(l: Lattice, w: Subspace) -> Tuple[Lattice, Lattice, Lattice]:
    """(W ∩ L, W⊥ ∩ L, their sum)"""
    if not is_nondegenerate(l.ambient, w):
        raise DegenerateFormError("Cannot split a lattice along a degenerate subspace")
    l0 = saturate(l, w)
    l1 = saturate(l, orthogonal_complement(l.ambient, w))
    return l0, l1, lattice_sum(l0, l1)


def dualize(p: PlaneTarget, within: Optional[Subspace] = None) -> PlaneTarget:
    """Orthogonal complement of a plane inside a (3,1) space, swapping ++ and +-"""
    space = p.ambient
    u = within if within is not None else Subspace.whole(space)
    require_signature(space, u, (3, 1, 0), "Dualization ambient")
    if not u.contains_subspace(p.plane):
        raise DimensionMismatchError("Plane is not contained in the dualization ambient")
    dual = complement_within(space, p.plane, u)
    return PlaneTarget.checked(space, dual, "+-" if p.kind == "++" else "++")


def build_W(space: QuadraticSpace, l: Any, g0: PlaneTarget) -> Subspace:
    """span{l, G₀}, of signature (2,1)"""
    if g0.kind != "+-":
        raise SignatureError("G0 must be a +- plane")
    w = g0.plane.sum(vector(l))
    if w.dim != 3:
        raise DegenerateConfigurationError("l lies in G0; span{l, G0} is only 2-dimensional")
    require_signature(space, w, (2, 1, 0), "W")
    return w


def _extend(b_w: Matrix, perp: Matrix, frame_inv: Matrix, m_w: Matrix, sign: int = 1) -> Matrix:
    """V-matrix acting as m_w on W (in the basis b_w) and as ±1 on W⊥"""
    return (b_w * m_w).row_join(perp * sign) * frame_inv


def _local_reflections(gram3: Matrix, height: int, cap: int) -> List[Tuple[Matrix, Tuple[int, ...]]]:
    """Reflections of L∩W in non-isotropic vectors of bounded height, shortest first"""
    rank = gram3.rows
    local = []
    for coords in sorted(primitive_vectors(rank, height), key=lambda c: (max(abs(x) for x in c), c)):
        c = Matrix(coords)
        q = (c.T * gram3 * c)[0, 0]
        if q == 0:
            continue
        m_w = sp.eye(rank) - (2 / q) * c * (c.T * gram3)
        if all(x.is_integer for x in m_w):
            local.append((m_w, coords))
            if len(local) >= cap:
                break
    return local


def _glue_key(classes: np.ndarray, modulus: int) -> Tuple[Tuple[int, ...], int]:
    """Canonical form of a class tuple up to sign: (key, δ) with classes ≡ δ·key"""
    plus = tuple(int(x) % modulus for x in classes.ravel())
    minus = tuple(-int(x) % modulus for x in classes.ravel())
    return (plus, 1) if plus <= minus else (minus, -1)


def _reduce_word(word: Sequence[int]) -> Tuple[int, ...]:
    out: List[int] = []
    for letter in word:
        if out and out[-1] == letter:
            out.pop()
        else:
            out.append(letter)
    return tuple(out)


def glue_stabilizers(
    space: QuadraticSpace,
    lattice: Lattice,
    w: Subspace,
    lw: Lattice,
    local: Sequence[Tuple[Matrix, Tuple[int, ...]]],
    orbit_cap: int = 500,
    element_cap: int = 24,
) -> List[Tuple[Matrix, int, str]]:
    """
    Elements h of the group generated by `local` that extend to isometries of L

    Each basis vector x of L splits as u + p with u ∈ W and p ∈ W⊥; the classes of the u
    modulo L∩W form a tuple T. If h·T ≡ σ·T (σ = ±1), h on W and σ on W⊥ maps L onto L.
    The orbit of T (up to sign) is walked breadth first with a transversal, and Schreier
    elements t_b⁻¹·s·t_a give the stabilizer.

    Returns:
        (h in L∩W coordinates, σ, provenance) triples; ±1 is skipped
    """
    if lw.rank == 0 or not local:
        return []
    rank = lw.rank
    b_l = Matrix(lattice.basis)
    coords = [lw.coordinates(project(space, w, b_l.col(j))) for j in range(b_l.cols)]
    modulus = math.lcm(*[int(as_rational(x).q) for c in coords for x in c])
    base = np.array([[int(as_rational(x) * modulus) for x in c] for c in coords], dtype=object)
    matrices = [np.array(m.tolist(), dtype=object) for m, _ in local]
    ident = sp.eye(rank)

    start, eps0 = _glue_key(base, modulus)
    transversal: Dict[Tuple[int, ...], Tuple[Tuple[int, ...], int]] = {start: ((), eps0)}
    order = [start]
    found: List[Tuple[Matrix, int, str]] = []
    seen = set()
    i = 0
    while i < len(order) and len(found) < element_cap:
        key = order[i]
        word_a, eps_a = transversal[key]
        rep = np.array(key, dtype=object).reshape(base.shape)
        for s, m in enumerate(matrices):
            image, delta = _glue_key(rep.dot(m.T), modulus)
            if image not in transversal:
                if len(transversal) < orbit_cap:
                    transversal[image] = ((s,) + word_a, eps_a * delta)
                    order.append(image)
                continue
            word_b, eps_b = transversal[image]
            word = _reduce_word(tuple(reversed(word_b)) + (s,) + word_a)
            if not word or word in seen:
                continue
            seen.add(word)
            h = ident
            for letter in word:
                h = h * local[letter][0]
            if h == ident or h == -ident:
                continue
            sigma = eps_a * delta * eps_b
            label = "·".join(f"s{list(local[letter][1])}" for letter in word)
            found.append((h, sigma, f"glue stabilizer {label} ({'+' if sigma > 0 else '-'}1 on W⊥)"))
            if len(found) >= element_cap:
                break
        i += 1
    logger.debug(f"Glue orbit of {len(transversal)} classes (modulus {modulus}) gave {len(found)} elements")
    return found


def harvest_generators(
    space: QuadraticSpace,
    lattice: Lattice,
    w: Subspace,
    lw: Lattice,
    supplied: Sequence[IntegralIsometry] = (),
    height: int = 3,
    orbit_cap: int = 500,
    local_cap: int = 48,
) -> List[HarvestedGenerator]:
    """
    Isometries of (V, L) stabilizing W

    Three sources, in order:
    - reflections in primitive positive vectors of L∩W (coordinates bounded by `height`
      in the basis of L∩W) that are integral on all of L;
    - glue stabilizers: products of reflections of L∩W that preserve the classes of L
      modulo L∩W ⊕ L∩W⊥ up to sign, extended by ±1 on W⊥ (see `glue_stabilizers`);
    - supplied generators that stabilize W.
    """
    b_w = Matrix(lw.basis)
    gram3 = lw.gram
    b_l = Matrix(lattice.basis)
    gens: List[HarvestedGenerator] = []
    seen = set()

    def add(m_v: Matrix, m_w: Matrix, provenance: str) -> None:
        key = ImmutableMatrix(m_v)
        if key in seen or m_w == sp.eye(lw.rank):
            return
        seen.add(key)
        gens.append(HarvestedGenerator(key, ImmutableMatrix(m_w), provenance))

    local = _local_reflections(gram3, height, local_cap)
    for m_w, coords in local:
        c = Matrix(coords)
        q = (c.T * gram3 * c)[0, 0]
        if q <= 0:
            continue
        r = b_w * c
        pairings = b_l.T * space.gram * r * 2 / q
        if not all(x.is_integer for x in pairings):
            continue
        add(reflection_matrix(space, r), m_w, f"reflection r={list(coords)} in L∩W")
    n_reflections = len(gens)

    w_perp = orthogonal_complement(space, w)
    if w_perp.dim:
        perp = Matrix(w_perp.basis)
        frame_inv = b_w.row_join(perp).inv()
        for m_w, sigma, provenance in glue_stabilizers(space, lattice, w, lw, local, orbit_cap):
            m_v = _extend(b_w, perp, frame_inv, m_w, sigma)
            if is_integral_isometry(lattice, m_v):
                add(m_v, m_w, provenance)
            else:
                logger.warning(f"Discarded {provenance}: extension is not integral on L")
    n_glue = len(gens) - n_reflections

    for g in supplied:
        m_v = Matrix(g.matrix)
        image = m_v * b_w
        if not all(w.contains(image.col(j)) for j in range(image.cols)):
            continue
        m_w = Matrix.hstack(*[lw.coordinates(image.col(j)) for j in range(image.cols)])
        add(m_v, m_w, f"supplied {g.label}".strip())

    logger.info(
        f"Harvested {n_reflections} reflections, {n_glue} glue stabilizers and "
        f"{len(gens) - n_reflections - n_glue} supplied generators"
    )
    return gens


def _is_float_target(target: Any) -> bool:
    if isinstance(target, (PlaneTarget, Subspace)):
        return False
    return not _is_exact_vectors([list(v) for v in target])


def descend(
    v: QuadraticSpace,
    l_lattice: Lattice,
    gens: Sequence[IntegralIsometry],
    l: Any,
    target: Any,
    cfg: Optional[Dict[str, Any]] = None,
) -> HyperbolicProblem:
    """
    Run the reduction chain down to a hyperbolic-plane problem

    For an ambient of signature (2,1) the target is a +- plane and the chain starts at
    W = V. Otherwise: rationalize → U₀ → split → dualize in U₀ → W → split.

    Args:
        v: Ambient space V
        l_lattice: Lattice L of V
        gens: Supplied generators of Γ
        l: The polarization vector
        target: Target plane (Subspace, PlaneTarget or two float/rational vectors)
        cfg: Configuration dict with [reduction] and [numerics] sections; [search] epsilon bounds the rationalization error
    """
    cfg = cfg or {}
    reduction_cfg = cfg.get("reduction", {})
    denom_bound = int(reduction_cfg.get("denom_bound", 10000))
    height = int(reduction_cfg.get("harvest_height", 3))
    orbit_cap = int(reduction_cfg.get("glue_orbit_cap", 500))
    epsilon = cfg.get("search", {}).get("epsilon")
    # rationalization may use a third of the distance budget
    max_distance = float(epsilon) / 3 if epsilon else None
    l = vector(l)
    if l.rows != v.dim:
        raise DimensionMismatchError(f"l has length {l.rows}, space has dim {v.dim}")

    trace = PipelineTrace()
    sig = signature(v)
    trace.record("V", v, Subspace.whole(v), notes=f"lattice rank {l_lattice.rank}")
    u0: Optional[Subspace] = None

    try:
        if sig.as_tuple() == (2, 1, 0):
            g0 = rationalize_plane(v, target, denom_bound, kind="+-", max_distance=max_distance)
            trace.record("G0", v, g0.plane, notes="(2,1) input; no descent needed")
            w = Subspace.whole(v)
            trace.record("W", v, w)
            if not w.contains(l):
                raise DimensionMismatchError("l is not a vector of V")
        elif sig.plus >= 3 and sig.minus >= 1 and sig.zero == 0:
            c0 = rationalize_plane(v, target, denom_bound, kind="++", max_distance=max_distance)
            c0_notes = ""
            if c0.plane.contains(l) and _is_float_target(target):
                try:
                    c0 = rationalize_plane(v, target, denom_bound, kind="++", max_distance=max_distance, avoid=l)
                    c0_notes = "rounding perturbed to keep l out of C0"
                except RationalizationError as e:
                    logger.warning(f"Could not round the target away from l: {str(e)}")
            trace.record("C0", v, c0.plane, notes=c0_notes)
            u0 = build_U0(v, l, c0)
            trace.record("C1", v, complement_within(v, c0.plane, u0))
            trace.record("U0", v, u0)
            l0, _, lsum = split_lattice(l_lattice, u0)
            trace.record("L∩U0", v, l0.span, notes=f"rank {l0.rank}, index of L0+L1 in L {index_in(lsum, l_lattice)}")
            g0 = dualize(c0, within=u0)
            trace.record("G0", v, g0.plane)
            try:
                w = build_W(v, l, g0)
            except DegenerateConfigurationError:
                extra = c0.plane.vectors[0]
                w = g0.plane.sum(extra)
                require_signature(v, w, (2, 1, 0), "W")
                logger.warning("l lies in G0; W completed with a vector of C0")
                trace.record("W", v, w, notes=f"completed with {[format_rational(x) for x in extra]}")
            else:
                trace.record("W", v, w)
        else:
            raise SignatureError(f"Ambient signature {sig} is neither (2,1) nor (s+>=3, s->=1)")

        lw = reduced_basis(split_lattice(l_lattice, w)[0])
        trace.record("L∩W", v, lw.span, notes=f"rank {lw.rank}, reduced basis")
        harvested = harvest_generators(v, l_lattice, w, lw, gens, height, orbit_cap)
        if not harvested:
            raise EmptyGeneratorSetError(
                f"No isometries stabilizing W found; increase reduction.harvest_height (now {height})"
            )

        space3 = QuadraticSpace(lw.gram)
        lattice3 = Lattice.standard(space3)
        generators3 = [IntegralIsometry.checked(lattice3, h.matrix_w, label=h.provenance) for h in harvested]
        model = KleinModel(space3, cfg.get("numerics"))
        non_elementary = is_non_elementary(GeneratorSet(model, [g.matrix for g in generators3]))
        notes = f"{len(harvested)} generators"
        if not non_elementary:
            notes += "; elementary group"
            logger.warning(
                f"The {len(harvested)} harvested generators act as an elementary group on the hyperbolic plane; "
                f"the search can reach only special targets (raise reduction.harvest_height, now {height})"
            )
        trace.record("generators", v, notes=notes)

        l3 = lw.coordinates(l)
        if l3 is None:
            raise DimensionMismatchError("l does not lie in W")
        g0_coords = [lw.coordinates(x) for x in g0.plane.vectors]
        target_geodesic = Geodesic.from_plane(model, Subspace(space3, g0_coords))
        source = Geodesic.from_normal(model, list(l3)) if norm(space3, l3) > 0 else None
    except Exception as e:
        logger.error(f"Error in reduction pipeline: {str(e)}")
        raise

    return HyperbolicProblem(
        ambient=v,
        lattice=l_lattice,
        l=l,
        target=g0 if u0 is None else c0,
        space3=space3,
        lattice3=lattice3,
        generators3=generators3,
        lifts=[h.matrix_v for h in harvested],
        source_geodesic=source,
        target_geodesic=target_geodesic,
        back_map=ImmutableMatrix(lw.basis),
        l3=l3,
        model=model,
        u0=u0,
        w=w,
        raw_target=target,
        trace=trace,
        non_elementary=non_elementary,
    )


def complement_within(space: QuadraticSpace, p: Subspace, u: Subspace) -> Subspace:
    """Vectors of u orthogonal to p"""
    basis = Matrix(u.basis)
    coeffs = (Matrix(p.basis).T * space.gram * basis).nullspace()
    return Subspace(space, [basis * c for c in coeffs])
