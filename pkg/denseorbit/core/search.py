import dataclasses
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Dict, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np
import sympy as sp
from loguru import logger
from sympy import Matrix

from denseorbit.core.atlas import AtlasEntry, GeneratorSet, GroupWord
from denseorbit.core.certificate import STATUS_BEST_EFFORT, STATUS_OK, Certificate
from denseorbit.core.reduction import (
    HyperbolicProblem,
    PlaneTarget,
    complement_within,
    descend,
    plane_distance,
)
from denseorbit.errors import (
    DenseOrbitError,
    DynamicsError,
    FixedPointError,
    RationalizationError,
    SearchExhaustedError,
)
from denseorbit.models import exact_matrix as xm
from denseorbit.models.hyperbolic_plane import (
    TWO_PI,
    BoundaryPoint,
    Geodesic,
    Isometry,
    IsometryClass,
    KleinModel,
    angle_distance,
    boundary_distance,
    classify_isometry,
    move_boundary_point,
    reflect_boundary_point,
    standard_action,
)
from denseorbit.models.quadratic_space import Subspace, diagonal_vectors, inner, norm, subspace_signature


@dataclass(frozen=True)
class SearchConfig:
    max_word_length: int = 20
    power_cap: int = 60
    epsilon: float = 0.01
    arc_width: Optional[float] = None
    rng_seed: int = 0
    orbit_node_cap: int = 20000
    scan_node_cap: int = 2000
    refinements: int = 6
    max_candidates: int = 64
    fixed_point_tol: float = 1e-6
    rational_approx_denominator: int = 10**12

    def __post_init__(self):
        for name in (
            "max_word_length",
            "power_cap",
            "orbit_node_cap",
            "scan_node_cap",
            "max_candidates",
            "rational_approx_denominator",
        ):
            if getattr(self, name) <= 0:
                raise ValueError(f"Search setting '{name}' must be positive")
        if self.epsilon <= 0:
            raise ValueError("Search setting 'epsilon' must be positive")
        if self.arc_width is not None and self.arc_width <= 0:
            raise ValueError("Search setting 'arc_width' must be positive")
        if self.refinements < 0 or self.rng_seed < 0:
            raise ValueError("Search settings 'refinements' and 'rng_seed' must be non-negative")

    @property
    def initial_arc_width(self) -> float:
        return self.arc_width if self.arc_width is not None else self.epsilon / 2

    @classmethod
    def from_config(cls, cfg: Dict[str, Any], **overrides: Any) -> "SearchConfig":
        """Build from the [search] and [numerics] sections; None-valued overrides are ignored"""
        names = {f.name for f in dataclasses.fields(cls)}
        values = {k: v for k, v in cfg.get("search", {}).items() if k in names}
        numerics = cfg.get("numerics", {})
        for key in ("fixed_point_tol", "rational_approx_denominator"):
            if key in numerics:
                values[key] = numerics[key]
        values.update({k: v for k, v in overrides.items() if v is not None and k in names})
        if "rational_approx_denominator" in values:
            values["rational_approx_denominator"] = int(values["rational_approx_denominator"])
        return cls(**values)


@dataclass
class BoundaryApproximation:
    """γ' with R_{γ'}(v) close to the target point; R is the reflection in γ'(G')"""

    word: GroupWord
    reflected: BoundaryPoint
    distance: float
    geodesic: Geodesic
    power: int = 0
    prefix: Optional[GroupWord] = None


@dataclass
class PlaneOutcome:
    word: GroupWord
    achieved: Subspace
    distance: float


def orbit_bfs(
    gens: GeneratorSet, seed: Geodesic, depth: int, node_cap: Optional[int] = None
) -> Iterator[Tuple[GroupWord, Geodesic]]:
    """
    Breadth-first orbit of a geodesic, pruning geodesics already seen

    Yields the seed first; each level is ordered by (length, letters). At most `node_cap`
    geodesics are yielded when given.
    """
    if depth < 0:
        raise ValueError("Orbit depth must be non-negative")
    model = gens.model
    start = gens.identity(with_lifts=False)
    seen = {seed.key()}
    frontier = [(start, seed)]
    yield frontier[0]
    count = 1
    for _ in range(depth):
        level = []
        for word, geodesic in frontier:
            n = geodesic.normal_vector()
            for letter in gens.alphabet:
                m = gens.letter_matrix(letter)
                image = Geodesic.from_normal(model, xm.tidy(m @ n) if geodesic.exact else xm.to_float(m) @ n)
                key = image.key()
                if key in seen:
                    continue
                seen.add(key)
                level.append((gens.prepend(letter, word), image))
        if not level:
            return
        level.sort(key=lambda item: item[0].sort_key())
        for item in level:
            yield item
            count += 1
            if node_cap is not None and count >= node_cap:
                return
        frontier = level


def orbit_points(
    gens: GeneratorSet,
    point: Any,
    depth: int,
    node_cap: Optional[int] = None,
) -> Iterator[Tuple[GroupWord, np.ndarray]]:
    """Breadth-first orbit of a rational vector (boundary or interior point), pruned projectively"""
    v = xm.to_exact_vector(list(point))
    start = gens.identity(with_lifts=False)
    seen = {xm.projective_key(v)}
    frontier = [(start, v)]
    yield frontier[0]
    count = 1
    for _ in range(depth):
        level = []
        for word, vec in frontier:
            for letter in gens.alphabet:
                image = xm.tidy(gens.letter_matrix(letter) @ vec)
                key = xm.projective_key(image)
                if key in seen:
                    continue
                seen.add(key)
                level.append((gens.prepend(letter, word), image))
        if not level:
            return
        level.sort(key=lambda item: item[0].sort_key())
        for item in level:
            yield item
            count += 1
            if node_cap is not None and count >= node_cap:
                return
        frontier = level


def geodesic_distance(a: Geodesic, b: Geodesic) -> float:
    """Largest endpoint displacement under the better matching of endpoints"""
    a1, a2 = a.endpoints()
    b1, b2 = b.endpoints()
    straight = max(boundary_distance(a1, b1), boundary_distance(a2, b2))
    crossed = max(boundary_distance(a1, b2), boundary_distance(a2, b1))
    return min(straight, crossed)


def fixing_candidates(
    gens: GeneratorSet, arc_center: BoundaryPoint, arc_width: float, cfg: SearchConfig
) -> List[Tuple[AtlasEntry, BoundaryPoint]]:
    atlas = gens.atlas(cfg.orbit_node_cap, cfg.max_word_length)
    return atlas.query(arc_center.angle, arc_width)[: cfg.max_candidates]


def find_fixing_element(
    gens: GeneratorSet, arc_center: BoundaryPoint, arc_width: float, cfg: SearchConfig
) -> Tuple[AtlasEntry, BoundaryPoint]:
    """Shortest hyperbolic or parabolic word with a boundary fixed point inside the arc"""
    hits = fixing_candidates(gens, arc_center, arc_width, cfg)
    if not hits:
        atlas = gens.atlas(cfg.orbit_node_cap, cfg.max_word_length)
        raise SearchExhaustedError(
            f"No hyperbolic or parabolic element fixes a point within {arc_width:.3g} of "
            f"θ={arc_center.angle:.6f} among {len(atlas.nodes)} elements; "
            f"raise max_word_length or orbit_node_cap"
        )
    entry, point = hits[0]
    logger.debug(f"Fixing element {entry.word} ({entry.kind.value}) at θ={point.angle:.6f}")
    return entry, point


def avoid_fixed_points(
    gamma: GroupWord,
    u: BoundaryPoint,
    u2: BoundaryPoint,
    gens: GeneratorSet,
    cfg: SearchConfig,
    isometry: Optional[Isometry] = None,
) -> GroupWord:
    """
    Element γ₀ moving u and u2 off the fixed points of gamma

    The identity is returned when neither point is fixed; otherwise group elements are
    tried in breadth-first order.
    """
    model = gens.model
    iso = isometry or classify_isometry(model, gamma.matrix)
    if not iso.has_dynamics:
        raise DynamicsError(f"{iso.kind.value} element has no boundary dynamics")
    fixed = iso.fixed.boundary_points()

    def clear(p: BoundaryPoint) -> bool:
        return all(boundary_distance(p, f) > cfg.fixed_point_tol for f in fixed)

    if clear(u) and clear(u2):
        return gens.identity()
    atlas = gens.atlas(cfg.orbit_node_cap, cfg.max_word_length)
    for word in atlas.nodes[1:]:
        if clear(move_boundary_point(model, word.matrix, u)) and clear(move_boundary_point(model, word.matrix, u2)):
            logger.debug(f"Moved endpoints off the fixed set of {gamma} with {word}")
            return gens.with_lift(word)
    raise SearchExhaustedError(f"No element moves both points off the fixed set of {gamma}")


def _standard_boundary(model: KleinModel, p: BoundaryPoint) -> np.ndarray:
    y = model.to_standard(p.vector())
    return y / y[2]


def _power_into_arc(
    model: KleinModel,
    iso: Isometry,
    points: Sequence[np.ndarray],
    sign: int,
    center: float,
    width: float,
    cap: int,
) -> Optional[int]:
    """Least n ≤ cap with every point mapped by γ^{±n} within `width` of `center`"""
    forward, backward = standard_action(model, iso)
    action = forward if sign > 0 else backward
    ys = [np.array(y, dtype=float) for y in points]
    for n in range(1, cap + 1):
        ys = [action @ y for y in ys]
        ys = [y / y[2] for y in ys]
        if all(angle_distance(math.atan2(y[1], y[0]) % TWO_PI, center) < width for y in ys):
            return n
    return None


def _direction_towards(iso: Isometry, p: BoundaryPoint) -> int:
    """+1 when p attracts under positive powers, −1 when it is the repeller"""
    if iso.kind == IsometryClass.PARABOLIC or iso.fixed.attractor is None:
        return 1
    if iso.fixed.repeller is not None and boundary_distance(p, iso.fixed.repeller) < boundary_distance(
        p, iso.fixed.attractor
    ):
        return -1
    return 1


def approximate_boundary(
    v: BoundaryPoint,
    v_target: BoundaryPoint,
    g_prime: Geodesic,
    gens: GeneratorSet,
    cfg: SearchConfig,
    arc_width: Optional[float] = None,
) -> BoundaryApproximation:
    """
    Find γ' with the reflection of v in γ'(G') inside the arc around v_target

    A fixing element γ with fixed point p in the arc is taken from the atlas; if γ fixes
    an endpoint of G' it is premultiplied by γ₀ moving the endpoints off its fixed set.
    Powers γⁿ then push both endpoints into the arc, and the reflection across the
    resulting geodesic carries v into the arc as well.
    """
    model = gens.model
    width = arc_width if arc_width is not None else cfg.initial_arc_width
    if boundary_distance(v, v_target) < cfg.fixed_point_tol:
        raise ValueError("Boundary point already coincides with the target point")

    identity = gens.identity()
    if not g_prime.contains(_ray(v)):
        reflected = reflect_boundary_point(model, v, g_prime)
        d = boundary_distance(reflected, v_target)
        if d < width:
            return BoundaryApproximation(identity, reflected, d, g_prime)

    endpoints = g_prime.exact_endpoints() or g_prime.endpoints()
    best: Optional[BoundaryApproximation] = None
    for entry, p in fixing_candidates(gens, v_target, width, cfg):
        iso = entry.isometry
        try:
            prefix = avoid_fixed_points(entry.word, endpoints[0], endpoints[1], gens, cfg, iso)
        except SearchExhaustedError:
            continue
        moved = [move_boundary_point(model, prefix.matrix, e) for e in endpoints]
        sign = _direction_towards(iso, p)
        n = _power_into_arc(
            model, iso, [_standard_boundary(model, x) for x in moved], sign, v_target.angle, width, cfg.power_cap
        )
        if n is None:
            continue
        word = gens.compose(gens.power(entry.word, sign * n), gens.with_lift(prefix))
        image = Geodesic.from_normal(model, xm.tidy(word.matrix @ g_prime.normal_vector()))
        if image.contains(_ray(v)):
            logger.debug(f"Boundary point lies on the image geodesic of {entry.word}; trying next candidate")
            continue
        reflected = reflect_boundary_point(model, v, image)
        d = boundary_distance(reflected, v_target)
        result = BoundaryApproximation(word, reflected, d, image, power=sign * n, prefix=prefix)
        if best is None or d < best.distance:
            best = result
        if d < width:
            logger.debug(f"Boundary approximated by {entry.word}^{sign * n}·{prefix} at distance {d:.3e}")
            return result
    raise SearchExhaustedError(
        f"No word within length {cfg.max_word_length} and power {cfg.power_cap} reached the arc of width {width:.3g}",
        best=best,
    )


def _ray(p: BoundaryPoint) -> Any:
    return list(p.ray) if p.exact else p.vector()


def rational_direction(v: Any, denominator: int) -> Matrix:
    """Exact vector near the float direction v, entries with bounded denominators"""
    if xm.is_exact(v):
        return Matrix([sp.Rational(x) for x in xm.to_exact_vector(list(v))])
    f = np.asarray(v, dtype=float)
    f = f / np.max(np.abs(f))
    return Matrix([sp.Rational(Fraction(float(x)).limit_denominator(denominator)) for x in f])


def target_vectors(raw: Any) -> List[List[Any]]:
    """The raw target as a list of vectors"""
    if isinstance(raw, PlaneTarget):
        raw = raw.plane
    if isinstance(raw, Subspace):
        return [list(v) for v in raw.vectors]
    return [list(v) for v in raw]


def achieved_plane(
    problem: HyperbolicProblem, gens: GeneratorSet, word: GroupWord, anchor: Matrix
) -> PlaneOutcome:
    """
    Plane certified by a word: H = span{γ·l, anchor} inside W, dualized in U₀ when present

    `anchor` is a rational vector of W (L∩W coordinates) lying on the approximating
    geodesic: its fixed endpoint, or the chord direction for the parallel construction.
    """
    space = problem.ambient
    gamma = gens.lift(word)
    image = Matrix(xm.to_sympy(xm.tidy(gamma @ xm.to_exact_vector(problem.l))))
    h = Subspace(space, [image, problem.to_v(anchor)])
    if h.dim != 2 or subspace_signature(space, h).as_tuple() != (1, 1, 0):
        raise RationalizationError("Rationalized anchor does not span a (+,-) plane with γ·l")
    achieved = complement_within(space, h, problem.u0) if problem.u0 is not None else h
    return PlaneOutcome(word=gens.with_lift(word), achieved=achieved, distance=plane_distance(achieved, problem.raw_target))


def _target_endpoints(problem: HyperbolicProblem) -> Tuple[BoundaryPoint, BoundaryPoint]:
    g = problem.target_geodesic
    return g.exact_endpoints() or g.endpoints()


def _identity_outcome(problem: HyperbolicProblem, gens: GeneratorSet, anchor: Matrix) -> PlaneOutcome:
    if problem.target_geodesic.contains(list(problem.l3)):
        # γ = 1 already certifies the rationalized target itself
        plane = problem.target.plane
        return PlaneOutcome(gens.identity(), plane, plane_distance(plane, problem.raw_target))
    return achieved_plane(problem, gens, gens.identity(), anchor)


def orbit_scan(
    v: BoundaryPoint,
    v_target: BoundaryPoint,
    g_prime: Geodesic,
    gens: GeneratorSet,
    cfg: SearchConfig,
) -> Optional[BoundaryApproximation]:
    """Orbit image of G' whose reflection carries v closest to v_target, breadth-first within the scan cap"""
    model = gens.model
    best: Optional[BoundaryApproximation] = None
    for word, image in orbit_bfs(gens, g_prime, cfg.max_word_length, cfg.scan_node_cap):
        if image.contains(_ray(v)):
            continue
        try:
            reflected = reflect_boundary_point(model, v, image)
        except FixedPointError:
            continue
        d = boundary_distance(reflected, v_target)
        if best is None or d < best.distance:
            best = BoundaryApproximation(word, reflected, d, image)
            if d < cfg.fixed_point_tol:
                break
    if best is not None:
        logger.debug(f"Orbit scan: best image {best.word} at boundary distance {best.distance:.3e}")
    return best


def approximate_plane(
    problem: Union[HyperbolicProblem, Tuple[Any, ...]],
    cfg: SearchConfig,
    gens: Optional[GeneratorSet] = None,
    pipeline_cfg: Optional[Dict[str, Any]] = None,
) -> Certificate:
    """
    Certificate that Γ moves a plane of Gr₊₊(l⊥) within ε of the target

    One endpoint v of the target geodesic is kept; the other is approximated by
    reflections of v across orbit images of G' = l⊥ ∩ W, first by a direct scan of the
    orbit, then by powers of fixing elements. Non-positive l is routed to the
    isotropic/negative construction. The closest plane found is certified as best effort
    when none is within ε.

    Args:
        problem: A descended problem, or a raw (space, lattice, generators, l, target) tuple
        cfg: Search settings
        gens: Generator set to reuse (built from the problem when omitted)
        pipeline_cfg: Config dict handed to `descend` for raw problems
    """
    if not isinstance(problem, HyperbolicProblem):
        space, lattice, generators, l, target = problem
        problem = descend(space, lattice, generators, l, target, pipeline_cfg or {"search": {"epsilon": cfg.epsilon}})
    gens = gens or GeneratorSet.from_problem(problem)
    if norm(problem.space3, problem.l3) <= 0:
        return isotropic_case(problem.l, problem, cfg, gens)
    v, v_target = _target_endpoints(problem)
    anchor = rational_direction(_ray(v), cfg.rational_approx_denominator)

    best = _try(lambda: _identity_outcome(problem, gens, anchor))
    if best is not None and best.distance <= cfg.epsilon:
        logger.info("Identity word already certifies the target")
        return build_certificate(problem, gens, best, cfg)

    scan = orbit_scan(v, v_target, problem.source_geodesic, gens, cfg)
    if scan is not None:
        best = _better(best, _try(lambda: achieved_plane(problem, gens, scan.word, anchor)))
        if best is not None and best.distance <= cfg.epsilon:
            return build_certificate(problem, gens, best, cfg)

    width = cfg.initial_arc_width
    for attempt in range(cfg.refinements + 1):
        outcome = None
        try:
            approx = approximate_boundary(v, v_target, problem.source_geodesic, gens, cfg, width)
            outcome = _try(lambda: achieved_plane(problem, gens, approx.word, anchor))
        except SearchExhaustedError as e:
            logger.warning(f"Boundary search exhausted at arc width {width:.3g}: {str(e)}")
            if e.best is not None:
                outcome = _try(lambda: achieved_plane(problem, gens, e.best.word, anchor))
        except (DenseOrbitError, ValueError) as e:
            logger.warning(f"Boundary search failed at arc width {width:.3g}: {str(e)}")
        best = _better(best, outcome)
        if best is not None and best.distance <= cfg.epsilon:
            break
        width /= 2
        logger.debug(f"Refinement {attempt + 1}: arc width {width:.3g}")
    return build_certificate(problem, gens, best or _fallback_outcome(problem, gens), cfg)


def _better(best: Optional[PlaneOutcome], outcome: Optional[PlaneOutcome]) -> Optional[PlaneOutcome]:
    if outcome is not None and (best is None or outcome.distance < best.distance):
        return outcome
    return best


def _try(produce) -> Optional[PlaneOutcome]:
    try:
        return produce()
    except (DenseOrbitError, ValueError) as e:
        logger.warning(f"Candidate plane discarded: {str(e)}")
        return None


def _fallback_outcome(problem: HyperbolicProblem, gens: GeneratorSet) -> PlaneOutcome:
    """The identity word with an anchor spanning a (+,-) plane with l, for a best-effort report"""
    q = norm(problem.space3, problem.l3)
    for x, n in diagonal_vectors(problem.space3, Subspace.whole(problem.space3)):
        if (q > 0 and n < 0) or (q < 0 and n > 0) or (q == 0 and inner(problem.space3, problem.l3, x) != 0):
            logger.warning("No candidate plane could be certified; reporting the plane of the identity word")
            return achieved_plane(problem, gens, gens.identity(), Matrix(x))
    raise SearchExhaustedError("No candidate plane could be certified")


def _chord_error(q: np.ndarray, d: np.ndarray, targets: Sequence[float]) -> float:
    """Endpoint error of the chord through q (Klein chart) with direction d"""
    qd = float(q @ d)
    disc = qd * qd - float(q @ q) + 1.0
    if disc <= 0:
        return math.inf
    root = math.sqrt(disc)
    ends = [q + (-qd - root) * d, q + (-qd + root) * d]
    angles = [math.atan2(e[1], e[0]) % TWO_PI for e in ends]
    straight = max(angle_distance(angles[0], targets[0]), angle_distance(angles[1], targets[1]))
    crossed = max(angle_distance(angles[0], targets[1]), angle_distance(angles[1], targets[0]))
    return min(straight, crossed)


def isotropic_case(
    l: Any, problem: HyperbolicProblem, cfg: SearchConfig, gens: Optional[GeneratorSet] = None
) -> Certificate:
    """
    Certificates for ⟨l,l⟩ ≤ 0

    Isotropic l: an orbit point γ(l) near one target endpoint spans, with the other
    endpoint, the approximating geodesic. Negative l: γ(l) is pushed towards the boundary
    and the chord through it parallel to the target chord (in the Klein chart) is used.
    """
    gens = gens or GeneratorSet.from_problem(problem)
    q = norm(problem.space3, problem.l3)
    if q > 0:
        raise ValueError("isotropic_case needs ⟨l,l⟩ ≤ 0")
    v, v_target = _target_endpoints(problem)
    anchor_v = rational_direction(_ray(v), cfg.rational_approx_denominator)
    orbit = list(orbit_points(gens, problem.l3, cfg.max_word_length, cfg.orbit_node_cap))

    if q == 0:
        best = _try(lambda: _identity_outcome(problem, gens, anchor_v))
    else:
        direction = _chord_anchor(problem, cfg)
        best = _try(lambda: _identity_outcome(problem, gens, direction))
    if best is not None and best.distance <= cfg.epsilon:
        return build_certificate(problem, gens, best, cfg)

    width = cfg.initial_arc_width
    for attempt in range(cfg.refinements + 1):
        outcome = None
        try:
            if q == 0:
                word = _isotropic_word(problem, gens, cfg, orbit, v_target, width)
                outcome = _try(lambda: achieved_plane(problem, gens, word, anchor_v))
            else:
                word = _negative_word(problem, gens, cfg, orbit, width)
                outcome = _try(lambda: achieved_plane(problem, gens, word, direction))
        except (DenseOrbitError, ValueError) as e:
            logger.warning(f"Orbit search failed at width {width:.3g}: {str(e)}")
        best = _better(best, outcome)
        if best is not None and best.distance <= cfg.epsilon:
            break
        width /= 2
    return build_certificate(problem, gens, best or _fallback_outcome(problem, gens), cfg)


def _chord_anchor(problem: HyperbolicProblem, cfg: SearchConfig) -> Matrix:
    """Rational point at infinity of the target chord's direction, in L∩W coordinates"""
    d = problem.target_geodesic.chord_direction()
    return rational_direction(problem.model.from_standard([d[0], d[1], 0.0]), cfg.rational_approx_denominator)


def _isotropic_word(
    problem: HyperbolicProblem,
    gens: GeneratorSet,
    cfg: SearchConfig,
    orbit: Sequence[Tuple[GroupWord, np.ndarray]],
    target: BoundaryPoint,
    width: float,
) -> GroupWord:
    model = problem.model
    closest = min(orbit, key=lambda item: boundary_distance(model.boundary_point(item[1]), target))
    if boundary_distance(model.boundary_point(closest[1]), target) < width:
        return gens.with_lift(closest[0])
    l_point = model.boundary_point(list(problem.l3))
    for entry, p in fixing_candidates(gens, target, width, cfg):
        iso = entry.isometry
        if any(boundary_distance(l_point, f) < cfg.fixed_point_tol for f in iso.fixed.boundary_points()):
            continue
        sign = _direction_towards(iso, p)
        n = _power_into_arc(
            model, iso, [_standard_boundary(model, l_point)], sign, target.angle, width, cfg.power_cap
        )
        if n is not None:
            return gens.power(entry.word, sign * n)
    raise SearchExhaustedError(f"No orbit point of l within {width:.3g} of the target endpoint")


def _negative_word(
    problem: HyperbolicProblem,
    gens: GeneratorSet,
    cfg: SearchConfig,
    orbit: Sequence[Tuple[GroupWord, np.ndarray]],
    width: float,
) -> GroupWord:
    model = problem.model
    target = problem.target_geodesic
    d = target.chord_direction()
    ends = [p.angle for p in target.endpoints()]
    errors = [_chord_error(model.klein_point(xm.unit_float(vec)), d, ends) for _, vec in orbit]
    closest = int(np.argmin(errors))
    if errors[closest] < width:
        return gens.with_lift(orbit[closest][0])
    y0 = model.to_standard(xm.unit_float(xm.to_exact_vector(list(problem.l3))))
    y0 = y0 / y0[2]
    for end in target.endpoints():
        for entry, p in fixing_candidates(gens, end, width, cfg):
            iso = entry.isometry
            sign = _direction_towards(iso, p)
            forward, backward = standard_action(model, iso)
            action = forward if sign > 0 else backward
            y = y0.copy()
            for n in range(1, cfg.power_cap + 1):
                y = action @ y
                y = y / y[2]
                if _chord_error(y[:2], d, ends) < width:
                    return gens.power(entry.word, sign * n)
    raise SearchExhaustedError(f"No orbit point of l gives a parallel chord within {width:.3g}")


def build_certificate(
    problem: HyperbolicProblem, gens: GeneratorSet, outcome: PlaneOutcome, cfg: SearchConfig
) -> Certificate:
    status = STATUS_OK if outcome.distance <= cfg.epsilon else STATUS_BEST_EFFORT
    word = gens.with_lift(outcome.word)
    cert = Certificate(
        gram=Matrix(problem.ambient.gram),
        lattice_basis=Matrix(problem.lattice.basis),
        generators=[Matrix(m) for m in problem.lifts],
        provenance=list(gens.labels),
        l=Matrix(problem.l),
        target=target_vectors(problem.raw_target),
        kind=problem.kind,
        word=list(word.letters),
        gamma=Matrix(xm.to_sympy(gens.lift(word))),
        achieved_plane=Matrix(outcome.achieved.basis),
        distance=outcome.distance,
        epsilon=cfg.epsilon,
        seed=cfg.rng_seed,
        status=status,
    )
    level = "info" if status == STATUS_OK else "warning"
    getattr(logger, level)(f"Certificate {status}: word length {len(word)}, distance {outcome.distance:.3e}")
    return cert
