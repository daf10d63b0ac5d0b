import math
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import sympy as sp
from loguru import logger
from sympy import ImmutableMatrix, Matrix

from denseorbit.errors import (
    DynamicsError,
    FixedPointError,
    IsotropicVectorError,
    NotAnIsometryError,
    SignatureError,
)
from denseorbit.models import exact_matrix as xm
from denseorbit.models.quadratic_space import (
    QuadraticSpace,
    Subspace,
    clear_denominators,
    diagonalize,
    orthogonal_complement,
    signature,
    subspace_signature,
)
from denseorbit.utils.serialization import format_angle, format_rational

TWO_PI = 2.0 * math.pi

DEFAULT_NUMERICS: Dict[str, float] = {
    "isometry_tol": 1e-9,
    "fixed_point_tol": 1e-6,
    "eigen_tol": 1e-8,
    "discriminant_tol": 1e-10,
}


class IsometryClass(str, Enum):
    IDENTITY = "Identity"
    ELLIPTIC = "Elliptic"
    PARABOLIC = "Parabolic"
    HYPERBOLIC = "Hyperbolic"
    ORIENTATION_REVERSING = "OrientationReversing"


class KleinModel:
    """
    Projective model of the hyperbolic plane attached to a (2,1) quadratic space

    The float frame F maps standard coordinates (x, y, t), in which the form reads
    x² + y² − t², to coordinates of the space. Boundary angles are atan2(y, x) after
    scaling t to 1.
    """

    def __init__(self, space: QuadraticSpace, numerics: Optional[Dict[str, float]] = None):
        sig = signature(space)
        if sig.as_tuple() != (2, 1, 0):
            raise SignatureError(f"Klein model needs signature (2,1,0), got {sig}")
        self.space = space
        self.numerics = {**DEFAULT_NUMERICS, **(numerics or {})}
        s, entries = diagonalize(space)
        self.diagonalizer = ImmutableMatrix(s)
        scales = np.array([1.0 / math.sqrt(abs(float(d))) for d in entries])
        self.frame = np.array(s.tolist(), dtype=float) * scales
        self.frame_inv = np.linalg.inv(self.frame)
        self.gram = xm.to_exact(space.gram)
        self.gram_float = np.array(space.gram.tolist(), dtype=float)
        # integral negative vector fixing time orientation, and its exact time functional
        self._time_axis = Matrix(s.col(2))
        self._time_norm = abs(entries[2])
        self.diagonal = tuple(entries)
        self.timelike = xm.to_exact_vector(clear_denominators(Matrix(s.col(2))))

    @classmethod
    def standard(cls, numerics: Optional[Dict[str, float]] = None) -> "KleinModel":
        return cls(QuadraticSpace.diagonal([1, 1, -1]), numerics)

    def inner(self, v: Any, w: Any) -> Any:
        if xm.is_exact(v) and xm.is_exact(w):
            a, b = xm.to_exact_vector(v), xm.to_exact_vector(w)
            return a @ self.gram @ b
        a, b = _float_vector(v), _float_vector(w)
        return float(a @ self.gram_float @ b)

    def time(self, v: Any) -> Any:
        """Positive multiple of the standard time coordinate; exact for exact v"""
        if xm.is_exact(v):
            s3 = xm.to_exact_vector(self._time_axis)
            return -(xm.to_exact_vector(v) @ self.gram @ s3) / Fraction(str(self._time_norm))
        return float(self.to_standard(v)[2])

    def to_standard(self, v: Any) -> np.ndarray:
        return self.frame_inv @ _float_vector(v)

    def from_standard(self, y: np.ndarray) -> np.ndarray:
        return self.frame @ np.asarray(y, dtype=float)

    def angle(self, v: Any) -> float:
        y = self.to_standard(v)
        if y[2] < 0:
            y = -y
        return math.atan2(y[1], y[0]) % TWO_PI

    def klein_point(self, v: Any) -> np.ndarray:
        """Klein-chart coordinates (x/t, y/t) of a non-positive vector"""
        y = self.to_standard(v)
        if abs(y[2]) < 1e-300:
            raise ValueError("Vector has no affine Klein coordinates")
        return y[:2] / y[2]

    def from_klein(self, p: np.ndarray) -> np.ndarray:
        return self.from_standard([p[0], p[1], 1.0])

    def boundary_point(self, ray: Any) -> "BoundaryPoint":
        if xm.is_exact(ray):
            v = xm.to_exact_vector(ray)
            if v @ self.gram @ v != 0:
                raise IsotropicVectorError(f"Ray {[format_rational(x) for x in v]} is not isotropic")
            t = self.time(v)
            if t == 0:
                raise IsotropicVectorError("Zero vector is not a boundary point")
            ray_n = tuple(sp.Rational(Fraction(x) / t) for x in v)
            return BoundaryPoint(ray=ray_n, angle=self.angle(v), exact=True)
        y = self.to_standard(ray)
        scale = float(np.dot(y, y))
        if scale == 0 or abs(y[0] ** 2 + y[1] ** 2 - y[2] ** 2) > 1e-6 * scale:
            raise IsotropicVectorError(f"Ray {list(_float_vector(ray))} is not isotropic")
        y = y / y[2]
        return BoundaryPoint(ray=tuple(float(x) for x in self.from_standard(y)), angle=math.atan2(y[1], y[0]) % TWO_PI)

    def point_at_angle(self, theta: float) -> "BoundaryPoint":
        y = np.array([math.cos(theta), math.sin(theta), 1.0])
        return BoundaryPoint(ray=tuple(float(x) for x in self.from_standard(y)), angle=theta % TWO_PI)


def _float_vector(v: Any) -> np.ndarray:
    if xm.is_exact(v):
        return xm.unit_float(xm.to_exact_vector(v))
    return np.asarray(v, dtype=float).ravel()


@dataclass(frozen=True)
class BoundaryPoint:
    """Isotropic ray; exact rays are scaled to time 1, float rays to standard time 1"""

    ray: Tuple[Any, ...]
    angle: float
    exact: bool = False

    def vector(self) -> np.ndarray:
        return np.array([float(x) for x in self.ray])

    def exact_vector(self) -> np.ndarray:
        if not self.exact:
            raise ValueError("Boundary point has no exact ray")
        return xm.to_exact_vector(list(self.ray))

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {"angle": format_angle(self.angle)}
        if self.exact:
            data["ray"] = [format_rational(x) for x in self.ray]
        return data


def boundary_distance(a: BoundaryPoint, b: BoundaryPoint) -> float:
    """Angular distance on the boundary circle, in [0, π]"""
    return angle_distance(a.angle, b.angle)


def angle_distance(alpha: float, beta: float) -> float:
    d = abs(alpha - beta) % TWO_PI
    return min(d, TWO_PI - d)


@dataclass(frozen=True, eq=False)
class Geodesic:
    """Geodesic of the Klein model, stored through its positive normal"""

    model: KleinModel = field(repr=False)
    normal: Tuple[Any, ...]
    exact: bool = True

    @classmethod
    def from_normal(cls, model: KleinModel, n: Any) -> "Geodesic":
        if xm.is_exact(n):
            v = Matrix(xm.to_sympy(xm.to_exact_vector(n)))
            prim = clear_denominators(v)
            first = next((x for x in prim if x != 0), 0)
            if first < 0:
                prim = -prim
            normal = xm.to_exact_vector(prim)
            if model.inner(normal, normal) <= 0:
                raise SignatureError(f"Geodesic normal {list(prim)} must be a positive vector")
            return cls(model=model, normal=tuple(int(x) for x in normal), exact=True)
        f = np.asarray(n, dtype=float).ravel()
        f = f / np.linalg.norm(f)
        idx = int(np.argmax(np.abs(f) > 1e-12))
        if f[idx] < 0:
            f = -f
        if model.inner(f, f) <= model.numerics["isometry_tol"]:
            raise SignatureError("Geodesic normal must be a positive vector")
        return cls(model=model, normal=tuple(float(x) for x in f), exact=False)

    @classmethod
    def from_plane(cls, model: KleinModel, plane: Subspace) -> "Geodesic":
        sig = subspace_signature(model.space, plane)
        if plane.dim != 2 or sig.as_tuple() != (1, 1, 0):
            raise SignatureError(f"Geodesic plane must have signature (1,1,0), got {sig}")
        complement = orthogonal_complement(model.space, plane)
        return cls.from_normal(model, list(complement.basis.col(0)))

    @classmethod
    def from_endpoints(cls, model: KleinModel, a: BoundaryPoint, b: BoundaryPoint) -> "Geodesic":
        if boundary_distance(a, b) < model.numerics["fixed_point_tol"]:
            raise ValueError("Geodesic endpoints must be distinct")
        if a.exact and b.exact:
            return cls.from_plane(model, Subspace(model.space, [list(a.ray), list(b.ray)]))
        cross = np.cross(a.vector(), b.vector())
        return cls.from_normal(model, np.linalg.solve(model.gram_float, cross))

    def normal_vector(self) -> np.ndarray:
        if self.exact:
            return xm.to_exact_vector(list(self.normal))
        return np.array(self.normal, dtype=float)

    def key(self) -> Tuple:
        if self.exact:
            return tuple(self.normal)
        return tuple(round(x, 9) for x in self.normal)

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Geodesic) and self.key() == other.key()

    def __hash__(self) -> int:
        return hash(self.key())

    def plane(self) -> Subspace:
        if not self.exact:
            raise ValueError("Float geodesic has no exact plane")
        return orthogonal_complement(self.model.space, Subspace(self.model.space, [list(self.normal)]))

    def contains(self, v: Any) -> bool:
        """Whether the line through v lies in the geodesic's plane"""
        if self.exact and xm.is_exact(v):
            return self.model.inner(self.normal_vector(), v) == 0
        n = _float_vector(self.normal_vector())
        w = _float_vector(v)
        scale = np.linalg.norm(self.model.gram_float @ n) * np.linalg.norm(w)
        return abs(float(n @ self.model.gram_float @ w)) <= self.model.numerics["fixed_point_tol"] * max(scale, 1e-300)

    def endpoints(self) -> Tuple[BoundaryPoint, BoundaryPoint]:
        """The two boundary points, ordered by angle φ − α, φ + α"""
        if self.exact:
            phi, alpha = self._exact_endpoint_angles()
            return self.model.point_at_angle(phi - alpha), self.model.point_at_angle(phi + alpha)
        n = _float_vector(self.normal_vector())
        a = self.model.frame.T @ self.model.gram_float @ n
        rho = math.hypot(a[0], a[1])
        phi = math.atan2(a[1], a[0])
        alpha = math.acos(max(-1.0, min(1.0, -a[2] / rho)))
        return self.model.point_at_angle(phi - alpha), self.model.point_at_angle(phi + alpha)

    def _exact_endpoint_angles(self) -> Tuple[float, float]:
        """
        φ and α of the endpoints, from exact squares of the standard-frame normal

        sin²α·ρ² is the exact rational ρ² − a₂², so close endpoints of a normal with huge
        entries keep their separation.
        """
        b = xm.to_exact_vector(self.model.diagonalizer.T * Matrix(self.model.space.gram) * Matrix(list(self.normal)))
        scale = max(abs(Fraction(x)) for x in b)
        b = [Fraction(x) / scale for x in b]
        d = [abs(Fraction(str(x))) for x in self.model.diagonal]
        sq = [b[i] * b[i] / d[i] for i in range(3)]
        a0 = float(b[0]) / math.sqrt(float(d[0]))
        a1 = float(b[1]) / math.sqrt(float(d[1]))
        a2 = float(b[2]) / math.sqrt(float(d[2]))
        phi = math.atan2(a1, a0)
        alpha = math.atan2(math.sqrt(float(max(sq[0] + sq[1] - sq[2], Fraction(0)))), -a2)
        return phi, alpha

    def exact_endpoints(self) -> Optional[Tuple[BoundaryPoint, BoundaryPoint]]:
        """Rational isotropic endpoints when the plane splits over Q, else None"""
        if not self.exact:
            return None
        p1, p2 = self.plane().vectors
        g = self.model.space.gram
        a, b, c = (p1.T * g * p1)[0, 0], (p1.T * g * p2)[0, 0], (p2.T * g * p2)[0, 0]
        root = sp.sqrt(b * b - a * c)
        if not root.is_Rational:
            return None
        if a == 0:
            rays = [p1, p2 * 2 * b - p1 * c]
        else:
            rays = [p1 * (-b + root) + p2 * a, p1 * (-b - root) + p2 * a]
        points = sorted((self.model.boundary_point(list(r)) for r in rays), key=lambda p: p.angle)
        return points[0], points[1]

    def chord_direction(self) -> np.ndarray:
        """Unit direction of the chord in the Klein chart"""
        u, w = self.endpoints()
        d = self.model.klein_point(w.vector()) - self.model.klein_point(u.vector())
        d = d / np.linalg.norm(d)
        if d[0] < 0 or (d[0] == 0 and d[1] < 0):
            d = -d
        return d

    def reflection_matrix(self) -> Any:
        n = self.normal_vector()
        if self.exact:
            q = self.model.inner(n, n)
            return xm.tidy(xm.identity(3) - np.outer(n, n @ self.model.gram) * Fraction(2) / q)
        g = self.model.gram_float
        return np.eye(3) - 2.0 * np.outer(n, n @ g) / float(n @ g @ n)

    def to_dict(self) -> Dict[str, Any]:
        u, w = self.endpoints()
        data: Dict[str, Any] = {"normal": [format_rational(x) if self.exact else x for x in self.normal]}
        data["endpoints"] = [u.to_dict(), w.to_dict()]
        return data


def reflect_boundary_point(model: KleinModel, v: BoundaryPoint, g: Geodesic) -> BoundaryPoint:
    """Image of v under the reflection negating g's normal"""
    ray = list(v.ray) if v.exact else v.vector()
    if g.contains(ray):
        raise FixedPointError(f"Boundary point at angle {v.angle:.6f} lies on the geodesic")
    if v.exact and g.exact:
        return model.boundary_point(xm.tidy(g.reflection_matrix() @ v.exact_vector()))
    return model.boundary_point(np.asarray(g.reflection_matrix(), dtype=float) @ _float_vector(ray))


def geodesics_orthogonal(g1: Geodesic, g2: Geodesic) -> bool:
    model = g1.model
    if g1.exact and g2.exact:
        return model.inner(g1.normal_vector(), g2.normal_vector()) == 0
    n1, n2 = _float_vector(g1.normal_vector()), _float_vector(g2.normal_vector())
    return abs(model.inner(n1, n2)) <= model.numerics["fixed_point_tol"] * np.linalg.norm(n1) * np.linalg.norm(n2)


@dataclass(frozen=True)
class FixedPointData:
    repeller: Optional[BoundaryPoint] = None
    attractor: Optional[BoundaryPoint] = None
    interior_fixed: Optional[Tuple[Any, ...]] = None

    def boundary_points(self) -> List[BoundaryPoint]:
        return [p for p in (self.attractor, self.repeller) if p is not None]


@dataclass(frozen=True, eq=False)
class Isometry:
    """Classified isometry; `effective` is ±matrix chosen to preserve time orientation"""

    matrix: Any = field(repr=False)
    kind: IsometryClass
    fixed: FixedPointData
    effective: Any = field(repr=False)
    exact: bool = True
    stretch: Optional[float] = None

    @property
    def has_dynamics(self) -> bool:
        return self.kind in (IsometryClass.HYPERBOLIC, IsometryClass.PARABOLIC)


def classify_isometry(model: KleinModel, m: Any, verify: bool = True) -> Isometry:
    """
    Classify an isometry of the (2,1) space by its action on the hyperbolic plane

    Exact matrices are classified exactly: after fixing time orientation, det < 0 means
    orientation reversing and the trace t = 1 + λ + 1/λ separates hyperbolic (t > 3),
    parabolic/identity (t = 3) and elliptic (t < 3). Float matrices use tolerances.
    `verify=False` skips the form-preservation check for products of checked generators.
    """
    if xm.is_exact(m):
        return _classify_exact(model, xm.to_exact(m), verify)
    return _classify_float(model, np.asarray(m, dtype=float))


def _classify_exact(model: KleinModel, m: np.ndarray, verify: bool = True) -> Isometry:
    g = model.gram
    if m.shape != (3, 3) or (verify and not np.array_equal(m.T @ g @ m, g)):
        raise NotAnIsometryError("Matrix does not preserve the form")
    t = model.timelike
    eff = m if (m @ t) @ g @ t < 0 else xm.tidy(-m)
    if xm.det3(eff) < 0:
        return Isometry(matrix=m, kind=IsometryClass.ORIENTATION_REVERSING, fixed=FixedPointData(), effective=eff)
    trace = eff[0, 0] + eff[1, 1] + eff[2, 2]
    if trace > 3:
        kind = IsometryClass.HYPERBOLIC
    elif trace == 3:
        kind = IsometryClass.IDENTITY if np.array_equal(eff, xm.identity(3)) else IsometryClass.PARABOLIC
    else:
        kind = IsometryClass.ELLIPTIC
    if kind == IsometryClass.HYPERBOLIC:
        fixed, stretch = _hyperbolic_fixed_points(model, xm.scaled_float_matrix(eff))
        return Isometry(matrix=m, kind=kind, fixed=fixed, effective=eff, stretch=stretch)
    if kind == IsometryClass.IDENTITY:
        return Isometry(matrix=m, kind=kind, fixed=FixedPointData(), effective=eff)
    kernel = (xm.to_sympy(eff) - sp.eye(3)).nullspace()
    v = xm.to_exact_vector(clear_denominators(kernel[0]))
    if kind == IsometryClass.PARABOLIC:
        return Isometry(matrix=m, kind=kind, fixed=FixedPointData(attractor=model.boundary_point(v)), effective=eff)
    tv = model.time(v)
    interior = tuple(sp.Rational(Fraction(x) / tv) for x in v)
    return Isometry(matrix=m, kind=kind, fixed=FixedPointData(interior_fixed=interior), effective=eff)


def _classify_float(model: KleinModel, m: np.ndarray) -> Isometry:
    g = model.gram_float
    tol = model.numerics
    if m.shape != (3, 3):
        raise NotAnIsometryError("Isometry of a (2,1) space must be 3x3")
    residual = np.max(np.abs(m.T @ g @ m - g))
    if residual > tol["isometry_tol"] * max(1.0, float(np.max(np.abs(m))) ** 2):
        raise NotAnIsometryError(f"Matrix does not preserve the form (residual {residual:.3e})")
    t = np.asarray(model.timelike, dtype=float)
    eff = m if (m @ t) @ g @ t < 0 else -m
    if np.linalg.det(eff) < 0:
        return Isometry(matrix=m, kind=IsometryClass.ORIENTATION_REVERSING, fixed=FixedPointData(), effective=eff, exact=False)
    trace = float(np.trace(eff))
    if abs(trace - 3.0) <= tol["eigen_tol"] * max(1.0, abs(trace)):
        # eigenvalues all 1: identity unless M − I has rank 2
        singular = np.linalg.svd(eff - np.eye(3), compute_uv=False)
        if np.max(np.abs(eff - np.eye(3))) <= tol["eigen_tol"] or np.sum(singular > math.sqrt(tol["eigen_tol"])) < 2:
            return Isometry(matrix=m, kind=IsometryClass.IDENTITY, fixed=FixedPointData(), effective=eff, exact=False)
        _, _, vt = np.linalg.svd(eff - np.eye(3))
        p = model.boundary_point(_isotropic_projection(model, vt[-1]))
        return Isometry(matrix=m, kind=IsometryClass.PARABOLIC, fixed=FixedPointData(attractor=p), effective=eff, exact=False)
    discriminant = (trace - 3.0) * (trace + 1.0)
    if trace > 3.0 and discriminant > tol["discriminant_tol"]:
        fixed, stretch = _hyperbolic_fixed_points(model, eff)
        return Isometry(matrix=m, kind=IsometryClass.HYPERBOLIC, fixed=fixed, effective=eff, exact=False, stretch=stretch)
    _, _, vt = np.linalg.svd(eff - np.eye(3))
    y = model.to_standard(vt[-1])
    y = y / y[2]
    interior = tuple(float(x) for x in model.from_standard(y))
    return Isometry(matrix=m, kind=IsometryClass.ELLIPTIC, fixed=FixedPointData(interior_fixed=interior), effective=eff, exact=False)


def _hyperbolic_fixed_points(model: KleinModel, eff: np.ndarray) -> Tuple[FixedPointData, float]:
    forward, backward = _standard_pair(model, eff)
    attractor, top = _dominant_boundary_point(model, forward)
    repeller, _ = _dominant_boundary_point(model, backward)
    return FixedPointData(repeller=repeller, attractor=attractor), top


def _standard_pair(model: KleinModel, eff: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    # inverse of an isometry in standard coordinates is J·Aᵀ·J (up to the common scale)
    std = model.frame_inv @ eff @ model.frame
    std = std / np.max(np.abs(std))
    j = np.diag([1.0, 1.0, -1.0])
    return std, j @ std.T @ j


def _dominant_boundary_point(model: KleinModel, std: np.ndarray) -> Tuple[BoundaryPoint, float]:
    """Boundary point of the dominant eigenvector, with the ratio of the two top eigenvalues"""
    values, vectors = np.linalg.eig(std)
    order = np.argsort(np.abs(values))
    top = vectors[:, order[-1]]
    stretch = float(abs(values[order[-1]]) / max(abs(values[order[1]]), 1e-300))
    point = model.boundary_point(_isotropic_projection(model, model.from_standard(np.real(top))))
    return point, stretch


def _isotropic_projection(model: KleinModel, v: np.ndarray) -> np.ndarray:
    """Snap a numerically isotropic vector onto the cone (unit circle in the chart)"""
    y = model.to_standard(v)
    if y[2] < 0:
        y = -y
    r = math.hypot(y[0], y[1])
    return model.from_standard([y[0] / r, y[1] / r, 1.0])


def move_boundary_point(model: KleinModel, m: Any, p: BoundaryPoint) -> BoundaryPoint:
    if p.exact and xm.is_exact(m):
        return model.boundary_point(xm.tidy(xm.to_exact(m) @ p.exact_vector()))
    y = np.asarray(xm.scaled_float_matrix(m) if xm.is_exact(m) else m, dtype=float) @ p.vector()
    return model.boundary_point(_isotropic_projection(model, y))


@dataclass
class PowerIterationResult:
    converged: bool
    n: int
    point: Optional[BoundaryPoint]
    distance: float
    limit: Optional[BoundaryPoint]
    trajectory: List[float] = field(default_factory=list)


def standard_action(model: KleinModel, iso: Isometry) -> Tuple[np.ndarray, np.ndarray]:
    """Forward and backward actions of an isometry in standard coordinates (projective scale)"""
    return _standard_pair(model, xm.scaled_float_matrix(iso.effective) if iso.exact else iso.effective)


def power_iterate(
    model: KleinModel,
    iso: Isometry,
    u: BoundaryPoint,
    n_max: int,
    target_tol: float,
) -> PowerIterationResult:
    """
    Iterate an isometry on a boundary point until it lands near a fixed point

    Tries n → +∞ first, then n → −∞.
    """
    if not iso.has_dynamics:
        raise DynamicsError(f"{iso.kind.value} isometry has no attracting fixed point")
    for p in iso.fixed.boundary_points():
        if boundary_distance(u, p) < model.numerics["fixed_point_tol"]:
            raise FixedPointError(f"Point at angle {u.angle:.6f} is fixed by the isometry")
    forward, backward = standard_action(model, iso)
    if iso.kind == IsometryClass.HYPERBOLIC:
        attempts = [(1, forward, iso.fixed.attractor), (-1, backward, iso.fixed.repeller)]
    else:
        attempts = [(1, forward, iso.fixed.attractor), (-1, backward, iso.fixed.attractor)]
    best = PowerIterationResult(converged=False, n=0, point=None, distance=math.inf, limit=None)
    for sign, action, limit in attempts:
        y = model.to_standard(u.vector())
        y = y / y[2]
        trajectory = []
        for n in range(1, n_max + 1):
            y = action @ y
            y = y / y[2]
            theta = math.atan2(y[1], y[0]) % TWO_PI
            d = angle_distance(theta, limit.angle)
            trajectory.append(d)
            if d < best.distance:
                best = PowerIterationResult(False, sign * n, model.point_at_angle(theta), d, limit, list(trajectory))
            if d < target_tol:
                logger.debug(f"Power iteration converged at n={sign * n}, distance {d:.3e}")
                return PowerIterationResult(True, sign * n, model.point_at_angle(theta), d, limit, trajectory)
    logger.debug(f"Power iteration did not reach tolerance {target_tol} within {n_max} steps")
    return best
