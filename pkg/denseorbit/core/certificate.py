import json
from dataclasses import dataclass, field
from typing import Any, Dict, List, Sequence, Tuple

import numpy as np
import sympy as sp
from loguru import logger
from sympy import Matrix

from denseorbit.core.reduction import KIND_SIGNATURES, plane_distance
from denseorbit.errors import SpecError
from denseorbit.models import exact_matrix as xm
from denseorbit.models.lattice import Lattice, is_integral_isometry
from denseorbit.models.quadratic_space import QuadraticSpace, Subspace, subspace_signature
from denseorbit.utils.serialization import (
    columns_to_json,
    dumps,
    matrix_from_json,
    matrix_to_json,
    vector_from_json,
    vector_to_json,
)

STATUS_OK = "ok"
STATUS_BEST_EFFORT = "best-effort"

REQUIRED_FIELDS = [
    "gram",
    "generators",
    "l",
    "target",
    "word",
    "gamma",
    "achieved_plane",
    "distance",
    "epsilon",
    "seed",
    "status",
]


@dataclass
class Certificate:
    """
    Checkable witness that γ·(l⊥) holds a plane within ε of the target

    All matrices are exact and written in the coordinates of V. For kind "+-" (a raw
    (2,1) problem) the achieved plane is a geodesic plane through γ·l instead.
    """

    gram: Matrix
    lattice_basis: Matrix
    generators: List[Matrix]
    provenance: List[str]
    l: Matrix
    target: List[List[Any]]
    kind: str
    word: List[Tuple[int, int]]
    gamma: Matrix
    achieved_plane: Matrix
    distance: float
    epsilon: float
    seed: int
    status: str

    @property
    def ok(self) -> bool:
        return self.status == STATUS_OK

    def to_dict(self) -> Dict[str, Any]:
        return {
            "gram": matrix_to_json(self.gram),
            "lattice_basis": columns_to_json(self.lattice_basis),
            "generators": [matrix_to_json(g) for g in self.generators],
            "provenance": list(self.provenance),
            "l": vector_to_json(self.l),
            "target": [_target_vector_json(v) for v in self.target],
            "kind": self.kind,
            "word": [[int(i), int(e)] for i, e in self.word],
            "gamma": matrix_to_json(self.gamma),
            "achieved_plane": columns_to_json(self.achieved_plane),
            "distance": float(self.distance),
            "epsilon": float(self.epsilon),
            "seed": int(self.seed),
            "status": self.status,
        }

    def to_json(self) -> str:
        return dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "Certificate":
        missing = [k for k in REQUIRED_FIELDS if k not in data]
        if missing:
            raise SpecError("Certificate is incomplete", [f"{k}: field required" for k in missing])
        gram = matrix_from_json(data["gram"])
        if "lattice_basis" in data and data["lattice_basis"]:
            basis = Matrix.hstack(*[vector_from_json(v) for v in data["lattice_basis"]])
        else:
            basis = sp.eye(gram.rows)
        plane = data["achieved_plane"]
        return cls(
            gram=gram,
            lattice_basis=basis,
            generators=[matrix_from_json(g) for g in data["generators"]],
            provenance=list(data.get("provenance", [])),
            l=vector_from_json(data["l"]),
            target=[list(v) for v in data["target"]],
            kind=data.get("kind", "++"),
            word=[(int(i), int(e)) for i, e in data["word"]],
            gamma=matrix_from_json(data["gamma"]),
            achieved_plane=Matrix.hstack(*[vector_from_json(v) for v in plane]) if plane else Matrix.zeros(gram.rows, 0),
            distance=float(data["distance"]),
            epsilon=float(data["epsilon"]),
            seed=int(data["seed"]),
            status=str(data["status"]),
        )

    @classmethod
    def from_json(cls, text: str) -> "Certificate":
        return cls.from_dict(json.loads(text))


def _target_vector_json(v: Sequence[Any]) -> List[Any]:
    if any(isinstance(x, (float, np.floating)) for x in v):
        return [float(x) for x in v]
    return vector_to_json(list(v))


@dataclass
class VerificationReport:
    accepted: bool
    reasons: List[str] = field(default_factory=list)

    def __bool__(self) -> bool:
        return self.accepted


def verify_certificate(c: Certificate) -> VerificationReport:
    """
    Re-check a certificate from scratch

    (a) gamma is the product of the cited generators; (b) gamma preserves the form and L;
    (c) the achieved plane lies in γ·(l⊥) (contains γ·l for kind "+-"); (d) the achieved
    plane has the signature of its kind; (e) it lies within ε of the target.
    """
    reasons: List[str] = []
    n = c.gram.rows
    try:
        space = QuadraticSpace(c.gram)
        lattice = Lattice(space, c.lattice_basis)
    except Exception as e:
        return VerificationReport(False, [f"(b) invalid lattice data: {str(e)}"])

    # (a)
    product = xm.identity(n)
    gens = [xm.to_exact(g) for g in c.generators]
    word_ok = True
    for i, e in c.word:
        if not 0 <= i < len(gens) or e not in (1, -1):
            reasons.append(f"(a) word letter ({i},{e}) does not name a generator")
            word_ok = False
            break
        m = gens[i] if e == 1 else xm.to_exact(Matrix(c.generators[i]).inv())
        product = product @ m
    gamma = xm.to_exact(c.gamma)
    if word_ok and not np.array_equal(xm.tidy(product), gamma):
        reasons.append("(a) gamma is not the product of the cited generators")

    # (b)
    if c.gamma.shape != c.gram.shape or c.gamma.T * c.gram * c.gamma != c.gram:
        reasons.append("(b) gamma does not preserve the Gram matrix")
    elif not is_integral_isometry(lattice, c.gamma):
        reasons.append("(b) gamma does not map the lattice onto itself")

    # (c)
    achieved = Subspace(space, c.achieved_plane)
    image = c.gamma * c.l if c.gamma.shape == c.gram.shape else c.l
    if achieved.dim != 2:
        reasons.append(f"(c) achieved plane has dimension {achieved.dim}")
    elif c.kind == "++":
        pairings = Matrix(achieved.basis).T * c.gram * image
        if any(x != 0 for x in pairings):
            reasons.append("(c) achieved plane is not orthogonal to γ·l")
    elif not achieved.contains(image):
        reasons.append("(c) γ·l does not lie in the achieved plane")

    # (d)
    if achieved.dim == 2:
        sig = subspace_signature(space, achieved)
        if sig.as_tuple() != KIND_SIGNATURES.get(c.kind):
            reasons.append(f"(d) achieved plane has signature {sig}, expected {c.kind}")

    # (e)
    if achieved.dim == 2:
        d = plane_distance(achieved, c.target)
        if d > c.epsilon:
            reasons.append(f"(e) distance {d:.6g} to the target exceeds epsilon {c.epsilon:.6g}")
        if abs(d - c.distance) > 1e-9:
            reasons.append(f"(e) recorded distance {c.distance:.6g} differs from recomputed {d:.6g}")

    report = VerificationReport(accepted=not reasons, reasons=reasons)
    logger.info(f"Certificate {'accepted' if report.accepted else 'rejected'}: {reasons}")
    return report
