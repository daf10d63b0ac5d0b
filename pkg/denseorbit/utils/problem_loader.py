"""Problem specs: JSON files naming a lattice, a polarization l and a target plane"""

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

from loguru import logger
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator
from sympy import Matrix

from denseorbit.errors import NotRationalError, SpecError
from denseorbit.models.lattice import IntegralIsometry, Lattice
from denseorbit.models.presets import preset
from denseorbit.utils.serialization import as_rational, to_fraction

Scalar = Union[int, float, str]


def _check_rationals(values: List[Scalar]) -> List[Scalar]:
    for x in values:
        try:
            as_rational(x)
        except NotRationalError as e:
            raise ValueError(str(e))
    return values


class LatticeSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    dim: Optional[int] = None
    gram: List[List[Scalar]]
    basis: Optional[List[List[Scalar]]] = None
    generators: List[List[List[Scalar]]] = Field(default_factory=list)

    @field_validator("gram")
    @classmethod
    def gram_square(cls, gram: List[List[Scalar]]) -> List[List[Scalar]]:
        n = len(gram)
        if n == 0 or any(len(row) != n for row in gram):
            raise ValueError("gram must be a non-empty square matrix")
        for row in gram:
            _check_rationals(row)
        return gram

    @model_validator(mode="after")
    def dim_matches(self) -> "LatticeSpec":
        n = len(self.gram)
        if self.dim is not None and self.dim != n:
            raise ValueError(f"dim {self.dim} does not match gram size {n}")
        for v in self.basis or []:
            if len(v) != n:
                raise ValueError(f"basis vector of length {len(v)} in dimension {n}")
        for g in self.generators:
            if len(g) != n or any(len(row) != n for row in g):
                raise ValueError(f"generators must be {n}x{n} matrices")
        return self


class TargetSpec(BaseModel):
    """Two spanning vectors (rational strings or floats), or a seeded random target"""

    model_config = ConfigDict(extra="forbid")

    vectors: Optional[List[List[Scalar]]] = None
    random: bool = False

    @model_validator(mode="before")
    @classmethod
    def bare_list(cls, data: Any) -> Any:
        if isinstance(data, list):
            return {"vectors": data}
        return data

    @model_validator(mode="after")
    def one_source(self) -> "TargetSpec":
        if self.random == (self.vectors is not None):
            raise ValueError("give either two target vectors or \"random\": true")
        if self.vectors is not None:
            if len(self.vectors) != 2:
                raise ValueError(f"target needs exactly 2 vectors, got {len(self.vectors)}")
            for v in self.vectors:
                _check_rationals(v)
        return self

    @property
    def is_float(self) -> bool:
        return any(isinstance(x, float) for v in self.vectors or [] for x in v)

    def resolved(self) -> List[List[Any]]:
        """Float vectors stay floats; everything else becomes exact"""
        if self.is_float:
            return [[float(to_fraction(x)) if not isinstance(x, float) else x for x in v] for v in self.vectors]
        return [[as_rational(x) for x in v] for v in self.vectors]


class ProblemSpec(BaseModel):
    model_config = ConfigDict(extra="forbid")

    preset: Optional[str] = None
    lattice: Optional[LatticeSpec] = None
    l: List[Scalar]
    target: TargetSpec
    epsilon: Optional[float] = None
    seed: Optional[int] = None
    search: Dict[str, Any] = Field(default_factory=dict)
    reduction: Dict[str, Any] = Field(default_factory=dict)

    @field_validator("l")
    @classmethod
    def l_rational(cls, l: List[Scalar]) -> List[Scalar]:
        if not l:
            raise ValueError("l must be a non-empty vector")
        return _check_rationals(l)

    @field_validator("epsilon")
    @classmethod
    def epsilon_positive(cls, epsilon: Optional[float]) -> Optional[float]:
        if epsilon is not None and epsilon <= 0:
            raise ValueError("epsilon must be positive")
        return epsilon

    @model_validator(mode="after")
    def lattice_source(self) -> "ProblemSpec":
        if (self.preset is None) == (self.lattice is None):
            raise ValueError("give exactly one of \"preset\" or \"lattice\"")
        n = len(self.lattice.gram) if self.lattice else None
        if n is not None and len(self.l) != n:
            raise ValueError(f"l has length {len(self.l)}, lattice has dimension {n}")
        for v in self.target.vectors or []:
            if len(v) != len(self.l):
                raise ValueError(f"target vector of length {len(v)} does not match l of length {len(self.l)}")
        return self

    def with_preset(self, name: Optional[str]) -> "ProblemSpec":
        if not name:
            return self
        return self.model_copy(update={"preset": name, "lattice": None})


@dataclass
class RawProblem:
    """Lattice, generators and polarization resolved from a spec; the target may still be random"""

    lattice: Lattice
    generators: List[IntegralIsometry]
    l: Matrix
    target: Optional[List[List[Any]]]
    spec: ProblemSpec

    @property
    def space(self):
        return self.lattice.ambient


def _diagnostics(error: ValidationError) -> List[str]:
    lines = []
    for err in error.errors():
        loc = ".".join(str(x) for x in err["loc"]) or "spec"
        lines.append(f"{loc}: {err['msg']}")
    return lines


def parse_problem(text: str, source: str = "<spec>") -> ProblemSpec:
    """
    Parse and validate problem JSON

    Raises:
        SpecError: with one "field: message" line per problem, or the JSON error location
    """
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise SpecError(f"Malformed JSON in {source}", [f"line {e.lineno}, column {e.colno}: {e.msg}"])
    try:
        return ProblemSpec.model_validate(data)
    except ValidationError as e:
        raise SpecError(f"Invalid problem spec {source}", _diagnostics(e))


def load_problem(path: Union[str, Path]) -> ProblemSpec:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as e:
        raise SpecError(f"Cannot read spec file {path}", [f"{path}: {e.strerror}"])
    spec = parse_problem(text, str(path))
    logger.info(f"Loaded problem spec from {path}")
    return spec


def resolve_problem(spec: ProblemSpec) -> RawProblem:
    """Build the lattice and generators the spec names and check l against them"""
    if spec.preset is not None:
        lattice, generators = preset(spec.preset)
        generators = list(generators)
    else:
        lattice, generators = Lattice.from_dict(spec.lattice.model_dump(exclude_none=True))
    if len(spec.l) != lattice.ambient.dim:
        raise SpecError(
            "Invalid problem spec",
            [f"l: length {len(spec.l)} does not match lattice dimension {lattice.ambient.dim}"],
        )
    if spec.target.vectors is not None and any(len(v) != lattice.ambient.dim for v in spec.target.vectors):
        raise SpecError("Invalid problem spec", [f"target: vectors must have length {lattice.ambient.dim}"])
    l = Matrix([as_rational(x) for x in spec.l])
    target = spec.target.resolved() if spec.target.vectors is not None else None
    return RawProblem(lattice=lattice, generators=generators, l=l, target=target, spec=spec)


