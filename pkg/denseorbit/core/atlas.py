"""Group words over a generator set, and the breadth-first atlas of their fixed points"""

from dataclasses import dataclass, field
from typing import Any, Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np
from loguru import logger

from denseorbit.errors import EmptyGeneratorSetError
from denseorbit.models import exact_matrix as xm
from denseorbit.models.hyperbolic_plane import (
    BoundaryPoint,
    Isometry,
    IsometryClass,
    KleinModel,
    angle_distance,
    classify_isometry,
)

Letter = Tuple[int, int]


@dataclass(frozen=True, eq=False)
class GroupWord:
    """
    Product g_{i1}^{e1} · g_{i2}^{e2} ⋯ of generators

    `matrix` is the exact product in the generator set's frame; `lifted` caches the
    product of the lifts to V when known.
    """

    letters: Tuple[Letter, ...]
    matrix: np.ndarray = field(repr=False)
    lifted: Optional[np.ndarray] = field(default=None, repr=False)

    def __len__(self) -> int:
        return len(self.letters)

    @property
    def is_identity(self) -> bool:
        return not self.letters

    def sort_key(self) -> Tuple[int, Tuple[Letter, ...]]:
        return (len(self.letters), self.letters)

    def to_json(self) -> List[List[int]]:
        return [[i, e] for i, e in self.letters]

    def __str__(self) -> str:
        if not self.letters:
            return "1"
        return "·".join(f"g{i}" if e == 1 else f"g{i}^-1" for i, e in self.letters)


class GeneratorSet:
    """
    Exact generators of Γ acting on a (2,1) space, with optional lifts to V

    Generator matrices are object arrays of ints/Fractions; inverses are computed once as
    G⁻¹·Mᵀ·G. Reflections are their own inverses and contribute a single letter.
    """

    def __init__(
        self,
        model: KleinModel,
        matrices: Sequence[Any],
        lifts: Optional[Sequence[Any]] = None,
        lift_gram: Optional[Any] = None,
        labels: Optional[Sequence[str]] = None,
    ):
        if not matrices:
            raise EmptyGeneratorSetError("Generator set is empty")
        self.model = model
        self.matrices = [xm.to_exact(m) for m in matrices]
        self.inverses = [xm.isometry_inverse(m, model.gram) for m in self.matrices]
        self.labels = list(labels) if labels else [f"g{i}" for i in range(len(self.matrices))]
        self.lifts: Optional[List[np.ndarray]] = None
        self.lift_inverses: Optional[List[np.ndarray]] = None
        if lifts is not None:
            gram_v = xm.to_exact(lift_gram)
            self.lifts = [xm.to_exact(m) for m in lifts]
            self.lift_inverses = [xm.isometry_inverse(m, gram_v) for m in self.lifts]
        self.alphabet: List[Letter] = []
        for i, (m, inv) in enumerate(zip(self.matrices, self.inverses)):
            self.alphabet.append((i, 1))
            if not np.array_equal(m, inv):
                self.alphabet.append((i, -1))
        self._atlases: Dict[Tuple[int, int], "FixedPointAtlas"] = {}

    @classmethod
    def from_problem(cls, problem: Any) -> "GeneratorSet":
        return cls(
            problem.model,
            [g.matrix for g in problem.generators3],
            lifts=problem.lifts,
            lift_gram=problem.ambient.gram,
            labels=problem.provenance,
        )

    def __len__(self) -> int:
        return len(self.matrices)

    @property
    def has_lifts(self) -> bool:
        return self.lifts is not None

    def letter_matrix(self, letter: Letter) -> np.ndarray:
        i, e = letter
        return self.matrices[i] if e == 1 else self.inverses[i]

    def letter_lift(self, letter: Letter) -> np.ndarray:
        i, e = letter
        return self.lifts[i] if e == 1 else self.lift_inverses[i]

    def identity(self, with_lifts: bool = True) -> GroupWord:
        lifted = xm.identity(self.lifts[0].shape[0]) if self.has_lifts and with_lifts else None
        return GroupWord(letters=(), matrix=xm.identity(3), lifted=lifted)

    def word(self, letters: Sequence[Sequence[int]]) -> GroupWord:
        """Evaluate a word given as (generator, exponent) pairs"""
        result = self.identity()
        for i, e in reversed([tuple(x) for x in letters]):
            result = self.prepend((int(i), int(e)), result)
        return result

    def prepend(self, letter: Letter, word: GroupWord) -> GroupWord:
        """letter · word"""
        lifted = None
        if self.has_lifts and word.lifted is not None:
            lifted = xm.tidy(self.letter_lift(letter) @ word.lifted)
        return GroupWord((letter,) + word.letters, xm.tidy(self.letter_matrix(letter) @ word.matrix), lifted)

    def compose(self, a: GroupWord, b: GroupWord) -> GroupWord:
        """a · b"""
        lifted = None
        if a.lifted is not None and b.lifted is not None:
            lifted = xm.tidy(a.lifted @ b.lifted)
        return GroupWord(a.letters + b.letters, xm.tidy(a.matrix @ b.matrix), lifted)

    def inverse(self, word: GroupWord) -> GroupWord:
        letters = tuple((i, -e) for i, e in reversed(word.letters))
        lifted = None
        if word.lifted is not None:
            lifted = xm.tidy(_product([self.letter_lift(x) for x in letters], word.lifted.shape[0]))
        matrix = xm.tidy(_product([self.letter_matrix(x) for x in letters], 3))
        return GroupWord(letters, matrix, lifted)

    def power(self, word: GroupWord, n: int) -> GroupWord:
        """word^n for any integer n, by repeated squaring"""
        base = word if n >= 0 else self.inverse(word)
        k = abs(n)
        base = self.with_lift(base)
        lifted = xm.tidy(xm.power(base.lifted, k)) if base.lifted is not None else None
        return GroupWord(base.letters * k, xm.tidy(xm.power(base.matrix, k)), lifted)

    def with_lift(self, word: GroupWord) -> GroupWord:
        if word.lifted is not None or not self.has_lifts:
            return word
        return GroupWord(word.letters, word.matrix, self.lift(word))

    def lift(self, word: GroupWord) -> np.ndarray:
        if word.lifted is not None:
            return word.lifted
        if not self.has_lifts:
            raise ValueError("Generator set carries no lifts")
        return xm.tidy(_product([self.letter_lift(x) for x in word.letters], self.lifts[0].shape[0]))

    def atlas(self, node_cap: int, max_length: int) -> "FixedPointAtlas":
        """Cached atlas of group elements up to the given caps"""
        key = (node_cap, max_length)
        if key not in self._atlases:
            self._atlases[key] = FixedPointAtlas(self, node_cap=node_cap, max_length=max_length)
        return self._atlases[key]


def _product(matrices: Sequence[np.ndarray], n: int) -> np.ndarray:
    result = xm.identity(n)
    for m in matrices:
        result = result @ m
    return result


@dataclass(frozen=True)
class AtlasEntry:
    word: GroupWord
    isometry: Isometry

    @property
    def kind(self) -> IsometryClass:
        return self.isometry.kind


def enumerate_elements(gens: GeneratorSet, node_cap: int, max_length: int) -> Iterator[GroupWord]:
    """
    Breadth-first enumeration of distinct group elements by left multiplication

    Elements are compared projectively (M and −M act alike). Each level is emitted in
    lexicographic letter order after the identity.
    """
    start = gens.identity(with_lifts=False)
    seen = {xm.projective_key(start.matrix.ravel())}
    frontier = [start]
    yield frontier[0]
    count = 1
    for _ in range(max_length):
        level: List[GroupWord] = []
        for word in frontier:
            for letter in gens.alphabet:
                if word.letters and letter == (word.letters[0][0], -word.letters[0][1]):
                    continue
                candidate = gens.prepend(letter, word)
                key = xm.projective_key(candidate.matrix.ravel())
                if key in seen:
                    continue
                seen.add(key)
                level.append(candidate)
        level.sort(key=GroupWord.sort_key)
        for word in level:
            yield word
            count += 1
            if count >= node_cap:
                return
        if not level:
            return
        frontier = level


class FixedPointAtlas:
    """
    Hyperbolic and parabolic elements of Γ indexed by their boundary fixed points

    Built once per generator set by breadth-first enumeration; elliptic, identity and
    orientation-reversing elements are kept as nodes but carry no fixed points.
    """

    def __init__(self, gens: GeneratorSet, node_cap: int = 20000, max_length: int = 20):
        self.gens = gens
        self.nodes: List[GroupWord] = []
        self.entries: List[AtlasEntry] = []
        angles: List[float] = []
        owners: List[int] = []
        counts = {kind: 0 for kind in IsometryClass}
        for word in enumerate_elements(gens, node_cap, max_length):
            self.nodes.append(word)
            if word.is_identity:
                counts[IsometryClass.IDENTITY] += 1
                continue
            iso = classify_isometry(gens.model, word.matrix, verify=False)
            counts[iso.kind] += 1
            if not iso.has_dynamics:
                continue
            self.entries.append(AtlasEntry(word, iso))
            for p in iso.fixed.boundary_points():
                angles.append(p.angle)
                owners.append(len(self.entries) - 1)
        self._angles = np.array(angles, dtype=float)
        self._owners = np.array(owners, dtype=int)
        summary = ", ".join(f"{k.value}={v}" for k, v in counts.items())
        logger.info(f"Atlas built: {len(self.nodes)} elements ({summary})")

    def __len__(self) -> int:
        return len(self.entries)

    def query(self, center: float, width: float) -> List[Tuple[AtlasEntry, BoundaryPoint]]:
        """Entries with a fixed point within `width` of the angle `center`, shortest words first"""
        if len(self._angles) == 0:
            return []
        d = np.abs(self._angles - center) % (2 * np.pi)
        d = np.minimum(d, 2 * np.pi - d)
        hits: Dict[int, BoundaryPoint] = {}
        for idx in np.nonzero(d < width)[0]:
            owner = int(self._owners[idx])
            entry = self.entries[owner]
            best = hits.get(owner)
            for p in entry.isometry.fixed.boundary_points():
                if angle_distance(p.angle, center) < width and (
                    best is None or angle_distance(p.angle, center) < angle_distance(best.angle, center)
                ):
                    best = p
            hits[owner] = best
        return [(self.entries[i], hits[i]) for i in sorted(hits)]

    def distinct_fixed_points(self, tol: float = 1e-6) -> int:
        """Number of distinct boundary fixed points, merging angles closer than tol"""
        if len(self._angles) == 0:
            return 0
        angles = np.sort(self._angles % (2 * np.pi))
        gaps = np.diff(angles) > tol
        count = 1 + int(np.count_nonzero(gaps))
        if count > 1 and angles[0] + 2 * np.pi - angles[-1] <= tol:
            count -= 1
        return count


def is_non_elementary(gens: GeneratorSet, node_cap: int = 200, max_length: int = 4) -> bool:
    """
    Whether short words already show three distinct limit points

    An elementary group (finite, or fixing one or two boundary points) cannot move a
    geodesic close to a generic target.
    """
    return gens.atlas(node_cap, max_length).distinct_fixed_points() >= 3
