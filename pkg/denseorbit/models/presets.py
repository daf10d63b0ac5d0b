"""Catalog of named lattices used as fixtures and CLI presets"""

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Dict, List, Sequence, Tuple

import sympy as sp
from loguru import logger

from denseorbit.errors import NotIntegralError, UnknownPresetError
from denseorbit.models.lattice import IntegralIsometry, Lattice, reflection_in_vector
from denseorbit.models.quadratic_space import QuadraticSpace

# Bourbaki labelling: chain 1-3-4-5-6-7-8 with node 2 attached to node 4
E8_EDGES = [(0, 2), (2, 3), (3, 4), (4, 5), (5, 6), (6, 7), (1, 3)]


def e8_gram(sign: int = 1) -> sp.Matrix:
    g = sp.eye(8) * 2
    for i, j in E8_EDGES:
        g[i, j] = g[j, i] = -1
    return g * sign


def hyperbolic_plane_gram() -> sp.Matrix:
    return sp.Matrix([[0, 1], [1, 0]])


def k3_gram() -> sp.Matrix:
    u = hyperbolic_plane_gram()
    return sp.diag(u, u, u, e8_gram(-1), e8_gram(-1))


def primitive_vectors(dim: int, height: int) -> List[Tuple[int, ...]]:
    """Primitive integer vectors with entries in [-height, height], first nonzero entry positive"""
    result = []
    for coords in itertools.product(range(-height, height + 1), repeat=dim):
        if not any(coords):
            continue
        first = next(x for x in coords if x != 0)
        if first < 0 or math.gcd(*coords) != 1:
            continue
        result.append(coords)
    return result


def reflection_generators(lattice: Lattice, height: int, norms: Sequence[int]) -> List[IntegralIsometry]:
    """All integral reflections in primitive vectors of the given norms with bounded coordinates"""
    gram = [[int(x) for x in row] for row in lattice.ambient.gram.tolist()]
    gens = []
    for coords in primitive_vectors(lattice.ambient.dim, height):
        q = sum(gram[i][j] * coords[i] * coords[j] for i in range(len(coords)) for j in range(len(coords)))
        if q not in norms:
            continue
        try:
            gens.append(reflection_in_vector(lattice, coords))
        except NotIntegralError:
            continue
    return gens


@dataclass(frozen=True)
class PresetEntry:
    gram: Callable[[], sp.Matrix]
    generators: Callable[[Lattice], List[IntegralIsometry]]
    note: str


PRESET_CATALOG: Dict[str, PresetEntry] = {
    "minkowski-2-1": PresetEntry(
        gram=lambda: sp.diag(1, 1, -1),
        generators=lambda lat: reflection_generators(lat, height=3, norms=(1, 2)),
        note="odd unimodular lattice I(2,1); reflections in norm 1 and 2 vectors of height <= 3",
    ),
    "minkowski-3-1": PresetEntry(
        gram=lambda: sp.diag(1, 1, 1, -1),
        generators=lambda lat: reflection_generators(lat, height=3, norms=(1, 2)),
        note="odd unimodular lattice I(3,1); reflections in norm 1 and 2 vectors of height <= 3",
    ),
    "U": PresetEntry(
        gram=hyperbolic_plane_gram,
        generators=lambda lat: reflection_generators(lat, height=1, norms=(2, -2)),
        note="hyperbolic plane U; reflections in (1,1) and (1,-1)",
    ),
    "k3": PresetEntry(
        gram=k3_gram,
        generators=lambda lat: [],
        note="K3 lattice U^3 + E8(-1)^2, signature (3,19); data only",
    ),
}


@lru_cache(maxsize=None)
def preset(name: str) -> Tuple[Lattice, Tuple[IntegralIsometry, ...]]:
    """
    Look up a named lattice

    Returns:
        (standard lattice on the preset Gram matrix, validated generators)
    """
    if name not in PRESET_CATALOG:
        raise UnknownPresetError(f"Unknown preset '{name}'; choose from {sorted(PRESET_CATALOG)}")
    entry = PRESET_CATALOG[name]
    lattice = Lattice.standard(QuadraticSpace(entry.gram()))
    gens = tuple(entry.generators(lattice))
    logger.info(f"Loaded preset {name}: rank {lattice.rank}, {len(gens)} generators")
    return lattice, gens
