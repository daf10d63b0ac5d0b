import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from loguru import logger

from denseorbit.core.atlas import GeneratorSet
from denseorbit.core.certificate import STATUS_OK, Certificate
from denseorbit.core.reduction import HyperbolicProblem, descend
from denseorbit.core.search import SearchConfig, approximate_plane, geodesic_distance, orbit_bfs
from denseorbit.errors import DenseOrbitError, SignatureError
from denseorbit.models.hyperbolic_plane import Geodesic, Isometry, IsometryClass, KleinModel, classify_isometry
from denseorbit.models.lattice import IntegralIsometry, Lattice
from denseorbit.models.quadratic_space import QuadraticSpace, Subspace, diagonal_vectors, signature
from denseorbit.utils.problem_loader import ProblemSpec, RawProblem, resolve_problem
from denseorbit.utils.trace_logger import orbit_frame, survey_frame

RANDOM_TARGET_ATTEMPTS = 1000


@dataclass
class SearchResult:
    certificate: Certificate
    problem: HyperbolicProblem

    @property
    def ok(self) -> bool:
        return self.certificate.status == STATUS_OK


def random_target(space: QuadraticSpace, seed: int) -> List[List[float]]:
    """
    Seeded random target: a positive plane, or a geodesic plane for (2,1) spaces

    Positive planes are rejection-sampled from Gaussian pairs; when sampling keeps
    failing a perturbation of the positive diagonal directions is used.
    """
    rng = np.random.default_rng(seed)
    sig = signature(space)
    if sig.as_tuple() == (2, 1, 0):
        model = KleinModel(space)
        theta = rng.uniform(0.0, 2 * math.pi)
        gap = rng.uniform(0.3, math.pi)
        a, b = model.point_at_angle(theta), model.point_at_angle(theta + gap)
        return [[round(float(x), 9) for x in a.vector()], [round(float(x), 9) for x in b.vector()]]

    gram = np.array(space.gram.tolist(), dtype=float)
    for _ in range(RANDOM_TARGET_ATTEMPTS):
        a = np.round(rng.normal(size=(space.dim, 2)), 6)
        restricted = a.T @ gram @ a
        values = np.linalg.eigvalsh(restricted)
        if values[0] > 1e-3 * max(1.0, abs(values[1])):
            return [list(map(float, a[:, 0])), list(map(float, a[:, 1]))]

    logger.warning(f"Random positive plane not found in {RANDOM_TARGET_ATTEMPTS} draws; using diagonal directions")
    positives = [v for v, q in diagonal_vectors(space, Subspace.whole(space)) if q > 0][:2]
    if len(positives) < 2:
        raise SignatureError("Space has no positive 2-planes")
    noise = rng.normal(scale=1e-3, size=(space.dim, 2))
    return [
        [float(x) + float(noise[i, j]) for i, x in enumerate(v)]
        for j, v in enumerate(positives)
    ]


def _format_angle(theta: float) -> str:
    """Angles near k·π/12 are written as multiples of π"""
    theta = theta % (2 * math.pi)
    if abs(theta - 2 * math.pi) < 1e-9:
        theta = 0.0
    for q in (1, 2, 3, 4, 6, 12):
        p = round(theta * q / math.pi)
        if abs(theta - p * math.pi / q) < 1e-9:
            if p == 0:
                return "0"
            num = "π" if p == 1 else f"{p}π"
            return num if q == 1 else f"{num}/{q}"
    return f"{theta:.6f}"


def describe_isometry(iso: Isometry) -> str:
    if iso.kind == IsometryClass.HYPERBOLIC:
        return f"{iso.kind.value} θ₊={_format_angle(iso.fixed.attractor.angle)} θ₋={_format_angle(iso.fixed.repeller.angle)}"
    if iso.kind == IsometryClass.PARABOLIC:
        return f"{iso.kind.value} θ={_format_angle(iso.fixed.attractor.angle)}"
    return iso.kind.value


class SearchService:
    """Runs the reduction and density search for problem specs"""

    def __init__(self, config: Dict[str, Any]):
        self.config = config
        self.threads = int(config.get("runtime", {}).get("threads", 1))

    def search_config(self, spec: Optional[ProblemSpec] = None, **overrides: Any) -> SearchConfig:
        values = dict(spec.search) if spec else {}
        if spec is not None:
            values.setdefault("epsilon", spec.epsilon)
            values.setdefault("rng_seed", spec.seed)
        values.update({k: v for k, v in overrides.items() if v is not None})
        return SearchConfig.from_config(self.config, **values)

    def pipeline_config(
        self,
        spec: Optional[ProblemSpec] = None,
        denom_bound: Optional[int] = None,
        epsilon: Optional[float] = None,
    ) -> Dict[str, Any]:
        cfg = {section: dict(values) for section, values in self.config.items()}
        if spec is not None:
            cfg["reduction"].update(spec.reduction)
        if denom_bound is not None:
            cfg["reduction"]["denom_bound"] = denom_bound
        if epsilon is not None:
            cfg["search"]["epsilon"] = epsilon
        return cfg

    def prepare(
        self, raw: RawProblem, seed: int, denom_bound: Optional[int] = None, epsilon: Optional[float] = None
    ) -> HyperbolicProblem:
        target = raw.target if raw.target is not None else random_target(raw.space, seed)
        return descend(
            raw.space,
            raw.lattice,
            raw.generators,
            raw.l,
            target,
            self.pipeline_config(raw.spec, denom_bound, epsilon),
        )

    def search(self, spec: ProblemSpec, denom_bound: Optional[int] = None, **overrides: Any) -> SearchResult:
        """
        Descend and search for one spec

        Args:
            spec: Validated problem spec
            denom_bound: Override of reduction.denom_bound
            overrides: SearchConfig fields taking precedence over spec and config

        Returns:
            The certificate (ok or best-effort) with the descended problem
        """
        try:
            cfg = self.search_config(spec, **overrides)
            raw = resolve_problem(spec)
            problem = self.prepare(raw, cfg.rng_seed, denom_bound, cfg.epsilon)
            certificate = approximate_plane(problem, cfg)
            return SearchResult(certificate=certificate, problem=problem)
        except Exception as e:
            logger.error(f"Error running search: {str(e)}")
            raise

    def _survey_seed(
        self, raw: RawProblem, seed: int, epsilons: Sequence[float], word_lengths: Sequence[int]
    ) -> List[Dict[str, Any]]:
        problem = self.prepare(raw, seed, epsilon=min(epsilons))
        gens = GeneratorSet.from_problem(problem)
        rows = []
        for epsilon in epsilons:
            for n in word_lengths:
                cfg = self.search_config(raw.spec, epsilon=epsilon, max_word_length=n, rng_seed=seed)
                try:
                    cert = approximate_plane(problem, cfg, gens)
                    rows.append({"epsilon": epsilon, "max_word_length": n, "seed": seed, "ok": cert.ok, "distance": cert.distance})
                except (DenseOrbitError, ValueError) as e:
                    logger.warning(f"Survey run seed={seed} ε={epsilon} n={n} failed: {str(e)}")
                    rows.append({"epsilon": epsilon, "max_word_length": n, "seed": seed, "ok": False, "distance": math.pi / 2})
        return rows

    def survey(
        self,
        spec: ProblemSpec,
        seeds: int,
        epsilons: Sequence[float],
        word_lengths: Optional[Sequence[int]] = None,
    ) -> pd.DataFrame:
        """
        Success rate and mean achieved distance per ε and word-length cap over seeded random targets

        Seeds run in parallel (runtime.threads workers); rows are merged in seed order.
        """
        raw = resolve_problem(spec.model_copy(update={"target": spec.target.model_copy(update={"vectors": None, "random": True})}))
        word_lengths = list(word_lengths or [self.search_config(spec).max_word_length])
        seed_list = list(range(seeds))
        logger.info(f"Survey: {seeds} seeds, ε in {list(epsilons)}, word lengths {word_lengths}, {self.threads} threads")
        with ThreadPoolExecutor(max_workers=self.threads) as pool:
            results = list(pool.map(lambda s: self._survey_seed(raw, s, epsilons, word_lengths), seed_list))
        runs = pd.DataFrame([row for rows in results for row in rows])
        summary = []
        for (epsilon, n), group in runs.groupby(["epsilon", "max_word_length"], sort=True):
            summary.append(
                {
                    "epsilon": epsilon,
                    "max_word_length": n,
                    "runs": len(group),
                    "ok": int(group["ok"].sum()),
                    "success_rate": float(group["ok"].mean()),
                    "mean_distance": float(group["distance"].mean()),
                }
            )
        return survey_frame(summary)


def hyperbolic_generators(lattice: Lattice, generators: Sequence[IntegralIsometry]) -> GeneratorSet:
    """Generator set acting directly on a rank-3 lattice of signature (2,1)"""
    if lattice.rank != 3 or signature(lattice.ambient).as_tuple() != (2, 1, 0):
        raise SignatureError("Orbit and classification commands need a (2,1) lattice")
    return GeneratorSet(
        KleinModel(lattice.ambient),
        [g.matrix for g in generators],
        labels=[g.label for g in generators],
    )


def classify(lattice: Lattice, matrix: Any) -> Tuple[Isometry, str]:
    iso = classify_isometry(KleinModel(lattice.ambient), matrix)
    return iso, describe_isometry(iso)


def orbit_table(
    lattice: Lattice,
    generators: Sequence[IntegralIsometry],
    normal: Sequence[Any],
    depth: int,
    target_normal: Optional[Sequence[Any]] = None,
) -> pd.DataFrame:
    """Boundary angles of the geodesic orbit, one row per orbit element in breadth-first order"""
    gens = hyperbolic_generators(lattice, generators)
    seed = Geodesic.from_normal(gens.model, list(normal))
    target = Geodesic.from_normal(gens.model, list(target_normal)) if target_normal is not None else seed
    rows = []
    for word, geodesic in orbit_bfs(gens, seed, depth):
        u, w = geodesic.endpoints()
        rows.append(
            {
                "word_length": len(word),
                "word": str(word),
                "theta1": u.angle,
                "theta2": w.angle,
                "distance_to_target": geodesic_distance(geodesic, target),
            }
        )
    logger.info(f"Orbit of depth {depth}: {len(rows)} geodesics")
    return orbit_frame(rows)
