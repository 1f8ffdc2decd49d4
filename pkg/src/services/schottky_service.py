import itertools

import numpy as np
from scipy.linalg import expm
from scipy.stats import special_ortho_group

from src.core.config.app_settings import settings
from src.core.config.logger import logger
from src.core.config.tolerances import Tolerances
from src.exceptions.errors import InvalidInputError, PreconditionError
from src.models.boundary import Flag
from src.models.words import GeneratorSystem
from src.schemas.reports import SchottkyReport
from src.services.boundary_service import boundary_service
from src.services.matgroup_service import matgroup_service
from src.utils.matrices import skew_from_vector

SMALL_FRACTIONS = (1 / 8, 1 / 6, 1 / 4, 1 / 3)
BIG_FRACTIONS = (0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.95)
CONDITIONS = ("cross_containment", "transversality", "contraction", "common_intersection")


class SchottkyService:
    """
    Sampled verification of the Schottky ping-pong conditions.

    The neighbourhoods b and B of every attracting flag are metric balls for the flag distance; their
    radii are searched over a fixed grid and every condition is checked on random samples.
    """

    def _ball_samples(self, center: Flag, radius: float, count: int, rng: np.random.Generator) -> list[np.ndarray]:
        """Frames k exp(tX) within ``radius`` of ``center``; the center itself is the first sample."""
        stacks = []
        for frame in center.frames:
            d = frame.shape[0]
            coeffs = rng.normal(size=(count, d * (d - 1) // 2))
            coeffs /= np.linalg.norm(coeffs, axis=1, keepdims=True)
            t = radius * np.sqrt(rng.uniform(size=count))
            skew = np.stack([skew_from_vector(c, d) for c in coeffs]) * t[:, None, None]
            stacks.append(np.concatenate([frame[None], frame @ expm(skew)]))
        dist = boundary_service.stack_distances(stacks, center.frames)
        inside = dist <= radius
        return [s[inside] for s in stacks]

    def _act(self, g_factors, frames: list[np.ndarray]) -> list[np.ndarray]:
        out = []
        for g, k in zip(g_factors, frames):
            moved, _, _ = matgroup_service.iwasawa_arrays(g @ k)
            out.append(moved)
        return out

    def _evaluate(
        self,
        gens: GeneratorSystem,
        centers: dict[int, Flag],
        small: float,
        big: float,
        count: int,
        rng: np.random.Generator,
    ) -> tuple[dict[str, bool], float]:
        letters = list(centers)
        conditions = {}

        # (1) b_a inside B_c whenever a and c belong to different generators (triangle inequality).
        conditions["cross_containment"] = all(
            boundary_service.flag_distance(centers[a], centers[c]) + small <= big
            for a, c in itertools.permutations(letters, 2)
            if abs(a) != abs(c)
        )

        small_samples = {a: self._ball_samples(centers[a], small, count, rng) for a in letters}
        big_samples = {a: self._ball_samples(centers[a], big, count, rng) for a in letters}

        # (2) closures of distinct small balls are transverse.
        transverse = True
        for a, c in itertools.combinations(letters, 2):
            left, right = small_samples[a], small_samples[c]
            n = min(left[0].shape[0], right[0].shape[0])
            minors = boundary_service.stack_minors([x[:n] for x in left], [y[:n] for y in right])
            crossed = boundary_service.stack_minors([x[:n] for x in left], [y[:n][::-1] for y in right])
            if min(minors.min(), crossed.min()) <= Tolerances.TRANSVERSALITY_MARGIN:
                transverse = False
                break
        conditions["transversality"] = transverse

        # (3) gamma_a B_a inside b_a, with a sampled Lipschitz ratio below one.
        contraction, epsilon_hat = True, 0.0
        for a in letters:
            g = gens.element(a)
            samples = big_samples[a]
            images = self._act(g.factors, samples)
            if np.any(boundary_service.stack_distances(images, centers[a].frames) > small):
                contraction = False
            n = samples[0].shape[0]
            half = n // 2
            if half == 0:
                continue
            src = boundary_service.stack_distances([s[:half] for s in samples], [s[half : 2 * half] for s in samples])
            dst = boundary_service.stack_distances([s[:half] for s in images], [s[half : 2 * half] for s in images])
            valid = src > 1e-9
            if np.any(valid):
                epsilon_hat = max(epsilon_hat, float(np.max(dst[valid] / src[valid])))
        conditions["contraction"] = contraction and epsilon_hat < 1.0

        # (4) some flag lies in every big ball.
        candidates = []
        for f, d in enumerate(gens.descriptor.factor_dims):
            fixed = np.stack([c.frames[f] for c in centers.values()])
            sampled = special_ortho_group.rvs(d, size=count, random_state=rng).reshape(count, d, d)
            candidates.append(np.concatenate([fixed, sampled]))
        within = np.ones(candidates[0].shape[0], dtype=bool)
        for a in letters:
            within &= boundary_service.stack_distances(candidates, centers[a].frames) < big
        conditions["common_intersection"] = bool(np.any(within))
        return conditions, epsilon_hat

    def _search(
        self, gens: GeneratorSystem, centers: dict[int, Flag], count: int, seed: int
    ) -> tuple[dict[str, bool], float, float, float]:
        spread = min(
            boundary_service.flag_distance(centers[a], centers[c]) for a, c in itertools.combinations(centers, 2)
        )
        best = None
        for small_fraction, big_fraction in itertools.product(SMALL_FRACTIONS, BIG_FRACTIONS):
            small, big = spread * small_fraction, np.pi / 2 * big_fraction
            if small >= big:
                continue
            rng = np.random.default_rng(seed)
            conditions, epsilon_hat = self._evaluate(gens, centers, small, big, count, rng)
            score = (sum(conditions.values()), -epsilon_hat)
            if best is None or score > best[0]:
                best = (score, conditions, epsilon_hat, small, big)
        _, conditions, epsilon_hat, small, big = best
        return conditions, epsilon_hat, small, big

    def schottky_check(self, gens: GeneratorSystem, sample_count: int = 200, seed: int | None = None) -> SchottkyReport:
        """
        Searches ball neighbourhoods of the attracting flags satisfying the Schottky conditions.

        The search is repeated with twice the samples; verdicts that change between the two runs
        are reported as ``inconclusive``.

        Args:
            gens (GeneratorSystem): Generators, all loxodromic with distinct fixed flags.
            sample_count (int): Samples per neighbourhood in the first pass.
            seed (int | None): Sampling seed, ``settings.SEED`` when omitted.

        Returns:
            SchottkyReport: Verdict, per-condition outcome and the Lipschitz estimate.

        Raises:
            InvalidInputError: If p < 2 or sample_count < 2.
            PreconditionError: If a generator is not loxodromic.
        """
        if gens.p < 2:
            raise InvalidInputError(f"a Schottky check needs p >= 2 generators, got {gens.p}")
        if sample_count < 2:
            raise InvalidInputError(f"sample_count must be at least 2, got {sample_count}")
        seed = settings.SEED if seed is None else seed
        for label, g in zip(gens.labels, gens.generators):
            if not matgroup_service.is_loxodromic(g):
                raise PreconditionError(f"generator {label} is not loxodromic")
        centers = {}
        for i, g in enumerate(gens.generators, start=1):
            centers[i] = boundary_service.attracting_flag(g)
            centers[-i] = boundary_service.repelling_flag(g)
        for a, c in itertools.combinations(centers, 2):
            if boundary_service.flag_distance(centers[a], centers[c]) < Tolerances.IDENTITY:
                raise PreconditionError("attracting and repelling flags of the generators must be distinct")

        first = self._search(gens, centers, sample_count, seed)
        second = self._search(gens, centers, 2 * sample_count, seed + 1)
        passed_first, passed_second = all(first[0].values()), all(second[0].values())
        if passed_first and passed_second:
            verdict = "pass"
        elif passed_first != passed_second:
            verdict = "inconclusive"
        else:
            verdict = "fail"
        conditions, epsilon_hat, small, big = first
        logger.info(f"Schottky check: {verdict} (epsilon_hat={epsilon_hat:.3g}, r={small:.3g}, R={big:.3g})")
        return SchottkyReport(
            verdict=verdict,
            conditions=conditions,
            epsilon_hat=epsilon_hat,
            small_radius=small,
            big_radius=big,
            sample_count=sample_count,
        )


schottky_service = SchottkyService()
