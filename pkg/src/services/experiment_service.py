from dataclasses import dataclass
from typing import Sequence

import numpy as np

from src.core.config.app_settings import settings
from src.core.config.logger import logger
from src.core.config.tolerances import FitDefaults, Tolerances
from src.exceptions.errors import (
    ConfigurationError,
    ExperimentAbortedError,
    FitError,
    InsufficientDataError,
    NumericalError,
)
from src.models.boundary import AtomicMeasure
from src.models.cone import AdaptedNorm
from src.models.experiments import CountingRegion, CountOutcome, CountRecord
from src.models.group import CartanVector, GroupDescriptor, LinearForm
from src.models.symmetric import SymmetricPairDescriptor
from src.models.words import GeneratorSystem, OrbitTable, Word
from src.repositories.orbit_tables import OrbitTableRepository
from src.schemas.config import BallSchema, ExperimentConfig, ParamsSchema
from src.schemas.results import (
    ConcavityReport,
    CountReport,
    FitResult,
    GrowthIndicatorRecord,
    LimitConeRecord,
    PSMeasureReport,
    WindowConsistency,
)
from src.services.boundary_service import boundary_service
from src.services.cone_service import cone_service
from src.services.counting_service import counting_service
from src.services.enumeration_service import enumeration_service
from src.services.matgroup_service import matgroup_service
from src.services.symmetric_service import GCartanBatch, symmetric_service
from src.utils.pool import map_shards

SHARD_ROWS = 50_000


@dataclass(frozen=True, eq=False)
class _DecompositionShard:
    pair: SymmetricPairDescriptor
    stacks: tuple[np.ndarray, ...]


def _decompose_shard(shard: _DecompositionShard) -> GCartanBatch:
    return symmetric_service.gcartan_arrays(shard.pair, list(shard.stacks))


def _dominant(descriptor: GroupDescriptor, coords: np.ndarray) -> np.ndarray:
    """Representative in the positive Weyl chamber: every factor sorted in descending order."""
    out = np.array(coords, dtype=np.float64)
    for sl in descriptor.slices:
        out[..., sl] = -np.sort(-out[..., sl], axis=-1)
    return out


def _frames(descriptor: GroupDescriptor, center: list[list[list[float]]]) -> list[np.ndarray]:
    """Orthonormal frames of a ball center, one per factor."""
    if len(center) != descriptor.n_factors:
        raise ConfigurationError(f"ball center needs {descriptor.n_factors} frames, got {len(center)}")
    frames = []
    for matrix, d in zip(center, descriptor.factor_dims):
        matrix = np.asarray(matrix, dtype=np.float64)
        if matrix.shape != (d, d):
            raise ConfigurationError(f"ball center frame has shape {matrix.shape}, expected {(d, d)}")
        q, r = np.linalg.qr(matrix)
        if np.min(np.abs(np.diag(r))) < Tolerances.TRANSVERSALITY_MARGIN:
            raise ConfigurationError("ball center frame is singular")
        frames.append(q)
    return frames


class ExperimentService:
    """Runs the experiments of a configuration on top of the library services."""

    def orbit_table(
        self,
        gens: GeneratorSystem,
        depth: int,
        with_flags: bool = False,
        threads: int | None = None,
        cache: OrbitTableRepository | None = None,
    ) -> OrbitTable:
        """Loads the table from the cache when present, otherwise enumerates it and stores it."""
        if cache is not None:
            table = cache.find_one_or_none(gens, depth, with_flags=with_flags)
            if table is not None:
                logger.info(f"Loaded {len(table)} cached rows at depth {depth}")
                return table
        table = enumeration_service.enumerate_ball(gens, depth, with_flags=with_flags, threads=threads)
        if cache is not None:
            cache.add_one((table, gens))
        return table

    def region(self, descriptor: GroupDescriptor, params: ParamsSchema) -> CountingRegion:
        """Counting region from the direction, aperture and inequalities of the parameters."""
        center = None if params.direction is None else np.asarray(params.direction, dtype=np.float64)
        if center is not None and params.aperture is None:
            raise ConfigurationError("a counting direction needs an aperture")
        inequalities = None if params.inequalities is None else np.asarray(params.inequalities, dtype=np.float64)
        name = "cone" if center is not None else "polyhedral" if inequalities is not None else "chamber"
        return CountingRegion(descriptor, center, params.aperture, inequalities, name)

    def norm(self, descriptor: GroupDescriptor, params: ParamsSchema) -> AdaptedNorm | None:
        if params.norm == "trace":
            return None
        theta = LinearForm(descriptor, np.asarray(params.theta, dtype=np.float64))
        v = CartanVector(descriptor, descriptor.project(np.asarray(params.direction, dtype=np.float64)))
        return cone_service.adapted_norm(theta, v)

    def _grid(self, table: OrbitTable, params: ParamsSchema) -> tuple[tuple[float, float], np.ndarray]:
        window = tuple(params.window) if params.window is not None else counting_service.reliable_window(table)
        return window, counting_service.t_grid(0.0, window[1])

    def _fits(
        self, record: CountRecord, window: tuple[float, float], beta: float
    ) -> tuple[FitResult, FitResult | None, WindowConsistency | None]:
        """Headline fit with beta frozen, plus the free fit and the split-window check as diagnostics."""
        fit = counting_service.fit_exponential_polynomial(record, beta=beta, window=window)
        try:
            free = counting_service.fit_exponential_polynomial(record, window=window)
        except FitError as err:
            logger.warning(f"Free fit skipped: {err.msg}")
            free = None
        try:
            consistency = counting_service.split_window_consistency(record, fit)
        except FitError as err:
            logger.warning(f"Split-window check skipped: {err.msg}")
            consistency = None
        return fit, free, consistency

    def _reference(self, table: OrbitTable, directions: np.ndarray, params: ParamsSchema) -> float | None:
        """Largest finite growth-indicator value over the given directions, None when nothing fits."""
        directions = _dominant(table.descriptor, np.atleast_2d(directions))
        try:
            est = cone_service.estimate_growth_indicator(
                table, grid=directions, apertures=tuple(params.apertures or FitDefaults.APERTURES)
            )
        except (FitError, InsufficientDataError) as err:
            logger.warning(f"Growth reference skipped: {err.msg}")
            return None
        finite = est.values[est.finite()]
        return float(finite.max()) if finite.size else None

    def _report(
        self,
        kind: str,
        table: OrbitTable,
        record: CountRecord,
        window: tuple[float, float],
        beta: float,
        reference: float | None,
        **extra: float | None,
    ) -> CountReport:
        fit, free, consistency = self._fits(record, window, beta)
        gap = None if not reference else (fit.delta - reference) / reference
        logger.info(f"{kind}: delta = {fit.delta:.6g} +- {fit.stderr_delta:.2g} (beta frozen at {beta:g})")
        return CountReport(
            experiment=kind,
            depth=table.depth,
            rows=int(record.metadata.get("rows", 0)),
            fit=fit,
            free_fit=free,
            expected_beta=beta,
            reference_rate=reference,
            relative_gap=gap,
            window_consistency=consistency,
            **extra,
        )

    def run_cone_count(
        self, config: ExperimentConfig, threads: int | None = None, cache: OrbitTableRepository | None = None
    ) -> CountOutcome:
        """
        Directional count N(T) = #{gamma : mu(gamma) in the region, |mu(gamma)| <= T} and its fit.

        Beta is frozen to 0 unless the parameters give a value.
        """
        params = config.experiment.params
        gens = config.group.generator_system()
        table = self.orbit_table(gens, params.depth, threads=threads, cache=cache)
        region = self.region(gens.descriptor, params)
        window, grid = self._grid(table, params)
        form = None
        if params.dedup == "orthogonal-form":
            pair = config.pair.pair(gens.descriptor) if config.pair is not None else None
            if pair is not None and pair.kind == "indefinite-orthogonal":
                form = [pair.form]
            else:
                form = [np.eye(d) for d in gens.descriptor.factor_dims]
        record = counting_service.count_in_cone(
            table, region, grid, self.norm(gens.descriptor, params), gens, params.dedup, form
        )
        reference = None
        if params.compare_growth and region.center is not None:
            reference = self._reference(table, region.center, params)
        beta = params.beta if params.beta is not None else 0.0
        return CountOutcome(record, self._report("cone-count", table, record, window, beta, reference))

    def _ball_mask(self, frames: Sequence[np.ndarray], ball: BallSchema, descriptor: GroupDescriptor) -> np.ndarray:
        if ball.center is None:
            return np.ones(frames[0].shape[0], dtype=bool)
        return boundary_service.stack_distances(list(frames), _frames(descriptor, ball.center)) <= ball.radius

    def bisector_record(
        self,
        config: ExperimentConfig,
        table: OrbitTable,
        gens: GeneratorSystem,
        threads: int | None = None,
    ) -> tuple[CountRecord, float]:
        """
        N(T) = #{gamma = h exp(b) k : h in Omega_H, k in Omega_K, b in the region, |b| <= T}.

        Omega_K is the ball {k : d(k^-1 P, c_K) <= rho_K}, invariant under M on the left; Omega_H is
        {h : |mu(h)| <= R_H, d(h P, c_H) <= rho_H}, invariant under H n M on the right. Rows whose
        decomposition is ambiguous or inaccurate are counted only when both sets are the whole group.

        Returns:
            tuple: The record and the share of ambiguous or failed decompositions.

        Raises:
            ExperimentAbortedError: If more than 1% of the rows cannot be decomposed.
        """
        params = config.experiment.params
        pair = config.pair.pair(gens.descriptor)
        rows = np.flatnonzero(table.lengths > 0)
        sub = table.subset(rows)
        mats, invs = enumeration_service.table_matrices(sub, gens)
        shards = [
            _DecompositionShard(pair, tuple(m[start : start + SHARD_ROWS] for m in mats))
            for start in range(0, len(sub), SHARD_ROWS)
        ]
        parts = map_shards(_decompose_shard, shards, threads)
        if parts:
            h = [np.concatenate([p.h[f] for p in parts]) for f in range(len(mats))]
            h_inv = [np.concatenate([p.h_inverse[f] for p in parts]) for f in range(len(mats))]
            k = [np.concatenate([p.k[f] for p in parts]) for f in range(len(mats))]
            ambiguous = np.concatenate([p.ambiguous for p in parts])
            residual = np.concatenate([p.residual for p in parts])
            recomposition = np.concatenate([p.recomposition for p in parts])
        else:
            h = h_inv = k = [np.zeros((0, d, d)) for d in gens.descriptor.factor_dims]
            ambiguous = np.zeros(0, dtype=bool)
            residual = recomposition = np.zeros(0)
        bad = ambiguous | (residual > Tolerances.H_MEMBERSHIP) | (recomposition > Tolerances.GCARTAN_RECOMPOSITION)
        fraction = float(bad.mean()) if bad.size else 0.0
        if fraction > FitDefaults.AMBIGUITY_ABORT_FRACTION:
            raise ExperimentAbortedError(
                f"{fraction:.2%} of the decompositions are ambiguous or inaccurate "
                f"(limit {FitDefaults.AMBIGUITY_ABORT_FRACTION:.0%})"
            )

        if pair.kind == "riemannian":
            b = sub.mu
        else:
            b = symmetric_service.h_cartan_coords(pair, mats, invs)
        inside = self.region(gens.descriptor, params).contains(b)

        omega_h, omega_k = params.omega_h, params.omega_k
        restricted = omega_h.center is not None or omega_h.norm_radius is not None or omega_k.center is not None
        if restricted:
            inside &= ~bad
            h_flags = [np.linalg.qr(m)[0] for m in h]
            inside &= self._ball_mask(h_flags, omega_h, gens.descriptor)
            if omega_h.norm_radius is not None:
                inside &= matgroup_service.norms(matgroup_service.cartan_coords(h, h_inv)) <= omega_h.norm_radius
            inside &= self._ball_mask([np.swapaxes(m, -1, -2) for m in k], omega_k, gens.descriptor)

        norm = self.norm(gens.descriptor, params)
        sizes = counting_service.sizes(b[inside], norm)
        _, grid = self._grid(table, params)
        metadata = {
            "depth": table.depth,
            "region": "bisector",
            "norm": params.norm,
            "dedup": "none",
            "rows": int(inside.sum()),
        }
        return CountRecord(grid, counting_service.counts(sizes, grid), metadata), fraction

    def run_bisector_experiment(
        self, config: ExperimentConfig, threads: int | None = None, cache: OrbitTableRepository | None = None
    ) -> CountOutcome:
        """Bisector count with beta frozen to (r0 - r) / 2, compared with the growth indicator at the direction."""
        params = config.experiment.params
        gens = config.group.generator_system()
        pair = config.pair.pair(gens.descriptor)
        table = self.orbit_table(gens, params.depth, threads=threads, cache=cache)
        record, fraction = self.bisector_record(config, table, gens, threads)
        window, _ = self._grid(table, params)
        reference = None
        if params.compare_growth and params.direction is not None:
            reference = self._reference(table, np.asarray(params.direction), params)
        beta = params.beta if params.beta is not None else (pair.r0 - gens.descriptor.rank) / 2
        report = self._report("bisector-count", table, record, window, beta, reference, ambiguous_fraction=fraction)
        return CountOutcome(record, report)

    def default_dedup(self, pair: SymmetricPairDescriptor) -> tuple[str, list[np.ndarray] | None]:
        if pair.kind == "swap":
            return "factor-ratio", None
        if pair.kind == "indefinite-orthogonal":
            return "orthogonal-form", [pair.form]
        return "orthogonal-form", [np.eye(d) for d in pair.descriptor.factor_dims]

    def b_directions(self, pair: SymmetricPairDescriptor, resolution: int) -> np.ndarray:
        """Unit directions of the positive chamber of b, as embedded coordinates."""
        if pair.kind != "swap":
            return cone_service.direction_grid(pair.descriptor, resolution)
        half = GroupDescriptor.standard(pair.descriptor.factor_dims[:1])
        u = cone_service.direction_grid(half, resolution)
        return np.concatenate([u, -u], axis=1) / np.sqrt(2.0)

    def symmetric_record(
        self, config: ExperimentConfig, table: OrbitTable, gens: GeneratorSystem
    ) -> tuple[CountRecord, np.ndarray]:
        """
        N(T) = #{cosets gamma H : |b(gamma)| <= T} after coset deduplication.

        Returns:
            tuple: The record and the dominant b-projections of the counted rows.
        """
        params = config.experiment.params
        pair = config.pair.pair(gens.descriptor)
        kind, form = self.default_dedup(pair)
        if params.dedup is not None:
            kind = params.dedup
        deduped = enumeration_service.dedup_cosets(table, gens, kind, form)
        deduped = deduped.subset(deduped.lengths > 0)
        if pair.kind == "riemannian":
            b = deduped.mu
        else:
            mats, invs = enumeration_service.table_matrices(deduped, gens)
            b = symmetric_service.h_cartan_coords(pair, mats, invs)
        inside = self.region(gens.descriptor, params).contains(b)
        sizes = counting_service.sizes(b[inside], self.norm(gens.descriptor, params))
        _, grid = self._grid(table, params)
        metadata = {
            "depth": table.depth,
            "region": "b-chamber",
            "norm": params.norm,
            "dedup": kind,
            "rows": int(inside.sum()),
        }
        return CountRecord(grid, counting_service.counts(sizes, grid), metadata), b[inside]

    def run_symmetric_count(
        self,
        config: ExperimentConfig,
        threads: int | None = None,
        cache: OrbitTableRepository | None = None,
        seed: int | None = None,
    ) -> CountOutcome:
        """
        Coset count by |b|, fitted with beta frozen to (r0 - r) / 2.

        The rate is compared with the growth indicator maximized over the directions of b and with
        the critical exponent of the whole orbit; the sampled share of limit points inside H P / P
        is recorded when flags are available.
        """
        params = config.experiment.params
        gens = config.group.generator_system()
        pair = config.pair.pair(gens.descriptor)
        with_flags = pair.kind != "riemannian"
        table = self.orbit_table(gens, params.depth, with_flags=with_flags, threads=threads, cache=cache)
        record, b = self.symmetric_record(config, table, gens)
        window, _ = self._grid(table, params)

        sorted_b = np.concatenate([np.sort(b[:, sl], axis=1) for sl in gens.descriptor.slices], axis=1)
        walls = np.any(np.abs(np.diff(sorted_b, axis=1)) < Tolerances.REGULARITY, axis=1)
        reference = None
        if params.compare_growth:
            reference = self._reference(table, self.b_directions(pair, params.resolution), params)
        try:
            critical = cone_service.poincare_abscissa(table)
        except (InsufficientDataError, NumericalError) as err:
            logger.warning(f"Critical exponent skipped: {err.msg}")
            critical = None
        containment = None
        if with_flags and table.depth > 0:
            containment = symmetric_service.limit_set_containment(
                pair, table, params.samples, seed if seed is not None else config.seed
            )
        beta = params.beta if params.beta is not None else (pair.r0 - gens.descriptor.rank) / 2
        report = self._report(
            "symmetric-count",
            table,
            record,
            window,
            beta,
            reference,
            ambiguous_fraction=float(walls.mean()) if walls.size else 0.0,
            critical_exponent=critical,
            limit_set_containment=containment,
        )
        return CountOutcome(record, report)

    def run_growth_indicator(
        self,
        config: ExperimentConfig,
        threads: int | None = None,
        cache: OrbitTableRepository | None = None,
        seed: int | None = None,
    ) -> tuple[GrowthIndicatorRecord, ConcavityReport]:
        params = config.experiment.params
        gens = config.group.generator_system()
        table = self.orbit_table(gens, params.depth, threads=threads, cache=cache)
        est = cone_service.estimate_growth_indicator(
            table,
            grid=params.resolution,
            apertures=tuple(params.apertures or FitDefaults.APERTURES),
            window=None if params.window is None else tuple(params.window),
            threads=threads,
        )
        try:
            maximal = cone_service.maximal_growth_direction(est)
        except InsufficientDataError as err:
            logger.warning(f"No maximal growth direction: {err.msg}")
            maximal = None
        concavity = cone_service.concavity_report(est, seed=seed if seed is not None else config.seed)
        return cone_service.growth_record(est, maximal), concavity

    def run_limit_cone(
        self, config: ExperimentConfig, threads: int | None = None, cache: OrbitTableRepository | None = None
    ) -> LimitConeRecord:
        params = config.experiment.params
        gens = config.group.generator_system()
        table = self.orbit_table(gens, params.depth, threads=threads, cache=cache)
        return cone_service.cone_record(cone_service.estimate_limit_cone(table, projection=params.projection))

    def run_ps_measure(
        self, config: ExperimentConfig, threads: int | None = None, cache: OrbitTableRepository | None = None
    ) -> tuple[AtomicMeasure, PSMeasureReport]:
        """
        Atomic Patterson-Sullivan approximation with its cylinder masses and conformality residual.

        Raises:
            DegenerateMeasureError: If every atom weight underflows.
        """
        params = config.experiment.params
        gens = config.group.generator_system()
        descriptor = gens.descriptor
        table = self.orbit_table(gens, params.depth, with_flags=True, threads=threads, cache=cache)
        psi = LinearForm.rho2(descriptor) if params.psi is None else LinearForm(descriptor, np.asarray(params.psi))
        measure = boundary_service.ps_atoms(table, psi, params.s)

        cylinders: dict[str, float] = {}
        for letter in (*range(1, gens.p + 1), *range(-gens.p, 0)):
            mass = float(measure.weights[measure.words[:, 0] == letter].sum())
            cylinders[Word((letter,)).render(gens.labels)] = mass
        residual = None
        if params.conformality and params.depth >= 3:
            residual = max(
                boundary_service.conformality_residual(gens, psi, params.depth, Word((i,)), params.s, table)
                for i in range(1, gens.p + 1)
            )
        report = PSMeasureReport(
            depth=table.depth,
            exponent=params.s,
            atoms=len(measure),
            max_weight=float(measure.weights.max()),
            conformality_residual=residual,
            cylinders=cylinders,
        )
        return measure, report

    def resolve_seed(self, config: ExperimentConfig, override: int | None = None) -> int:
        if override is not None:
            return override
        return config.seed if config.seed is not None else settings.SEED


experiment_service = ExperimentService()
