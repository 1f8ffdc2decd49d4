from typing import Callable

import numpy as np

from src.core.config.app_settings import settings
from src.core.config.logger import logger
from src.core.config.tolerances import Tolerances
from src.exceptions.errors import AnosovError
from src.models.boundary import Flag
from src.models.cone import LimitConeEstimate
from src.models.experiments import CountingRegion, CountRecord
from src.models.group import GroupDescriptor, GroupElement, LinearForm
from src.models.symmetric import BCartanVector, SymmetricPairDescriptor
from src.models.words import GeneratorSystem, Word
from src.schemas.config import ExperimentConfig
from src.schemas.reports import CheckResult, VerifyReport
from src.services.boundary_service import boundary_service
from src.services.cone_service import cone_service
from src.services.counting_service import counting_service
from src.services.enumeration_service import enumeration_service
from src.services.experiment_service import experiment_service
from src.services.matgroup_service import matgroup_service
from src.services.schottky_service import schottky_service
from src.services.symmetric_service import symmetric_service
from src.utils.fixtures import product_schottky, rank_one_schottky, sl3_schottky

Opposition = Callable[[GroupDescriptor, np.ndarray], np.ndarray]

IDENTITY_ROWS = 10_000
RANDOM_ELEMENTS = 100
ROUND_TRIPS = 1000
WORKER_COUNTS = (1, 2, 8)
DETERMINISM_DEPTH = 6
VANISHING_DEPTHS = (8, 12)
VANISHING_MARGIN = 0.1
VANISHING_APERTURE = 0.05
VANISHING_RESOLUTION = 20
GROWTH_DEPTHS = (10, 12)
GROWTH_TOLERANCE = 0.05
DIRECTIONAL_DEPTH = 10
DIRECTIONAL_APERTURE = 0.1
DIRECTIONAL_TOLERANCE = 0.1
SYMMETRIC_DEPTH = 10
CONFORMALITY_DEPTHS = (10, 12)


def _check(
    name: str,
    module: str,
    value: float,
    threshold: float,
    hard: bool = True,
    detail: str = "",
    strict: bool = False,
) -> CheckResult:
    within = value < threshold if strict else value <= threshold
    return CheckResult(
        name=name,
        module=module,
        passed=bool(np.isfinite(value) and within),
        hard=hard,
        value=float(value),
        threshold=threshold,
        detail=detail,
    )


def _relative(values: np.ndarray, reference: np.ndarray) -> float:
    scale = np.maximum(1.0, np.abs(reference))
    return float(np.max(np.abs(values - reference) / scale, initial=0.0))


def _factor_gap(a: GroupElement, b: GroupElement | list[np.ndarray]) -> float:
    other = b.factors if isinstance(b, GroupElement) else b
    return max(float(np.abs(x - y).max()) for x, y in zip(a.factors, other))


def _tag(descriptor: GroupDescriptor) -> str:
    return "x".join(f"sl{d}" for d in descriptor.factor_dims)


def _hull_separation(cone: LimitConeEstimate, directions: np.ndarray) -> np.ndarray:
    """Angle from each unit direction to the nearest hull vertex, zero inside the hull; exact in rank two."""
    cosines = np.clip(directions @ cone.vertices.T, -1.0, 1.0)
    angles = np.arccos(cosines.max(axis=1))
    return np.where(cone_service.cone_contains(cone, directions), 0.0, angles)


def _relative_gap(value: float, reference: float | None) -> float:
    if reference is None or not np.isfinite(reference) or reference == 0:
        return float("nan")
    return abs(value - reference) / abs(reference)


class VerifyService:
    """
    Invariant batteries of every library area, run with fixed seeds.

    The opposition involution is injectable so that a broken implementation can be fed in and
    shown to fail the inverse identities.
    """

    def __init__(self, opposition: Opposition | None = None) -> None:
        self.opposition = opposition or matgroup_service.opposition_coords

    def identity_depth(self, p: int, rows: int = IDENTITY_ROWS) -> int:
        """Smallest depth whose ball holds at least ``rows`` words."""
        depth = 0
        while enumeration_service.ball_size(p, depth) < rows:
            depth += 1
        return depth

    def identity_checks(self, name: str, gens: GeneratorSystem, depth: int | None = None) -> list[CheckResult]:
        """
        Inverse and power identities of both projections over a ball, and the enumerated table itself.

        The ball holds at least ``IDENTITY_ROWS`` words unless a depth is given.
        """
        depth = self.identity_depth(gens.p) if depth is None else depth
        table = enumeration_service.enumerate_ball(gens, depth)
        mats, invs = enumeration_service.table_matrices(table, gens)
        descriptor = gens.descriptor
        mu, mu_inv = matgroup_service.cartan_coords(mats, invs), matgroup_service.cartan_coords(invs, mats)
        lam, lam_inv = matgroup_service.jordan_coords(mats, invs), matgroup_service.jordan_coords(invs, mats)

        short = np.flatnonzero((table.lengths > 0) & (table.lengths <= 2))
        power_error = 0.0
        for n in range(2, 6):
            powers = [np.linalg.matrix_power(m[short], n) for m in mats]
            power_invs = [np.linalg.matrix_power(m[short], n) for m in invs]
            error = _relative(matgroup_service.jordan_coords(powers, power_invs), n * lam[short])
            power_error = max(power_error, error)

        ball = enumeration_service.ball_size(gens.p, depth)
        return [
            _check(f"{name}.mu_inverse", "matgroup", _relative(mu_inv, self.opposition(descriptor, mu)), 1e-9),
            _check(f"{name}.lambda_inverse", "matgroup", _relative(lam_inv, self.opposition(descriptor, lam)), 1e-9),
            _check(f"{name}.lambda_power", "matgroup", power_error, 1e-8),
            _check(f"{name}.mu_naive_product", "word-enum", _relative(table.mu, mu), Tolerances.IDENTITY),
            _check(f"{name}.ball_rows", "word-enum", abs(len(table) - ball), 0.0, detail=f"{len(table)} of {ball}"),
        ]

    def decomposition_checks(self, descriptor: GroupDescriptor, rng: np.random.Generator) -> list[CheckResult]:
        iwasawa, kak, cocycle, equivariance, opposite = 0.0, 0.0, 0.0, 0.0, 0.0
        identity = GroupElement.identity(descriptor)
        for _ in range(RANDOM_ELEMENTS):
            g, h, x = (matgroup_service.random_element(descriptor, rng) for _ in range(3))
            iwasawa = max(iwasawa, matgroup_service.iwasawa_decompose(g).residual)
            kak = max(kak, matgroup_service.kak_decompose(g).residual)

            xi = boundary_service.act(matgroup_service.random_orthogonal(descriptor, rng), Flag.standard(descriptor))
            direct = boundary_service.busemann(xi, g, h)
            chained = boundary_service.busemann(xi, g, x) + boundary_service.busemann(xi, x, h)
            cocycle = max(cocycle, float(np.abs((chained - direct).coords).max()))
            moved = boundary_service.busemann(boundary_service.act(x, xi), x @ g, x @ h)
            equivariance = max(equivariance, float(np.abs((moved - direct).coords).max()))

            a = matgroup_service.exp_cartan(matgroup_service.cartan_projection(g))
            plus = boundary_service.busemann(Flag.standard(descriptor), identity, a)
            minus = boundary_service.busemann(Flag.opposite(descriptor), identity, a)
            opposite = max(opposite, float(np.abs(plus.coords + self.opposition(descriptor, minus.coords)).max()))
        tag = _tag(descriptor)
        return [
            _check(f"{tag}.iwasawa_residual", "matgroup", iwasawa, Tolerances.DECOMPOSITION_RESIDUAL),
            _check(f"{tag}.kak_residual", "matgroup", kak, Tolerances.KAK_RESIDUAL),
            _check(f"{tag}.busemann_cocycle", "boundary", cocycle, 1e-8),
            _check(f"{tag}.busemann_equivariance", "boundary", equivariance, 1e-8),
            _check(f"{tag}.busemann_opposite", "boundary", opposite, 1e-10),
        ]

    def pair_checks(self, pair: SymmetricPairDescriptor, rng: np.random.Generator) -> list[CheckResult]:
        """sigma is an involution commuting with theta, and constructed h exp(b) k round-trip."""
        descriptor = pair.descriptor
        involution, commutation = 0.0, 0.0
        for _ in range(20):
            g = matgroup_service.random_element(descriptor, rng)
            twice = symmetric_service.sigma(pair, symmetric_service.sigma(pair, g))
            involution = max(involution, _factor_gap(twice, g))
            theta = GroupElement.raw(descriptor, [np.linalg.inv(f).T for f in g.factors])
            right = [np.linalg.inv(f).T for f in symmetric_service.sigma(pair, g).factors]
            commutation = max(commutation, _factor_gap(symmetric_service.sigma(pair, theta), right))

        hs = [symmetric_service.sample_h(pair, rng) for _ in range(ROUND_TRIPS)]
        ks = [matgroup_service.random_orthogonal(descriptor, rng) for _ in range(ROUND_TRIPS)]
        bs = pair.embed(rng.normal(scale=1.5, size=(ROUND_TRIPS, pair.r0)))
        stacks, inverse_stacks, diagonal, inverse_diagonal = [], [], [], []
        for f, sl in enumerate(descriptor.slices):
            h = np.stack([x.factors[f] for x in hs])
            h_inv = np.stack([x.inverse_factors[f] for x in hs])
            k = np.stack([x.factors[f] for x in ks])
            e = np.stack([np.diag(np.exp(b[sl])) for b in bs])
            e_inv = np.stack([np.diag(np.exp(-b[sl])) for b in bs])
            stacks.append(h @ e @ k)
            inverse_stacks.append(np.swapaxes(k, -1, -2) @ e_inv @ h_inv)
            diagonal.append(e)
            inverse_diagonal.append(e_inv)

        batch = symmetric_service.gcartan_arrays(pair, stacks)
        regular = ~batch.ambiguous
        projected = symmetric_service.h_cartan_coords(pair, stacks, inverse_stacks)
        expected = symmetric_service.h_cartan_coords(pair, diagonal, inverse_diagonal)
        tag = f"{pair.kind}.{_tag(descriptor)}"
        return [
            _check(f"{tag}.sigma_involution", "symmetric", involution, 1e-10),
            _check(f"{tag}.sigma_commutes_theta", "symmetric", commutation, 1e-10),
            _check(
                f"{tag}.gcartan_recomposition",
                "symmetric",
                float(np.max(batch.recomposition[regular], initial=0.0)),
                Tolerances.GCARTAN_RECOMPOSITION,
            ),
            _check(
                f"{tag}.gcartan_h_membership",
                "symmetric",
                float(np.max(batch.residual[regular], initial=0.0)),
                Tolerances.H_MEMBERSHIP,
            ),
            _check(f"{tag}.b_projection", "symmetric", _relative(projected, expected), 1e-8),
            _check(
                f"{tag}.gcartan_wall_share",
                "symmetric",
                float(batch.ambiguous.mean()),
                0.01,
                hard=False,
                detail="constructed samples on a wall of the restricted roots",
            ),
        ]

    def density_checks(self) -> list[CheckResult]:
        riemannian = SymmetricPairDescriptor(GroupDescriptor.standard((2,)), "riemannian")
        swap = SymmetricPairDescriptor(GroupDescriptor.standard((2, 2)), "swap")
        (root,) = symmetric_service.multiplicities(riemannian)
        (swap_root,) = symmetric_service.multiplicities(swap)
        density = symmetric_service.xi_density(BCartanVector.from_embedded(riemannian, np.array([1.0, -1.0])))
        return [
            _check("riemannian.multiplicities", "symmetric", abs(root.plus - 1) + abs(root.minus), 0.0),
            _check("swap.multiplicities", "symmetric", abs(swap_root.plus - 1) + abs(swap_root.minus - 1), 0.0),
            _check("riemannian.xi_density", "symmetric", abs(density - np.sinh(2.0)), 1e-12),
        ]

    def quadrature_checks(self) -> list[CheckResult]:
        worst, outside = 0.0, 0
        for excess in (0, 1, 2):
            for w in (0.0, 1.0, 2.0):
                result = symmetric_service.dom_integral_check(1.0, 1 + excess, 1, w, 1e4)
                worst = max(worst, result.relative_gap)
                outside += not result.within_bound
        return [
            _check("dom_integral.limit", "symmetric", worst, 5e-3),
            _check("dom_integral.bound", "symmetric", outside, 0.0),
        ]

    def counting_checks(self, gens: GeneratorSystem) -> list[CheckResult]:
        t = counting_service.t_grid(5.0, 15.0)
        pure = counting_service.fit_exponential_polynomial(CountRecord(t, np.rint(np.exp(2 * t))))
        t = counting_service.t_grid(10.0, 30.0)
        mixed = counting_service.fit_exponential_polynomial(CountRecord(t, np.rint(np.exp(1.5 * t) * t**-0.5)))
        table = enumeration_service.enumerate_ball(gens, 1)
        record = counting_service.count_in_cone(table, CountingRegion(gens.descriptor), np.array([1e6]))
        return [
            _check("fit.exponential_rate", "experiments", abs(pure.delta - 2.0), 1e-3),
            _check("fit.exponential_log_term", "experiments", abs(pure.beta), 1e-2),
            _check("fit.polynomial_rate", "experiments", abs(mixed.delta - 1.5), 1e-2),
            _check("fit.polynomial_exponent", "experiments", abs(mixed.beta + 0.5), 1e-2),
            _check("count.depth_one", "experiments", abs(int(record.n[-1]) - 2 * gens.p), 0.0),
        ]

    def determinism_checks(
        self, gens: GeneratorSystem, depth: int = DETERMINISM_DEPTH, workers: tuple[int, ...] = WORKER_COUNTS
    ) -> list[CheckResult]:
        """Tables and experiment outputs are byte-identical for every worker count."""
        tables = [enumeration_service.enumerate_ball(gens, depth, with_flags=True, threads=w) for w in workers]
        same_tables = all(
            np.array_equal(getattr(tables[0], name), getattr(other, name))
            for other in tables[1:]
            for name in ("words", "mu", "lam", "flags")
        )

        cone = ExperimentConfig.from_generators(gens, "cone-count", seed=0, depth=depth, compare_growth=False)
        bisector = ExperimentConfig.from_generators(
            gens, "bisector-count", pair={"kind": "riemannian"}, seed=0, depth=depth, compare_growth=False
        )
        growth = ExperimentConfig.from_generators(gens, "growth-indicator", seed=0, depth=depth, resolution=4)

        def outputs(threads: int) -> dict[str, str]:
            counted = experiment_service.run_cone_count(cone, threads=threads)
            bisected = experiment_service.run_bisector_experiment(bisector, threads=threads)
            record, concavity = experiment_service.run_growth_indicator(growth, threads=threads)
            return {
                "cone-count": counted.record.n.tobytes().hex() + counted.report.model_dump_json(),
                "bisector-count": bisected.record.n.tobytes().hex() + bisected.report.model_dump_json(),
                "growth-indicator": record.model_dump_json() + concavity.model_dump_json(),
            }

        runs = [outputs(w) for w in workers]
        differing = sorted({kind for run in runs[1:] for kind in run if run[kind] != runs[0][kind]})
        counts = ", ".join(map(str, workers))
        return [
            _check(
                "enumeration.worker_independence",
                "word-enum",
                0.0 if same_tables else 1.0,
                0.0,
                detail=f"workers {counts}",
            ),
            _check(
                "experiments.worker_independence",
                "experiments",
                float(len(differing)),
                0.0,
                detail=f"workers {counts}" + (f"; differing: {', '.join(differing)}" if differing else ""),
            ),
        ]

    def vanishing_checks(
        self,
        gens: GeneratorSystem,
        depths: tuple[int, int] = VANISHING_DEPTHS,
        margin: float = VANISHING_MARGIN,
        aperture: float = VANISHING_APERTURE,
    ) -> list[CheckResult]:
        """
        Cones kept away from the limit cone hold finitely many orbit points.

        For every grid cone separated from the estimated hull by ``margin``, T_0 is the largest norm
        of a cone point in the shallow ball. The deep ball, complete up to its reliable radius, must
        add no cone point beyond T_0.
        """
        shallow_depth, deep_depth = depths
        deep = enumeration_service.enumerate_ball(gens, deep_depth)
        shallow = deep.truncate(shallow_depth, gens)
        descriptor = gens.descriptor
        cone = cone_service.estimate_limit_cone(deep)
        directions = cone_service.direction_grid(descriptor, VANISHING_RESOLUTION)
        separated = directions[_hull_separation(cone, directions) >= margin + aperture]

        reach = counting_service.reliable_window(deep)[1]
        shallow_norms = matgroup_service.norms(shallow.mu)
        deep_norms = matgroup_service.norms(deep.mu)
        escaped, t_zero = 0, 0.0
        for u in separated:
            region = CountingRegion.cone(descriptor, u, aperture)
            inside = (shallow.lengths > 0) & region.contains(shallow.mu)
            t0 = float(shallow_norms[inside].max(initial=0.0))
            t_zero = max(t_zero, t0)
            beyond = (deep.lengths > 0) & region.contains(deep.mu) & (deep_norms > t0) & (deep_norms <= reach)
            escaped += int(beyond.sum())
        return [
            _check(
                "vanishing.outside_limit_cone",
                "cone-growth",
                float(escaped) if len(separated) else float("inf"),
                0.0,
                detail=(
                    f"{len(separated)} cones separated by {margin:g}; T_0 up to {t_zero:.4g} at depth "
                    f"{shallow_depth}, complete to {reach:.4g} at depth {deep_depth}"
                ),
            )
        ]

    def growth_checks(self, gens: GeneratorSystem, depths: tuple[int, int] = GROWTH_DEPTHS) -> list[CheckResult]:
        """Chamber-count rates at two depths against each other, the critical exponent and the 2 rho bound."""
        descriptor = gens.descriptor
        tables = [enumeration_service.enumerate_ball(gens, d) for d in depths]
        rates = []
        for table in tables:
            window = counting_service.reliable_window(table)
            grid = counting_service.t_grid(0.0, window[1])
            record = counting_service.count_in_cone(table, CountingRegion(descriptor), grid)
            rates.append(counting_service.fit_exponential_polynomial(record, beta=0.0, window=window).delta)
        shallow, deep = rates
        abscissa = cone_service.poincare_abscissa(tables[-1])
        bound = float(np.max(LinearForm.rho2(descriptor)(cone_service.direction_grid(descriptor))))
        return [
            _check(
                "growth.depth_consistency",
                "cone-growth",
                _relative_gap(shallow, deep),
                GROWTH_TOLERANCE,
                detail=f"rate {shallow:.4g} at depth {depths[0]}, {deep:.4g} at depth {depths[1]}",
            ),
            _check(
                "growth.poincare_agreement",
                "cone-growth",
                _relative_gap(deep, abscissa),
                GROWTH_TOLERANCE,
                detail=f"rate {deep:.4g}, abscissa {abscissa:.4g} at depth {depths[1]}",
            ),
            _check(
                "growth.volume_bound",
                "cone-growth",
                0.0 if 0 < deep <= bound else 1.0,
                0.0,
                detail=f"rate {deep:.4g}, bound {bound:.4g}",
            ),
        ]

    def directional_checks(
        self,
        gens: GeneratorSystem,
        depth: int = DIRECTIONAL_DEPTH,
        aperture: float = DIRECTIONAL_APERTURE,
        threads: int | None = None,
    ) -> list[CheckResult]:
        """
        Directional counts inside the limit cone against the growth indicator, and the bisector reduction.

        The directions are the hull centroid and the midpoints between it and two hull vertices. The
        bisector count of the Riemannian pair with whole H- and K-sets must equal the directional
        count at the centroid on every grid point.
        """
        descriptor = gens.descriptor
        table = enumeration_service.enumerate_ball(gens, depth, threads=threads)
        cone = cone_service.estimate_limit_cone(table)
        center = cone.barycentric.mean(axis=0)
        points = np.vstack([center] + [(center + vertex) / 2 for vertex in cone.barycentric[:2]])
        directions = cone_service.unit_directions(descriptor, points)
        est = cone_service.estimate_growth_indicator(table, grid=directions, threads=threads)

        window = counting_service.reliable_window(table)
        grid = counting_service.t_grid(0.0, window[1])
        records, gaps = [], []
        for u, psi in zip(directions, est.values):
            record = counting_service.count_in_cone(table, CountingRegion.cone(descriptor, u, aperture), grid)
            fit = counting_service.fit_exponential_polynomial(record, beta=0.0, window=window)
            records.append(record)
            gaps.append(_relative_gap(fit.delta, float(psi)))

        config = ExperimentConfig.from_generators(
            gens,
            "bisector-count",
            pair={"kind": "riemannian"},
            depth=depth,
            direction=directions[0].tolist(),
            aperture=aperture,
            compare_growth=False,
        )
        bisector, _ = experiment_service.bisector_record(config, table, gens, threads)
        mismatches = int(np.sum(bisector.n != records[0].n)) if bisector.n.shape == records[0].n.shape else len(grid)
        return [
            _check(
                "directional.growth_indicator",
                "experiments",
                max(gaps),
                DIRECTIONAL_TOLERANCE,
                detail=", ".join(f"{gap:.3g}" for gap in gaps) + f" relative gaps at depth {depth}",
            ),
            _check(
                "directional.bisector_reduction",
                "experiments",
                float(mismatches),
                0.0,
                detail=f"{mismatches} of {len(grid)} grid points differ",
            ),
        ]

    def symmetric_checks(
        self, gens: GeneratorSystem, depth: int = SYMMETRIC_DEPTH, seed: int = 0, threads: int | None = None
    ) -> list[CheckResult]:
        """The factor-swap coset count grows no faster than the orbit; its log T exponent is a diagnostic."""
        config = ExperimentConfig.from_generators(
            gens, "symmetric-count", pair={"kind": "swap"}, seed=seed, depth=depth, compare_growth=False
        )
        report = experiment_service.run_symmetric_count(config, threads=threads).report
        fit = report.fit
        critical = report.critical_exponent if report.critical_exponent is not None else float("nan")
        free_beta = report.free_fit.beta if report.free_fit is not None else float("nan")
        return [
            _check(
                "symmetric.rate_bound",
                "experiments",
                fit.delta - (critical + 2 * fit.stderr_delta),
                0.0,
                detail=f"rate {fit.delta:.4g} +- {fit.stderr_delta:.2g}, critical exponent {critical:.4g}",
            ),
            _check(
                "symmetric.log_exponent",
                "experiments",
                abs(free_beta - report.expected_beta),
                0.5,
                hard=False,
                detail=f"free fit beta {free_beta:.3g}, expected {report.expected_beta:g}",
            ),
        ]

    def conformality_checks(
        self, gens: GeneratorSystem, depths: tuple[int, int] = CONFORMALITY_DEPTHS
    ) -> list[CheckResult]:
        """
        The conformality residual of every generator strictly decreases with depth.

        Doubling the exponent form while halving the scale leaves the atoms, hence the residual, unchanged.
        """
        direction = matgroup_service.cartan_projection(gens.generators[0]).coords
        psi = LinearForm(gens.descriptor, direction / np.linalg.norm(direction))
        doubled = LinearForm(gens.descriptor, 2 * psi.coeffs)
        tables = [enumeration_service.enumerate_ball(gens, d, with_flags=True) for d in depths]
        exponent = cone_service.poincare_abscissa(tables[-1])
        checks = []
        for i, label in enumerate(gens.labels, start=1):
            shallow, deep = (
                boundary_service.conformality_residual(gens, psi, t.depth, Word((i,)), exponent, t) for t in tables
            )
            checks.append(
                _check(
                    f"ps.conformality_trend.{label}",
                    "boundary",
                    deep - shallow,
                    0.0,
                    strict=True,
                    detail=f"residual {shallow:.4g} at depth {depths[0]}, {deep:.4g} at depth {depths[1]}",
                )
            )
        first = Word((1,))
        table = tables[0]
        scaled = boundary_service.conformality_residual(gens, doubled, table.depth, first, exponent / 2, table)
        plain = boundary_service.conformality_residual(gens, psi, table.depth, first, exponent, table)
        checks.append(_check("ps.conformality_scale", "boundary", abs(scaled - plain), 1e-12))
        return checks

    def schottky_checks(self, gens: GeneratorSystem, seed: int) -> list[CheckResult]:
        report = schottky_service.schottky_check(gens, seed=seed)
        return [
            CheckResult(
                name="schottky.rank_one",
                module="word-enum",
                passed=report.verdict == "pass",
                hard=False,
                value=report.epsilon_hat,
                threshold=1.0,
                detail=", ".join(name for name, ok in report.conditions.items() if not ok),
            )
        ]

    def guarded(self, name: str, module: str, battery: Callable[[], list[CheckResult]]) -> list[CheckResult]:
        """Runs a battery; a library error raised inside becomes a failed entry."""
        try:
            return battery()
        except AnosovError as err:
            logger.warning(f"Check battery {name} raised: {err.msg}")
            return [CheckResult(name=name, module=module, passed=False, detail=err.msg)]

    def verify_suite(
        self,
        config: ExperimentConfig | None = None,
        seed: int | None = None,
        include_slow: bool = True,
        threads: int | None = None,
    ) -> VerifyReport:
        """
        Runs every battery and collects the results.

        Args:
            config (ExperimentConfig | None): Its generators are validated strictly and run through the
                identity battery next to the shipped fixtures.
            seed (int | None): Seed of every randomized check, ``settings.SEED`` when omitted.
            include_slow (bool): Also run the worker-count, experiment-level, depth-trend and Schottky batteries.
            threads (int | None): Workers of the experiment-level batteries.

        Returns:
            VerifyReport: ``passed`` is true iff every hard check passed.
        """
        seed = settings.SEED if seed is None else seed
        checks: list[CheckResult] = []
        if config is not None:
            try:
                gens = config.group.generator_system()
            except AnosovError as err:
                checks.append(CheckResult(name="config.generators", module="matgroup", passed=False, detail=err.msg))
            else:
                checks.append(CheckResult(name="config.generators", module="matgroup", passed=True))
                checks += self.guarded("config.identities", "matgroup", lambda: self.identity_checks("config", gens))

        fixtures = {"rank_one": rank_one_schottky(), "sl3": sl3_schottky(), "product": product_schottky()}
        for name, fixture in fixtures.items():
            checks += self.guarded(
                f"{name}.identities", "matgroup", lambda n=name, g=fixture: self.identity_checks(n, g)
            )

        rng = np.random.default_rng(seed)
        for dims in ((2,), (3,), (2, 2)):
            descriptor = GroupDescriptor.standard(dims)
            checks += self.guarded(
                f"{_tag(descriptor)}.decompositions", "matgroup", lambda d=descriptor: self.decomposition_checks(d, rng)
            )
        pairs = [
            SymmetricPairDescriptor(GroupDescriptor.standard((3,)), "indefinite-orthogonal", 2, 1),
            SymmetricPairDescriptor(GroupDescriptor.standard((2, 2)), "swap"),
            SymmetricPairDescriptor(GroupDescriptor.standard((2, 2)), "riemannian"),
        ]
        for pair in pairs:
            checks += self.guarded(f"{pair.kind}.round_trips", "symmetric", lambda p=pair: self.pair_checks(p, rng))
        checks += self.guarded("densities", "symmetric", self.density_checks)
        checks += self.guarded("dom_integral", "symmetric", self.quadrature_checks)
        checks += self.guarded("counting", "experiments", lambda: self.counting_checks(fixtures["rank_one"]))
        if include_slow:
            rank_one, product = fixtures["rank_one"], fixtures["product"]
            checks += self.guarded("determinism", "word-enum", lambda: self.determinism_checks(product))
            checks += self.guarded("vanishing", "cone-growth", lambda: self.vanishing_checks(product))
            checks += self.guarded("growth", "cone-growth", lambda: self.growth_checks(rank_one))
            checks += self.guarded(
                "directional", "experiments", lambda: self.directional_checks(product, threads=threads)
            )
            checks += self.guarded(
                "symmetric", "experiments", lambda: self.symmetric_checks(product, seed=seed, threads=threads)
            )
            checks += self.guarded("conformality", "boundary", lambda: self.conformality_checks(rank_one))
            checks += self.guarded("schottky", "word-enum", lambda: self.schottky_checks(rank_one, seed))

        report = VerifyReport(seed=seed, passed=all(c.passed for c in checks if c.hard), checks=checks)
        logger.info(f"Verification ran {len(checks)} checks with {len(report.failed)} hard failures")
        return report


verify_service = VerifyService()
