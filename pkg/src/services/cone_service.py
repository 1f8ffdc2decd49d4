import itertools
from dataclasses import dataclass

import numpy as np
from scipy.linalg import null_space
from scipy.optimize import brentq, minimize_scalar
from scipy.spatial import ConvexHull
from scipy.special import logsumexp

from src.core.config.app_settings import settings
from src.core.config.logger import logger
from src.core.config.tolerances import FitDefaults, Tolerances
from src.exceptions.errors import (
    FitError,
    InsufficientDataError,
    InvalidInputError,
    NumericalError,
    PreconditionError,
)
from src.models.cone import AdaptedNorm, GrowthIndicatorEstimate, LimitConeEstimate, TangentForm
from src.models.experiments import CountRecord
from src.models.group import CartanVector, GroupDescriptor, LinearForm
from src.models.words import OrbitTable
from src.schemas.results import (
    ConcavityReport,
    DirectionRecord,
    GrowthIndicatorRecord,
    LimitConeRecord,
)
from src.services.counting_service import counting_service
from src.services.matgroup_service import matgroup_service
from src.utils.pool import map_shards

PROJECTIONS = ("jordan", "cartan")


def _simple_roots(descriptor: GroupDescriptor, coords: np.ndarray) -> np.ndarray:
    return np.concatenate([-np.diff(coords[..., sl], axis=-1) for sl in descriptor.slices], axis=-1)


def _from_simple_roots(descriptor: GroupDescriptor, alpha: np.ndarray) -> np.ndarray:
    """Batched inverse of ``_simple_roots`` onto the trace-zero subspace."""
    alpha = np.atleast_2d(alpha)
    blocks, offset = [], 0
    for d in descriptor.factor_dims:
        part = alpha[:, offset : offset + d - 1]
        offset += d - 1
        walk = np.concatenate([np.zeros((part.shape[0], 1)), np.cumsum(part, axis=1)], axis=1)
        blocks.append(walk.mean(axis=1, keepdims=True) - walk)
    return np.concatenate(blocks, axis=1)


def _unit(coords: np.ndarray) -> np.ndarray:
    return coords / np.linalg.norm(coords, axis=-1, keepdims=True)


def _monotone_chain(points: np.ndarray) -> np.ndarray:
    """Indices of the planar hull vertices in counter-clockwise order, collinear points dropped."""
    order = np.lexsort((points[:, 1], points[:, 0]))

    def cross(o: int, a: int, b: int) -> float:
        return (points[a, 0] - points[o, 0]) * (points[b, 1] - points[o, 1]) - (points[a, 1] - points[o, 1]) * (
            points[b, 0] - points[o, 0]
        )

    lower: list[int] = []
    for i in order:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], i) <= 0:
            lower.pop()
        lower.append(int(i))
    upper: list[int] = []
    for i in order[::-1]:
        while len(upper) >= 2 and cross(upper[-2], upper[-1], i) <= 0:
            upper.pop()
        upper.append(int(i))
    return np.array(lower[:-1] + upper[:-1])


class _AffineHull:
    """Convex hull of points of the simplex slice, handled in the affine span of the points."""

    def __init__(self, points: np.ndarray):
        self.center = points.mean(axis=0)
        centered = points - self.center
        if points.shape[1] == 0:
            self.basis = np.zeros((0, 0))
        else:
            _, s, vt = np.linalg.svd(centered, full_matrices=False)
            rank = int(np.sum(s > 1e-10 * max(1.0, float(s[0]) if s.size else 1.0)))
            self.basis = vt[:rank].T
        self.reduced = centered @ self.basis
        self.dim = self.basis.shape[1]
        if self.dim == 0:
            self.vertices = np.array([0])
            self.equations = None
        elif self.dim == 1:
            low, high = int(np.argmin(self.reduced[:, 0])), int(np.argmax(self.reduced[:, 0]))
            self.vertices = np.array([low, high])
            self.equations = None
        elif self.dim == 2:
            self.vertices = _monotone_chain(self.reduced)
            self.equations = ConvexHull(self.reduced[self.vertices], qhull_options="QJ").equations
        else:
            hull = ConvexHull(self.reduced)
            self.vertices = np.sort(hull.vertices)
            self.equations = hull.equations

    def contains(self, points: np.ndarray, tol: float) -> np.ndarray:
        offset = np.atleast_2d(points) - self.center
        reduced = offset @ self.basis
        inside = np.linalg.norm(offset - reduced @ self.basis.T, axis=1) <= tol
        if self.dim == 1:
            inside &= (reduced[:, 0] >= self.reduced[:, 0].min() - tol) & (
                reduced[:, 0] <= self.reduced[:, 0].max() + tol
            )
        elif self.dim >= 2:
            inside &= np.all(reduced @ self.equations[:, :-1].T + self.equations[:, -1] <= tol, axis=1)
        return inside


@dataclass(frozen=True, eq=False)
class _ConeCounter:
    """Fits of epsilon-cone counts around a direction, for every aperture of the schedule."""

    directions: np.ndarray
    norms: np.ndarray
    grid: np.ndarray
    window: tuple[float, float]
    schedule: tuple[float, ...]

    def profile(self, u: np.ndarray) -> tuple[float, float, np.ndarray, float, str]:
        u = u / np.linalg.norm(u)
        cosines = self.directions @ u
        trend = np.full(len(self.schedule), np.nan)
        residuals = np.full(len(self.schedule), np.nan)
        for a, aperture in enumerate(self.schedule):
            inside = cosines >= np.cos(aperture)
            if not np.any(inside):
                trend[a] = -np.inf
                continue
            record = CountRecord(self.grid, counting_service.counts(self.norms[inside], self.grid))
            try:
                fit = counting_service.fit_exponential_polynomial(record, beta=0.0, window=self.window)
            except FitError:
                continue
            trend[a], residuals[a] = fit.delta, fit.residual_rms

        order = np.argsort(self.schedule)
        smallest = int(order[0])
        if trend[smallest] == -np.inf:
            return -np.inf, self.schedule[smallest], trend, np.nan, "empty"
        for a in order:
            if np.isfinite(trend[a]) and residuals[a] <= FitDefaults.MAX_RESIDUAL_RMS:
                return float(trend[a]), self.schedule[a], trend, float(residuals[a]), "ok"
        return np.nan, self.schedule[smallest], trend, np.nan, "insufficient"

    def __call__(self, u: np.ndarray) -> float:
        return self.profile(u)[0]


class ConeService:
    """
    Limit cones, growth indicators and the objects derived from them.

    Directions are handled on the simplex slice of the positive Weyl chamber: a dominant vector is
    represented by its simple-root values divided by their sum.
    """

    def simplex_coordinates(self, descriptor: GroupDescriptor, coords: np.ndarray) -> np.ndarray:
        """Simple-root values normalized to sum 1, shape (N, rank); zero rows give NaN."""
        alpha = _simple_roots(descriptor, np.atleast_2d(coords))
        total = alpha.sum(axis=1, keepdims=True)
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(total > 0, alpha / total, np.nan)

    def unit_directions(self, descriptor: GroupDescriptor, barycentric: np.ndarray) -> np.ndarray:
        """Unit vectors of the Cartan subspace with prescribed simplex coordinates."""
        return _unit(_from_simple_roots(descriptor, barycentric))

    def direction_grid(self, descriptor: GroupDescriptor, resolution: int = FitDefaults.GRID_RESOLUTION) -> np.ndarray:
        """
        Uniform grid of the simplex slice, returned as unit dominant directions.

        The grid points have simplex coordinates k / resolution with nonnegative integers k
        summing to ``resolution``, walls included.
        """
        if resolution < 1:
            raise InvalidInputError(f"grid resolution must be positive, got {resolution}")
        r = descriptor.rank
        points = []
        for bars in itertools.combinations(range(resolution + r - 1), r - 1):
            edges = (-1, *bars, resolution + r - 1)
            points.append([edges[j + 1] - edges[j] - 1 for j in range(r)])
        return self.unit_directions(descriptor, np.asarray(points, dtype=np.float64) / resolution)

    def estimate_limit_cone(
        self, table: OrbitTable, min_norm: float = FitDefaults.MIN_CONE_NORM, projection: str = "jordan"
    ) -> LimitConeEstimate:
        """
        Convex hull of the normalized projections of the table on the simplex slice.

        Args:
            table (OrbitTable): Orbit table of depth >= 2.
            min_norm (float): Rows with projection norm at most this are ignored.
            projection (str): ``jordan`` for the limit cone, ``cartan`` for the asymptotic cone of mu.

        Returns:
            LimitConeEstimate: Hull vertices and wall margin.

        Raises:
            InvalidInputError: If the depth is below 2 or the projection is unknown.
            InsufficientDataError: With fewer than rank + 1 usable points.
            NumericalError: If a sample point falls outside the computed hull.
        """
        if table.depth < 2:
            raise InvalidInputError(f"limit cone estimation needs depth >= 2, got {table.depth}")
        if projection not in PROJECTIONS:
            raise InvalidInputError(f"unknown projection {projection!r}, expected one of {PROJECTIONS}")
        descriptor = table.descriptor
        coords = table.lam if projection == "jordan" else table.mu
        usable = coords[matgroup_service.norms(coords) > min_norm]
        if usable.shape[0] < descriptor.rank + 1:
            raise InsufficientDataError(
                f"{usable.shape[0]} usable points for a rank-{descriptor.rank} cone, need {descriptor.rank + 1}"
            )
        points = self.simplex_coordinates(descriptor, usable)
        hull = _AffineHull(points[:, :-1])
        barycentric = points[hull.vertices]
        if not np.all(hull.contains(points[:, :-1], Tolerances.IDENTITY)):
            raise NumericalError("a sample point lies outside its own convex hull")
        vertices = self.unit_directions(descriptor, barycentric)
        wall_margin = float(_simple_roots(descriptor, vertices).min())
        logger.info(
            f"Limit cone ({projection}) at depth {table.depth}: {len(vertices)} vertices, wall margin {wall_margin:.4g}"
        )
        return LimitConeEstimate(
            descriptor=descriptor,
            barycentric=barycentric,
            vertices=vertices,
            points=points,
            depth=table.depth,
            wall_margin=wall_margin,
            projection=projection,
        )

    def cone_contains(
        self, cone: LimitConeEstimate, coords: np.ndarray, tol: float = Tolerances.IDENTITY
    ) -> np.ndarray:
        """Whether the directions of the given rows lie in the estimated cone."""
        points = self.simplex_coordinates(cone.descriptor, coords)
        valid = np.all(np.isfinite(points), axis=1)
        inside = np.zeros(points.shape[0], dtype=bool)
        if np.any(valid):
            hull = _AffineHull(cone.barycentric[:, :-1])
            inside[valid] = hull.contains(points[valid, :-1], tol)
        return inside

    def estimate_growth_indicator(
        self,
        table: OrbitTable,
        grid: np.ndarray | int | None = None,
        apertures: tuple[float, ...] = FitDefaults.APERTURES,
        window: tuple[float, float] | None = None,
        threads: int | None = None,
    ) -> GrowthIndicatorEstimate:
        """
        Growth rates of cone-restricted orbit counts along grid directions.

        For every direction u and aperture eps, N(T) counts the non-identity rows with mu within
        angle eps of u and ||mu|| <= T; log N(T) = delta T + c is fitted over the window. The
        smallest aperture with an acceptable residual wins. An empty smallest cone gives -inf and
        a cone that cannot be fitted gives NaN.

        Args:
            table (OrbitTable): Orbit table.
            grid (np.ndarray | int | None): Unit directions, or a resolution for ``direction_grid``.
            apertures (tuple[float, ...]): Aperture schedule in radians.
            window (tuple[float, float] | None): Fit window, ``reliable_window(table)`` when omitted.
            threads (int | None): Workers for the per-direction fits.

        Returns:
            GrowthIndicatorEstimate: Values, aperture trend and fit diagnostics per direction.
        """
        descriptor = table.descriptor
        if not apertures or any(not 0 < a < np.pi / 2 for a in apertures):
            raise InvalidInputError(f"apertures must lie in (0, pi/2), got {apertures!r}")
        if grid is None or isinstance(grid, (int, np.integer)):
            directions = self.direction_grid(descriptor, FitDefaults.GRID_RESOLUTION if grid is None else int(grid))
        else:
            directions = _unit(np.atleast_2d(np.asarray(grid, dtype=np.float64)))
            if directions.shape[1] != descriptor.n_coords:
                raise InvalidInputError(f"grid directions need {descriptor.n_coords} coordinates")
        window = window or counting_service.reliable_window(table)
        schedule = tuple(sorted((float(a) for a in apertures), reverse=True))

        rows = table.lengths > 0
        norms = matgroup_service.norms(table.mu[rows])
        counter = _ConeCounter(
            directions=table.mu[rows] / np.where(norms > 0, norms, 1.0)[:, None],
            norms=norms,
            grid=counting_service.t_grid(*window),
            window=window,
            schedule=schedule,
        )
        profiles = map_shards(counter.profile, list(directions), threads)

        values = np.array([p[0] for p in profiles])
        status = tuple(p[4] for p in profiles)
        excess = values - LinearForm.rho2(descriptor)(directions)
        if np.any(excess[np.isfinite(excess)] > FitDefaults.SLACK_FLOOR):
            logger.warning(f"Growth estimate exceeds 2 rho by up to {np.nanmax(excess[np.isfinite(excess)]):.4g}")
        logger.info(
            f"Growth indicator at depth {table.depth}: {status.count('ok')} fitted, "
            f"{status.count('empty')} empty, {status.count('insufficient')} insufficient of {len(status)}"
        )
        return GrowthIndicatorEstimate(
            descriptor=descriptor,
            directions=directions,
            values=values,
            apertures=np.array([p[1] for p in profiles]),
            trend=np.stack([p[2] for p in profiles]),
            schedule=schedule,
            windows=np.tile(np.asarray(window, dtype=np.float64), (len(profiles), 1)),
            residuals=np.array([p[3] for p in profiles]),
            status=status,
            depth=table.depth,
            evaluator=counter,
        )

    def maximal_growth_direction(self, est: GrowthIndicatorEstimate) -> tuple[CartanVector, float]:
        """
        Argmax of the estimate over the grid, refined by golden-section searches on the simplex slice.

        Returns:
            tuple[CartanVector, float]: The unit direction and the value there.

        Raises:
            InsufficientDataError: If no grid value is finite.
        """
        descriptor = est.descriptor
        finite = est.finite()
        if not np.any(finite):
            raise InsufficientDataError("every growth-indicator value is -inf or unfitted")
        values = np.where(finite, est.values, -np.inf)
        best = int(np.argmax(values))
        u, delta = est.directions[best], float(values[best])
        r = descriptor.rank
        if r > 1 and est.evaluator is not None:
            grid_points = self.simplex_coordinates(descriptor, est.directions)
            beta = grid_points[best]
            gaps = np.abs(grid_points - beta).max(axis=1)
            spacing = float(gaps[gaps > 1e-12].min()) if np.any(gaps > 1e-12) else 0.0

            def loss(point: np.ndarray) -> float:
                if np.any(point < -Tolerances.TIE):
                    return 1e300
                value = est.evaluate(self.unit_directions(descriptor, np.maximum(point, 0.0))[0])
                return -value if np.isfinite(value) else 1e300

            for j in range(r - 1):
                if spacing == 0:
                    break
                step = np.zeros(r)
                step[j], step[-1] = 1.0, -1.0
                centre = loss(beta)
                if not (loss(beta - spacing * step) > centre < loss(beta + spacing * step)):
                    continue
                result = minimize_scalar(
                    lambda t, beta=beta, step=step: loss(beta + t * step),
                    bracket=(-spacing, 0.0, spacing),
                    method="golden",
                    tol=FitDefaults.GOLDEN_XTOL,
                )
                if result.fun < centre:
                    beta = np.maximum(beta + result.x * step, 0.0)
                    beta /= beta.sum()
            refined = self.unit_directions(descriptor, beta)[0]
            value = est.evaluate(refined)
            if np.isfinite(value) and value >= delta:
                u, delta = refined, float(value)
        logger.info(f"Maximal growth direction {np.round(u, 6).tolist()} with rate {delta:.6g}")
        return CartanVector(descriptor, descriptor.project(u), dominant=True), delta

    def tangent_form(
        self,
        est: GrowthIndicatorEstimate,
        v: CartanVector,
        h: float = FitDefaults.FD_STEP,
        cone: LimitConeEstimate | None = None,
    ) -> TangentForm:
        """
        Linear form tangent to the estimated growth indicator at v.

        The gradient is assembled from the homogeneity relation <grad psi(v), v> = psi(v) and
        central differences along an orthonormal basis of the tangent space of the sphere,
        extrapolated from steps h and h/2.

        Args:
            est (GrowthIndicatorEstimate): Estimate with an evaluator, or synthetic.
            v (CartanVector): Base direction, normalized on entry.
            h (float): Finite-difference step on the sphere.
            cone (LimitConeEstimate | None): Cone v must lie in, when given.

        Returns:
            TangentForm: The form, its domination slack over the grid and the noise tolerance.

        Raises:
            PreconditionError: If v leaves the cone, or a difference step leaves the chamber or the cone.
        """
        descriptor = est.descriptor
        descriptor.check_same(v.descriptor)
        if h <= 0:
            raise InvalidInputError(f"finite-difference step must be positive, got {h!r}")
        u = v.coords / np.linalg.norm(v.coords)
        if cone is not None and not self.cone_contains(cone, u[None])[0]:
            raise PreconditionError("the base direction lies outside the estimated limit cone")
        psi_v = est.evaluate(u)
        if not np.isfinite(psi_v):
            raise PreconditionError("the growth indicator is not finite at the base direction")

        basis = descriptor.algebra_basis
        tangent = basis @ null_space((basis.T @ u)[None])

        def difference(e: np.ndarray, step: float) -> float:
            ahead, behind = u + step * e, u - step * e
            if np.any(_simple_roots(descriptor, np.stack([ahead, behind])) < 0):
                raise PreconditionError(f"the base direction is within {step} of a chamber wall")
            high, low = est.evaluate(ahead), est.evaluate(behind)
            if not (np.isfinite(high) and np.isfinite(low)):
                raise PreconditionError(f"the base direction is within {step} of the cone boundary")
            return (high - low) / (2 * step)

        coarse = np.array([difference(e, h) for e in tangent.T])
        fine = np.array([difference(e, h / 2) for e in tangent.T])
        derivative = (4 * fine - coarse) / 3
        gradient = psi_v * u + tangent @ derivative
        theta = LinearForm(descriptor, gradient)

        finite = est.finite()
        slack = float(np.min(theta(est.directions[finite]) - est.values[finite]))
        tolerance = 2 * float(np.linalg.norm(fine - coarse)) + FitDefaults.SLACK_FLOOR * max(1.0, abs(psi_v))
        if slack < -tolerance:
            logger.warning(f"Tangent form at v fails to dominate the estimate: slack {slack:.4g}")
        return TangentForm(
            theta=theta,
            base=CartanVector(descriptor, u),
            gradient=gradient,
            slack=slack,
            tolerance=tolerance,
        )

    def _form_and_base(
        self, theta: TangentForm | LinearForm, v: CartanVector | None
    ) -> tuple[LinearForm, np.ndarray]:
        form = theta.theta if isinstance(theta, TangentForm) else theta
        if v is None:
            if not isinstance(theta, TangentForm):
                raise InvalidInputError("a base direction is required with a bare linear form")
            v = theta.base
        form.descriptor.check_same(v.descriptor)
        if form.is_zero():
            raise InvalidInputError("the zero form has no kernel complement")
        u = v.coords / np.linalg.norm(v.coords)
        if form(u) <= 0:
            raise InvalidInputError(f"theta(v) must be positive, got {form(u)!r}")
        return form, u

    def adapted_norm(self, theta: TangentForm | LinearForm, v: CartanVector | None = None) -> AdaptedNorm:
        """
        Inner product with |v| = 1, v orthogonal to ker(theta), and the trace form on ker(theta).

        Writing x = (theta(x) / theta(v)) v + P x with P x in ker(theta), the Gram matrix is
        P^T P + theta theta^T / theta(v)^2.

        Raises:
            InvalidInputError: If theta vanishes or theta(v) <= 0.
        """
        form, u = self._form_and_base(theta, v)
        scale = float(form(u))
        projector = np.eye(u.size) - np.outer(u, form.coeffs) / scale
        gram = projector.T @ projector + np.outer(form.coeffs, form.coeffs) / scale**2
        return AdaptedNorm(gram=gram, base=CartanVector(form.descriptor, u), theta=form)

    def s_v(
        self, theta: TangentForm | LinearForm, v: CartanVector | None = None, subspace: np.ndarray | None = None
    ) -> float:
        """
        The constant 1 / |det S_v|, where S_v sends v to the unit normal of ker(theta) and fixes ker(theta).

        Args:
            theta (TangentForm | LinearForm): The form.
            v (CartanVector | None): Base direction, taken from a tangent form when omitted.
            subspace (np.ndarray | None): Columns spanning the subspace the form is restricted to,
                the whole Cartan subspace when omitted.

        Returns:
            float: |det[v, K]| for an orthonormal basis K of ker(theta) in the subspace.
        """
        form, u = self._form_and_base(theta, v)
        if subspace is None:
            basis = form.descriptor.algebra_basis
        else:
            basis, _ = np.linalg.qr(np.asarray(subspace, dtype=np.float64))
        reduced = basis.T @ u
        if np.linalg.norm(u - basis @ reduced) > Tolerances.IDENTITY:
            raise InvalidInputError("the base direction lies outside the subspace")
        kernel = null_space((basis.T @ form.coeffs)[None])
        return float(abs(np.linalg.det(np.column_stack([reduced, kernel]))))

    def poincare_abscissa(self, table: OrbitTable) -> float:
        """
        Critical exponent of sum exp(-s ||mu(gamma)||) from consecutive sphere sums.

        Solves S_L(s) = S_{L-1}(s) for the sums over the words of length L and L - 1.

        Raises:
            InsufficientDataError: If the table is shallower than 2.
            NumericalError: If no sign change is found.
        """
        if table.depth < 2:
            raise InsufficientDataError(f"the sphere-sum ratio needs depth >= 2, got {table.depth}")
        norms = matgroup_service.norms(table.mu)
        outer = norms[table.lengths == table.depth]
        inner = norms[table.lengths == table.depth - 1]

        def ratio(s: float) -> float:
            return float(logsumexp(-s * outer) - logsumexp(-s * inner))

        high = 1.0
        while ratio(high) > 0:
            high *= 2
            if high > 1e6:
                raise NumericalError("sphere sums do not decrease; the orbit does not grow in norm")
        abscissa = brentq(ratio, 0.0, high, xtol=Tolerances.BISECTION)
        logger.debug(f"Poincare abscissa at depth {table.depth}: {abscissa:.6g}")
        return float(abscissa)

    def concavity_report(
        self, est: GrowthIndicatorEstimate, pairs: int = 200, seed: int | None = None
    ) -> ConcavityReport:
        """Midpoint concavity, symmetry under the opposition involution and the bound by 2 rho."""
        rng = np.random.default_rng(settings.SEED if seed is None else seed)
        finite = np.flatnonzero(est.finite())
        violations, worst, examined = 0, 0.0, 0
        if est.evaluator is not None and finite.size >= 2:
            for _ in range(pairs):
                i, j = rng.choice(finite, size=2, replace=False)
                middle = 0.5 * (est.directions[i] + est.directions[j])
                if np.linalg.norm(middle) < Tolerances.IDENTITY:
                    continue
                chord = 0.5 * (est.values[i] + est.values[j])
                value = est.evaluate(middle)
                examined += 1
                shortfall = chord - value if np.isfinite(value) else np.inf
                if shortfall > FitDefaults.CONCAVITY_TOLERANCE * max(1.0, abs(chord)):
                    violations += 1
                worst = max(worst, float(shortfall))
        if violations:
            logger.warning(f"Concavity check: {violations} of {examined} midpoints below the chord")

        mirrored = matgroup_service.opposition_coords(est.descriptor, est.directions)
        cosines = mirrored @ est.directions.T
        partner = np.argmax(cosines, axis=1)
        matched = (cosines[np.arange(len(partner)), partner] >= 1 - Tolerances.IDENTITY) & est.finite()[partner]
        defect = float(np.max(np.abs(est.values[matched] - est.values[partner[matched]]))) if np.any(matched) else None

        rho = LinearForm.rho2(est.descriptor)(est.directions[finite])
        excess = float(np.max(est.values[finite] - rho)) if finite.size else 0.0
        return ConcavityReport(
            pairs=examined,
            violations=violations,
            max_violation=worst,
            symmetry_defect=defect,
            rho_excess=excess,
        )

    def kernel_transversality(self, cone: LimitConeEstimate, theta: TangentForm | LinearForm) -> tuple[bool, float]:
        """Whether theta is positive on every hull vertex, with the smallest vertex value."""
        form = theta.theta if isinstance(theta, TangentForm) else theta
        smallest = float(np.min(form(cone.vertices)))
        return smallest > 0, smallest

    def cone_record(self, cone: LimitConeEstimate) -> LimitConeRecord:
        return LimitConeRecord(
            depth=cone.depth,
            projection=cone.projection,
            wall_margin=cone.wall_margin,
            vertices=cone.vertices.tolist(),
            barycentric=cone.barycentric.tolist(),
        )

    def growth_record(
        self, est: GrowthIndicatorEstimate, maximal: tuple[CartanVector, float] | None = None
    ) -> GrowthIndicatorRecord:
        def finite_or_none(x: float) -> float | None:
            return float(x) if np.isfinite(x) else None

        directions = [
            DirectionRecord(
                direction=est.directions[i].tolist(),
                value=finite_or_none(est.values[i]),
                status=est.status[i],
                aperture=float(est.apertures[i]),
                window=est.windows[i].tolist(),
                residual=finite_or_none(est.residuals[i]),
                trend=[finite_or_none(x) for x in est.trend[i]],
            )
            for i in range(len(est.values))
        ]
        return GrowthIndicatorRecord(
            depth=est.depth,
            apertures=list(est.schedule),
            maximal_direction=None if maximal is None else maximal[0].coords.tolist(),
            maximal_value=None if maximal is None else maximal[1],
            directions=directions,
        )


cone_service = ConeService()
