import numpy as np

from src.core.config.logger import logger
from src.core.config.tolerances import FitDefaults
from src.exceptions.errors import ConfigurationError, FitError, InsufficientDataError, InvalidInputError
from src.models.cone import AdaptedNorm
from src.models.experiments import CountingRegion, CountRecord
from src.models.words import GeneratorSystem, OrbitTable
from src.schemas.results import FitResult, WindowConsistency
from src.services.enumeration_service import enumeration_service
from src.services.matgroup_service import matgroup_service


class CountingService:
    """Counting series over orbit tables and their exponential fits."""

    def reliable_window(self, table: OrbitTable) -> tuple[float, float]:
        """
        Fit window [0.4 T_max, T_max] with T_max = 0.8 L min_i ||mu(g_i)||.

        Beyond T_max a ball of word length L undercounts the orbit.

        Raises:
            InsufficientDataError: If the table has no generator rows.
        """
        generators = table.lengths == 1
        if not np.any(generators):
            raise InsufficientDataError("the table has no word of length 1")
        t_max = FitDefaults.RELIABLE_FRACTION * table.depth * float(matgroup_service.norms(table.mu[generators]).min())
        return FitDefaults.WINDOW_START * t_max, t_max

    def t_grid(self, t_lo: float, t_hi: float, step: float = FitDefaults.T_STEP) -> np.ndarray:
        if step <= 0 or t_hi < t_lo:
            raise InvalidInputError(f"bad T grid [{t_lo}, {t_hi}] with step {step}")
        count = int(np.floor((t_hi - t_lo) / step + 1e-9)) + 1
        return t_lo + step * np.arange(count)

    def sizes(self, coords: np.ndarray, norm: AdaptedNorm | None = None) -> np.ndarray:
        """Trace norm of every row, or the adapted norm when one is given."""
        if norm is None:
            return matgroup_service.norms(coords)
        return norm.norm(coords)

    def counts(self, sizes: np.ndarray, grid: np.ndarray) -> np.ndarray:
        """N(T) = #{size <= T} on the grid, by one sorted pass."""
        return np.searchsorted(np.sort(sizes), grid, side="right").astype(np.int64)

    def count_in_cone(
        self,
        table: OrbitTable,
        region: CountingRegion,
        grid: np.ndarray,
        norm: AdaptedNorm | None = None,
        gens: GeneratorSystem | None = None,
        dedup: str | None = None,
        form: list[np.ndarray] | None = None,
    ) -> CountRecord:
        """
        Counts the non-identity rows whose Cartan projection lies in ``region``.

        Args:
            table (OrbitTable): Orbit table.
            region (CountingRegion): Region of the positive chamber.
            grid (np.ndarray): Radii T.
            norm (AdaptedNorm | None): Size function, the trace norm when omitted.
            gens (GeneratorSystem | None): Generators, required with ``dedup``.
            dedup (str | None): Coset invariant passed to ``dedup_cosets``.
            form (list[np.ndarray] | None): Quadratic forms of the ``orthogonal-form`` invariant.

        Returns:
            CountRecord: N(T) on the grid.

        Raises:
            ConfigurationError: If the region belongs to another group, or dedup lacks generators.
        """
        if region.descriptor.factor_dims != table.descriptor.factor_dims:
            raise ConfigurationError(
                f"region is defined for factors {region.descriptor.factor_dims}, "
                f"table for {table.descriptor.factor_dims}"
            )
        if dedup is not None:
            if gens is None:
                raise ConfigurationError("coset deduplication needs the generator system")
            table = enumeration_service.dedup_cosets(table, gens, dedup, form)
        keep = (table.lengths > 0) & region.contains(table.mu)
        sizes = self.sizes(table.mu[keep], norm)
        grid = np.asarray(grid, dtype=np.float64)
        metadata = {
            "depth": table.depth,
            "region": region.name,
            "norm": "trace" if norm is None else "adapted",
            "dedup": dedup or "none",
            "rows": int(keep.sum()),
        }
        return CountRecord(grid, self.counts(sizes, grid), metadata)

    def fit_exponential_polynomial(
        self, record: CountRecord, beta: float | None = None, window: tuple[float, float] | None = None
    ) -> FitResult:
        """
        Least squares of log N(T) against delta T + beta log T + c.

        Only grid points in the window with N >= SHOT_NOISE_FLOOR take part.

        Args:
            record (CountRecord): Counting series.
            beta (float | None): Frozen log T coefficient; fitted when omitted.
            window (tuple[float, float] | None): [T_lo, T_hi], the record's range when omitted.

        Returns:
            FitResult: Coefficients, residual RMS and standard errors.

        Raises:
            FitError: With fewer than MIN_WINDOW_POINTS usable points or a singular design.
        """
        t_lo, t_hi = window if window is not None else (float(record.t.min()), float(record.t.max()))
        use = (record.t >= t_lo - 1e-12) & (record.t <= t_hi + 1e-12) & (record.n >= FitDefaults.SHOT_NOISE_FLOOR)
        points = int(use.sum())
        if points < FitDefaults.MIN_WINDOW_POINTS:
            raise FitError(
                f"only {points} grid points in [{t_lo:.4g}, {t_hi:.4g}] reach N >= {FitDefaults.SHOT_NOISE_FLOOR}"
            )
        t = record.t[use]
        y = record.log_n()[use]
        if np.any(t <= 0):
            raise FitError("the window must lie in T > 0")
        if beta is None:
            design = np.column_stack([t, np.log(t), np.ones_like(t)])
            target = y
        else:
            design = np.column_stack([t, np.ones_like(t)])
            target = y - beta * np.log(t)

        coef, _, rank, _ = np.linalg.lstsq(design, target, rcond=None)
        if rank < design.shape[1]:
            raise FitError("the fit design is singular on this window")
        residuals = target - design @ coef
        dof = points - design.shape[1]
        sigma2 = float(residuals @ residuals) / dof if dof > 0 else 0.0
        stderr = np.sqrt(np.maximum(np.diag(sigma2 * np.linalg.inv(design.T @ design)), 0.0))

        if beta is None:
            delta, fitted_beta, c = map(float, coef)
            se_delta, se_beta, se_c = map(float, stderr)
        else:
            (delta, c), fitted_beta = map(float, coef), float(beta)
            (se_delta, se_c), se_beta = map(float, stderr), None
        return FitResult(
            delta=delta,
            beta=fitted_beta,
            c=c,
            t_lo=float(t_lo),
            t_hi=float(t_hi),
            residual_rms=float(np.sqrt(np.mean(residuals**2))),
            stderr_delta=se_delta,
            stderr_beta=se_beta,
            stderr_c=se_c,
            beta_frozen=beta is not None,
            points=points,
        )

    def split_window_consistency(self, record: CountRecord, fit: FitResult) -> WindowConsistency:
        """Refits both halves of the window of ``fit`` and compares the rates in standard errors."""
        middle = 0.5 * (fit.t_lo + fit.t_hi)
        beta = fit.beta if fit.beta_frozen else None
        lower = self.fit_exponential_polynomial(record, beta=beta, window=(fit.t_lo, middle))
        upper = self.fit_exponential_polynomial(record, beta=beta, window=(middle, fit.t_hi))
        spread = float(np.hypot(lower.stderr_delta, upper.stderr_delta))
        gap = abs(lower.delta - upper.delta)
        sigmas = gap / spread if spread > 0 else (0.0 if gap == 0 else float("inf"))
        if sigmas >= 2:
            logger.warning(f"Window halves disagree: {lower.delta:.4g} vs {upper.delta:.4g} ({sigmas:.2f} sigma)")
        return WindowConsistency(
            delta_lower=lower.delta, delta_upper=upper.delta, sigmas=sigmas, consistent=bool(sigmas < 2)
        )


counting_service = CountingService()
