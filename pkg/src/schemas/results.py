from pydantic import BaseModel


class FitResult(BaseModel):
    """
    Least-squares fit of log N(T) = delta T + beta log T + c.

    Attributes:
        delta (float): Exponential rate.
        beta (float): Coefficient of log T.
        c (float): Intercept.
        t_lo (float): Lower end of the fit window.
        t_hi (float): Upper end of the fit window.
        residual_rms (float): Root mean square of the residuals.
        stderr_delta (float): Standard error of delta.
        stderr_beta (float | None): Standard error of beta, None when beta was frozen.
        stderr_c (float): Standard error of c.
        beta_frozen (bool): Whether beta was fixed before fitting.
        points (int): Grid points used.
    """

    delta: float
    beta: float
    c: float
    t_lo: float
    t_hi: float
    residual_rms: float
    stderr_delta: float
    stderr_beta: float | None = None
    stderr_c: float
    beta_frozen: bool = False
    points: int


class WindowConsistency(BaseModel):
    """
    Rates fitted on the two halves of a window.

    Attributes:
        delta_lower (float): Rate on [T_lo, T_mid].
        delta_upper (float): Rate on [T_mid, T_hi].
        sigmas (float): Their difference in units of the combined standard error.
        consistent (bool): Whether the difference is below two standard errors.
    """

    delta_lower: float
    delta_upper: float
    sigmas: float
    consistent: bool


class DirectionRecord(BaseModel):
    """
    Exported growth-indicator value of one direction.

    Attributes:
        direction (list[float]): Unit direction.
        value (float | None): Estimated rate; None when the cone was empty or unfit.
        status (str): ``ok``, ``empty`` or ``insufficient``.
        aperture (float): Aperture of the retained fit.
        window (list[float]): Fit window.
        residual (float | None): Residual RMS of the retained fit, None when nothing was fitted.
        trend (list[float | None]): Rate per aperture of the schedule.
    """

    direction: list[float]
    value: float | None
    status: str
    aperture: float
    window: list[float]
    residual: float | None
    trend: list[float | None]


class GrowthIndicatorRecord(BaseModel):
    """
    Exported growth-indicator estimate.

    Attributes:
        depth (int): Table depth.
        metric (str): Inner product in force on the Cartan subspace.
        apertures (list[float]): Aperture schedule.
        maximal_direction (list[float] | None): Refined argmax direction.
        maximal_value (float | None): Value at the refined argmax.
        directions (list[DirectionRecord]): Per-direction records in grid order.
    """

    depth: int
    metric: str = "trace"
    apertures: list[float]
    maximal_direction: list[float] | None = None
    maximal_value: float | None = None
    directions: list[DirectionRecord]


class LimitConeRecord(BaseModel):
    """
    Exported limit-cone estimate.

    Attributes:
        depth (int): Table depth.
        projection (str): ``jordan`` or ``cartan``.
        wall_margin (float): Smallest simple-root value over the unit hull vertices.
        vertices (list[list[float]]): Unit hull vertices in the Cartan subspace.
        barycentric (list[list[float]]): Hull vertices in simplex coordinates.
    """

    depth: int
    projection: str
    wall_margin: float
    vertices: list[list[float]]
    barycentric: list[list[float]]


class ConcavityReport(BaseModel):
    """
    Shape diagnostics of a growth-indicator estimate.

    Attributes:
        pairs (int): Midpoint pairs examined.
        violations (int): Pairs where the midpoint value falls below the chord by more than the tolerance.
        max_violation (float): Largest shortfall found.
        symmetry_defect (float | None): Largest |psi(u) - psi(i u)| over i-paired grid directions.
        rho_excess (float): Largest psi(u) - 2 rho(u) over finite directions.
    """

    pairs: int
    violations: int
    max_violation: float
    symmetry_defect: float | None
    rho_excess: float


class CountReport(BaseModel):
    """
    Summary written next to a counting series.

    Attributes:
        experiment (str): Experiment kind.
        depth (int): Table depth.
        rows (int): Orbit points considered (after deduplication).
        fit (FitResult): Headline fit.
        free_fit (FitResult | None): Fit with beta free, kept as a diagnostic.
        expected_beta (float | None): Exponent the constrained fit froze beta to.
        reference_rate (float | None): Growth-indicator value the rate is compared with.
        relative_gap (float | None): (delta - reference) / reference.
        window_consistency (WindowConsistency | None): Split-window diagnostic.
        limit_set_containment (float | None): Fraction of sampled limit points inside H P / P.
        ambiguous_fraction (float | None): Share of rows with ambiguous decompositions.
        critical_exponent (float | None): Critical exponent of the whole orbit for the trace norm.
    """

    experiment: str
    depth: int
    rows: int
    fit: FitResult
    free_fit: FitResult | None = None
    expected_beta: float | None = None
    reference_rate: float | None = None
    relative_gap: float | None = None
    window_consistency: WindowConsistency | None = None
    limit_set_containment: float | None = None
    ambiguous_fraction: float | None = None
    critical_exponent: float | None = None


class DomIntegralCheck(BaseModel):
    """
    Normalized round-cone integral against its large-T limit and its uniform bound.

    Attributes:
        numeric (float): Quadrature value of e^(-delta T) T^((r-r0)/2) times the integral.
        limit (float): e^(-delta |w|^2 / 2) / delta.
        bound (float): e^(-c delta |w|^2) / delta.
        within_bound (bool): Whether the numeric value respects the bound up to the slack.
        relative_gap (float): |numeric - limit| / limit.
    """

    numeric: float
    limit: float
    bound: float
    within_bound: bool
    relative_gap: float


class PSMeasureReport(BaseModel):
    """
    Summary of an approximate Patterson-Sullivan measure.

    Attributes:
        depth (int): Table depth.
        exponent (float): Exponent s the atoms were weighted with.
        atoms (int): Atoms kept.
        max_weight (float): Largest atom weight.
        conformality_residual (float | None): Largest relative defect of the transformation rule.
        cylinders (dict[str, float]): Mass of the cylinder of every first letter.
    """

    depth: int
    exponent: float
    atoms: int
    max_weight: float
    conformality_residual: float | None = None
    cylinders: dict[str, float]


class TableSummary(BaseModel):
    """
    Description of an enumerated orbit table.

    Attributes:
        p (int): Number of generators.
        depth (int): Word-length radius.
        rows (int): Row count.
        digest (str): Hex digest of the generators and depth.
        flags (bool): Whether attracting flags are stored.
        path (str | None): Cache file, when the table was saved.
    """

    p: int
    depth: int
    rows: int
    digest: str
    flags: bool
    path: str | None = None
