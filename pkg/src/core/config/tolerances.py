import math


class Tolerances:
    DECOMPOSITION_RESIDUAL = 1e-10
    KAK_RESIDUAL = 1e-9
    IDENTITY = 1e-9
    INVARIANT_SUM = 1e-9
    TIE = 1e-12
    LOXODROMIC_FLOOR = 1e-7
    INPUT_DETERMINANT = 1e-8
    ORTHONORMAL = 1e-10
    OVERFLOW_CAP = 1e300

    TRANSVERSALITY_MARGIN = 1e-6
    H_MEMBERSHIP = 1e-7
    REGULARITY = 1e-7
    GCARTAN_RECOMPOSITION = 1e-8
    QUANTIZATION_GRID = 1e-9
    BISECTION = 1e-10
    NORMALIZATION = 1e-12


class FitDefaults:
    T_STEP = 0.1
    SHOT_NOISE_FLOOR = 30
    MIN_WINDOW_POINTS = 10
    MAX_RESIDUAL_RMS = 0.5
    RELIABLE_FRACTION = 0.8
    WINDOW_START = 0.4
    APERTURES = (0.2, 0.1, 0.05)
    FD_STEP = 0.02
    AMBIGUITY_ABORT_FRACTION = 0.01
    SLACK_FLOOR = 1e-3
    CONCAVITY_TOLERANCE = 0.02
    GRID_RESOLUTION = 12
    MIN_CONE_NORM = 1e-6
    GOLDEN_XTOL = 1e-3


class QuadratureDefaults:
    EPSREL = 1e-9
    LIMIT = 400
    TAIL_EXPONENT = 50.0
    SINGULAR_FLOOR = 1.0
    BOUND_SLACK = 1e-3
    APERTURE = math.pi / 3
