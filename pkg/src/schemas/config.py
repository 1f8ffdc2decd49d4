import json
from pathlib import Path
from typing import Literal

import numpy as np
import yaml
from pydantic import BaseModel, Field, ValidationError, field_validator, model_validator

from src.exceptions.errors import ConfigurationError
from src.models.group import GroupDescriptor
from src.models.symmetric import SymmetricPairDescriptor
from src.models.words import GeneratorSystem
from src.services.enumeration_service import enumeration_service

EXPERIMENT_KINDS = (
    "cone-count",
    "growth-indicator",
    "limit-cone",
    "bisector-count",
    "symmetric-count",
    "ps-measure",
    "verify",
)


class FactorSchema(BaseModel):
    """
    One SL_d factor of the ambient group.

    Attributes:
        dim (int): Matrix size d >= 2.
        projective (bool | None): Work in PSL_d; defaults to True for even d.
    """

    dim: int = Field(ge=2)
    projective: bool | None = None


class GeneratorSchema(BaseModel):
    """
    A generator given by one square matrix per factor.

    Attributes:
        label (str): Single-character label.
        matrices (list[list[list[float]]]): The matrices, factor by factor.
    """

    label: str = Field(min_length=1, max_length=1)
    matrices: list[list[list[float]]]

    @field_validator("matrices")
    @classmethod
    def finite_entries(cls, value: list[list[list[float]]]) -> list[list[list[float]]]:
        for matrix in value:
            array = np.asarray(matrix, dtype=np.float64)
            if array.ndim != 2 or array.shape[0] != array.shape[1]:
                raise ValueError(f"generator matrices must be square, got shape {array.shape}")
            if not np.all(np.isfinite(array)):
                raise ValueError("generator matrices must have finite entries")
        return value


class GroupSchema(BaseModel):
    """
    The ambient group and the free generators of the subgroup.

    Attributes:
        factors (list[FactorSchema]): Factors of G.
        generators (list[GeneratorSchema]): At least two generators.
    """

    factors: list[FactorSchema] = Field(min_length=1)
    generators: list[GeneratorSchema] = Field(min_length=2)

    @model_validator(mode="after")
    def matching_shapes(self) -> "GroupSchema":
        dims = [factor.dim for factor in self.factors]
        for generator in self.generators:
            shapes = [len(matrix) for matrix in generator.matrices]
            if shapes != dims:
                raise ValueError(f"generator {generator.label} has matrix sizes {shapes}, factors are {dims}")
        return self

    def descriptor(self) -> GroupDescriptor:
        dims = tuple(f.dim for f in self.factors)
        flags = tuple(f.projective if f.projective is not None else f.dim % 2 == 0 for f in self.factors)
        return GroupDescriptor(dims, flags)

    def generator_system(self, strict: bool = True) -> GeneratorSystem:
        """
        Raises:
            InvalidInputError: If a matrix fails element validation (|det| = 1 to 1e-8 with ``strict``).
        """
        return enumeration_service.generator_system(
            self.descriptor(),
            [[np.asarray(m, dtype=np.float64) for m in g.matrices] for g in self.generators],
            labels=[g.label for g in self.generators],
            strict=strict,
        )


class PairSchema(BaseModel):
    """
    Symmetric pair declaration.

    Attributes:
        kind (str): ``indefinite-orthogonal``, ``swap`` or ``riemannian``.
        p (int): Positive block of J.
        q (int): Negative block of J.
    """

    kind: Literal["indefinite-orthogonal", "swap", "riemannian"]
    p: int = 0
    q: int = 0

    def pair(self, descriptor: GroupDescriptor) -> SymmetricPairDescriptor:
        return SymmetricPairDescriptor(descriptor, self.kind, self.p, self.q)


class BallSchema(BaseModel):
    """
    Metric ball in K (around a frame) or in H (around a flag, with a bound on the Cartan norm).

    An omitted center means the whole group.

    Attributes:
        center (list[list[list[float]]] | None): One frame per factor; columns span the flag.
        radius (float): Largest flag distance, in radians.
        norm_radius (float | None): Bound on the Cartan norm, used by the H-set only.
    """

    center: list[list[list[float]]] | None = None
    radius: float = Field(default=float(np.pi), ge=0.0)
    norm_radius: float | None = Field(default=None, ge=0.0)


class ParamsSchema(BaseModel):
    """
    Experiment parameters; each kind reads the fields it needs.

    Attributes:
        depth (int): Enumeration depth L.
        direction (list[float] | None): Cone center in embedded Cartan coordinates.
        aperture (float | None): Round-cone aperture.
        inequalities (list[list[float]] | None): Rows of A for the polyhedral cone A x >= 0.
        norm (str): ``trace`` or ``adapted``.
        theta (list[float] | None): Coefficients of the form of the adapted norm.
        window (tuple[float, float] | None): Fit window, the reliable range when omitted.
        beta (float | None): Frozen log T coefficient; the experiment's exponent when omitted.
        dedup (str | None): Coset invariant for counting.
        omega_h (BallSchema): The H-set of the bisector count.
        omega_k (BallSchema): The K-set of the bisector count.
        compare_growth (bool): Estimate the growth indicator at the counting direction.
        resolution (int): Growth-indicator grid resolution.
        apertures (list[float] | None): Growth-indicator aperture schedule.
        projection (str): ``jordan`` or ``cartan`` limit cone.
        psi (list[float] | None): Coefficients of the Patterson-Sullivan exponent form, 2 rho when omitted.
        s (float): Scale of the exponent form.
        conformality (bool): Evaluate the conformality residual of each generator.
        samples (int): Sampled flags for the limit-set containment diagnostic.
        plot (bool): Write scatter.svg next to the counting series.
    """

    depth: int = Field(default=8, ge=0)
    direction: list[float] | None = None
    aperture: float | None = Field(default=None, gt=0.0)
    inequalities: list[list[float]] | None = None
    norm: Literal["trace", "adapted"] = "trace"
    theta: list[float] | None = None
    window: tuple[float, float] | None = None
    beta: float | None = None
    dedup: Literal["orthogonal-form", "factor-ratio"] | None = None
    omega_h: BallSchema = Field(default_factory=BallSchema)
    omega_k: BallSchema = Field(default_factory=BallSchema)
    compare_growth: bool = True
    resolution: int = Field(default=12, ge=1)
    apertures: list[float] | None = None
    projection: Literal["jordan", "cartan"] = "jordan"
    psi: list[float] | None = None
    s: float = Field(default=1.0, gt=0.0)
    conformality: bool = True
    samples: int = Field(default=200, ge=1)
    plot: bool = True

    @model_validator(mode="after")
    def window_order(self) -> "ParamsSchema":
        if self.window is not None and not 0 < self.window[0] < self.window[1]:
            raise ValueError(f"fit window must satisfy 0 < T_lo < T_hi, got {self.window}")
        if self.norm == "adapted" and (self.theta is None or self.direction is None):
            raise ValueError("the adapted norm needs theta and a direction")
        return self


class ExperimentSchema(BaseModel):
    kind: Literal[EXPERIMENT_KINDS]
    params: ParamsSchema = Field(default_factory=ParamsSchema)


class ExperimentConfig(BaseModel):
    """
    Experiment configuration as read from JSON or YAML.

    Attributes:
        group (GroupSchema): Ambient group and generators.
        pair (PairSchema | None): Symmetric pair, required by the symmetric experiments.
        experiment (ExperimentSchema): Kind and parameters.
        seed (int | None): Random seed, ``settings.SEED`` when omitted.
        output (Path | None): Output directory, overridden by ``--out``.
    """

    group: GroupSchema
    pair: PairSchema | None = None
    experiment: ExperimentSchema
    seed: int | None = Field(default=None, ge=0)
    output: Path | None = None

    @model_validator(mode="after")
    def pair_required(self) -> "ExperimentConfig":
        if self.experiment.kind in ("bisector-count", "symmetric-count") and self.pair is None:
            raise ValueError(f"experiment {self.experiment.kind} needs a symmetric pair")
        return self

    @classmethod
    def load(cls, path: Path) -> "ExperimentConfig":
        """
        Reads a config file; ``.yaml``/``.yml`` go through YAML, everything else through JSON.

        Raises:
            ConfigurationError: If the file is missing, unparsable or schema-invalid.
        """
        path = Path(path)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as err:
            raise ConfigurationError(f"cannot read {path}: {err.strerror}")
        try:
            data = yaml.safe_load(text) if path.suffix in (".yaml", ".yml") else json.loads(text)
        except (json.JSONDecodeError, yaml.YAMLError) as err:
            raise ConfigurationError(f"cannot parse {path}: {err}")
        return cls.parse(data)

    @classmethod
    def parse(cls, data: object) -> "ExperimentConfig":
        try:
            return cls.model_validate(data)
        except ValidationError as err:
            first = err.errors()[0]
            where = ".".join(str(x) for x in first["loc"])
            raise ConfigurationError(f"{where}: {first['msg']}" if where else first["msg"])

    @classmethod
    def from_generators(
        cls,
        gens: GeneratorSystem,
        kind: str,
        pair: dict | None = None,
        seed: int | None = None,
        **params: object,
    ) -> "ExperimentConfig":
        """Configuration of an in-memory generator system, as the batteries of ``verify`` build them."""
        data = {
            "group": {
                "factors": [{"dim": d} for d in gens.descriptor.factor_dims],
                "generators": [
                    {"label": label, "matrices": [m.tolist() for m in g.factors]}
                    for label, g in zip(gens.labels, gens.generators)
                ],
            },
            "pair": pair,
            "experiment": {"kind": kind, "params": params},
            "seed": seed,
        }
        return cls.parse(data)
