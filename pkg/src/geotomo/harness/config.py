"""Experiment configuration loaded from a single TOML file.

Every section is optional; omitted keys take the defaults of
``geotomo.constants``. Unknown keys are rejected so that typos in a
reproduction file surface as configuration errors.

Example file::

    seed = 7
    output_dir = "out"

    [chart]
    kind = "spherical_cap"
    curvature = 1.0

    [cgo]
    taus = [8.0, 11.3137, 16.0, 22.6274, 32.0]
"""

from __future__ import annotations

# =============================================================================
# IMPORTS
# =============================================================================
# Standard Library
import tomllib
from pathlib import Path

# Third-party
from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    ValidationError,
    ValidationInfo,
    field_validator,
)

# Project/Local
from .._internal import get_logger
from .._internal.parallel import worker_count
from ..constants import (
    CARLEMAN_C,
    CARLEMAN_C_DOUBLE_PRIME,
    CARLEMAN_C_PRIME,
    CARLEMAN_FAMILY_SIZE,
    CARLEMAN_TAUS,
    DEFAULT_EPSILON,
    DEFAULT_ETA,
    DEFAULT_ETA_PRIME,
    DEFAULT_FORWARD_SHAPE,
    DEFAULT_GEODESIC_STEP,
    DEFAULT_GRID_POINTS,
    DEFAULT_MARGIN,
    DEFAULT_N_ANGLES,
    DEFAULT_N_BOUNDARY,
    DEFAULT_N_DIRECTIONS,
    DEFAULT_N_RADIAL,
    DEFAULT_SEED,
    DEFAULT_TRANSVERSAL_SPACING,
    DEFAULT_X1_POINTS,
    LAMBDA_MAX,
    MOLLIFIER_EXPONENT,
    PROBE_HALF_WIDTH,
    PROBE_SLACK,
    PROBE_SPACING,
    PROBE_TAUS,
    PROBE_X1_POINTS,
    RATE_SLACK,
    TAU_MIN_G0,
)
from ..enums import ChartKind
from ..exceptions import ConfigError
from ..geometry import ConformalDisc
from ..rates import check_ladder, geometric_ladder

# =============================================================================
# MODULE-LEVEL LOGGER
# =============================================================================
logger = get_logger(__name__)

# =============================================================================
# TYPES & CONSTANTS
# =============================================================================
DEFAULT_OUTPUT_DIR = Path("geotomo-out")


# =============================================================================
# CORE CLASSES
# =============================================================================


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class ChartConfig(_Section):
    """Transversal chart M0."""

    kind: ChartKind = ChartKind.EUCLIDEAN_DISC
    radius: float = Field(default=1.0, gt=0.0)
    curvature: float = Field(default=1.0, ge=0.0)
    margin: float = Field(default=DEFAULT_MARGIN, gt=0.0)

    def build(self) -> ConformalDisc:
        return ConformalDisc.from_kind(
            self.kind, self.radius, self.curvature, self.margin
        )


class GridConfig(_Section):
    """Field grids of the ray transform (reference and refined)."""

    field_points: int = Field(default=DEFAULT_GRID_POINTS, ge=9)
    refined_points: int = Field(default=61, ge=9)


class RayConfig(_Section):
    """Influx quadrature, ray tracing and attenuation settings."""

    n_boundary: int = Field(default=DEFAULT_N_BOUNDARY, gt=0)
    n_angles: int = Field(default=DEFAULT_N_ANGLES, gt=0)
    n_directions: int = Field(default=DEFAULT_N_DIRECTIONS, gt=0)
    n_radial: int = Field(default=DEFAULT_N_RADIAL, gt=0)
    step: float = Field(default=DEFAULT_GEODESIC_STEP, gt=0.0)
    lambda_max: float = Field(default=LAMBDA_MAX, ge=0.0)
    lambdas: tuple[float, ...] = (0.0, 0.05, -0.05, 0.1, -0.1)
    scan_lambdas: tuple[float, ...] = (0.0, 0.1, 0.2, 0.4, 0.8)
    family_size: int = Field(default=10, gt=0)
    n_pairs: int = Field(default=10, gt=0)

    @field_validator("lambdas")
    @classmethod
    def _within_regime(
        cls, value: tuple[float, ...], info: ValidationInfo
    ) -> tuple[float, ...]:
        bound = float(info.data.get("lambda_max", LAMBDA_MAX))
        outside = [lam for lam in value if abs(lam) > bound]
        if outside:
            msg = f"Attenuations {outside} exceed lambda_max = {bound}"
            raise ValueError(msg)
        return value


class CGOConfig(_Section):
    """Mollification, shifted inverse and CGO ladders."""

    taus: tuple[float, ...] = geometric_ladder(8.0, 2.0**0.5, 5)
    g0_taus: tuple[float, ...] = geometric_ladder(8.0, 2.0**0.5, 5)
    mollify_taus: tuple[float, ...] = geometric_ladder(8.0, 2.0, 5)
    mollify_points: int = Field(default=513, ge=17)
    eta: float = Field(default=DEFAULT_ETA, gt=0.0)
    eta_prime: float = Field(default=DEFAULT_ETA_PRIME, gt=0.0)
    mollifier_exponent: float = Field(default=MOLLIFIER_EXPONENT, gt=0.0)
    spacing: float = Field(default=DEFAULT_TRANSVERSAL_SPACING, gt=0.0)
    n_x1: int = Field(default=DEFAULT_X1_POINTS, ge=8)
    tau_min: float = Field(default=TAU_MIN_G0, gt=0.0)
    lam: float = 0.0

    @field_validator("taus", "g0_taus", "mollify_taus")
    @classmethod
    def _geometric(cls, value: tuple[float, ...]) -> tuple[float, ...]:
        return check_ladder(value)

    @field_validator("eta_prime")
    @classmethod
    def _above_eta(cls, value: float, info: ValidationInfo) -> float:
        eta = float(info.data.get("eta", DEFAULT_ETA))
        if value <= eta:
            msg = f"eta_prime = {value} must exceed eta = {eta}"
            raise ValueError(msg)
        return value


class CarlemanConfig(_Section):
    """Carleman estimate ladder and constants."""

    taus: tuple[float, ...] = CARLEMAN_TAUS
    identity_taus: tuple[float, ...] = (2.0, 8.0)
    c: float = Field(default=CARLEMAN_C, gt=0.0)
    c_prime: float = Field(default=CARLEMAN_C_PRIME, ge=0.0)
    c_double_prime: float = Field(default=CARLEMAN_C_DOUBLE_PRIME, ge=0.0)
    family_size: int = Field(default=CARLEMAN_FAMILY_SIZE, gt=0)
    shape: tuple[int, int, int] = (33, 17, 17)
    refinement_shape: tuple[int, int, int] = (17, 9, 9)

    @field_validator("taus", "identity_taus")
    @classmethod
    def _positive(cls, value: tuple[float, ...]) -> tuple[float, ...]:
        if not value or any(t <= 0.0 for t in value):
            msg = f"Carleman taus must be positive, got {value}"
            raise ValueError(msg)
        return value


class ForwardConfig(_Section):
    """Conductivity solves, DN maps and the boundary probe."""

    shape: tuple[int, int, int] = DEFAULT_FORWARD_SHAPE
    alessandrini_shapes: tuple[tuple[int, int], ...] = (
        (33, 33),
        (65, 65),
        (129, 129),
    )
    epsilon: float = Field(default=DEFAULT_EPSILON, gt=0.0)
    probe_taus: tuple[float, ...] = PROBE_TAUS
    probe_half_width: float = Field(default=PROBE_HALF_WIDTH, gt=0.0)
    probe_x1_points: int = Field(default=PROBE_X1_POINTS, ge=8)
    probe_spacing: float = Field(default=PROBE_SPACING, gt=0.0)

    @field_validator("probe_taus")
    @classmethod
    def _geometric(cls, value: tuple[float, ...]) -> tuple[float, ...]:
        return check_ladder(value)

    @field_validator("alessandrini_shapes")
    @classmethod
    def _two_levels(
        cls, value: tuple[tuple[int, int], ...]
    ) -> tuple[tuple[int, int], ...]:
        if len(value) < 2:
            msg = "Alessandrini refinement needs at least two grid shapes"
            raise ValueError(msg)
        return value


class ToleranceConfig(_Section):
    """Pass thresholds of the suite checks."""

    santalo: float = Field(default=1e-3, gt=0.0)
    adjoint: float = Field(default=1e-3, gt=0.0)
    reconstruction: float = Field(default=2e-2, gt=0.0)
    pairing: float = Field(default=1e-2, gt=0.0)
    geometry: float = Field(default=1e-6, gt=0.0)
    rate_slack: float = Field(default=RATE_SLACK, ge=0.0)
    probe_slack: float = Field(default=PROBE_SLACK, ge=0.0)
    dn_symmetry: float = Field(default=1e-8, gt=0.0)
    alessandrini: float = Field(default=1e-3, gt=0.0)
    route: float = Field(default=1e-6, gt=0.0)
    conformal: float = Field(default=1e-5, gt=0.0)
    divergence: float = Field(default=1e-4, gt=0.0)
    eikonal: float = Field(default=1e-4, gt=0.0)
    refinement_order: float = 1.8


class ExperimentConfig(_Section):
    """A complete, validated experiment configuration.

    Attributes:
        chart: Transversal chart.
        grid: Ray-transform field grids.
        ray: Influx, tracing and attenuation settings.
        cgo: CGO ladders and regularity exponents.
        carleman: Carleman ladder and constants.
        forward: Conductivity and probe settings.
        tolerances: Check thresholds.
        seed: Seed of every random family and test function.
        output_dir: Default report directory.
        threads: Worker cap; filled from ``GEOTOMO_THREADS`` at run time.
    """

    chart: ChartConfig = Field(default_factory=ChartConfig)
    grid: GridConfig = Field(default_factory=GridConfig)
    ray: RayConfig = Field(default_factory=RayConfig)
    cgo: CGOConfig = Field(default_factory=CGOConfig)
    carleman: CarlemanConfig = Field(default_factory=CarlemanConfig)
    forward: ForwardConfig = Field(default_factory=ForwardConfig)
    tolerances: ToleranceConfig = Field(default_factory=ToleranceConfig)
    seed: int = DEFAULT_SEED
    output_dir: Path = DEFAULT_OUTPUT_DIR
    threads: int | None = Field(default=None, ge=1)


# =============================================================================
# PUBLIC API
# =============================================================================


def default_config() -> ExperimentConfig:
    """The reference configuration."""
    return ExperimentConfig()


def load_config(path: Path) -> ExperimentConfig:
    """Parse and validate a TOML configuration file.

    Raises:
        ConfigError: If the file cannot be read, is not TOML, or fails
            validation.
    """
    try:
        with path.open("rb") as handle:
            raw = tomllib.load(handle)
    except OSError as exc:
        msg = f"Cannot read config {path}: {exc}"
        raise ConfigError(msg) from exc
    except tomllib.TOMLDecodeError as exc:
        msg = f"Config {path} is not valid TOML: {exc}"
        raise ConfigError(msg) from exc
    try:
        config = ExperimentConfig.model_validate(raw)
    except ValidationError as exc:
        msg = f"Invalid config {path}:\n{exc}"
        raise ConfigError(msg) from exc
    logger.debug("Loaded config from %s (seed=%d)", path, config.seed)
    return config


def with_environment(config: ExperimentConfig) -> ExperimentConfig:
    """Resolve ``GEOTOMO_THREADS`` once for a run.

    Raises:
        ConfigError: If the variable holds an invalid value.
    """
    threads = worker_count(default=config.threads or 1)
    return config.model_copy(update={"threads": threads})
