"""Constants for geotomo.

Centralized tolerances, default resolutions and calibrated constants used
throughout the toolkit. Configuration defaults are taken from here.
"""

from __future__ import annotations

# =============================================================================
# IMPORTS
# =============================================================================
import math

# =============================================================================
# GEOMETRY - Geodesic flow and charts
# =============================================================================

# Christoffel symbols by central differences, step relative to chart scale
CHRISTOFFEL_STEP_SCALE = 1e-5

# Enlarged manifold margin (sdf <= margin), in chart units
DEFAULT_MARGIN = 0.25

# Fixed RK4 step for geodesic traces
DEFAULT_GEODESIC_STEP = 0.05

# Exit time localization by bisection on the last RK4 substep
EXIT_TOLERANCE = 1e-10
EXIT_BISECTION_MAX = 60

# Trace budget: max time = factor * chart scale before "trapped"
MAX_TIME_FACTOR = 20.0

# Unit-speed renormalization tolerance
UNIT_SPEED_TOLERANCE = 1e-12

# Exponential map uses a fixed number of RK4 steps (smooth in r)
EXP_MAP_STEPS = 64

# Polar normal coordinates by damped Newton shooting
NEWTON_MAX_ITER = 50
NEWTON_TOLERANCE = 1e-10
NEWTON_MAX_HALVINGS = 12
POLAR_FD_STEP = 1e-6
POLAR_JACOBIAN_STEP = 1e-5

# Jacobi fields by finite differences of neighbouring geodesics
JACOBI_PERTURBATION = 1e-5

# =============================================================================
# SPHERE BUNDLE - Quadrature defaults
# =============================================================================
DEFAULT_N_BOUNDARY = 64
DEFAULT_N_ANGLES = 32
DEFAULT_N_DIRECTIONS = 64
DEFAULT_N_RADIAL = 48
DEFAULT_GRID_POINTS = 41

# =============================================================================
# RAY TRANSFORM - Inversion
# =============================================================================

# Rays with mu below the cutoff carry no data
TANGENCY_CUTOFF = 1e-3

# Attenuation regime for injectivity on the unit disc
LAMBDA_MAX = 0.1

# Conjugate gradients
CG_TOLERANCE = 1e-8
CG_MAX_ITER = 2000
CG_PLATEAU_WINDOW = 50
CG_PLATEAU_GAIN = 0.01

# =============================================================================
# CGO - Mollification, shifted inverse, Neumann series
# =============================================================================
DEFAULT_ETA = 0.1
DEFAULT_ETA_PRIME = 0.8

# Mollifier scale h(tau) = tau ** (-MOLLIFIER_EXPONENT)
MOLLIFIER_EXPONENT = 1.0

# Extended x1 interval length relative to the x1-extent of M
EXTENSION_FACTOR = 1.5

# Smooth cutoff transition width
CUTOFF_WIDTH = 0.1

# Transversal disc of the CGO cylinder, its enlargement and the polar center
CGO_BASE_RADIUS = 0.5
CGO_BASE_MARGIN = 0.25
DEFAULT_OMEGA = (-0.675, 0.0)

# Polar center distance outside the boundary of M0
OMEGA_OFFSET = 0.15

TAU_MIN_G0 = 4.0
EXCEPTIONAL_CONDITION = 1e10
TAU_RETRY_FACTOR = 1e-3
TAU_MAX_RETRIES = 3

NEUMANN_TOLERANCE = 1e-10
NEUMANN_MAX_TERMS = 200
POWER_ITERATIONS = 20
OPERATOR_RESIDUAL_TOLERANCE = 1e-6

DEFAULT_X1_POINTS = 64
DEFAULT_TRANSVERSAL_SPACING = 0.05

# =============================================================================
# CARLEMAN - Calibrated constants (frozen after the brute-force sweep)
# =============================================================================
CARLEMAN_C = 0.125
CARLEMAN_C_PRIME = 4.0
CARLEMAN_C_DOUBLE_PRIME = 0.125
TAU_ZERO = 8.0
CARLEMAN_FAMILY_SIZE = 20
CARLEMAN_TAUS = (8.0, 16.0, 32.0, 64.0)
CARLEMAN_SLACK_TOLERANCE = 1e-6

# =============================================================================
# CONDUCTIVITY FORWARD - Solver and masks
# =============================================================================
DEFAULT_EPSILON = 0.05
SOLVER_RESIDUAL_TOLERANCE = 1e-9

# Forward box M = [0, 1] x [-1/2, 1/2]^(n-1)
FORWARD_HALF_WIDTH = 0.5
DEFAULT_FORWARD_SHAPE = (17, 9, 9)

# Boundary probe: sub-box of the CGO cylinder and its tau ladder
PROBE_HALF_WIDTH = 0.35
PROBE_X1_RANGE = (0.0, 0.5)
PROBE_X1_POINTS = 48
PROBE_SPACING = 0.025
PROBE_TRACE_TOLERANCE = 1e-8
PROBE_TAUS = tuple(6.0 * math.sqrt(2.0) ** k for k in range(5))

# Largest tau * grid spacing at which the probe CGOs count as resolved
PROBE_RESOLUTION = 0.6

# Angular profile of u1, aimed away from the contrast of the matched pair
PROBE_PROFILE_CENTER = 0.6
PROBE_PROFILE_WIDTH = 0.2

# =============================================================================
# HARNESS - Rates, ladders, exit codes
# =============================================================================
RATE_SLACK = 0.1
PROBE_SLACK = 0.2
MIN_RATE_POINTS = 4
MIN_LADDER_POINTS = 5
MIN_LADDER_RATIO = math.sqrt(2.0)
CONFIDENCE_LEVEL = 0.95
ZERO_NORM_THRESHOLD = 1e-14

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG_ERROR = 2

THREADS_ENV_VAR = "GEOTOMO_THREADS"
DEFAULT_SEED = 20240601
