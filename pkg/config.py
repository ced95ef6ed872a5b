import os
from dotenv import load_dotenv

load_dotenv()

# Paths
OUTPUT_DIR = os.getenv('HYPERBOLIC_OUTPUT_DIR', 'output')
SYSTEMS_DIR = os.getenv('HYPERBOLIC_SYSTEMS_DIR', 'data/systems')

# Reproducibility
RANDOM_SEED = int(os.getenv('HYPERBOLIC_SEED', '20240601'))

# Logging
LOG_LEVEL = os.getenv('HYPERBOLIC_LOG_LEVEL', 'INFO')

# Chebyshev discretization of admissible manifolds
CHEBYSHEV_DEGREE = int(os.getenv('HYPERBOLIC_CHEBYSHEV_DEGREE', '16'))
CHEBYSHEV_DEGREE_MULTI = 8  # per-axis cap for tensor grids (u_dim >= 2)

# Numerical tolerances
TOLERANCES = {
    'fixed_point': 1e-12,
    'fixed_point_translate': 1e-6,
    'splitting': 1e-10,
    'newton': 1e-12,
    'residual': 1e-10,
    'unstable': 1e-9,
    'closing_c0': 1e-10,
    'periodic_residual': 1e-8,
    'class_slack': 0.05,
    'expansion_slack': 1e-12,
    'derivative_consistency': 1e-8,
    'degenerate_pair': 1e-10,
    'rate': 1e-12,
    'orbit': 1e-10,
}

# Newton solver
NEWTON_SETTINGS = {
    'max_iter': 50,
    'damping_floor': 2.0 ** -20,
}

# Jacobian finite differences
FD_STEP = 1e-6

# Unstable manifold solver
UNSTABLE_SETTINGS = {
    'k_max': 1024,
    'family_length': 8,
}

# Closing procedure
CLOSING_SETTINGS = {
    'radius': 0.05,
    'hyperbolicity_margin': 0.05,
    'epsilon_start': 1e-2,
    'max_iter': 200,
}

# Parameter search for xi and gamma_bar
PARAMETER_SEARCH = {
    'xi': 0.1,
    'gamma_bar': 0.1,
    'halvings': 60,
}

# Sampling
HOLDER_SAMPLES = 64
CONDITION_SAMPLES = 1000
PROBE_POINTS = 50

# Effective diagnostics
CHI_HAT_FRACTION = 0.5
CHI_HAT_FALLBACK = 0.1
BETA_BAR_KEEP_FRACTION = 0.9


def override_tolerances(pairs):
    """Apply KEY=VAL overrides to TOLERANCES, returning the applied dict"""
    applied = {}
    for pair in pairs or []:
        key, _, value = pair.partition('=')
        key = key.strip()
        if key not in TOLERANCES:
            raise KeyError(f"Unknown tolerance '{key}'")
        TOLERANCES[key] = float(value)
        applied[key] = TOLERANCES[key]
    return applied
