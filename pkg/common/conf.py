"""
Access to the EQUILIBRIUM_ENGINE settings dict with built-in fallbacks
"""

from django.conf import settings

DEFAULTS = {
    'DEFAULT_SEED': 42,
    'DEFAULT_STEPS': 200,
    'DEFAULT_PATHS': 10000,
    'INNER_PATHS': 64,
    'BASIS_DEGREE': 3,
    'RIDGE': 1e-8,
    'Z_MAX': 10.0,
    'ODE_STEP': 1e-4,
    'QUAD_TOL': 1e-10,
    'INVERSE_TOL': 1e-8,
    'CONDITION_LIMIT': 1e12,
    'TRUNCATION_LIMIT': 0.01,
    'BLOCK_SIZE': 1024,
    'WORKERS': 4,
    'CHECK_BOUNDS': False,
    'OUTPUT_DIR': 'artifacts',
}


def engine_setting(key):
    if key not in DEFAULTS:
        raise KeyError(f'Unknown engine setting: {key}')
    return getattr(settings, 'EQUILIBRIUM_ENGINE', {}).get(key, DEFAULTS[key])
