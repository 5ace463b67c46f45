import numpy as np

from common.numerics import uniform_grid
from market.coefficients import ConstantCoefficient, MarketModel
from market.ensemble import PathEnsemble
from preferences.discounting import HyperbolicDiscount


def constant_market(r=0.0, theta=0.0, e=0.0, E=0.0, d=1, d1=1, horizon=1.0):
    theta = np.full(d, theta) if np.ndim(theta) == 0 else np.asarray(theta, dtype=float)
    return MarketModel(
        horizon=horizon, d=d, d1=d1,
        r=ConstantCoefficient(r), theta=ConstantCoefficient(theta),
        income=ConstantCoefficient(e), terminal=ConstantCoefficient(E),
    )


def benchmark_market():
    """r = 0, theta = 0.3, e = 0.05, E = 0.1 on [0, 1] with one hedgeable coordinate"""
    return constant_market(r=0.0, theta=0.3, e=0.05, E=0.1)


def ensemble(n_paths=2000, n_steps=200, d=1, seed=7, horizon=1.0):
    return PathEnsemble.build(seed, uniform_grid(0.0, horizon, n_steps), n_paths, d)


def benchmark_discount():
    """Hyperbolic discount with delta = 1 on [0, 1]"""
    return HyperbolicDiscount(1.0, 1.0)
