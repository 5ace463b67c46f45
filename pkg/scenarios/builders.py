"""
Engine objects from validated scenario blocks
"""

import numpy as np

from common.exceptions import DomainError
from common.numerics import uniform_grid
from equilibrium.spike import Direction, default_bank
from market.coefficients import ConstantCoefficient, MarketModel, StateCoefficient, TableCoefficient
from market.ensemble import PathEnsemble
from market.perturbations import PerturbationSpec
from market.strategies import ConstantStrategy, ScheduleStrategy
from preferences.discounting import (
    DiscountFunction, ExponentialDiscount, HyperbolicDiscount, MixtureDiscount, QuasiExponentialDiscount,
    RefDependentDiscount,
)
from preferences.utilities import ExponentialUtility, FrommImkellerUtility, SoftplusKappa

DISCOUNTS = {
    'exponential': (ExponentialDiscount, ('delta',)),
    'hyperbolic': (HyperbolicDiscount, ('delta',)),
    'mixture': (MixtureDiscount, ('alpha', 'delta', 'gamma_rate')),
    'quasi_exponential': (QuasiExponentialDiscount, ('alpha', 'delta')),
    'ref_dependent': (RefDependentDiscount, ('times', 'rates')),
}


def _required(spec, keys, label):
    missing = [key for key in keys if key not in spec]
    if missing:
        raise DomainError(f'{label} is missing {missing}')
    return [spec[key] for key in keys]


def coefficient(spec):
    kind = spec['kind']
    bound = spec.get('bound')
    if kind == 'constant':
        (value,) = _required(spec, ('value',), 'Constant coefficient')
        return ConstantCoefficient(value, bound=bound)
    if kind == 'table':
        times, values = _required(spec, ('times', 'values'), 'Table coefficient')
        return TableCoefficient(times, values, bound=bound)
    return StateCoefficient(base=spec.get('base', 0.0), amplitude=spec.get('amplitude', 0.0),
                            loading=spec.get('loading'), rate=spec.get('rate', 0.0), bound=bound)


def market(spec):
    return MarketModel(
        horizon=float(spec['T']), d=int(spec['d']), d1=int(spec['d1']),
        r=coefficient(spec['r']), theta=coefficient(spec['theta']),
        income=coefficient(spec['e']), terminal=coefficient(spec['E']),
    )


def kappa(spec):
    """{"builtin": "softplus_shift"} or {"coefficients": [a0, a1, a2, b]}, the form SoftplusKappa.to_dict writes"""
    if 'builtin' in spec:
        if spec['builtin'] != 'softplus_shift':
            raise DomainError('Unknown built-in kappa', builtin=spec['builtin'])
        return SoftplusKappa.softplus_shift()
    return SoftplusKappa(*spec['coefficients'])


def utility(spec):
    if spec['kind'] == 'exponential':
        return ExponentialUtility(spec['gamma'])
    curvature = kappa(spec['kappa']) if 'kappa' in spec else SoftplusKappa.softplus_shift()
    options = {key: spec[key] for key in ('x_min', 'x_max', 'n_nodes') if key in spec}
    return FrommImkellerUtility(curvature, **options)


def discount(spec, horizon, lambda2=None):
    if spec['kind'] == 'induced':
        if lambda2 is None:
            raise DomainError('The induced discount needs lambda2')
        return DiscountFunction.induced(lambda2)
    cls, keys = DISCOUNTS[spec['kind']]
    return cls(float(horizon), *_required(spec, keys, f'{spec["kind"]} discount'))


def ensemble(numerics, horizon, d):
    grid = uniform_grid(0.0, float(horizon), numerics['n_steps'])
    return PathEnsemble.build(numerics['seed'], grid, numerics['n_paths'], d)


def _direction_eta(direction, d):
    return tuple(direction['eta']) if direction['eta'] else (0.0,) * d


def bank(verify, d, d1):
    if 'bank' not in verify:
        return default_bank(d, d1)
    return [Direction(direction['kappa'], _direction_eta(direction, d)) for direction in verify['bank']]


def moment_direction(verify, market_model):
    """Spike the moment probe follows; (1, e_1) at t = 0 unless configured"""
    direction = verify.get('moment_direction')
    if direction is None:
        eta = np.zeros(market_model.d)
        eta[0] = 1.0
        t, kappa = 0.0, 1.0
    else:
        eta = np.asarray(_direction_eta(direction, market_model.d), dtype=float)
        t, kappa = direction['t'], direction['kappa']
    return PerturbationSpec(t, kappa, eta, verify['eps_ladder'][0], market_model.d, market_model.d1,
                            market_model.horizon)


def strategy(spec, d, d1):
    if spec['kind'] == 'constant':
        return ConstantStrategy(spec['c'], spec['pi'], d, d1)
    times = np.asarray(spec['times'], dtype=float)
    consumption = np.asarray(spec['consumption'], dtype=float)
    investment = np.asarray(spec['investment'], dtype=float)
    if consumption.shape != times.shape or investment.shape != (times.size, d1):
        raise DomainError('Strategy table needs one consumption value and d1 investment values per time')
    return ScheduleStrategy(
        lambda t: np.interp(t, times, consumption),
        lambda t: np.array([np.interp(t, times, investment[:, i]) for i in range(d1)]),
        d, d1, label='table',
    )
