"""
Admissibility probes for a pair:

* H0  integrability of int |c| and int |pi|^2, by midpoint refinement;
* H1  finiteness of E[int U1'(c)^p ds + U2'(X_T + E)^p];
* H2  uniform integrability, either by the growth-condition shortcut on the
      observed range or by tail masses of M2(X_T + E; |xi_T|)^q and
      M1(c; |kappa|)^q over the window ladder, q = p / (p - 1).
"""

import logging

import numpy as np

from common.exceptions import DomainError, EngineError
from common.reports import Estimate, ValidationReport
from equilibrium.spike import DEFAULT_LADDER
from market.perturbations import PerturbationSpec
from market.services import MomentProbeService
from market.simulation import simulate_perturbation, simulate_wealth
from preferences.services import PreferenceValidationService

logger = logging.getLogger(__name__)

PROBE_PATHS = 2000
DIVERGENCE_RATIO = 0.75
DIVERGENCE_TOL = 1e-9
TAIL_QUANTILE = 0.99
TAIL_SE = 2.0
CHECK_GRID = 201


def _integrals(market, pair, ensemble, x0):
    paths = simulate_wealth(market, pair, ensemble, x0)
    dt = ensemble.steps
    consumption = np.abs(paths.consumption) @ dt
    investment = np.sum(paths.investment ** 2, axis=2) @ dt
    return float(consumption.mean()), float(investment.mean())


def _midpoints(ensemble):
    grid = ensemble.grid
    return ensemble.refine((grid[:-1] + grid[1:]) / 2.0)


def _divergence_check(pair, market, ensemble, x0, report):
    if not pair.feedback:
        report.notes.append('H0: stored pair cannot be replayed on a refined grid; check skipped')
        return
    base = ensemble.subset(min(ensemble.n_paths, PROBE_PATHS))
    x0 = np.broadcast_to(np.asarray(x0, dtype=float), (ensemble.n_paths,))[:base.n_paths]
    levels = [base]
    for _ in range(2):
        levels.append(_midpoints(levels[-1]))
    values = np.array([_integrals(market, pair, level, x0) for level in levels])
    report.constants['H0_integrals'] = values.tolist()
    for column, label in enumerate(('int |c|', 'int |pi|^2')):
        first = abs(values[1, column] - values[0, column])
        second = abs(values[2, column] - values[1, column])
        scale = DIVERGENCE_TOL * (1.0 + abs(values[2, column]))
        if first > scale and second >= DIVERGENCE_RATIO * first:
            report.flag('H0', f'{label} does not settle under grid refinement',
                        increments=[first, second])


def _moment(samples, label, report):
    samples = np.asarray(samples, dtype=float)
    estimate = Estimate.from_samples(samples)
    report.constants[f'H1_{label}'] = estimate.to_dict()
    if not (np.all(np.isfinite(samples)) and np.isfinite(estimate.mean)):
        report.flag('H1', f'moment of {label} is not finite', term=label)


def _shortcut(u1, u2, paths, terminal, report):
    checks = {}
    for label, utility, values in (('u1', u1, paths.consumption), ('u2', u2, terminal)):
        low, high = float(np.min(values)), float(np.max(values))
        pad = 1e-6 * max(1.0, high - low)
        check = PreferenceValidationService.utility_class_check(utility, (low - pad, high + pad), CHECK_GRID)
        checks[label] = check.constants.get('growth_conditions_hold', False)
    report.constants['H2_shortcut'] = checks
    return all(checks.values())


def _tail_masses(samples_by_eps):
    """Mass beyond the top quantile of the largest window, per window"""
    largest = samples_by_eps[0][1]
    threshold = float(np.quantile(largest, TAIL_QUANTILE))
    rows = []
    for eps, samples in samples_by_eps:
        estimate = Estimate.from_samples(np.where(samples > threshold, samples, 0.0))
        rows.append({'eps': eps, 'tail': estimate.mean, 'se': estimate.se})
    return threshold, rows


def _non_increasing(rows):
    for wider, narrower in zip(rows, rows[1:]):
        if narrower['tail'] > wider['tail'] + TAIL_SE * np.hypot(wider['se'], narrower['se']):
            return False
    return True


def _tail_probe(market, u1, u2, p, ensemble, paths, terminal, spec, eps_ladder, report):
    q = p / (p - 1.0)
    terminal_samples, consumption_samples = [], []
    k = ensemble.index_of(spec.start)
    for eps in eps_ladder:
        perturbation = spec.with_epsilon(eps)
        xi = simulate_perturbation(market, perturbation, ensemble.refine_window(spec.start, eps)).terminal
        with np.errstate(over='ignore'):
            terminal_samples.append((eps, np.asarray(u2.m_bound(terminal, np.abs(xi))) ** q))
        stop = max(int(np.searchsorted(ensemble.grid, spec.start + eps - 1e-12)), k + 1)
        window = paths.consumption[:, k:stop]
        kappa = np.abs(perturbation.kappa_values(ensemble.W[:, k, :], ensemble.n_paths))
        with np.errstate(over='ignore'):
            consumption_samples.append((eps, np.asarray(u1.m_bound(window, kappa[:, None])).max(axis=1) ** q))

    for label, samples in (('M2', terminal_samples), ('M1', consumption_samples)):
        if not all(np.all(np.isfinite(values)) for _, values in samples):
            report.flag('H2', f'{label} tail probe overflowed', term=label)
            continue
        threshold, rows = _tail_masses(samples)
        report.constants[f'H2_{label}_tail'] = {'threshold': threshold, 'q': q, 'rows': rows}
        if not _non_increasing(rows):
            report.flag('H2', f'{label} tail mass grows as the window shrinks', term=label)


def default_direction(market, t=0.0, eps=DEFAULT_LADDER[0]):
    eta = np.zeros(market.d)
    if market.d1:
        eta[0] = 1.0
    return PerturbationSpec(t, 1.0, eta, eps, market.d, market.d1, market.horizon)


def admissibility_probe(pair, market, u1, u2, p, ensemble, x0, eps_ladder=DEFAULT_LADDER, use_shortcut=True,
                        exp_c=5.0, direction=None):
    """
    Probe H0, H1 and H2 for ``pair`` started at ``x0``.

    The exponential moment E[exp(exp_c |xi_T|)] of the perturbation process
    is probed over the same ladder and must stay finite.
    """
    if not p > 1:
        raise DomainError('Moment exponent p must exceed 1', p=p)
    eps_ladder = sorted((float(e) for e in eps_ladder), reverse=True)
    report = ValidationReport(subject='admissibility')
    report.constants['p'] = float(p)

    _divergence_check(pair, market, ensemble, x0, report)

    paths = simulate_wealth(market, pair, ensemble, x0)
    terminal = paths.terminal + market.terminal_payment(paths.W[:, -1, :])
    with np.errstate(over='ignore'):
        consumption_term = np.asarray(u1.evaluate(paths.consumption, 1)) ** p @ ensemble.steps
        terminal_term = np.asarray(u2.evaluate(terminal, 1)) ** p
    _moment(consumption_term, 'consumption', report)
    _moment(terminal_term, 'terminal', report)

    spec = direction or default_direction(market, eps=eps_ladder[0])
    if use_shortcut and _shortcut(u1, u2, paths, terminal, report):
        report.constants['H2_route'] = 'shortcut'
    else:
        report.constants['H2_route'] = 'probe'
        try:
            _tail_probe(market, u1, u2, p, ensemble, paths, terminal, spec, eps_ladder, report)
        except EngineError as exc:
            report.flag('H2', str(exc))

    probe = MomentProbeService.moment_bound_probe(
        market, spec, eps_ladder, [1], ensemble.subset(min(ensemble.n_paths, PROBE_PATHS)), exp_c=exp_c)
    report.constants['exp_moments'] = probe['exp_moments']
    if not probe['exp_finite']:
        report.flag('exp_moment', f'exp({exp_c} |xi_T|) is not finite', errors=probe['errors'])

    logger.info(f'Admissibility p={p}: route {report.constants["H2_route"]}, passed={report.passed}')
    return report
