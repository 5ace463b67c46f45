"""
Spike-variation test of the equilibrium definition.

For every time t, direction (kappa, eta) and window length eps the test
estimates the difference quotient

    D = E[(R(c + kappa, pi + eta on [t, t + eps); t, X*_t) - R(c*, pi*; t, X*_t)) / eps]

with identical noise for the perturbed and the reference pair, and
extrapolates it to eps = 0 with a weighted linear fit. Small probe spikes
+-a (kappa, eta) split the limit into an antisymmetric part (the first
order coefficient) and a symmetric part (the curvature).
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from common.conf import engine_setting
from common.exceptions import DomainError, GridError, StateError
from common.numerics import weighted_linear_fit
from common.reports import Estimate
from market.ensemble import GRID_TOL
from market.perturbations import PerturbationSpec, StateKappa
from market.rewards import reward_R, terminal_marginal, weighted_terminal_marginal
from market.simulation import simulate_wealth

logger = logging.getLogger(__name__)

DEFAULT_LADDER = (0.2, 0.1, 0.05, 0.025)
MIN_WINDOW_STEPS = 4
PASS_SE = 2.0
SIGNIFICANT_SE = 3.0
FIRST_ORDER_SE = 3.0
ABS_TOL = 1e-12
PROBE_SCALE = 0.01


@dataclass(frozen=True)
class Direction:
    """Spike size (kappa, eta); kappa is a constant or a StateKappa"""
    kappa: object
    eta: tuple

    @property
    def is_zero(self):
        return not isinstance(self.kappa, StateKappa) and self.kappa == 0.0 and not any(self.eta)

    @property
    def key(self):
        if isinstance(self.kappa, StateKappa):
            kappa = ('state', self.kappa.amplitude, tuple(self.kappa.loading))
        else:
            kappa = float(self.kappa)
        return kappa, tuple(float(v) for v in self.eta)

    @property
    def kappa_label(self):
        return self.kappa.amplitude if isinstance(self.kappa, StateKappa) else float(self.kappa)

    @property
    def eta_index(self):
        """Signed 1-based index of the largest eta coordinate, 0 when eta vanishes"""
        eta = np.asarray(self.eta, dtype=float)
        if not np.any(eta):
            return 0
        i = int(np.argmax(np.abs(eta)))
        return int(np.sign(eta[i])) * (i + 1)

    def scaled(self, factor):
        if isinstance(self.kappa, StateKappa):
            kappa = StateKappa(factor * self.kappa.amplitude, self.kappa.loading)
        else:
            kappa = factor * float(self.kappa)
        return Direction(kappa, tuple(factor * float(v) for v in self.eta))

    def negated(self):
        return self.scaled(-1.0)

    def spec(self, t, epsilon, market):
        return PerturbationSpec(t, self.kappa, np.asarray(self.eta, dtype=float), epsilon,
                                market.d, market.d1, market.horizon)

    def to_dict(self):
        kappa = self.kappa.to_dict() if isinstance(self.kappa, StateKappa) else float(self.kappa)
        return {'kappa': kappa, 'eta': [float(v) for v in self.eta]}


def default_bank(d, d1):
    """(+-1, 0) and (0, +-e_i) for every hedgeable coordinate i"""
    bank = [Direction(1.0, (0.0,) * d), Direction(-1.0, (0.0,) * d)]
    for i in range(d1):
        unit = np.zeros(d)
        unit[i] = 1.0
        bank.append(Direction(0.0, tuple(unit)))
        bank.append(Direction(0.0, tuple(-unit)))
    return bank


def default_times(horizon):
    return [0.0, horizon / 4, horizon / 2, 3 * horizon / 4]


@dataclass
class SpikeResult:
    rows: list = field(default_factory=list)
    directions: list = field(default_factory=list)
    passed: bool = True
    failures: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    @property
    def significant(self):
        """Cells whose limit sits more than three standard errors above zero"""
        return [entry for entry in self.directions if entry['significant']]

    def to_dict(self):
        return {
            'passed': self.passed,
            'directions': self.directions,
            'failures': self.failures,
            'notes': self.notes,
        }


def _refined(ensemble, times, eps_ladder, horizon, min_steps):
    for t in times:
        for eps in eps_ladder:
            if t + eps > horizon + GRID_TOL:
                raise GridError('Spike window ends after the horizon', t=t, eps=eps, horizon=horizon)
    points = sorted({float(t) for t in times} | {float(t + eps) for t in times for eps in eps_ladder})
    refined = ensemble.refine(points)
    for t in times:
        for eps in eps_ladder:
            refined = refined.refine_window(t, eps, min_steps=min_steps)
    return refined


def _fit(eps_ladder, estimates):
    """Weighted linear fit in eps; returns (limit, slope, limit_se)"""
    means = [estimate.mean for estimate in estimates]
    ses = [estimate.se for estimate in estimates]
    if all(se == 0 for se in ses) and all(mean == means[0] for mean in means):
        return means[0], 0.0, 0.0
    return weighted_linear_fit(eps_ladder, means, ses)


def spike_variation_test(pair, market, lambda1, lambda2, u1, u2, ensemble, x0, times=None, bank=None,
                         eps_ladder=DEFAULT_LADDER, n_inner=None, workers=None,
                         min_window_steps=MIN_WINDOW_STEPS, probe_scale=PROBE_SCALE):
    """
    Run the spike table for ``pair`` from initial wealth ``x0``.

    Args:
        pair (StrategyPair): feedback pair under test
        market (MarketModel): coefficients
        lambda1, lambda2 (DiscountFunction): running and terminal discounts
        u1, u2 (UtilityFunction): running and terminal utilities
        ensemble (PathEnsemble): outer noise on [0, T]; refined to resolve every window
        x0 (float): initial wealth
        times (list): spike times in [0, T), default {0, T/4, T/2, 3T/4}
        bank (list): Directions, default ``default_bank``
        eps_ladder (list): window lengths, descending
        n_inner (int): inner paths per outer path for t > 0
        workers (int): thread count for the independent cells
        probe_scale (float): amplitude of the small spikes the first-order
            coefficient and the curvature are read from

    Returns:
        SpikeResult: one row per (t, direction, eps) and one summary per (t, direction)
    """
    if not pair.feedback:
        raise StateError('Spike test needs a feedback pair that can be replayed from any state')
    horizon = market.horizon
    times = default_times(horizon) if times is None else [float(t) for t in times]
    bank = default_bank(market.d, market.d1) if bank is None else list(bank)
    eps_ladder = [float(eps) for eps in eps_ladder]
    if len(eps_ladder) < 2 or any(a <= b for a, b in zip(eps_ladder, eps_ladder[1:])):
        raise DomainError('Window ladder must hold at least two strictly descending lengths', ladder=eps_ladder)
    if any(not 0.0 <= t < horizon for t in times):
        raise DomainError('Spike times must lie in [0, T)', times=times)

    refined = _refined(ensemble, times, eps_ladder, horizon, min_window_steps)
    reference = simulate_wealth(market, pair, refined, x0)
    logger.info(f'Spike test on {refined.n_paths} paths, {refined.n_steps} steps, '
                f'{len(times)} times x {len(bank)} directions x {len(eps_ladder)} windows')

    def state(t):
        index = refined.index_of(t)
        return reference.wealth[:, index], refined.W[:, index, :]

    def base_job(t):
        x_t, w_t = state(t)
        return reward_R(lambda1, lambda2, u1, u2, market, pair, t, x_t, refined, w_t=w_t, n_inner=n_inner).per_path

    def cell_job(t, direction, eps):
        if direction.is_zero:
            return None
        x_t, w_t = state(t)
        spec = direction.spec(t, eps, market)
        return reward_R(lambda1, lambda2, u1, u2, market, pair, t, x_t, refined, overlay=spec, w_t=w_t,
                        n_inner=n_inner).per_path

    directions = {}
    for direction in bank:
        for variant in (direction, direction.scaled(probe_scale), direction.scaled(-probe_scale)):
            directions.setdefault(variant.key, variant)

    workers = int(workers or engine_setting('WORKERS'))
    with ThreadPoolExecutor(max_workers=workers) as executor:
        base_futures = {t: executor.submit(base_job, t) for t in times}
        cell_futures = {
            (t, key, eps): executor.submit(cell_job, t, direction, eps)
            for t in times for key, direction in directions.items() for eps in eps_ladder
        }
        base = {t: future.result() for t, future in base_futures.items()}
        cells = {key: future.result() for key, future in cell_futures.items()}

    def quotient(t, key, eps):
        values = cells[(t, key, eps)]
        if values is None:
            return np.zeros_like(base[t])
        return (values - base[t]) / eps

    result = SpikeResult()
    for t in times:
        for direction in bank:
            plus = [quotient(t, direction.key, eps) for eps in eps_ladder]
            probes = (
                [quotient(t, direction.scaled(probe_scale).key, eps) for eps in eps_ladder],
                [quotient(t, direction.scaled(-probe_scale).key, eps) for eps in eps_ladder],
            )
            estimates = [Estimate.from_samples(q) for q in plus]
            for eps, estimate in zip(eps_ladder, estimates):
                result.rows.append({
                    't': t, 'kappa': direction.kappa_label, 'eta_index': direction.eta_index,
                    'eps': eps, 'quotient': estimate.mean, 'se': estimate.se,
                })
            summary = _summarize(t, direction, eps_ladder, estimates, plus, probes, probe_scale)
            if not direction.is_zero and not isinstance(direction.kappa, StateKappa):
                summary.update(_closed_form(summary, direction, eps_ladder, pair, market, lambda2, u1, u2, refined,
                                            t, state, n_inner))
            result.directions.append(summary)
            if not summary['passed']:
                result.passed = False
                result.failures.append({'t': t, 'kappa': direction.kappa_label, 'eta_index': direction.eta_index,
                                        'limit': summary['limit'], 'limit_se': summary['limit_se']})
    result.notes.append(f'PASS rule: extrapolated limit <= {PASS_SE} SE; significant above {SIGNIFICANT_SE} SE')
    level = 'passed' if result.passed else f'failed in {len(result.failures)} cells'
    logger.info(f'Spike test {level}')
    return result


def _summarize(t, direction, eps_ladder, estimates, plus, probes, scale):
    """
    Verdict from the full-size quotients; first-order coefficient and
    curvature per unit direction from the +-scale probes.
    """
    limit, slope, limit_se = _fit(eps_ladder, estimates)
    odd = [Estimate.from_samples((p - m) / (2.0 * scale)) for p, m in zip(*probes)]
    even = [Estimate.from_samples((p + m) / (2.0 * scale ** 2)) for p, m in zip(*probes)]
    first_order, _, first_order_se = _fit(eps_ladder, odd)
    curvature, _, curvature_se = _fit(eps_ladder, even)
    improvement = first_order ** 2 / (4.0 * abs(curvature)) if curvature < 0 else None
    smallest = plus[-1]
    return {
        't': t,
        **direction.to_dict(),
        'eta_index': direction.eta_index,
        'limit': limit,
        'limit_se': limit_se,
        'slope': slope,
        'passed': bool(limit <= PASS_SE * limit_se + ABS_TOL),
        'significant': bool(limit > SIGNIFICANT_SE * limit_se + ABS_TOL),
        'first_order': first_order,
        'first_order_se': first_order_se,
        'first_order_vanishes': bool(abs(first_order) <= FIRST_ORDER_SE * first_order_se + ABS_TOL),
        'curvature': curvature,
        'curvature_se': curvature_se,
        'improvement': improvement,
        'positive_fraction': float(np.mean(smallest > 0)),
    }


def _window_weights(market, eta, t, eps_ladder):
    """Per path eta . theta_t + eta . (W_{t+eps} - W_t) / eps, one column per window"""
    def weights(paths):
        w_t = paths.W[:, 0, :]
        drift = market.market_price(t, w_t) @ eta
        columns = []
        for eps in eps_ladder:
            k = int(np.argmin(np.abs(paths.grid - (t + eps))))
            columns.append(drift + (paths.W[:, k, :] - w_t) @ eta / eps)
        return np.column_stack(columns)

    return weights


def _kappa_first_order(direction, pair, market, lambda2, u1, u2, refined, t, x_t, w_t, n_inner):
    """kappa (U1'(c*_t) - lambda2(t, T) E_t[exp(int_t^T r) U2'(X*_T + E)]) per outer path"""
    consumption, _ = pair.controls(t, x_t, w_t, step=refined.index_of(t))
    marginal = terminal_marginal(u2, market, pair, t, x_t, refined, w_t=w_t, n_inner=n_inner)
    return float(direction.kappa) * (np.asarray(u1.evaluate(consumption, 1))
                                     - lambda2.to_terminal(t) * marginal.per_path)


def _eta_first_order(direction, eps_ladder, pair, market, lambda2, u2, refined, t, x_t, w_t, n_inner):
    """
    lambda2(t, T) E_t[exp(int_t^T r) U2'(X*_T + E) (eta . theta_t + eta . (W_{t+eps} - W_t) / eps)]
    per outer path, one column per window length.
    """
    eta = np.asarray(direction.eta, dtype=float)
    weights = _window_weights(market, eta, t, eps_ladder)
    weighted = weighted_terminal_marginal(u2, market, pair, t, x_t, refined, weights, w_t=w_t, n_inner=n_inner)
    return lambda2.to_terminal(t) * weighted


def _closed_form(summary, direction, eps_ladder, pair, market, lambda2, u1, u2, refined, t, state, n_inner):
    """
    Closed-form first-order coefficient of a spike with constant kappa: the
    consumption term plus the investment term, extrapolated in eps like the
    probe quotients.
    """
    x_t, w_t = state(t)
    samples = np.zeros((refined.n_paths, len(eps_ladder)))
    if float(direction.kappa) != 0.0:
        samples += _kappa_first_order(direction, pair, market, lambda2, u1, u2, refined, t, x_t, w_t,
                                      n_inner)[:, None]
    if any(direction.eta):
        samples += _eta_first_order(direction, eps_ladder, pair, market, lambda2, u2, refined, t, x_t, w_t, n_inner)
    estimates = [Estimate.from_samples(column) for column in samples.T]
    if any(direction.eta):
        closed_form, _, closed_form_se = _fit(eps_ladder, estimates)
    else:
        closed_form, closed_form_se = estimates[0].mean, estimates[0].se
    spread = np.hypot(closed_form_se, summary['first_order_se'])
    return {
        'closed_form': closed_form,
        'closed_form_se': closed_form_se,
        'closed_form_agrees': bool(abs(closed_form - summary['first_order']) <= FIRST_ORDER_SE * spread + ABS_TOL),
    }
