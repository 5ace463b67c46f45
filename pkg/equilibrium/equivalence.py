"""
Equivalence with the time-consistent problem

    maximize  E[ int_0^T U1(c_s) / lambda2(s, T) ds + U2(X_T + E) ]

checked on a bank of bounded candidates c + a(s), pi + b(s) built from
smooth open-loop profiles around the pair, all on the pair's own paths.
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from common.exceptions import NumericError
from common.random_streams import substream
from common.reports import Estimate
from market.perturbations import SmoothProfile
from market.rewards import path_rewards, time_consistent_weights, time_inconsistent_weights
from market.simulation import simulate_wealth

logger = logging.getLogger(__name__)

GAP_SE = 2.0
ABS_TOL = 1e-12
IDENTITY_TOL = 1e-12
CONCAVITY_TOL = 1e-9


@dataclass
class EquivalenceResult:
    rows: list = field(default_factory=list)
    skipped: list = field(default_factory=list)
    passed: bool = True
    first_order_passed: bool = True
    constants: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)

    @property
    def failures(self):
        return [row for row in self.rows if not row['passed']]

    def to_dict(self):
        return {
            'passed': self.passed,
            'first_order_passed': self.first_order_passed,
            'rows': self.rows,
            'skipped': self.skipped,
            'constants': self.constants,
            'notes': self.notes,
        }


def candidate_bank(seed, n_candidates, market, n_modes=3, scale=0.2):
    """Profiles drawn from the candidate substream; candidate j depends on (seed, j) only"""
    return [
        SmoothProfile.draw(substream(seed, 'candidates', j), n_modes, scale, market.d, market.d1, market.horizon)
        for j in range(n_candidates)
    ]


def _first_order(u1, u2, running, reference, perturbed, reference_terminal, perturbed_terminal):
    """Per-path linearization of the time-consistent reward around the reference pair"""
    consumption = np.asarray(u1.evaluate(reference.consumption, 1)) * (perturbed.consumption - reference.consumption)
    terminal = np.asarray(u2.evaluate(reference_terminal, 1)) * (perturbed_terminal - reference_terminal)
    return consumption @ running + terminal


def _exponential_weights(lambda2, grid):
    """Weights of R(.; 0, x) with lambda1 = lambda2 and the factor 1 / lambda2(0, T)"""
    running, terminal_weight = time_inconsistent_weights(lambda2, lambda2, float(grid[0]), grid)
    return running, terminal_weight, 1.0 / float(lambda2(grid[0], lambda2.horizon))


def equivalence_gap(pair, market, lambda2, u1, u2, n_candidates, ensemble, x0, seed, candidates=None,
                    n_modes=3, scale=0.2):
    """
    Paired estimates of C(candidate) - C(pair) for every candidate.

    A candidate passes when its mean gap is at most two standard errors
    above zero. Next to each gap the linearized gain (the one-sided
    concavity bound) is reported; for an equilibrium it may not be
    significantly positive, and the gap may not exceed it on any path.

    With an exponential lambda2 the engine also evaluates R(.; 0, x),
    checks C = R / lambda2(0, T) path by path and compares both rankings.
    """
    result = EquivalenceResult()
    if candidates is None:
        candidates = candidate_bank(seed, n_candidates, market, n_modes=n_modes, scale=scale)
    grid = ensemble.grid
    running, terminal_weight = time_consistent_weights(lambda2, grid)
    payment = market.terminal_payment(ensemble.W[:, -1, :])

    reference = simulate_wealth(market, pair, ensemble, x0)
    reference_terminal = reference.terminal + payment
    reference_values = path_rewards(u1, u2, running, terminal_weight, reference.consumption, reference_terminal)
    result.constants['reference'] = Estimate.from_samples(reference_values).to_dict()

    exponential = lambda2.kind == 'exponential'
    if exponential:
        running_R, terminal_R, factor = _exponential_weights(lambda2, grid)
        reference_R = path_rewards(u1, u2, running_R, terminal_R, reference.consumption, reference_terminal)
        identity = float(np.max(np.abs(reference_values - factor * reference_R)))
        result.constants['identity_gap'] = identity
        result.constants['identity_passed'] = bool(
            identity <= IDENTITY_TOL * max(1.0, float(np.max(np.abs(reference_values)))))

    for j, profile in enumerate(candidates):
        try:
            perturbed = simulate_wealth(market, pair, ensemble, x0, overlay=profile)
            perturbed_terminal = perturbed.terminal + payment
            values = path_rewards(u1, u2, running, terminal_weight, perturbed.consumption, perturbed_terminal)
            linear = _first_order(u1, u2, running, reference, perturbed, reference_terminal, perturbed_terminal)
        except NumericError as exc:
            logger.warning(f'Candidate {j} skipped: {exc}')
            result.skipped.append({'candidate': j, 'reason': str(exc)})
            continue
        if not np.all(np.isfinite(linear)):
            logger.warning(f'Candidate {j} skipped: non-finite marginal utility')
            result.skipped.append({'candidate': j, 'reason': 'non-finite marginal utility'})
            continue

        gap = values - reference_values
        gap_estimate = Estimate.from_samples(gap)
        linear_estimate = Estimate.from_samples(linear)
        slack = CONCAVITY_TOL * (1.0 + np.abs(linear))
        row = {
            'candidate': j,
            'bound': profile.bound,
            'gap': gap_estimate.mean,
            'gap_se': gap_estimate.se,
            'passed': bool(gap_estimate.mean <= GAP_SE * gap_estimate.se + ABS_TOL),
            'first_order': linear_estimate.mean,
            'first_order_se': linear_estimate.se,
            'first_order_passed': bool(linear_estimate.mean <= GAP_SE * linear_estimate.se + ABS_TOL),
            'concavity_violations': int(np.count_nonzero(gap > linear + slack)),
        }
        if exponential:
            values_R = path_rewards(u1, u2, running_R, terminal_R, perturbed.consumption, perturbed_terminal)
            gap_R = Estimate.from_samples(values_R - reference_R)
            row['gap_R'] = gap_R.mean
            row['gap_R_se'] = gap_R.se
            row['passed_R'] = bool(gap_R.mean <= GAP_SE * gap_R.se + ABS_TOL)
        result.rows.append(row)

    result.passed = all(row['passed'] for row in result.rows)
    result.first_order_passed = all(row['first_order_passed'] for row in result.rows)
    result.constants['n_candidates'] = len(candidates)
    result.constants['n_evaluated'] = len(result.rows)
    result.constants['max_gap_se'] = max(
        (row['gap'] / row['gap_se'] for row in result.rows if row['gap_se'] > 0), default=0.0)
    if exponential and result.rows:
        by_C = sorted(range(len(result.rows)), key=lambda i: result.rows[i]['gap'])
        by_R = sorted(range(len(result.rows)), key=lambda i: result.rows[i]['gap_R'])
        result.constants['rankings_agree'] = by_C == by_R
        result.constants['verdicts_agree'] = all(row['passed'] == row['passed_R'] for row in result.rows)
    if result.skipped:
        result.notes.append(f'{len(result.skipped)} candidate(s) skipped')
    if not result.rows:
        result.notes.append('no candidate evaluated')

    logger.info(f'Equivalence: {len(result.rows)} candidates, passed={result.passed}, '
                f'first order passed={result.first_order_passed}')
    return result
