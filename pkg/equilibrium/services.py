import logging

import numpy as np

from common.exceptions import StateError
from common.reports import Estimate
from equilibrium.admissibility import admissibility_probe
from equilibrium.duality import duality_martingale_check, se_scaling
from equilibrium.equivalence import equivalence_gap
from equilibrium.extraction import extract_equilibrium, first_order_residuals
from equilibrium.reports import EquilibriumReport
from equilibrium.spike import DEFAULT_LADDER, spike_variation_test
from market.simulation import simulate_wealth

logger = logging.getLogger(__name__)

RESIDUAL_TOL = 1e-10
UNIQUENESS_SE = 3.0


class EquilibriumVerificationService:
    """Runs every verification stage for a pair against a solved FBSDE"""

    @classmethod
    def extract(cls, solution, u1, u2, lambda2, market):
        return extract_equilibrium(solution, u1, u2, lambda2, market)

    @classmethod
    def verify(cls, pair, solution, market, lambda1, lambda2, u1, u2, ensemble, x0, seed, times=None, bank=None,
               eps_ladder=DEFAULT_LADDER, p=2.0, n_candidates=100, n_inner=None, workers=None,
               tolerance=RESIDUAL_TOL, exp_c=5.0, stages=None):
        """
        First-order residuals, spike variation, duality, equivalence and
        admissibility for ``pair``; ``stages`` restricts the run to a subset
        of those names.

        Returns:
            EquilibriumReport: one section per stage and the combined verdict
        """
        if solution is None or not solution.has_forward:
            raise StateError('Verification needs a solution with forward paths')
        stages = set(stages or ('first_order', 'spike', 'duality', 'equivalence', 'admissibility'))
        report = EquilibriumReport(pair=pair.to_dict(), tolerance=tolerance)
        if not pair.feedback and 'spike' in stages:
            stages.discard('spike')
            report.notes.append('spike: stored pair cannot be replayed from branched states; stage skipped')

        if 'first_order' in stages:
            report.first_order = first_order_residuals(pair, solution, u1, u2, lambda2, market)
        if 'spike' in stages:
            report.spike = spike_variation_test(pair, market, lambda1, lambda2, u1, u2, ensemble, x0, times=times,
                                                bank=bank, eps_ladder=eps_ladder, n_inner=n_inner, workers=workers)
        if 'duality' in stages:
            report.duality = duality_martingale_check(solution, u2, market)
            report.se_scaling = se_scaling(solution, u2, market)
        if 'equivalence' in stages:
            report.equivalence = equivalence_gap(pair, market, lambda2, u1, u2, n_candidates, ensemble, x0, seed)
        if 'admissibility' in stages:
            report.admissibility = admissibility_probe(pair, market, u1, u2, p, ensemble, x0,
                                                       eps_ladder=eps_ladder, exp_c=exp_c)

        if report.passed:
            logger.info(f'Verification passed for {pair.kind} pair')
        else:
            logger.warning(f'Verification failed for {pair.kind} pair: {report.failed_stages}')
        return report

    @classmethod
    def compare_pairs(cls, first, second, market, ensemble, x0, tolerance=RESIDUAL_TOL):
        """
        Controls of two independently solved pairs along the wealth paths of
        the first; they agree when the mean absolute differences of c and pi
        stay within ``tolerance`` plus three standard errors.
        """
        paths = simulate_wealth(market, first, ensemble, x0)
        c_diff = np.empty_like(paths.consumption)
        pi_diff = np.empty_like(paths.consumption)
        for k in range(ensemble.n_steps):
            c, pi = second.controls(ensemble.grid[k], paths.wealth[:, k], paths.W[:, k, :], step=k)
            c_diff[:, k] = np.abs(c - paths.consumption[:, k])
            pi_diff[:, k] = np.linalg.norm(pi - paths.investment[:, k, :], axis=1)
        c_estimate = Estimate.from_samples(c_diff.mean(axis=1))
        pi_estimate = Estimate.from_samples(pi_diff.mean(axis=1))
        passed = (c_estimate.mean <= tolerance + UNIQUENESS_SE * c_estimate.se
                  and pi_estimate.mean <= tolerance + UNIQUENESS_SE * pi_estimate.se)
        logger.info(f'Pair comparison: |dc| {c_estimate.mean:.3e}, |dpi| {pi_estimate.mean:.3e}')
        return {
            'consumption': c_estimate.to_dict(),
            'investment': pi_estimate.to_dict(),
            'c_max': float(c_diff.max()),
            'pi_max': float(pi_diff.max()),
            'passed': bool(passed),
        }
