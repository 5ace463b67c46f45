import logging

import numpy as np

from common.exceptions import DomainError
from common.numerics import loglog_slope
from common.reports import Estimate
from market.perturbations import PerturbationSpec
from market.simulation import simulate_perturbation

logger = logging.getLogger(__name__)

MIN_LADDER = 4


class MomentProbeService:
    """Scaling probes for the perturbation process xi"""

    @classmethod
    def moment_bound_probe(cls, market, spec, eps_ladder, gammas, ensemble, exp_c=5.0, window_steps=64):
        """
        Estimate E[sup_s |xi_s|^(2 gamma)] for every window length of the
        ladder, fit the log-log slope in epsilon per gamma and estimate
        E[exp(c |xi_T|)].

        Args:
            market (MarketModel): coefficients
            spec (PerturbationSpec): spike direction; its epsilon is replaced by the ladder
            eps_ladder (list): at least four window lengths
            gammas (list): exponents, each >= 1
            ensemble (PathEnsemble): outer noise, refined per window
            exp_c (float): exponential-moment constant
            window_steps (int): minimum steps inside every window, so the
                discrete supremum resolves each level alike

        Returns:
            dict: rows of (gamma, eps, moment, se), slopes, exponential moments and notes
        """
        eps_ladder = sorted((float(e) for e in eps_ladder), reverse=True)
        if len(eps_ladder) < MIN_LADDER:
            raise DomainError(f'Window ladder needs at least {MIN_LADDER} levels', levels=len(eps_ladder))
        if any(g < 1 for g in gammas):
            raise DomainError('Moment exponents must be at least 1', gammas=list(gammas))

        summary = {
            'rows': [],
            'slopes': {},
            'exp_moments': [],
            'exp_c': exp_c,
            'exp_finite': True,
            'notes': [],
            'errors': [],
        }
        sups = {}
        for eps in eps_ladder:
            perturbation = PerturbationSpec(spec.start, spec.kappa, spec.eta, eps, market.d, market.d1, market.horizon)
            refined = ensemble.refine_window(spec.start, eps, min_steps=window_steps)
            paths = simulate_perturbation(market, perturbation, refined)
            sups[eps] = np.abs(paths.xi).max(axis=1)
            with np.errstate(over='ignore'):
                exp_samples = np.exp(exp_c * np.abs(paths.terminal))
            exp_estimate = Estimate.from_samples(exp_samples)
            finite = bool(np.all(np.isfinite(exp_samples)))
            summary['exp_moments'].append({'eps': eps, **exp_estimate.to_dict(), 'finite': finite})
            if not finite:
                summary['exp_finite'] = False
                summary['errors'].append(f'exp({exp_c}|xi_T|) overflowed at eps={eps}')

        for gamma in gammas:
            means = []
            for eps in eps_ladder:
                estimate = Estimate.from_samples(sups[eps] ** (2 * gamma))
                means.append(estimate.mean)
                summary['rows'].append({'gamma': gamma, 'eps': eps, 'moment': estimate.mean, 'se': estimate.se})
            slope = loglog_slope(eps_ladder, means)
            summary['slopes'][gamma] = slope
            if slope is None:
                summary['notes'].append(f'gamma={gamma}: moments vanish, slope fit skipped')
            else:
                logger.info(f'Moment probe gamma={gamma}: log-log slope {slope:.4f}')
        return summary
