import logging

import numpy as np

from common.exceptions import DomainError
from common.reports import Estimate
from fbsde.solvers import solve_tilde_bsde_deterministic, solve_tilde_bsde_lsmc
from fbsde.transforms import simulate_forward_tilde

logger = logging.getLogger(__name__)

DEFAULT_POWERS = (1.5, 2.0, 4.0)


class FbsdeService:
    """Exponential-utility pipeline: backward solve, forward simulation, untransform"""

    @classmethod
    def solve(cls, market, lambda2, gamma1, gamma2, x, ensemble, strict=False, **lsmc_options):
        """
        Solve the transformed system on the ensemble's grid and return the
        solution with Xt and the untransformed (X, Y, Z) on every path.
        Deterministic markets go through the backward ODE, the rest through LSMC.
        """
        if market.is_deterministic:
            solution = solve_tilde_bsde_deterministic(market, lambda2, gamma1, gamma2, ensemble.grid,
                                                      ode_step=lsmc_options.get('ode_step'))
        else:
            options = {key: value for key, value in lsmc_options.items() if key != 'ode_step'}
            solution = solve_tilde_bsde_lsmc(market, lambda2, gamma1, gamma2, ensemble, strict=strict, **options)
        solution = simulate_forward_tilde(market, solution, x, ensemble)
        logger.info(f'Solved FBSDE ({solution.provenance}): X+Y at 0 = {solution.X[0, 0] + solution.Y[0, 0]:.10g}')
        return solution

    @classmethod
    def p_moment_sweep(cls, solution, u2, powers=DEFAULT_POWERS):
        """
        E[sup_s U2'(X_s + Y_s)^p] for every p, as an empirical integrability
        diagnostic; overflow makes an entry non-finite instead of raising.
        """
        solution.require_forward()
        if any(p <= 1 for p in powers):
            raise DomainError('Moment powers must exceed 1', powers=list(powers))
        level = np.asarray(u2.evaluate(solution.X + solution.Y, 1))
        running_sup = level.max(axis=1)
        rows = []
        for p in powers:
            with np.errstate(over='ignore'):
                samples = running_sup ** p
            estimate = Estimate.from_samples(samples)
            finite = bool(np.all(np.isfinite(samples)))
            rows.append({'p': float(p), **estimate.to_dict(), 'finite': finite})
            if not finite:
                logger.warning(f'p-moment sweep overflowed at p={p}')
        return rows
