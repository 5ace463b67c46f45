import logging

import numpy as np

from common.conf import engine_setting
from common.exceptions import DomainError, EngineError
from common.reports import ValidationReport

logger = logging.getLogger(__name__)

# refinement must shrink the modulus of continuity by at least this factor
MODULUS_CONTRACTION = 0.9
MODULUS_FLOOR = 1e-12
MAX_LISTED = 10


class PreferenceValidationService:
    """Empirical checks of the structural conditions on discounts and utilities"""

    @classmethod
    def validate_lambda(cls, discount, grid_n):
        """
        Check lambda(t, t) = 1, positivity and a modulus-of-continuity probe on
        a grid_n x grid_n sample of the triangle.

        Args:
            discount (DiscountFunction): discount to check
            grid_n (int): number of grid points per axis, at least 2

        Returns:
            ValidationReport: violations carry the offending (t, s)
        """
        if grid_n < 2:
            raise DomainError('grid_n must be at least 2', grid_n=grid_n)
        horizon = discount.horizon
        report = ValidationReport(subject=f'discount:{discount.kind}')
        grid = np.linspace(0.0, horizon, grid_n)

        diagonal = np.asarray(discount(grid, grid), dtype=float)
        off = np.flatnonzero(diagonal != 1.0)
        for index in off[:MAX_LISTED]:
            report.flag('diagonal', 'lambda(t, t) differs from 1',
                        t=float(grid[index]), s=float(grid[index]), value=float(diagonal[index]))
        if off.size > MAX_LISTED:
            report.notes.append(f'{off.size - MAX_LISTED} further diagonal violations omitted')

        surface = cls._triangle(discount, grid)
        bad = np.argwhere(~(surface > 0) & ~np.isnan(surface) | np.isinf(surface))
        for i, j in bad[:MAX_LISTED]:
            report.flag('positivity', 'lambda(t, s) not strictly positive and finite',
                        t=float(grid[i]), s=float(grid[j]), value=float(surface[i, j]))

        levels = sorted({max(2, grid_n // 4), max(2, grid_n // 2), grid_n})
        modulus = {}
        for n in levels:
            level_grid = np.linspace(0.0, horizon, n)
            modulus[n] = cls._modulus(cls._triangle(discount, level_grid))
        report.constants['modulus'] = modulus
        report.constants['lambda_0_T'] = float(discount(0.0, horizon))
        coarse, fine = modulus[levels[0]], modulus[levels[-1]]
        if len(levels) < 2:
            report.notes.append('grid too small for a refinement ladder; continuity probe skipped')
        elif not np.isfinite(fine) or (coarse > MODULUS_FLOOR and fine > MODULUS_CONTRACTION * coarse):
            report.flag('continuity', 'modulus of continuity does not shrink under refinement',
                        coarse=coarse, fine=fine)
        report.notes.append(
            f'continuity ladder {levels} with contraction factor {MODULUS_CONTRACTION} is an implementation choice'
        )

        logger.info(f'Discount {discount.kind} validated on {grid_n} points: passed={report.passed}')
        return report

    @staticmethod
    def _triangle(discount, grid):
        t, s = np.meshgrid(grid, grid, indexing='ij')
        upper = s >= t
        surface = np.full(t.shape, np.nan)
        surface[upper] = discount(t[upper], s[upper])
        return surface

    @staticmethod
    def _modulus(surface):
        steps = [np.abs(np.diff(surface, axis=0)), np.abs(np.diff(surface, axis=1))]
        finite = [step[~np.isnan(step)] for step in steps]
        return float(max((step.max() for step in finite if step.size), default=0.0))

    @classmethod
    def utility_class_check(cls, utility, interval, grid_n):
        """
        Sample U', U'' on a grid of the interval: sign conditions, a bound on
        |U''/U'|, the exponential ratio bound U'(x)/U'(y) <= exp(K (y - x)),
        a decay-rate probe for the Inada limits and the inverse round trip.
        """
        low, high = (float(v) for v in interval)
        if not (np.isfinite(low) and np.isfinite(high) and low < high):
            raise DomainError('Interval must be finite with low < high', low=low, high=high)
        if grid_n < 2:
            raise DomainError('grid_n must be at least 2', grid_n=grid_n)
        report = ValidationReport(subject=f'utility:{utility.kind}')
        x = np.linspace(low, high, grid_n)
        try:
            first = np.asarray(utility.evaluate(x, 1))
            second = np.asarray(utility.evaluate(x, 2))
        except EngineError as exc:
            report.flag('evaluation', str(exc))
            return report

        for index in np.flatnonzero(~(first > 0))[:MAX_LISTED]:
            report.flag('increasing', "U' not positive", x=float(x[index]), value=float(first[index]))
        for index in np.flatnonzero(~(second < 0))[:MAX_LISTED]:
            report.flag('concavity', "U'' not negative", x=float(x[index]), value=float(second[index]))

        with np.errstate(divide='ignore', invalid='ignore'):
            ratio = np.abs(second / first)
            log_marginal = np.log(first)
        ratio_bound = float(np.max(ratio))
        report.constants['ratio_bound'] = ratio_bound
        if not np.isfinite(ratio_bound):
            report.flag('ratio', "|U''/U'| unbounded on the grid")

        # K = sup over x < y of (log U'(x) - log U'(y)) / (y - x)
        gaps = np.subtract.outer(x, x)
        drops = np.subtract.outer(log_marginal, log_marginal)
        upper = gaps < 0
        with np.errstate(divide='ignore', invalid='ignore'):
            growth = float(np.max(drops[upper] / -gaps[upper]))
        report.constants['K'] = growth
        if not np.isfinite(growth):
            report.flag('ratio', 'exponential ratio bound K is not finite')

        decay = float(np.min(ratio))
        report.constants['decay_rate'] = decay
        if not decay > 0:
            report.flag('inada', "U' stops decaying; limits at +/- infinity not supported by the sample",
                        decay_rate=decay)

        kappa = getattr(utility, 'kappa', None)
        if kappa is not None:
            slopes = kappa.slope(x)
            report.constants['kappa_slope'] = [float(slopes.min()), float(slopes.max())]
            if not slopes.min() > 0:
                report.flag('kappa', 'kappa slope not bounded away from zero')
            if np.any(kappa.curvature(x) < 0):
                report.flag('kappa', 'kappa not convex')

        cls._check_round_trip(utility, x, first, report)
        report.constants['growth_conditions_hold'] = report.passed
        logger.info(f'Utility {utility.kind} checked on [{low}, {high}]: passed={report.passed}')
        return report

    @staticmethod
    def _check_round_trip(utility, x, first, report):
        tolerance = engine_setting('INVERSE_TOL')
        try:
            recovered = np.asarray(utility.marginal_inverse(first))
        except NotImplementedError:
            report.notes.append('marginal inverse not available; round trip skipped')
            return
        except EngineError as exc:
            report.flag('round_trip', str(exc))
            return
        error = float(np.max(np.abs(recovered - x)))
        report.constants['round_trip_error'] = error
        if not error <= tolerance:
            report.flag('round_trip', 'marginal inverse does not recover x', error=error, tolerance=tolerance)
