"""
Solution container of the transformed (decoupled) and original (coupled)
FBSDE systems.

Deterministic solutions store Ytilde as a function of time only and Ztilde
as zero; LSMC solutions store per-path values on the solving ensemble plus
the per-step regression coefficients, so Ytilde and Ztilde can be evaluated
at any Brownian state reached by a later simulation.
"""

import json
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import pandas as pd

from common.exceptions import DomainError, StateError
from fbsde.hschedule import HSchedule
from market.ensemble import PathEnsemble

logger = logging.getLogger(__name__)

DETERMINISTIC = 'deterministic-ODE'
LSMC = 'LSMC'
SIDECAR_FIELDS = ('provenance', 'gamma1', 'gamma2', 'd', 'd1', 'n_steps', 'x0', 'h')


def path_columns(d, d1):
    """Columns of the per-path solution table, one row per (path, grid time)"""
    return (
        ['path', 't', 'Xtilde', 'Ytilde', 'X', 'Y']
        + [f'Z_{i + 1}' for i in range(d)]
        + [f'Ztilde_{i + 1}' for i in range(d)]
        + [f'theta_H_{i + 1}' for i in range(d1)]
    )


@dataclass
class RegressionStore:
    """Per-step least-squares coefficients on standardized W_{t_k}"""
    featurizer: object
    scales: np.ndarray
    y_coef: np.ndarray
    z_coef: np.ndarray
    terminal: object

    def _basis(self, k, w):
        return self.featurizer.transform(np.asarray(w, dtype=float) / self.scales[k])

    def y_at(self, k, w):
        if k == self.scales.shape[0]:
            return np.asarray(self.terminal(w), dtype=float)
        return self._basis(k, w) @ self.y_coef[k]

    def z_at(self, k, w):
        k = min(k, self.z_coef.shape[0] - 1)
        return self._basis(k, w) @ self.z_coef[k]


@dataclass
class FbsdeSolution:
    grid: np.ndarray
    schedule: object
    provenance: str
    gamma1: float
    gamma2: float
    d: int
    d1: int
    ytilde: np.ndarray
    ztilde: np.ndarray
    regression: RegressionStore = None
    lambda2: object = None
    x0: float = None
    ensemble: object = None
    theta_h: np.ndarray = None
    xtilde: np.ndarray = None
    X: np.ndarray = None
    Y: np.ndarray = None
    Z: np.ndarray = None
    diagnostics: dict = field(default_factory=dict)

    @property
    def is_deterministic(self):
        return self.provenance == DETERMINISTIC

    @property
    def has_forward(self):
        return self.X is not None

    @property
    def n_steps(self):
        return self.grid.size - 1

    def _step(self, t):
        k = int(np.searchsorted(self.grid, t + 1e-12, side='right')) - 1
        return min(max(k, 0), self.n_steps)

    def ytilde_at(self, t, w):
        w = np.asarray(w, dtype=float)
        if self.is_deterministic:
            return np.full(w.shape[0], float(np.interp(t, self.grid, self.ytilde)))
        if self.regression is None:
            raise StateError('LSMC solution carries no regression coefficients')
        return self.regression.y_at(self._step(t), w)

    def ztilde_at(self, t, w):
        w = np.asarray(w, dtype=float)
        if self.is_deterministic:
            row = np.array([np.interp(t, self.grid, self.ztilde[:, i]) for i in range(self.d)])
            return np.tile(row, (w.shape[0], 1))
        if self.regression is None:
            raise StateError('LSMC solution carries no regression coefficients')
        return self.regression.z_at(self._step(t), w)

    def ytilde_paths(self, n_paths):
        """Ytilde as an (n_paths, n_steps + 1) array"""
        if self.ytilde.ndim == 1:
            return np.broadcast_to(self.ytilde, (n_paths, self.grid.size))
        return self.ytilde

    def ztilde_paths(self, n_paths):
        if self.ztilde.ndim == 2:
            return np.broadcast_to(self.ztilde, (n_paths, self.grid.size, self.d))
        return self.ztilde

    def with_paths(self, **arrays):
        return replace(self, **arrays)

    def require_forward(self):
        if not self.has_forward:
            raise StateError('Solution has no forward paths; run the forward simulation first')

    def sidecar(self):
        return {
            'provenance': self.provenance,
            'gamma1': self.gamma1,
            'gamma2': self.gamma2,
            'd': self.d,
            'd1': self.d1,
            'n_steps': self.n_steps,
            'x0': self.x0,
            'h': self.schedule.to_dict(),
            'diagnostics': self.diagnostics,
        }

    def path_table(self):
        """Per-path forward and backward values in the ``path_columns`` layout"""
        self.require_forward()
        n_paths, n_grid = self.X.shape
        theta_h = np.broadcast_to(self.theta_h, (n_paths, n_grid, self.d1))
        Z = np.broadcast_to(self.Z, (n_paths, n_grid, self.d))
        ztilde = self.ztilde_paths(n_paths)
        data = {
            'path': np.repeat(np.arange(n_paths), n_grid),
            't': np.tile(self.grid, n_paths),
            'Xtilde': self.xtilde.ravel(),
            'Ytilde': self.ytilde_paths(n_paths).ravel(),
            'X': self.X.ravel(),
            'Y': self.Y.ravel(),
        }
        for i in range(self.d):
            data[f'Z_{i + 1}'] = Z[..., i].ravel()
            data[f'Ztilde_{i + 1}'] = ztilde[..., i].ravel()
        for i in range(self.d1):
            data[f'theta_H_{i + 1}'] = theta_h[..., i].ravel()
        return pd.DataFrame(data, columns=path_columns(self.d, self.d1))

    @classmethod
    def load(cls, directory, stem='solution', lambda2=None):
        """
        Read a solution written by ``write_solution`` and ``write_solution_paths``:
        the <stem>.json sidecar, the <stem>_paths.csv table and the
        <stem>_ensemble.bin noise it was simulated on.

        Loaded solutions carry forward paths but no regression coefficients,
        so LSMC solutions evaluate only on their own paths.
        """
        directory = Path(directory)
        files = {name: directory / name for name in (f'{stem}.json', f'{stem}_paths.csv', f'{stem}_ensemble.bin')}
        missing = sorted(name for name, path in files.items() if not path.is_file())
        if missing:
            raise StateError('Solution artifacts are incomplete', directory=str(directory), missing=missing)
        try:
            sidecar = json.loads(files[f'{stem}.json'].read_text())
        except json.JSONDecodeError as exc:
            raise DomainError('Solution sidecar is not valid JSON', path=str(files[f'{stem}.json']), error=str(exc))
        absent = sorted(set(SIDECAR_FIELDS) - set(sidecar))
        if absent:
            raise DomainError('Solution sidecar is missing fields', missing=absent)
        ensemble = PathEnsemble.load(files[f'{stem}_ensemble.bin'])
        grid = ensemble.grid
        d, d1 = int(sidecar['d']), int(sidecar['d1'])
        if sidecar['n_steps'] != grid.size - 1 or d != ensemble.d:
            raise DomainError('Solution sidecar does not match its ensemble', n_steps=sidecar['n_steps'],
                              grid_steps=grid.size - 1, d=d, ensemble_d=ensemble.d)

        frame = pd.read_csv(files[f'{stem}_paths.csv'])
        columns = path_columns(d, d1)
        if list(frame.columns) != columns:
            raise DomainError('Unexpected solution path columns', expected=columns, found=list(frame.columns))
        n_paths, n_grid = ensemble.n_paths, grid.size
        if len(frame) != n_paths * n_grid:
            raise DomainError('Solution path table does not match its ensemble', rows=len(frame),
                              expected=n_paths * n_grid)
        frame = frame.sort_values(['path', 't'], kind='stable')
        if not np.allclose(frame['t'].to_numpy().reshape(n_paths, n_grid), grid[None, :], rtol=0.0, atol=1e-12):
            raise DomainError('Solution path times differ from the ensemble grid')

        def block(prefix, width):
            values = frame[[f'{prefix}_{i + 1}' for i in range(width)]].to_numpy(dtype=float)
            return values.reshape(n_paths, n_grid, width)

        def column(name):
            return frame[name].to_numpy(dtype=float).reshape(n_paths, n_grid)

        h = sidecar['h']
        schedule = HSchedule(grid, h['r'], h['gamma1'], h['gamma2'], h['T'])
        deterministic = sidecar['provenance'] == DETERMINISTIC
        ytilde, ztilde, theta_h = column('Ytilde'), block('Ztilde', d), block('theta_H', d1)
        if deterministic:
            ytilde, ztilde, theta_h = ytilde[0], ztilde[0], theta_h[0]
        solution = cls(
            grid=grid, schedule=schedule, provenance=sidecar['provenance'],
            gamma1=float(sidecar['gamma1']), gamma2=float(sidecar['gamma2']), d=d, d1=d1,
            ytilde=ytilde, ztilde=ztilde, lambda2=lambda2, x0=sidecar['x0'], ensemble=ensemble, theta_h=theta_h,
            xtilde=column('Xtilde'), X=column('X'), Y=column('Y'), Z=block('Z', d),
            diagnostics=dict(sidecar.get('diagnostics') or {}),
        )
        logger.info(f'Loaded {solution.provenance} solution from {directory} ({n_paths} paths, {n_grid - 1} steps)')
        return solution
