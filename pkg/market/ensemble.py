"""
Brownian path ensembles: a time grid plus per-path, per-step increments.

Increments are drawn from the ``market`` substream in fixed-size path
blocks, so a run with more paths shares its leading paths with a smaller
run. Inserted grid points split increments with a Brownian bridge drawn from
the ``bridge`` substream, keyed by the inserted time.
"""

import logging
from pathlib import Path

import numpy as np

from common.conf import engine_setting
from common.exceptions import DomainError, GridError, NumericError
from common.random_streams import block_normals

logger = logging.getLogger(__name__)

MAGIC = b'PENSEMB1'
GRID_TOL = 1e-12
BRIDGE_RESOLUTION = 2 ** 40


class PathEnsemble:
    def __init__(self, grid, dW, seed, block_size=None):
        grid = np.asarray(grid, dtype=float)
        dW = np.asarray(dW, dtype=float)
        if grid.ndim != 1 or grid.size < 2 or not np.all(np.diff(grid) > 0):
            raise GridError('Grid must be strictly increasing with at least two points')
        if dW.ndim != 3 or dW.shape[1] != grid.size - 1:
            raise GridError('Increments must have shape (n_paths, n_steps, d)', shape=dW.shape, steps=grid.size - 1)
        self.grid = grid
        self.dW = dW
        self.seed = int(seed)
        self.block_size = int(block_size or engine_setting('BLOCK_SIZE'))
        self._W = None

    @classmethod
    def build(cls, seed, grid, n_paths, d, stream='market', keys=(), block_size=None):
        """
        Draw increments sqrt(dt_k) * N(0, 1) for every path, step and
        coordinate.
        """
        if n_paths < 1 or d < 1:
            raise DomainError('Ensemble needs at least one path and one dimension', n_paths=n_paths, d=d)
        grid = np.asarray(grid, dtype=float)
        block_size = int(block_size or engine_setting('BLOCK_SIZE'))
        normals = block_normals(seed, stream, n_paths, (grid.size - 1, d), block_size, *keys)
        dW = normals * np.sqrt(np.diff(grid))[None, :, None]
        logger.debug(f'Built ensemble: {n_paths} paths, {grid.size - 1} steps, d={d}, stream={stream}')
        return cls(grid, dW, seed, block_size)

    @property
    def n_paths(self):
        return self.dW.shape[0]

    @property
    def n_steps(self):
        return self.dW.shape[1]

    @property
    def d(self):
        return self.dW.shape[2]

    @property
    def steps(self):
        return np.diff(self.grid)

    @property
    def W(self):
        """Brownian paths of shape (n_paths, n_steps + 1, d), starting at 0"""
        if self._W is None:
            W = np.zeros((self.n_paths, self.n_steps + 1, self.d))
            np.cumsum(self.dW, axis=1, out=W[:, 1:, :])
            self._W = W
        return self._W

    def index_of(self, t):
        index = int(np.argmin(np.abs(self.grid - t)))
        if abs(self.grid[index] - t) > GRID_TOL * max(1.0, abs(t)):
            raise GridError('Time is not a grid point', t=t)
        return index

    def contains(self, t):
        return bool(np.any(np.abs(self.grid - t) <= GRID_TOL * max(1.0, abs(t))))

    def subset(self, n_paths):
        if n_paths > self.n_paths:
            raise DomainError('Cannot take more paths than the ensemble holds', requested=n_paths, available=self.n_paths)
        return PathEnsemble(self.grid, self.dW[:n_paths], self.seed, self.block_size)

    def refine(self, points):
        """
        New ensemble whose grid also contains ``points``; the increment over
        each split step is divided by a Brownian bridge, so the refined
        ensemble describes the same Brownian paths.
        """
        grid = self.grid
        dW = self.dW
        for point in sorted(float(p) for p in np.atleast_1d(points)):
            if point < grid[0] - GRID_TOL or point > grid[-1] + GRID_TOL:
                raise GridError('Refinement point outside the grid', t=point, start=grid[0], end=grid[-1])
            if np.any(np.abs(grid - point) <= GRID_TOL * max(1.0, abs(point))):
                continue
            k = int(np.searchsorted(grid, point)) - 1
            left, right = grid[k], grid[k + 1]
            weight = (point - left) / (right - left)
            spread = np.sqrt((point - left) * (right - point) / (right - left))
            key = int(round(point / grid[-1] * BRIDGE_RESOLUTION)) if grid[-1] > 0 else 0
            noise = block_normals(self.seed, 'bridge', self.n_paths, (self.d,), self.block_size, key)
            first = weight * dW[:, k, :] + spread * noise
            second = dW[:, k, :] - first
            dW = np.concatenate([dW[:, :k, :], first[:, None, :], second[:, None, :], dW[:, k + 1:, :]], axis=1)
            grid = np.concatenate([grid[:k + 1], [point], grid[k + 1:]])
        return PathEnsemble(grid, dW, self.seed, self.block_size)

    def refine_window(self, start, width, min_steps=4):
        """
        Make ``start`` and ``start + width`` grid points and put at least
        ``min_steps`` steps inside the window.
        """
        end = start + width
        if not width > 0:
            raise DomainError('Window width must be positive', width=width)
        if end > self.grid[-1] + GRID_TOL:
            raise DomainError('Window ends after the horizon', start=start, width=width, horizon=self.grid[-1])
        refined = self.refine([start, end])
        inside = refined.steps_in(start, end)
        if inside < min_steps:
            extra = np.linspace(start, end, min_steps + 1)[1:-1]
            refined = refined.refine(extra)
            logger.debug(f'Refined window [{start}, {end}) to {refined.steps_in(start, end)} steps')
        return refined

    def steps_in(self, start, end):
        i, j = self.index_of(start), self.index_of(end)
        return j - i

    def increment_variance(self):
        """Sample variance per step and coordinate, shape (n_steps, d)"""
        return self.dW.var(axis=0, ddof=1)

    def save(self, path):
        """
        Binary layout: 8-byte magic, then little-endian uint64 seed, n_paths,
        d, n_grid, then the grid and the increments as little-endian float64.
        """
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        header = np.array([self.seed, self.n_paths, self.d, self.grid.size], dtype='<u8')
        with path.open('wb') as handle:
            handle.write(MAGIC)
            handle.write(header.tobytes())
            handle.write(self.grid.astype('<f8').tobytes())
            handle.write(np.ascontiguousarray(self.dW, dtype='<f8').tobytes())
        logger.info(f'Saved ensemble to {path}')
        return path

    @classmethod
    def load(cls, path):
        raw = Path(path).read_bytes()
        if raw[:len(MAGIC)] != MAGIC:
            raise DomainError('Not an ensemble file', path=str(path))
        offset = len(MAGIC)
        seed, n_paths, d, n_grid = (int(v) for v in np.frombuffer(raw, dtype='<u8', count=4, offset=offset))
        offset += 32
        grid = np.frombuffer(raw, dtype='<f8', count=n_grid, offset=offset).astype(float)
        offset += 8 * n_grid
        count = n_paths * (n_grid - 1) * d
        if len(raw) - offset != 8 * count:
            raise DomainError('Ensemble file is truncated', path=str(path))
        dW = np.frombuffer(raw, dtype='<f8', count=count, offset=offset).astype(float).reshape(n_paths, n_grid - 1, d)
        return cls(grid, dW, seed)


def inner_ensemble(seed, grid, n_outer, n_inner, d, time_index, outer_block=0, block_size=None):
    """
    Inner-path increments for branched sub-simulation from a grid time.
    Outer path j of the chunk owns rows j * n_inner .. (j + 1) * n_inner - 1;
    draws are keyed by (time index, outer chunk).
    """
    return PathEnsemble.build(seed, grid, n_outer * n_inner, d, stream='inner',
                              keys=(time_index, outer_block), block_size=block_size)


def check_finite(values, step, label):
    bad = ~np.isfinite(values)
    if np.any(bad):
        path = int(np.flatnonzero(bad.reshape(bad.shape[0], -1).any(axis=1))[0])
        raise NumericError(f'Non-finite {label} during stepping', step=step, path=path)
