import logging
from pathlib import Path

import numpy as np
import pandas as pd

from common.artifacts import FORMATS, write_csv, write_json

logger = logging.getLogger(__name__)

COLUMNS = ['t', 'h', 'Ytilde_mean', 'Ztilde_H_mean', 'Ztilde_O_mean', 'X_mean', 'Y_mean', 'Z_H_mean']


def _block_mean(block):
    """Component mean for a one-dimensional block, mean Euclidean norm otherwise"""
    if block.shape[-1] == 0:
        return np.zeros(block.shape[-2])
    if block.shape[-1] == 1:
        values = block[..., 0]
    else:
        values = np.linalg.norm(block, axis=-1)
    return values if values.ndim == 1 else values.mean(axis=0)


def _path_mean(values):
    values = np.asarray(values, dtype=float)
    return values if values.ndim == 1 else values.mean(axis=0)


def solution_frame(solution):
    solution.require_forward()
    d1 = solution.d1
    return pd.DataFrame({
        't': solution.grid,
        'h': solution.schedule.values,
        'Ytilde_mean': _path_mean(solution.ytilde),
        'Ztilde_H_mean': _block_mean(solution.ztilde[..., :d1]),
        'Ztilde_O_mean': _block_mean(solution.ztilde[..., d1:]),
        'X_mean': _path_mean(solution.X),
        'Y_mean': _path_mean(solution.Y),
        'Z_H_mean': _block_mean(solution.Z[..., :d1]),
    }, columns=COLUMNS)


def write_solution(solution, out_dir, stem='solution', formats=FORMATS):
    """<stem>.csv with the path means per grid time and <stem>.json with provenance; None for a skipped format"""
    out_dir = Path(out_dir)
    csv_path = write_csv(solution_frame(solution), out_dir / f'{stem}.csv') if 'csv' in formats else None
    json_path = write_json(solution.sidecar(), out_dir / f'{stem}.json') if 'json' in formats else None
    logger.info(f'Solution written to {out_dir} as {", ".join(sorted(formats))}')
    return csv_path, json_path


def write_solution_paths(solution, out_dir, stem='solution'):
    """<stem>_paths.csv with every path and <stem>_ensemble.bin with its noise, read back by FbsdeSolution.load"""
    out_dir = Path(out_dir)
    table = write_csv(solution.path_table(), out_dir / f'{stem}_paths.csv')
    noise = solution.ensemble.save(out_dir / f'{stem}_ensemble.bin')
    logger.info(f'Solution paths written to {out_dir} ({solution.X.shape[0]} paths)')
    return table, noise
