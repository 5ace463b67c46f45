import logging
from pathlib import Path

import pandas as pd

from common.artifacts import FORMATS, write_csv, write_json
from equilibrium.extraction import pair_on_paths

logger = logging.getLogger(__name__)


def strategy_frame(pair, solution):
    """Path means of c* and of every hedgeable pi* component on the control steps"""
    consumption, investment = pair_on_paths(pair, solution)
    columns = {'t': solution.grid[:-1], 'c_star_mean': consumption.mean(axis=0)}
    for i in range(solution.d1):
        columns[f'pi_star_{i + 1}'] = investment[:, :, i].mean(axis=0)
    return pd.DataFrame(columns)


def write_strategy(pair, solution, out_dir, stem='strategy', formats=FORMATS):
    if 'csv' not in formats:
        return None
    path = write_csv(strategy_frame(pair, solution), Path(out_dir) / f'{stem}.csv')
    logger.info(f'Strategy table written to {path}')
    return path


def write_report(report, out_dir, stem='equilibrium_report', formats=FORMATS):
    """<stem>.json with every verdict and spike_table.csv with the difference quotients"""
    out_dir = Path(out_dir)
    json_path = write_json(report.to_dict(), out_dir / f'{stem}.json') if 'json' in formats else None
    csv_path = write_csv(report.spike_frame(), out_dir / 'spike_table.csv') if 'csv' in formats else None
    logger.info(f'Equilibrium report written to {json_path} (passed={report.passed})')
    return json_path, csv_path
