import copy
import json
from pathlib import Path

BUNDLED = Path(__file__).resolve().parent.parent / 'bundled'
S1 = BUNDLED / 's1.json'
FLAT = BUNDLED / 'flat.json'

# desk-scale numerics for command tests
SMALL_NUMERICS = {'n_paths': 400, 'n_steps': 40, 'inner_paths': 8, 'workers': 2}
SMALL_VERIFY = {
    'times': [0.0],
    'bank': [{'kappa': 1.0, 'eta': [0.0]}, {'kappa': 0.0, 'eta': [1.0]}],
    'n_candidates': 5,
}


def s1_data():
    return json.loads(S1.read_text())


def scenario_file(directory, small=True, **blocks):
    """Copy of the bundled S1 scenario with ``blocks`` merged over its top-level blocks"""
    data = copy.deepcopy(s1_data())
    if small:
        data['numerics'].update(SMALL_NUMERICS)
        data['verify'].update(SMALL_VERIFY)
    for key, value in blocks.items():
        if isinstance(value, dict) and isinstance(data.get(key), dict):
            data[key].update(value)
        else:
            data[key] = value
    path = Path(directory) / 'scenario.json'
    path.write_text(json.dumps(data))
    return path
