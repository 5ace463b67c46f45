"""
Scenario pipelines behind the management commands.

Every run validates its config, builds the engine objects, writes its
artifacts to the output directory plus a top-level report.json, and returns
the exit code the command reports.
"""

import copy
import hashlib
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import pandas as pd
from django.conf import settings

from common.artifacts import to_json, write_csv, write_json
from common.exceptions import ConfigError, DomainError, StateError
from equilibrium.equivalence import equivalence_gap
from equilibrium.export import write_report, write_strategy
from equilibrium.services import RESIDUAL_TOL, EquilibriumVerificationService
from fbsde.export import write_solution, write_solution_paths
from fbsde.residuals import fbsde_residual_check
from fbsde.services import FbsdeService
from fbsde.solution import FbsdeSolution
from market.ensemble import PathEnsemble
from market.services import MomentProbeService
from preferences.services import PreferenceValidationService
from scenarios import builders
from scenarios.models import ScenarioRun
from scenarios.serializers import ScenarioConfigSerializer, StrategySerializer

logger = logging.getLogger(__name__)

PASSED, FAILED = 0, 1
VALIDATION_GRID = 1024
# independent LSMC solves agree only up to regression error
LSMC_UNIQUENESS_TOL = 1e-2
NUMERIC_OVERRIDES = {'seed': 'seed', 'paths': 'n_paths', 'steps': 'n_steps'}


@dataclass
class ScenarioResult:
    verb: str
    name: str
    config_hash: str
    seed: int
    passed: bool
    out_dir: Path
    files: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)

    @property
    def exit_code(self):
        return PASSED if self.passed else FAILED


@dataclass
class Scenario:
    """Engine objects built from one validated config"""
    config: dict
    market: object
    u1: object
    u2: object
    lambda1: object
    lambda2: object

    @property
    def numerics(self):
        return self.config['numerics']

    @property
    def verify(self):
        return self.config['verify']

    @property
    def x0(self):
        return float(self.config['market']['x0'])

    @property
    def formats(self):
        return tuple(self.config['output']['formats'])

    def ensemble(self, keys=()):
        ensemble = builders.ensemble(self.numerics, self.market.horizon, self.market.d)
        if not keys:
            return ensemble
        return PathEnsemble.build(self.numerics['seed'], ensemble.grid, self.numerics['n_paths'], self.market.d,
                                  keys=keys)


def config_hash(config):
    """sha256 of the canonical JSON of everything except the output block"""
    payload = {key: value for key, value in config.items() if key != 'output'}
    canonical = json.dumps(payload, sort_keys=True, separators=(',', ':'))
    return hashlib.sha256(canonical.encode()).hexdigest()


def _read_json(path, label):
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f'{label} file not found', violations={'path': [str(path)]})
    try:
        return json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f'{label} file is not valid JSON', violations={'json': [str(exc)]})


class ScenarioService:
    @classmethod
    def load_config(cls, path, overrides=None):
        """
        Parse and validate a scenario file.

        Args:
            path (str): JSON scenario file
            overrides (dict): command-line values for seed, paths, steps and out

        Returns:
            dict: validated config with every default filled in

        Raises:
            ConfigError: with every schema violation, not just the first
        """
        data = _read_json(path, 'Scenario')
        if not isinstance(data, dict):
            raise ConfigError('Scenario file must hold a JSON object', violations={'json': ['Expected an object.']})
        data = copy.deepcopy(data)
        for option, value in (overrides or {}).items():
            if value is None:
                continue
            if option == 'out':
                data.setdefault('output', {})['directory'] = str(value)
            elif option in NUMERIC_OVERRIDES:
                data.setdefault('numerics', {})[NUMERIC_OVERRIDES[option]] = value
        serializer = ScenarioConfigSerializer(data=data)
        if not serializer.is_valid():
            logger.error(f'Scenario {path} rejected: {dict(serializer.errors)}')
            raise ConfigError('Scenario config violates the schema', violations=_plain_errors(serializer.errors))
        logger.info(f'Loaded scenario {path}')
        return json.loads(json.dumps(serializer.validated_data))

    @classmethod
    def build(cls, config):
        market_model = builders.market(config['market'])
        preferences = config['preferences']
        lambda2 = builders.discount(preferences['lambda2'], market_model.horizon)
        lambda1 = builders.discount(preferences['lambda1'], market_model.horizon, lambda2=lambda2)
        return Scenario(config, market_model, builders.utility(preferences['u1']),
                        builders.utility(preferences['u2']), lambda1, lambda2)

    @classmethod
    def _solve(cls, scenario, strict=False):
        if scenario.u1.kind != 'exponential' or scenario.u2.kind != 'exponential':
            raise DomainError('Solving needs exponential utilities; general utilities are verify-only')
        numerics = scenario.numerics
        return FbsdeService.solve(
            scenario.market, scenario.lambda2, scenario.u1.gamma, scenario.u2.gamma, scenario.x0,
            scenario.ensemble(), strict=strict, degree=numerics['basis_degree'], ridge=numerics['ridge'],
            z_max=numerics['z_max'], ode_step=numerics['ode_step'],
        )

    @classmethod
    def _extract(cls, scenario, solution):
        return EquilibriumVerificationService.extract(solution, scenario.u1, scenario.u2, scenario.lambda2,
                                                      scenario.market)

    @classmethod
    def run_solve(cls, config, strict=False):
        scenario = cls.build(config)
        out_dir = Path(config['output']['directory'])
        solution = cls._solve(scenario, strict=strict)
        pair = cls._extract(scenario, solution)
        files = [*write_solution(solution, out_dir, formats=scenario.formats),
                 *write_solution_paths(solution, out_dir),
                 write_strategy(pair, solution, out_dir, formats=scenario.formats)]
        summary = {
            'provenance': solution.provenance,
            'h0': float(solution.schedule.values[0]),
            'p_moments': FbsdeService.p_moment_sweep(solution, scenario.u2),
            'residuals': fbsde_residual_check(solution.X, solution.Y, solution.Z, scenario.market, scenario.lambda2,
                                              scenario.u2, scenario.u1, solution.grid, solution.ensemble).to_dict(),
            'diagnostics': solution.diagnostics,
        }
        return cls._finish('solve', config, out_dir, True, files, summary)

    @classmethod
    def strategy(cls, path, scenario):
        serializer = StrategySerializer(data=_read_json(path, 'Strategy'))
        if not serializer.is_valid():
            raise ConfigError('Strategy file violates the schema', violations=_plain_errors(serializer.errors))
        return builders.strategy(serializer.validated_data, scenario.market.d, scenario.market.d1)

    @classmethod
    def load_solution(cls, directory, scenario):
        """Solution artifacts in ``directory``, checked against the scenario's market"""
        solution = FbsdeSolution.load(directory, lambda2=scenario.lambda2)
        market = scenario.market
        if (solution.d, solution.d1) != (market.d, market.d1):
            raise DomainError('Solution dimensions differ from the scenario', solution=(solution.d, solution.d1),
                              market=(market.d, market.d1))
        if abs(solution.grid[-1] - market.horizon) > 1e-12 * max(1.0, market.horizon):
            raise DomainError('Solution horizon differs from the scenario', solution=float(solution.grid[-1]),
                              horizon=market.horizon)
        if solution.x0 is not None and solution.x0 != scenario.x0:
            logger.warning(f'Solution starts from x0={solution.x0}, scenario from x0={scenario.x0}; using the solution')
        return solution

    @classmethod
    def run_verify(cls, config, strategy_path=None, solution_dir=None, strict=False):
        """
        Verify the equilibrium extracted from a solution, or the pair in
        ``strategy_path`` against the same solution. The solution is solved
        inline for exponential utilities, or read from ``solution_dir``;
        general utilities need the latter.
        """
        scenario = cls.build(config)
        general = scenario.u1.kind != 'exponential' or scenario.u2.kind != 'exponential'
        if general and solution_dir is None:
            raise StateError('Verification with general utilities needs solution artifacts (--solution)',
                             verb='verify')
        out_dir = Path(config['output']['directory'])
        numerics, verify = scenario.numerics, scenario.verify
        if solution_dir is None:
            solution = cls._solve(scenario, strict=strict)
        else:
            solution = cls.load_solution(solution_dir, scenario)
        x0 = solution.x0 if solution.x0 is not None else scenario.x0
        pair = cls._extract(scenario, solution)
        if strategy_path is not None:
            pair = cls.strategy(strategy_path, scenario)

        report = EquilibriumVerificationService.verify(
            pair, solution, scenario.market, scenario.lambda1, scenario.lambda2, scenario.u1, scenario.u2,
            solution.ensemble, x0, numerics['seed'], times=verify.get('times'),
            bank=builders.bank(verify, scenario.market.d, scenario.market.d1), eps_ladder=verify['eps_ladder'],
            p=verify['p'], n_candidates=verify['n_candidates'], n_inner=numerics['inner_paths'],
            workers=numerics['workers'], exp_c=verify['exp_c'],
        )
        files = list(write_report(report, out_dir, formats=scenario.formats))
        summary = {
            'solution': str(solution_dir) if solution_dir is not None else 'inline',
            'pair': report.pair,
            'verdicts': report.verdicts,
            'failed_stages': report.failed_stages,
            'spike_failures': report.spike.failures if report.spike is not None else [],
        }
        return cls._finish('verify', config, out_dir, report.passed, files, summary)

    @classmethod
    def run_equivalence(cls, config, strict=False):
        """
        Equivalence gap of the equilibrium against the candidate bank, and
        agreement with an equilibrium solved on independent noise.
        """
        scenario = cls.build(config)
        out_dir = Path(config['output']['directory'])
        numerics, verify = scenario.numerics, scenario.verify
        solution = cls._solve(scenario, strict=strict)
        pair = cls._extract(scenario, solution)
        result = equivalence_gap(pair, scenario.market, scenario.lambda2, scenario.u1, scenario.u2,
                                 verify['n_candidates'], solution.ensemble, scenario.x0, numerics['seed'])

        numerics_options = dict(strict=strict, degree=numerics['basis_degree'], ridge=numerics['ridge'],
                                z_max=numerics['z_max'], ode_step=numerics['ode_step'])
        independent = FbsdeService.solve(scenario.market, scenario.lambda2, scenario.u1.gamma, scenario.u2.gamma,
                                         scenario.x0, scenario.ensemble(keys=('uniqueness',)), **numerics_options)
        tolerance = RESIDUAL_TOL if solution.is_deterministic else LSMC_UNIQUENESS_TOL
        uniqueness = EquilibriumVerificationService.compare_pairs(
            pair, cls._extract(scenario, independent), scenario.market, solution.ensemble, scenario.x0,
            tolerance=tolerance)

        files = []
        if 'csv' in scenario.formats:
            files.append(write_csv(pd.DataFrame(result.rows), out_dir / 'equivalence.csv'))
        if 'json' in scenario.formats:
            files.append(write_json({**result.to_dict(), 'uniqueness': uniqueness}, out_dir / 'equivalence.json'))
        passed = result.passed and result.first_order_passed and uniqueness['passed']
        summary = {
            'failures': result.failures,
            'skipped': len(result.skipped),
            'uniqueness': uniqueness['passed'],
        }
        return cls._finish('equivalence', config, out_dir, passed, files, summary)

    @classmethod
    def run_moments(cls, config):
        scenario = cls.build(config)
        out_dir = Path(config['output']['directory'])
        verify = scenario.verify
        probe = MomentProbeService.moment_bound_probe(
            scenario.market, builders.moment_direction(verify, scenario.market), verify['eps_ladder'],
            verify['gammas'], scenario.ensemble(), exp_c=verify['exp_c'],
        )
        files = []
        if 'csv' in scenario.formats:
            frame = pd.DataFrame(probe['rows'], columns=['gamma', 'eps', 'moment', 'se'])
            files.append(write_csv(frame, out_dir / 'moments.csv'))
        if 'json' in scenario.formats:
            slopes = {str(gamma): slope for gamma, slope in probe['slopes'].items()}
            files.append(write_json({**probe, 'slopes': slopes}, out_dir / 'moments.json'))
        summary = {
            'slopes': {str(gamma): slope for gamma, slope in probe['slopes'].items()},
            'exp_finite': probe['exp_finite'],
            'notes': probe['notes'],
        }
        return cls._finish('moments', config, out_dir, probe['exp_finite'], files, summary)

    @classmethod
    def run_validate(cls, config):
        """Discount-class checks on lambda1 and lambda2, utility-class checks on U1 and U2"""
        scenario = cls.build(config)
        out_dir = Path(config['output']['directory'])
        interval = scenario.verify['utility_interval']
        reports = {
            'lambda1': PreferenceValidationService.validate_lambda(scenario.lambda1, VALIDATION_GRID),
            'lambda2': PreferenceValidationService.validate_lambda(scenario.lambda2, VALIDATION_GRID),
            'u1': PreferenceValidationService.utility_class_check(scenario.u1, interval, VALIDATION_GRID),
            'u2': PreferenceValidationService.utility_class_check(scenario.u2, interval, VALIDATION_GRID),
        }
        files = []
        if 'json' in scenario.formats:
            files.append(write_json({key: report.to_dict() for key, report in reports.items()},
                                    out_dir / 'validation.json'))
        passed = all(report.passed for report in reports.values())
        summary = {
            'verdicts': {key: report.passed for key, report in reports.items()},
            'violations': {key: report.violations for key, report in reports.items() if report.violations},
        }
        return cls._finish('validate', config, out_dir, passed, files, summary)

    @classmethod
    def _finish(cls, verb, config, out_dir, passed, files, summary):
        result = ScenarioResult(verb=verb, name=config['name'], config_hash=config_hash(config),
                                seed=config['numerics']['seed'], passed=bool(passed), out_dir=out_dir,
                                files=sorted(Path(path).name for path in files if path is not None),
                                summary=summary)
        report = {
            'verb': verb,
            'name': result.name,
            'config_hash': result.config_hash,
            'seed': result.seed,
            'engine_version': settings.ENGINE_VERSION,
            'passed': result.passed,
            'exit_code': result.exit_code,
            'files': result.files,
            'summary': summary,
            'config': config,
        }
        write_json(report, out_dir / 'report.json')
        cls.record_run(result, report)
        level = 'passed' if result.passed else 'failed'
        logger.info(f'{verb} {result.name} {level} ({result.config_hash[:12]}, seed {result.seed})')
        return result

    @classmethod
    def record_run(cls, result, report):
        """Store the run in the registry; a failure here never fails the run"""
        try:
            return ScenarioRun.objects.create(
                verb=result.verb, name=result.name, config_hash=result.config_hash, seed=result.seed,
                passed=result.passed, exit_code=result.exit_code, output_dir=str(result.out_dir),
                report=json.loads(to_json(report)),
            )
        except Exception as exc:
            logger.warning(f'Could not record {result.verb} run: {exc}')
            return None


def _plain_errors(errors):
    return json.loads(json.dumps(errors, default=str))
