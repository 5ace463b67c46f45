"""
Scenario configuration schema.

Every block rejects unknown keys and reports all violations at once; the
defaults filled in here are echoed back in the run report.
"""

import math

from rest_framework import serializers

from common.conf import engine_setting
from common.exceptions import EngineError
from scenarios import builders
from scenarios.models import ScenarioRun

UTILITY_KINDS = ['exponential', 'fromm_imkeller']
DISCOUNT_KINDS = ['exponential', 'hyperbolic', 'mixture', 'quasi_exponential', 'ref_dependent', 'induced']
COEFFICIENT_KINDS = ['constant', 'table', 'state']
STRATEGY_KINDS = ['constant', 'table']
KAPPA_BUILTINS = ['softplus_shift']
MAX_SEED = 2 ** 64 - 1


class StrictSerializer(serializers.Serializer):
    """Serializer that treats unknown keys as errors, reported next to the field errors"""

    def to_internal_value(self, data):
        unknown = {}
        if isinstance(data, dict):
            unknown = {key: ['Unknown field.'] for key in sorted(set(data) - set(self.fields))}
        try:
            value = super().to_internal_value(data)
        except serializers.ValidationError as exc:
            detail = exc.detail if isinstance(exc.detail, dict) else {'non_field_errors': exc.detail}
            raise serializers.ValidationError({**detail, **unknown})
        if unknown:
            raise serializers.ValidationError(unknown)
        return value


def _positive_finite(value, label):
    if not (math.isfinite(value) and value > 0):
        raise serializers.ValidationError(f'{label} must be positive and finite.')
    return value


class CoefficientField(serializers.Field):
    """
    A number (a constant) or one of

        {"kind": "constant", "value": v, "bound": b}
        {"kind": "table", "times": [...], "values": [...], "bound": b}
        {"kind": "state", "base": b0, "amplitude": a, "loading": [...], "rate": k, "bound": b}
    """
    default_error_messages = {
        'invalid': 'Expected a number or a coefficient object.',
        'kind': 'Coefficient kind must be one of {kinds}.',
    }

    def to_internal_value(self, data):
        if isinstance(data, bool):
            self.fail('invalid')
        if isinstance(data, (int, float)):
            data = {'kind': 'constant', 'value': float(data)}
        if not isinstance(data, dict):
            self.fail('invalid')
        if data.get('kind') not in COEFFICIENT_KINDS:
            self.fail('kind', kinds=COEFFICIENT_KINDS)
        allowed = {
            'constant': {'kind', 'value', 'bound'},
            'table': {'kind', 'times', 'values', 'bound'},
            'state': {'kind', 'base', 'amplitude', 'loading', 'rate', 'bound'},
        }[data['kind']]
        unknown = sorted(set(data) - allowed)
        if unknown:
            raise serializers.ValidationError(f'Unknown coefficient keys: {unknown}.')
        if 'bound' in data:
            _positive_finite(float(data['bound']), 'Declared bound')
        try:
            builders.coefficient(data)
        except (EngineError, TypeError, ValueError) as exc:
            raise serializers.ValidationError(str(exc))
        return data

    def to_representation(self, value):
        return value


class KappaField(serializers.Field):
    """
    The curvature map of a Fromm-Imkeller utility, one of

        {"builtin": "softplus_shift"}
        {"coefficients": [a0, a1, a2, b]}
    """
    default_error_messages = {
        'invalid': 'Expected {{"builtin": name}} or {{"coefficients": [a0, a1, a2, b]}}.',
        'builtin': 'Built-in kappa must be one of {names}.',
        'coefficients': 'Kappa coefficients must be four finite numbers [a0, a1, a2, b].',
    }

    def to_internal_value(self, data):
        if not isinstance(data, dict) or len(data) != 1:
            self.fail('invalid')
        if 'builtin' in data:
            if data['builtin'] not in KAPPA_BUILTINS:
                self.fail('builtin', names=KAPPA_BUILTINS)
            return {'builtin': data['builtin']}
        if 'coefficients' not in data:
            self.fail('invalid')
        values = data['coefficients']
        if not isinstance(values, list) or len(values) != 4 or any(
                isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v) for v in values):
            self.fail('coefficients')
        try:
            builders.kappa({'coefficients': values})
        except EngineError as exc:
            raise serializers.ValidationError(str(exc))
        return {'coefficients': [float(v) for v in values]}

    def to_representation(self, value):
        return value


class UtilitySerializer(StrictSerializer):
    kind = serializers.ChoiceField(choices=UTILITY_KINDS)
    gamma = serializers.FloatField(required=False)
    kappa = KappaField(required=False)
    x_min = serializers.FloatField(required=False)
    x_max = serializers.FloatField(required=False)
    n_nodes = serializers.IntegerField(required=False, min_value=3)

    def validate(self, attrs):
        if attrs['kind'] == 'exponential' and 'gamma' not in attrs:
            raise serializers.ValidationError({'gamma': ['Exponential utility needs gamma.']})
        try:
            builders.utility(attrs)
        except (EngineError, TypeError) as exc:
            raise serializers.ValidationError(str(exc))
        return attrs


class DiscountSerializer(StrictSerializer):
    kind = serializers.ChoiceField(choices=DISCOUNT_KINDS)
    delta = serializers.FloatField(required=False)
    alpha = serializers.FloatField(required=False)
    gamma_rate = serializers.FloatField(required=False)
    times = serializers.ListField(child=serializers.FloatField(), required=False)
    rates = serializers.ListField(child=serializers.FloatField(), required=False)


class MarketSerializer(StrictSerializer):
    T = serializers.FloatField()
    d = serializers.IntegerField(min_value=1)
    d1 = serializers.IntegerField(min_value=1)
    x0 = serializers.FloatField(default=1.0)
    r = CoefficientField(default=0.0)
    theta = CoefficientField(default=0.0)
    e = CoefficientField(default=0.0)
    E = CoefficientField(default=0.0)

    def validate_T(self, value):
        return _positive_finite(value, 'Horizon')

    def to_internal_value(self, data):
        value = super().to_internal_value(data)
        for key in ('r', 'theta', 'e', 'E'):
            if isinstance(value[key], float):
                value[key] = {'kind': 'constant', 'value': value[key]}
        return value

    def validate(self, attrs):
        if attrs['d1'] > attrs['d']:
            raise serializers.ValidationError({'d1': ['d1 must not exceed d.']})
        try:
            builders.market(attrs)
        except EngineError as exc:
            raise serializers.ValidationError(str(exc))
        return attrs


class PreferencesSerializer(StrictSerializer):
    u1 = UtilitySerializer()
    u2 = UtilitySerializer()
    lambda1 = DiscountSerializer(required=False)
    lambda2 = DiscountSerializer()

    def validate(self, attrs):
        attrs.setdefault('lambda1', dict(attrs['lambda2']))
        if attrs['lambda2']['kind'] == 'induced':
            raise serializers.ValidationError({'lambda2': ['The induced discount is only available as lambda1.']})
        return attrs


class NumericsSerializer(StrictSerializer):
    n_paths = serializers.IntegerField(min_value=2, default=lambda: engine_setting('DEFAULT_PATHS'))
    n_steps = serializers.IntegerField(min_value=1, default=lambda: engine_setting('DEFAULT_STEPS'))
    seed = serializers.IntegerField(min_value=0, max_value=MAX_SEED, default=lambda: engine_setting('DEFAULT_SEED'))
    basis_degree = serializers.IntegerField(min_value=1, default=lambda: engine_setting('BASIS_DEGREE'))
    z_max = serializers.FloatField(default=lambda: engine_setting('Z_MAX'))
    ode_step = serializers.FloatField(default=lambda: engine_setting('ODE_STEP'))
    ridge = serializers.FloatField(min_value=0.0, default=lambda: engine_setting('RIDGE'))
    inner_paths = serializers.IntegerField(min_value=1, default=lambda: engine_setting('INNER_PATHS'))
    workers = serializers.IntegerField(min_value=1, default=lambda: engine_setting('WORKERS'))

    def validate_z_max(self, value):
        return _positive_finite(value, 'z_max')

    def validate_ode_step(self, value):
        return _positive_finite(value, 'ode_step')


class DirectionSerializer(StrictSerializer):
    t = serializers.FloatField(default=0.0)
    kappa = serializers.FloatField(default=0.0)
    eta = serializers.ListField(child=serializers.FloatField(), default=list)


class VerifySerializer(StrictSerializer):
    times = serializers.ListField(child=serializers.FloatField(), required=False, allow_empty=False)
    eps_ladder = serializers.ListField(child=serializers.FloatField(), default=lambda: [0.2, 0.1, 0.05, 0.025])
    bank = DirectionSerializer(many=True, required=False)
    p = serializers.FloatField(default=2.0)
    n_candidates = serializers.IntegerField(min_value=1, default=100)
    gammas = serializers.ListField(child=serializers.FloatField(min_value=1.0), default=lambda: [1.0, 2.0])
    exp_c = serializers.FloatField(default=5.0)
    moment_direction = DirectionSerializer(required=False)
    utility_interval = serializers.ListField(child=serializers.FloatField(), min_length=2, max_length=2,
                                             default=lambda: [-5.0, 5.0])

    def validate_eps_ladder(self, value):
        if len(value) < 2 or any(a <= b for a, b in zip(value, value[1:])) or value[-1] <= 0:
            raise serializers.ValidationError('Window ladder must be positive and strictly descending.')
        return value

    def validate_p(self, value):
        if not value > 1:
            raise serializers.ValidationError('p must exceed 1.')
        return value


class OutputSerializer(StrictSerializer):
    directory = serializers.CharField(default=lambda: engine_setting('OUTPUT_DIR'))
    formats = serializers.ListField(child=serializers.ChoiceField(choices=['csv', 'json']),
                                    default=lambda: ['csv', 'json'])


class ScenarioConfigSerializer(StrictSerializer):
    name = serializers.CharField(default='scenario')
    market = MarketSerializer()
    preferences = PreferencesSerializer()
    numerics = NumericsSerializer()
    verify = VerifySerializer()
    output = OutputSerializer()

    def to_internal_value(self, data):
        if isinstance(data, dict):
            data = {'numerics': {}, 'verify': {}, 'output': {}, **data}
        return super().to_internal_value(data)

    def validate(self, attrs):
        market = attrs['market']
        errors = {}
        preferences = attrs['preferences']
        try:
            lambda2 = builders.discount(preferences['lambda2'], market['T'])
            builders.discount(preferences['lambda1'], market['T'], lambda2=lambda2)
        except (EngineError, KeyError, TypeError) as exc:
            errors['preferences'] = [f'Invalid discount: {exc}']
        for index, direction in enumerate(attrs['verify'].get('bank', [])):
            if len(direction['eta']) not in (0, market['d']):
                errors.setdefault('verify', []).append(f'bank[{index}].eta must have d = {market["d"]} entries.')
        for t in attrs['verify'].get('times', []):
            if not 0.0 <= t < market['T']:
                errors.setdefault('verify', []).append(f'Spike time {t} outside [0, T).')
        if errors:
            raise serializers.ValidationError(errors)
        return attrs


class StrategySerializer(StrictSerializer):
    """User-supplied pair: constant (c, pi) or a table of c(t) and pi(t) rows"""
    kind = serializers.ChoiceField(choices=STRATEGY_KINDS)
    c = serializers.FloatField(required=False)
    pi = serializers.ListField(child=serializers.FloatField(), required=False)
    times = serializers.ListField(child=serializers.FloatField(), required=False)
    consumption = serializers.ListField(child=serializers.FloatField(), required=False)
    investment = serializers.ListField(child=serializers.ListField(child=serializers.FloatField()), required=False)

    def validate(self, attrs):
        needed = ('c', 'pi') if attrs['kind'] == 'constant' else ('times', 'consumption', 'investment')
        missing = {key: ['This field is required.'] for key in needed if key not in attrs}
        if missing:
            raise serializers.ValidationError(missing)
        return attrs


class ScenarioRunSerializer(serializers.ModelSerializer):
    class Meta:
        model = ScenarioRun
        fields = '__all__'
