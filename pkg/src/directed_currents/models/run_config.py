"""
Run configuration - Everything a command needs, validated up front.

Sources, in increasing precedence: built-in defaults, an INI file given with
``--config``, command-line flags. The INI sections mirror the model modules.
"""

import configparser
import json
import logging
import math
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Any, Dict, Mapping, Optional, Tuple

from .epsilon_profiles import (
    EpsilonProfile,
    ProfileBoundaryData,
    load_tabulated_profile,
    log_power_profile,
    power_profile,
)
from .geometry import Hyperbolicity, make_hyperbolicity, swap_coordinates
from .quadrature import QuadratureSpec

logger = logging.getLogger(__name__)

PROFILE_KINDS = ('power', 'log_power', 'tabulated')
SLOW_DELTA = 0.02

_QUADRATURE_KEYS = (
    'tol_rel', 'tol_abs', 'max_subdivisions', 'tail_cutoff_t', 'split_ratio', 'error_slack'
)


def _floats(text: str) -> Tuple[float, ...]:
    return tuple(float(item) for item in text.split(',') if item.strip())


def _join(values: Tuple[float, ...]) -> str:
    return ', '.join(repr(v) for v in values)


def parse_profile_option(text: str) -> Dict[str, Any]:
    """
    Parse ``--profile`` text: ``power:P``, ``log_power:ALPHA`` or ``tabulated:PATH``.

    Returns:
        Dict of RunConfig fields to override

    Raises:
        ValueError: If the text is malformed
    """
    kind, _, argument = text.partition(':')
    kind = kind.strip().lower()
    if kind not in PROFILE_KINDS or not argument:
        raise ValueError(
            f"Invalid profile {text!r}; expected power:P, log_power:ALPHA or tabulated:PATH"
        )
    if kind == 'power':
        return {'profile_kind': kind, 'p': float(argument)}
    if kind == 'log_power':
        return {'profile_kind': kind, 'alpha': float(argument)}
    return {'profile_kind': kind, 'table': argument}


@dataclass(frozen=True)
class RunConfig:
    """
    Validated configuration of one run.

    Build with :meth:`build` (or the parsers) so that the b < 0 coordinate
    swap and the validation run.
    """

    a: float = 1.0
    b: float = 1.0
    profile_kind: str = 'power'
    p: float = 0.5
    alpha: float = 1.0
    table: str = ''
    amplitude: float = 10.0
    quadrature: QuadratureSpec = field(default_factory=QuadratureSpec)
    deltas: Tuple[float, ...] = (0.5, 0.3, 0.1, 0.05, 0.02)
    s_values: Tuple[float, ...] = (5.0, 10.0, 20.0, 40.0, 80.0)
    lam: float = 1.0
    out: str = 'runs'
    threads: int = 1
    seed: int = 0
    leaf_grid: int = 200
    extend_grid: int = 100
    uv1_threshold: float = 1e-6
    uv1_n: float = 1.0
    slope_tol: float = 0.01
    growth_limit: float = 0.2
    lower_threshold: float = 1e-4

    @classmethod
    def build(cls, **values: Any) -> 'RunConfig':
        """
        Create a validated configuration, swapping coordinates when b < 0.

        Raises:
            ValueError: If any value is invalid
        """
        b = float(values.get('b', cls.b))
        if b < 0:
            a = float(values.get('a', cls.a))
            new_a, new_b = swap_coordinates(a, b)
            logger.warning(
                "b=%g < 0: swapping (z1, z2) -> (z2, z1), eta -> 1/eta gives a=%.12g, b=%.12g",
                b, new_a, new_b,
            )
            values = dict(values, a=new_a, b=new_b)
        for name in ('deltas', 's_values'):
            if name in values:
                values[name] = tuple(float(v) for v in values[name])
        config = cls(**values)
        config.validate()
        return config

    def validate(self) -> None:
        make_hyperbolicity(self.a, self.b)
        self.profile()
        if not self.deltas or any(not (0.0 < d < 1.0) for d in self.deltas):
            raise ValueError(f"deltas must lie in (0, 1), got {self.deltas}")
        if any(d2 >= d1 for d1, d2 in zip(self.deltas, self.deltas[1:])):
            raise ValueError(f"deltas must be strictly decreasing, got {self.deltas}")
        if min(self.deltas) < SLOW_DELTA:
            logger.warning(
                "delta=%g is below %g; mass integrals will be slow", min(self.deltas), SLOW_DELTA
            )
        if not (math.isfinite(self.lam) and self.lam > 0):
            raise ValueError(f"lambda must be positive, got {self.lam}")
        if not self.s_values or any(s <= self.lam for s in self.s_values):
            raise ValueError(f"s values must exceed lambda={self.lam}, got {self.s_values}")
        if list(self.s_values) != sorted(self.s_values):
            raise ValueError(f"s values must be increasing, got {self.s_values}")
        if self.threads < 1:
            raise ValueError(f"threads must be at least 1, got {self.threads}")
        if self.leaf_grid < 2 or self.extend_grid < 2:
            raise ValueError("Grid sizes must be at least 2")
        if self.uv1_n <= 0:
            raise ValueError(f"N must be positive, got {self.uv1_n}")

    def hyperbolicity(self) -> Hyperbolicity:
        return make_hyperbolicity(self.a, self.b)

    def profile(self) -> EpsilonProfile:
        """The epsilon profile named by this configuration."""
        if self.profile_kind == 'power':
            return power_profile(self.p, self.amplitude)
        if self.profile_kind == 'log_power':
            return log_power_profile(self.alpha, self.amplitude)
        if self.profile_kind == 'tabulated':
            if not self.table:
                raise ValueError("A tabulated profile needs a table path")
            return load_tabulated_profile(self.table, self.amplitude)
        raise ValueError(f"Unknown profile kind {self.profile_kind!r}")

    def boundary_data(self) -> ProfileBoundaryData:
        return ProfileBoundaryData(self.profile(), self.hyperbolicity().gamma)

    def profile_spec(self) -> str:
        argument = {'power': self.p, 'log_power': self.alpha}.get(self.profile_kind, self.table)
        return f"{self.profile_kind}:{argument}"

    def with_overrides(self, **values: Any) -> 'RunConfig':
        """Copy with the given fields replaced; ``None`` values are ignored."""
        updates = {k: v for k, v in values.items() if v is not None}
        if not updates:
            return self
        current = {f.name: getattr(self, f.name) for f in fields(self)}
        return RunConfig.build(**dict(current, **updates))

    def to_sections(self) -> Dict[str, Dict[str, str]]:
        """INI-style ``{section: {key: text}}`` form, stored in the manifest."""
        q = self.quadrature
        return {
            'geometry': {'a': repr(self.a), 'b': repr(self.b)},
            'epsilon_profiles': {
                'kind': self.profile_kind,
                'p': repr(self.p),
                'alpha': repr(self.alpha),
                'table': self.table,
                'A': repr(self.amplitude),
            },
            'harmonic_extension': {k: repr(getattr(q, k)) for k in _QUADRATURE_KEYS},
            'current_mass': {
                'deltas': _join(self.deltas),
                'mass_tol_rel': repr(q.mass_tol_rel),
            },
            'asymptotics_verifier': {
                'uv1_threshold': repr(self.uv1_threshold),
                'N': repr(self.uv1_n),
                'slope_tol': repr(self.slope_tol),
                'growth_limit': repr(self.growth_limit),
                'lower_threshold': repr(self.lower_threshold),
            },
            'ddc_verifier': {'s_values': _join(self.s_values), 'lambda': repr(self.lam)},
            'cli_reports': {
                'out': self.out,
                'threads': str(self.threads),
                'seed': str(self.seed),
                'leaf_grid': str(self.leaf_grid),
                'extend_grid': str(self.extend_grid),
            },
        }

    @classmethod
    def from_sections(
        cls, sections: Mapping[str, Mapping[str, str]], base: Optional['RunConfig'] = None
    ) -> 'RunConfig':
        """
        Parse the sectioned form; missing keys keep the values of ``base``.

        Raises:
            ValueError: If a value cannot be parsed
        """
        base = base or cls()
        values: Dict[str, Any] = {f.name: getattr(base, f.name) for f in fields(base)}

        def section(name: str) -> Mapping[str, str]:
            return sections.get(name, {})

        readers = {
            ('geometry', 'a'): ('a', float),
            ('geometry', 'b'): ('b', float),
            ('epsilon_profiles', 'kind'): ('profile_kind', str.strip),
            ('epsilon_profiles', 'p'): ('p', float),
            ('epsilon_profiles', 'alpha'): ('alpha', float),
            ('epsilon_profiles', 'table'): ('table', str.strip),
            ('epsilon_profiles', 'A'): ('amplitude', float),
            ('current_mass', 'deltas'): ('deltas', _floats),
            ('asymptotics_verifier', 'uv1_threshold'): ('uv1_threshold', float),
            ('asymptotics_verifier', 'N'): ('uv1_n', float),
            ('asymptotics_verifier', 'slope_tol'): ('slope_tol', float),
            ('asymptotics_verifier', 'growth_limit'): ('growth_limit', float),
            ('asymptotics_verifier', 'lower_threshold'): ('lower_threshold', float),
            ('ddc_verifier', 's_values'): ('s_values', _floats),
            ('ddc_verifier', 'lambda'): ('lam', float),
            ('cli_reports', 'out'): ('out', str.strip),
            ('cli_reports', 'threads'): ('threads', int),
            ('cli_reports', 'seed'): ('seed', int),
            ('cli_reports', 'leaf_grid'): ('leaf_grid', int),
            ('cli_reports', 'extend_grid'): ('extend_grid', int),
        }
        try:
            for (name, key), (attribute, convert) in readers.items():
                text = _lookup(section(name), key)
                if text is not None:
                    values[attribute] = convert(text)

            q_values = asdict(base.quadrature)
            for key in _QUADRATURE_KEYS:
                text = _lookup(section('harmonic_extension'), key)
                if text is not None:
                    q_values[key] = int(text) if key == 'max_subdivisions' else float(text)
            text = _lookup(section('current_mass'), 'mass_tol_rel')
            if text is not None:
                q_values['mass_tol_rel'] = float(text)
            values['quadrature'] = QuadratureSpec(**q_values)
        except (TypeError, ValueError) as exc:
            raise ValueError(f"Invalid configuration value: {exc}") from exc
        return cls.build(**values)

    @classmethod
    def from_file(cls, path: str, base: Optional['RunConfig'] = None) -> 'RunConfig':
        """
        Read an INI file.

        Raises:
            ValueError: If the file cannot be read or parsed
        """
        parser = configparser.ConfigParser()
        parser.optionxform = str  # keep 'A' and 'N' case-sensitive
        try:
            with open(path, encoding='utf-8') as handle:
                parser.read_file(handle)
        except (OSError, configparser.Error) as exc:
            raise ValueError(f"Cannot read config {path}: {exc}") from exc
        sections = {name: dict(parser[name]) for name in parser.sections()}
        return cls.from_sections(sections, base)

    @classmethod
    def from_manifest(cls, path: str) -> 'RunConfig':
        """Rebuild the configuration stored in a run manifest."""
        try:
            with open(path, encoding='utf-8') as handle:
                manifest = json.load(handle)
        except (OSError, ValueError) as exc:
            raise ValueError(f"Cannot read manifest {path}: {exc}") from exc
        return cls.from_sections(manifest['config'])

    def tightened(self, factor: float) -> 'RunConfig':
        return replace(self, quadrature=self.quadrature.tightened(factor))


def _lookup(section: Mapping[str, str], key: str) -> Any:
    if key in section:
        return section[key]
    lowered = {k.lower(): v for k, v in section.items()}
    return lowered.get(key.lower())
