"""Configuration schemas with pydantic-settings and YAML support."""

import os
import re
from fractions import Fraction
from pathlib import Path
from typing import Any, Literal

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator
from pydantic_settings import (
    BaseSettings,
    PydanticBaseSettingsSource,
    SettingsConfigDict,
)

from spectral.errors import ConfigError

Command = Literal['engineer', 'polys', 'verify', 'riccati']

_ENV_PATTERN = r'\$\{([^:}]+)(:([^}]*))?\}'


class YamlSettingsSource(PydanticBaseSettingsSource):
    """Custom settings source for loading from YAML files."""

    def __init__(self, settings_cls: type[BaseSettings], config_path: Path | None = None):
        super().__init__(settings_cls)
        self.config_path = config_path or Path('config.yaml')

    def _expand_env_vars(self, value: Any) -> Any:
        """Recursively expand ${VAR} and ${VAR:default} in configuration values."""
        if isinstance(value, str):

            def replacer(match):
                default_value = match.group(3) if match.group(3) is not None else ''
                return os.environ.get(match.group(1), default_value)

            full_match = re.fullmatch(_ENV_PATTERN, value)
            if full_match:
                result = replacer(full_match)
                # Empty string means env var not set
                return result if result.strip() else None
            return re.sub(_ENV_PATTERN, replacer, value)
        elif isinstance(value, dict):
            return {k: self._expand_env_vars(v) for k, v in value.items()}
        elif isinstance(value, list):
            return [self._expand_env_vars(item) for item in value]
        return value

    def get_field_value(self, field_name: str, field_info: Any) -> Any:
        """Get field value from YAML config."""
        return None

    def __call__(self) -> dict[str, Any]:
        """Load and parse YAML configuration."""
        if not self.config_path.exists():
            return {}

        try:
            with open(self.config_path) as f:
                raw_config = yaml.safe_load(f) or {}
        except yaml.MarkedYAMLError as e:
            mark = e.problem_mark
            where = f' at line {mark.line + 1}, column {mark.column + 1}' if mark else ''
            raise ConfigError(f'{self.config_path}: invalid YAML{where}: {e.problem}') from e

        if not isinstance(raw_config, dict):
            raise ConfigError(f'{self.config_path}: top level must be a mapping')
        return self._expand_env_vars(raw_config)


def yaml_key_line(config_path: Path, field_path: tuple[str | int, ...]) -> int | None:
    """1-based line of the YAML node at field_path, or None when not present."""
    if not config_path.exists():
        return None
    try:
        with open(config_path) as f:
            node = yaml.compose(f)
    except yaml.YAMLError:
        return None

    line = None
    for key in field_path:
        match node:
            case yaml.MappingNode():
                for key_node, value_node in node.value:
                    if key_node.value == key:
                        line, node = key_node.start_mark.line + 1, value_node
                        break
                else:
                    return line
            case yaml.SequenceNode() if isinstance(key, int) and key < len(node.value):
                node = node.value[key]
                line = node.start_mark.line + 1
            case _:
                return line
    return line


def _parse_fraction(value: str) -> Fraction:
    try:
        return Fraction(str(value).strip())
    except (ValueError, ZeroDivisionError) as e:
        raise ValueError(f'not an exact rational: {value!r}') from e


class _Section(BaseModel):
    model_config = ConfigDict(validate_assignment=True)


class HierarchyConfig(_Section):
    """Gaps and anchoring of the engineered spectrum."""

    gaps: list[str] = Field(
        default_factory=lambda: ['1', '2'],
        description='Gaps Delta_1..Delta_N as "p/q" strings',
    )
    e0: str = Field(default='0', description='Ground energy E_0 as "p/q"')
    u0: str = Field(default='0', description='Center u_0 as "p/q"')

    @field_validator('gaps', mode='before')
    @classmethod
    def split_gaps(cls, value: Any) -> Any:
        if isinstance(value, str):
            return [part.strip() for part in value.split(',') if part.strip()]
        if isinstance(value, list | tuple):
            for v in value:
                if isinstance(v, float):
                    raise ValueError(f'use an exact "p/q" gap instead of the float {v}')
            return [str(v) for v in value]
        return value

    @field_validator('gaps')
    @classmethod
    def gaps_positive(cls, value: list[str]) -> list[str]:
        if not value:
            raise ValueError('at least one gap is required')
        for gap in value:
            if _parse_fraction(gap) <= 0:
                raise ValueError(f'gaps must be strictly positive, got {gap}')
        return value

    @field_validator('e0', 'u0', mode='before')
    @classmethod
    def exact_scalar(cls, value: Any) -> str:
        if isinstance(value, float):
            raise ValueError(f'use an exact "p/q" value instead of the float {value}')
        _parse_fraction(value)
        return str(value).strip()

    def fractions(self) -> tuple[tuple[Fraction, ...], Fraction, Fraction]:
        return (
            tuple(_parse_fraction(g) for g in self.gaps),
            _parse_fraction(self.e0),
            _parse_fraction(self.u0),
        )


class GridConfig(_Section):
    """Sampling and finite-difference grids."""

    points: int = Field(default=2001, ge=3, description='Output sampling points')
    half_width: float | None = Field(
        default=None, gt=0, description='Output half-width; default 6/sqrt(c)'
    )
    fd_points: int = Field(default=4001, ge=3, description='Finite-difference grid points')
    fd_half_width: float = Field(default=8.0, gt=0, description='Finite-difference half-width')
    richardson_points: int = Field(
        default=801, ge=3, description='Coarsest of the three nested Richardson grids'
    )
    excluded_center_halfwidth: float = Field(
        default=0.1, ge=0, description='Band around u0 excluded from pointwise checks'
    )


class ToleranceConfig(_Section):
    """Numeric tolerances."""

    quadrature: float = Field(default=1e-8, gt=0)
    fd_relative: float = Field(default=1e-3, gt=0)
    fd_harmonic_relative: float = Field(default=1e-4, gt=0)
    intertwine: float = Field(default=1e-6, gt=0)
    riccati: float = Field(default=1e-10, gt=0)
    coefficient: float = Field(default=1e-6, gt=0)


class BoundsConfig(_Section):
    """Level and order bounds."""

    levels: int = Field(default=8, ge=0, description='States/energies per Hamiltonian')
    pmax: int = Field(default=12, ge=0, description='Laguerre degree bound for exact checks')
    nmax: int = Field(default=24, ge=0, description='Excitation bound for exact state checks')


class PolysConfig(_Section):
    """Polynomial route tables."""

    gamma: str = Field(default='1/2', description='Laguerre parameter as "p/q"')
    pmax: int = Field(default=12, ge=0, le=64)
    hermite_nmax: int = Field(default=8, ge=0, le=64)

    @field_validator('gamma', mode='before')
    @classmethod
    def exact_gamma(cls, value: Any) -> str:
        if isinstance(value, float):
            raise ValueError(f'use an exact "p/q" value instead of the float {value}')
        _parse_fraction(value)
        return str(value).strip()


class RiccatiConfig(_Section):
    """Numerical Riccati closure solver."""

    ansatz: Literal['pole_poly', 'grid'] = 'pole_poly'
    order: int = Field(default=7, ge=1, description='Highest odd power of the series part')
    solver: Literal['newton', 'least_squares'] = 'newton'
    max_iter: int = Field(default=200, ge=1)
    half_width: float = Field(default=3.0, gt=0)
    points: int = Field(default=121, ge=5)
    excluded_center_halfwidth: float = Field(default=0.25, gt=0)
    order_steps: int = Field(default=2, ge=0, description='Ansatz order escalations')

    @field_validator('order')
    @classmethod
    def odd_order(cls, value: int) -> int:
        if value % 2 == 0:
            raise ValueError(f'order must be odd, got {value}')
        return value


class VerifyConfig(_Section):
    """Verification suite orchestration."""

    alpha_sweep: int = Field(default=6, ge=1, description='Number of sampled alpha values')
    perturb_gap: float = Field(default=0.0, description='Fault injected into the intertwine check')
    concurrency: int = Field(default=4, ge=1)


class OutputConfig(_Section):
    """Output files."""

    format: Literal['csv', 'json'] = 'csv'
    directory: Path = Field(default=Path('out'))
    file: Path | None = Field(default=None, description='Single-file output (polys, riccati)')
    length_scale: float = Field(
        default=1.0, gt=0, description='sqrt(hbar^2/2m0) in the caller length unit'
    )


class JobConfig(BaseSettings):
    """Job configuration with YAML and environment support."""

    command: Command = 'engineer'
    hierarchy: HierarchyConfig = Field(default_factory=HierarchyConfig)
    grid: GridConfig = Field(default_factory=GridConfig)
    tolerances: ToleranceConfig = Field(default_factory=ToleranceConfig)
    bounds: BoundsConfig = Field(default_factory=BoundsConfig)
    polys: PolysConfig = Field(default_factory=PolysConfig)
    riccati: RiccatiConfig = Field(default_factory=RiccatiConfig)
    verify: VerifyConfig = Field(default_factory=VerifyConfig)
    output: OutputConfig = Field(default_factory=OutputConfig)

    model_config = SettingsConfigDict(
        env_prefix='',
        env_nested_delimiter='__',
        case_sensitive=False,
        extra='ignore',
        validate_assignment=True,
    )

    @classmethod
    def settings_customise_sources(
        cls,
        settings_cls: type[BaseSettings],
        init_settings: PydanticBaseSettingsSource,
        env_settings: PydanticBaseSettingsSource,
        dotenv_settings: PydanticBaseSettingsSource,
        file_secret_settings: PydanticBaseSettingsSource,
    ) -> tuple[PydanticBaseSettingsSource, ...]:
        """Customize settings sources to include YAML."""
        yaml_settings = YamlSettingsSource(settings_cls, config_path())
        # Priority: CLI args (init) > env vars > yaml > defaults
        return (init_settings, env_settings, yaml_settings, dotenv_settings)

    def apply_cli_overrides(self, args) -> None:
        """Apply CLI argument overrides to configuration."""
        if hasattr(args, 'command') and args.command:
            self.command = args.command

        # Hierarchy
        if hasattr(args, 'gaps') and args.gaps:
            self.hierarchy.gaps = args.gaps
        if hasattr(args, 'e0') and args.e0 is not None:
            self.hierarchy.e0 = args.e0
        if hasattr(args, 'u0') and args.u0 is not None:
            self.hierarchy.u0 = args.u0

        # Bounds
        if hasattr(args, 'levels') and args.levels is not None:
            self.bounds.levels = args.levels

        # Polynomial tables
        if hasattr(args, 'gamma') and args.gamma is not None:
            self.polys.gamma = args.gamma
        if hasattr(args, 'pmax') and args.pmax is not None:
            self.polys.pmax = args.pmax
        if hasattr(args, 'hermite_nmax') and args.hermite_nmax is not None:
            self.polys.hermite_nmax = args.hermite_nmax

        # Verification
        if hasattr(args, 'alpha_sweep') and args.alpha_sweep is not None:
            self.verify.alpha_sweep = args.alpha_sweep
        if hasattr(args, 'perturb_gap') and args.perturb_gap is not None:
            self.verify.perturb_gap = args.perturb_gap

        # Riccati
        if hasattr(args, 'ansatz') and args.ansatz:
            self.riccati.ansatz = args.ansatz
        if hasattr(args, 'order') and args.order is not None:
            self.riccati.order = args.order
        if hasattr(args, 'solver') and args.solver:
            self.riccati.solver = args.solver
        if hasattr(args, 'max_iter') and args.max_iter is not None:
            self.riccati.max_iter = args.max_iter
        if hasattr(args, 'tol') and args.tol is not None:
            self.tolerances.riccati = args.tol

        # Output
        if hasattr(args, 'format') and args.format:
            self.output.format = args.format
        if hasattr(args, 'out') and args.out:
            if self.command in ('polys', 'riccati', 'verify'):
                self.output.file = Path(args.out)
            else:
                self.output.directory = Path(args.out)


def config_path() -> Path:
    return Path(os.environ.get('CONFIG_PATH', 'config/config.yaml'))


def describe_validation_error(error: ValidationError, path: Path | None = None) -> str:
    """One line per failing field, with the YAML line number when it is known."""
    path = path or config_path()
    lines = []
    for item in error.errors():
        loc = tuple(item['loc'])
        field = '.'.join(str(part) for part in loc) or '<root>'
        line = yaml_key_line(path, loc)
        where = f' ({path}:{line})' if line is not None else ''
        lines.append(f'{field}: {item["msg"]}{where}')
    return '; '.join(lines)


def load_config(**overrides: Any) -> JobConfig:
    """Build a JobConfig, converting validation failures to ConfigError."""
    try:
        return JobConfig(**overrides)
    except ValidationError as e:
        raise ConfigError(describe_validation_error(e)) from e
