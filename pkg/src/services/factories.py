"""Factory classes for building domain objects from configuration."""

import logging
import math

from config.schema import GridConfig, HierarchyConfig, RiccatiConfig, ToleranceConfig
from spectral.errors import ConfigError
from spectral.hierarchy import HierarchySpec
from spectral.numverify import Grid
from spectral.riccati import AnsatzKind, RiccatiProblem, SolverKind

logger = logging.getLogger(__name__)

# Pointwise operator checks stay this far from a singular center.
MIN_CHECK_BAND = 0.5


class HierarchySpecFactory:
    """Factory for the exact hierarchy problem (gaps, ground energy, center)."""

    @staticmethod
    def create(config: HierarchyConfig) -> HierarchySpec:
        gaps, e0, u0 = config.fractions()
        try:
            spec = HierarchySpec(gaps, ground_energy=e0, center=u0)
        except ValueError as e:
            raise ConfigError(f'hierarchy: {e}') from e
        logger.info(f'Hierarchy N={spec.period}, gaps={config.gaps}, E0={e0}, u0={u0}')
        return spec


class GridFactory:
    """Factory for sampling and finite-difference grids."""

    @staticmethod
    def create(config: GridConfig, spec: HierarchySpec, purpose: str = 'output') -> Grid:
        u0 = float(spec.center)
        match purpose:
            case 'output':
                half = config.half_width
                if half is None:
                    c = float(spec.gap_sum) / (2 * spec.period)
                    half = 6.0 / math.sqrt(c)
                return Grid.symmetric(u0, half, config.points)
            case 'fd':
                return Grid.symmetric(u0, config.fd_half_width, config.fd_points)
            case 'richardson':
                return Grid.symmetric(u0, config.fd_half_width, config.richardson_points)
            case 'check':
                band = max(config.excluded_center_halfwidth, MIN_CHECK_BAND)
                return Grid.symmetric(
                    u0, config.fd_half_width / 2, 401, excluded_center_halfwidth=band
                )
            case _:
                raise ValueError(f'Unknown grid purpose: {purpose}')


class RiccatiProblemFactory:
    """Factory for numerical Riccati problems."""

    @staticmethod
    def create(
        config: RiccatiConfig, tolerances: ToleranceConfig, spec: HierarchySpec
    ) -> RiccatiProblem:
        center = float(spec.center)
        grid = Grid.symmetric(
            center,
            config.half_width,
            config.points,
            excluded_center_halfwidth=config.excluded_center_halfwidth,
        )
        match config.ansatz:
            case 'pole_poly':
                ansatz = AnsatzKind.POLE_POLY
            case 'grid':
                ansatz = AnsatzKind.GRID
            case _:
                raise ConfigError(f'Unknown Riccati ansatz: {config.ansatz}')
        return RiccatiProblem(
            gaps=tuple(float(g) for g in spec.gaps),
            center=center,
            ansatz=ansatz,
            order=config.order,
            grid=grid,
            solver=SolverKind(config.solver),
            max_iter=config.max_iter,
            tol=tolerances.riccati,
            order_steps=config.order_steps,
        )
