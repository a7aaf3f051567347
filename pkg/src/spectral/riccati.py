"""Numerical solver for the periodic Riccati closure of any period N.

The unknowns are superpotentials W_1..W_N satisfying, cyclically with
W_{N+1} = W_1,

    W_{l+1}^2 - W_{l+1}' + gap_l = W_l^2 + W_l'.

Two ansatz families are supported. ``pole_poly`` writes

    W_l(u) = c_l x + a_l / x + sum_{k = 3, 5, ..., K} b_{l,k} x^k,   x = u - u0,

which contains the closed forms of periods 1 and 2. ``grid`` samples W_l on
the positive half of a symmetric grid and extends it as an odd function.
A result only counts as converged once the residual, re-evaluated on a finer
grid than the one used for fitting, is below tolerance.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Protocol

import numpy as np
from scipy import optimize
from scipy.interpolate import CubicSpline

from models.response_types import RiccatiRecord
from spectral.errors import AnsatzInsufficient, NoConvergence
from spectral.numverify import Grid

logger = logging.getLogger(__name__)


class AnsatzKind(str, Enum):
    POLE_POLY = 'pole_poly'
    GRID = 'grid'


class SolverKind(str, Enum):
    NEWTON = 'newton'
    LEAST_SQUARES = 'least_squares'


class RiccatiOutcome(str, Enum):
    CONVERGED = 'converged'
    NO_CONVERGENCE = 'no_convergence'
    ANSATZ_INSUFFICIENT = 'ansatz_insufficient'


class SuperpotentialLike(Protocol):
    center: Any

    def value(self, u: np.ndarray) -> np.ndarray: ...

    def derivative(self, u: np.ndarray) -> np.ndarray: ...


@dataclass(frozen=True)
class PolePolySuperpotential:
    linear_coeff: float
    pole_coeff: float
    # Coefficients of x^3, x^5, ...
    series: tuple[float, ...] = ()
    center: float = 0.0

    def value(self, u: np.ndarray) -> np.ndarray:
        x = np.asarray(u, dtype=float) - self.center
        out = self.linear_coeff * x + self.pole_coeff / x
        for j, b in enumerate(self.series, start=1):
            out = out + b * x ** (2 * j + 1)
        return out

    def derivative(self, u: np.ndarray) -> np.ndarray:
        x = np.asarray(u, dtype=float) - self.center
        out = self.linear_coeff - self.pole_coeff / x**2
        for j, b in enumerate(self.series, start=1):
            out = out + (2 * j + 1) * b * x ** (2 * j)
        return out

    def to_record(self, level: int) -> dict[str, Any]:
        return {
            'level': level,
            'linear_coeff': self.linear_coeff,
            'pole_coeff': self.pole_coeff,
            'series': {str(2 * j + 1): b for j, b in enumerate(self.series, start=1)},
        }


class GridSuperpotential:
    """Odd extension of W sampled on x > 0, interpolated by a cubic spline."""

    def __init__(self, x: np.ndarray, values: np.ndarray, center: float = 0.0):
        self.x = np.asarray(x, dtype=float)
        self.values = np.asarray(values, dtype=float)
        self.center = center
        self._spline = CubicSpline(self.x, self.values)

    def value(self, u: np.ndarray) -> np.ndarray:
        x = np.asarray(u, dtype=float) - self.center
        return np.sign(x) * self._spline(np.abs(x))

    def derivative(self, u: np.ndarray) -> np.ndarray:
        x = np.asarray(u, dtype=float) - self.center
        return self._spline(np.abs(x), 1)

    def to_record(self, level: int) -> dict[str, Any]:
        return {
            'level': level,
            'x': self.x.tolist(),
            'w': self.values.tolist(),
        }


@dataclass(frozen=True)
class RiccatiProblem:
    gaps: tuple[float, ...]
    center: float = 0.0
    ansatz: AnsatzKind = AnsatzKind.POLE_POLY
    # Highest odd power K of the series part (1 means no series).
    order: int = 7
    grid: Grid | None = None
    solver: SolverKind = SolverKind.NEWTON
    max_iter: int = 200
    tol: float = 1e-10
    regularization: float = 1e-8
    order_steps: int = 2

    def __post_init__(self) -> None:
        gaps = tuple(float(g) for g in self.gaps)
        if not gaps:
            raise ValueError('At least one gap is required')
        if any(g <= 0 for g in gaps):
            raise ValueError(f'Gaps must be strictly positive, got {gaps}')
        if self.tol <= 0:
            raise ValueError(f'Tolerance must be positive, got {self.tol}')
        if self.order < 1 or self.order % 2 == 0:
            raise ValueError(f'Series order must be a positive odd integer, got {self.order}')
        if self.max_iter < 1:
            raise ValueError(f'max_iter must be positive, got {self.max_iter}')
        object.__setattr__(self, 'gaps', gaps)
        object.__setattr__(self, 'ansatz', AnsatzKind(self.ansatz))
        object.__setattr__(self, 'solver', SolverKind(self.solver))
        if self.grid is not None:
            self.grid.check_brackets(self.center)

    @property
    def period(self) -> int:
        return len(self.gaps)

    @property
    def collocation_grid(self) -> Grid:
        if self.grid is not None:
            return self.grid
        return Grid.symmetric(self.center, 3.0, 121, excluded_center_halfwidth=0.25)

    @property
    def initial_slope(self) -> float:
        return sum(self.gaps) / (2 * self.period)


@dataclass
class RiccatiSolution:
    superpotentials: tuple[SuperpotentialLike, ...]
    residual_norm: float
    converged: bool
    outcome: RiccatiOutcome
    problem: RiccatiProblem
    iterations: int = 0
    order: int | None = None
    message: str = ''
    history: list[float] = field(default_factory=list)

    @property
    def exploratory(self) -> bool:
        return self.problem.period >= 3

    def raise_for_outcome(self) -> None:
        match self.outcome:
            case RiccatiOutcome.ANSATZ_INSUFFICIENT:
                raise AnsatzInsufficient(self.message, solution=self)
            case RiccatiOutcome.NO_CONVERGENCE:
                raise NoConvergence(self.message, solution=self)

    def to_record(self) -> RiccatiRecord:
        return {
            'schema': 1,
            'period': self.problem.period,
            'gaps': list(self.problem.gaps),
            'center': self.problem.center,
            'ansatz': self.problem.ansatz.value,
            'solver': self.problem.solver.value,
            'order': self.order,
            'converged': self.converged,
            'outcome': self.outcome.value,
            'residual_norm': self.residual_norm,
            'tol': self.problem.tol,
            'iterations': self.iterations,
            'exploratory': self.exploratory,
            'message': self.message,
            'superpotentials': [
                w.to_record(level)  # type: ignore[attr-defined]
                for level, w in enumerate(self.superpotentials, start=1)
            ],
        }


def riccati_residual(
    superpotentials: Sequence[SuperpotentialLike], gaps: Sequence[float], grid: Grid
) -> float:
    """max over levels and grid points of |W_{l+1}^2 - W_{l+1}' + gap_l - W_l^2 - W_l'|."""
    if len(superpotentials) != len(gaps):
        raise ValueError(f'{len(superpotentials)} superpotentials for {len(gaps)} gaps')
    center = float(superpotentials[0].center)
    u = grid.sample(center)
    # The pole terms are undefined at u0 even when no band is excluded.
    u = u[np.abs(u - center) >= 0.5 * grid.spacing]
    n = len(gaps)
    values = [np.asarray(w.value(u), dtype=float) for w in superpotentials]
    slopes = [np.asarray(w.derivative(u), dtype=float) for w in superpotentials]
    worst = 0.0
    for lam in range(n):
        nxt = (lam + 1) % n
        r = values[nxt] ** 2 - slopes[nxt] + gaps[lam] - values[lam] ** 2 - slopes[lam]
        worst = max(worst, float(np.max(np.abs(r))))
    return worst


def _positive_nodes(grid: Grid, center: float) -> np.ndarray:
    u = grid.sample(center)
    return u[u > center] - center


def _basis(x: np.ndarray, order: int, scale: float) -> tuple[np.ndarray, np.ndarray]:
    """Columns x, 1/x, (x/L)^3, ..., (x/L)^K and their derivatives."""
    cols = [x, 1.0 / x]
    dcols = [np.ones_like(x), -1.0 / x**2]
    for k in range(3, order + 1, 2):
        cols.append((x / scale) ** k)
        dcols.append(k * (x / scale) ** (k - 1) / scale)
    return np.column_stack(cols), np.column_stack(dcols)


def _pole_poly_fit(
    problem: RiccatiProblem, order: int, start: np.ndarray | None
) -> tuple[np.ndarray, int, str]:
    grid = problem.collocation_grid
    x = _positive_nodes(grid, problem.center)
    scale = float(np.max(x))
    b, db = _basis(x, order, scale)
    n, m = problem.period, b.shape[1]
    gaps = np.asarray(problem.gaps)

    def unpack(theta: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        t = theta.reshape(n, m)
        return b @ t.T, db @ t.T

    def fun(theta: np.ndarray) -> np.ndarray:
        w, dw = unpack(theta)
        blocks = []
        for lam in range(n):
            nxt = (lam + 1) % n
            blocks.append(w[:, nxt] ** 2 - dw[:, nxt] + gaps[lam] - w[:, lam] ** 2 - dw[:, lam])
        return np.concatenate(blocks)

    def jac(theta: np.ndarray) -> np.ndarray:
        w, _ = unpack(theta)
        out = np.zeros((n * len(x), n * m))
        for lam in range(n):
            nxt = (lam + 1) % n
            rows = slice(lam * len(x), (lam + 1) * len(x))
            out[rows, nxt * m : (nxt + 1) * m] += 2 * w[:, nxt, None] * b - db
            out[rows, lam * m : (lam + 1) * m] -= 2 * w[:, lam, None] * b + db
        return out

    theta0 = np.zeros((n, m))
    theta0[:, 0] = problem.initial_slope
    if start is not None:
        theta0[:, : start.shape[1]] = start
    method = 'lm' if problem.solver is SolverKind.NEWTON else 'trf'
    result = optimize.least_squares(
        fun,
        theta0.ravel(),
        jac=jac,
        method=method,
        x_scale='jac',
        ftol=1e-15,
        xtol=1e-15,
        gtol=1e-15,
        max_nfev=problem.max_iter * (n * m + 1),
    )
    return result.x.reshape(n, m), int(result.nfev), str(result.message)


def _pole_poly_superpotentials(
    theta: np.ndarray, problem: RiccatiProblem, order: int
) -> tuple[PolePolySuperpotential, ...]:
    x = _positive_nodes(problem.collocation_grid, problem.center)
    scale = float(np.max(x))
    out = []
    for row in theta:
        series = tuple(
            float(beta) / scale**k for beta, k in zip(row[2:], range(3, order + 1, 2), strict=True)
        )
        out.append(PolePolySuperpotential(float(row[0]), float(row[1]), series, problem.center))
    return tuple(out)


def _solve_pole_poly(problem: RiccatiProblem) -> RiccatiSolution:
    certify_grid = problem.collocation_grid.refined(2)
    history: list[float] = []
    start: np.ndarray | None = None
    iterations = 0
    best: RiccatiSolution | None = None

    for order in range(problem.order, problem.order + 2 * problem.order_steps + 1, 2):
        theta, nfev, message = _pole_poly_fit(problem, order, start)
        iterations += nfev
        ws = _pole_poly_superpotentials(theta, problem, order)
        residual = riccati_residual(ws, problem.gaps, certify_grid)
        history.append(residual)
        logger.info(f'Riccati N={problem.period} order {order}: certified residual {residual:.3e}')
        if best is None or residual < best.residual_norm:
            best = RiccatiSolution(
                ws,
                residual,
                False,
                RiccatiOutcome.NO_CONVERGENCE,
                problem,
                iterations,
                order,
                message,
            )
        if residual <= problem.tol:
            best.converged = True
            best.outcome = RiccatiOutcome.CONVERGED
            best.iterations = iterations
            break
        start = theta
    assert best is not None

    best.history = history
    best.iterations = iterations
    if not best.converged:
        if len(history) > 1 and history[-1] > 0.1 * history[-2]:
            best.outcome = RiccatiOutcome.ANSATZ_INSUFFICIENT
            best.message = (
                f'Residual plateaus at {best.residual_norm:.3e} > tol {problem.tol:.1e} '
                f'up to order {problem.order + 2 * problem.order_steps}'
            )
        else:
            best.message = (
                f'Best certified residual {best.residual_norm:.3e} > tol {problem.tol:.1e}'
            )
    return best


def _difference_matrix(x: np.ndarray) -> np.ndarray:
    """Second-order first-derivative matrix on uniform nodes."""
    n = len(x)
    h = x[1] - x[0]
    d = np.zeros((n, n))
    for i in range(1, n - 1):
        d[i, i - 1], d[i, i + 1] = -0.5 / h, 0.5 / h
    d[0, :3] = np.array([-1.5, 2.0, -0.5]) / h
    d[-1, -3:] = np.array([0.5, -2.0, 1.5]) / h
    return d


def _solve_grid(problem: RiccatiProblem) -> RiccatiSolution:
    x = _positive_nodes(problem.collocation_grid, problem.center)
    d = _difference_matrix(x)
    curvature = np.diff(np.eye(len(x)), n=2, axis=0)
    n, m = problem.period, len(x)
    gaps = np.asarray(problem.gaps)
    weight = math.sqrt(problem.regularization)

    def fun(flat: np.ndarray) -> np.ndarray:
        w = flat.reshape(n, m)
        dw = w @ d.T
        blocks = []
        for lam in range(n):
            nxt = (lam + 1) % n
            blocks.append(w[nxt] ** 2 - dw[nxt] + gaps[lam] - w[lam] ** 2 - dw[lam])
        blocks.extend(weight * (curvature @ w[lam]) for lam in range(n))
        return np.concatenate(blocks)

    w0 = np.tile(problem.initial_slope * x, (n, 1))
    method = 'lm' if problem.solver is SolverKind.NEWTON else 'trf'
    result = optimize.least_squares(
        fun, w0.ravel(), method=method, max_nfev=problem.max_iter * (n * m + 1)
    )
    values = result.x.reshape(n, m)
    ws = tuple(GridSuperpotential(x, values[lam], problem.center) for lam in range(n))
    residual = riccati_residual(ws, problem.gaps, problem.collocation_grid.refined(2))
    converged = residual <= problem.tol
    outcome = RiccatiOutcome.CONVERGED if converged else RiccatiOutcome.NO_CONVERGENCE
    message = str(result.message) if converged else (
        f'Grid collocation residual {residual:.3e} > tol {problem.tol:.1e}'
    )
    return RiccatiSolution(
        ws, residual, converged, outcome, problem, int(result.nfev), None, message, [residual]
    )


def solve_periodic(problem: RiccatiProblem) -> RiccatiSolution:
    """Fit and certify superpotentials; never raises on non-convergence."""
    if problem.period >= 3:
        logger.info(f'Period N={problem.period} has no closed form; result is exploratory')
    match problem.ansatz:
        case AnsatzKind.POLE_POLY:
            solution = _solve_pole_poly(problem)
        case AnsatzKind.GRID:
            solution = _solve_grid(problem)
    logger.info(
        f'Riccati solve finished: outcome={solution.outcome.value}, '
        f'residual={solution.residual_norm:.3e}, evaluations={solution.iterations}'
    )
    return solution
