"""Shapes of the JSON documents written by the command-line front-end."""

from typing import Any

from typing_extensions import NotRequired, TypedDict


class SpectrumEntry(TypedDict):
    n: int
    energy: str


class SpectrumLevel(TypedDict):
    level: int
    entries: list[SpectrumEntry]


class SpectrumDocument(TypedDict):
    schema: int
    gaps: list[str]
    e0: str
    u0: str
    levels: list[SpectrumLevel]


class SuperpotentialRecord(TypedDict):
    level: int
    linear_coeff: str
    pole_coeff: str


class PotentialRecord(TypedDict):
    level: int
    quad_coeff: str
    invsq_coeff: str
    const_term: str
    bounded_below: bool
    frobenius_exponents: list[str]


class SummaryDocument(TypedDict):
    schema: int
    period: int
    gaps: list[str]
    alpha: str | None
    degenerate: bool
    notices: list[str]
    superpotentials: list[SuperpotentialRecord]
    potentials: list[PotentialRecord]
    normalization: dict[str, Any]
    length_scale: float


class CheckRecord(TypedDict):
    name: str
    suite: str
    passed: bool
    detail: str
    alpha: NotRequired[str]


class VerificationReport(TypedDict):
    schema: int
    passed: bool
    total: int
    failures: int
    checks: list[CheckRecord]
    alpha_matrix: dict[str, dict[str, bool]]


class PolysRow(TypedDict):
    family: str
    parameter: str
    order: int
    route: str
    coeffs: list[str]
    verdict: str


class RiccatiRecord(TypedDict):
    schema: int
    period: int
    gaps: list[float]
    center: float
    ansatz: str
    solver: str
    order: int | None
    converged: bool
    outcome: str
    residual_norm: float
    tol: float
    iterations: int
    exploratory: bool
    message: str
    superpotentials: list[dict[str, Any]]
