"""Formatting utilities for exact rationals and output files."""

import json
import logging
from collections.abc import Iterable, Mapping
from fractions import Fraction
from pathlib import Path
from typing import Any

import pandas as pd

logger = logging.getLogger(__name__)

CSV_SCHEMA_LINE = '#schema=1'

FLOAT_FORMAT = '%.17g'


def format_rational(value: Fraction | int) -> str:
    """Lossless text form: "p/q", or "p" for integers."""
    return str(Fraction(value))


def parse_rational(text: str | int) -> Fraction:
    """Inverse of format_rational; floats are rejected."""
    if isinstance(text, float):
        raise TypeError(f'Exact rational text expected, got float {text!r}')
    try:
        return Fraction(str(text).strip())
    except (ValueError, ZeroDivisionError) as e:
        raise ValueError(f'Not a rational number: {text!r}') from e


def format_rationals(values: Iterable[Fraction | int]) -> list[str]:
    return [format_rational(v) for v in values]


def write_csv(path: Path, frame: pd.DataFrame) -> Path:
    """Write a versioned CSV with 17 significant digits; NaN is written as 'nan'."""
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', encoding='utf-8', newline='') as f:
        f.write(CSV_SCHEMA_LINE + '\n')
        frame.to_csv(f, index=False, float_format=FLOAT_FORMAT, na_rep='nan', lineterminator='\n')
    logger.info(f'Wrote {path} ({len(frame)} rows)')
    return path


def read_csv(path: Path) -> pd.DataFrame:
    """Read a file written by write_csv, checking the schema line."""
    with open(path, encoding='utf-8') as f:
        header = f.readline().strip()
        if header != CSV_SCHEMA_LINE:
            raise ValueError(f'{path}: unsupported CSV schema line {header!r}')
        return pd.read_csv(f)


def write_json(path: Path, document: Mapping[str, Any]) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', encoding='utf-8') as f:
        json.dump(document, f, indent=2, ensure_ascii=False)
        f.write('\n')
    logger.info(f'Wrote {path}')
    return path


def read_json(path: Path) -> dict[str, Any]:
    with open(path, encoding='utf-8') as f:
        return json.load(f)
