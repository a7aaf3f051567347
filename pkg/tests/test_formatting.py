"""Tests for rational text forms and the CSV/JSON writers."""

import math
from fractions import Fraction

import pandas as pd
import pytest

from utils.formatting import (
    CSV_SCHEMA_LINE,
    format_rational,
    format_rationals,
    parse_rational,
    read_csv,
    read_json,
    write_csv,
    write_json,
)


@pytest.mark.unit
class TestRationalText:
    def test_format(self):
        assert format_rational(Fraction(-3, 4)) == '-3/4'
        assert format_rational(Fraction(6, 3)) == '2'
        assert format_rationals([1, Fraction(1, 2)]) == ['1', '1/2']

    def test_parse(self):
        assert parse_rational(' 7/3 ') == Fraction(7, 3)
        assert parse_rational(5) == 5

    def test_parse_rejects_float(self):
        with pytest.raises(TypeError):
            parse_rational(0.5)  # type: ignore[arg-type]

    def test_parse_rejects_garbage(self):
        with pytest.raises(ValueError):
            parse_rational('1/0')
        with pytest.raises(ValueError):
            parse_rational('abc')

    def test_large_values_survive(self):
        value = Fraction(2**80 + 1, 3**41)
        assert parse_rational(format_rational(value)) == value


@pytest.mark.unit
class TestCsv:
    def test_schema_line_and_precision(self, tmp_path):
        frame = pd.DataFrame({'u': [0.1, 1 / 3], 'psi': [math.nan, -2.5e-300]})
        path = write_csv(tmp_path / 'nested' / 'states.csv', frame)
        lines = path.read_text().splitlines()
        assert lines[0] == CSV_SCHEMA_LINE
        assert lines[1] == 'u,psi'
        assert lines[2] == '0.10000000000000001,nan'

        back = read_csv(path)
        assert back['u'].tolist() == [0.1, 1 / 3]
        assert math.isnan(back['psi'][0])
        assert back['psi'][1] == -2.5e-300

    def test_unknown_schema_rejected(self, tmp_path):
        path = tmp_path / 'old.csv'
        path.write_text('u,psi\n0,1\n')
        with pytest.raises(ValueError):
            read_csv(path)

    def test_string_columns_kept(self, tmp_path):
        frame = pd.DataFrame({'route': ['series'], 'coeffs': ['1 -1/2']})
        path = write_csv(tmp_path / 'polys.csv', frame)
        assert read_csv(path)['coeffs'][0] == '1 -1/2'


@pytest.mark.unit
class TestJson:
    def test_round_trip(self, tmp_path):
        document = {'schema': 1, 'gaps': ['1', '2'], 'energy': None}
        path = write_json(tmp_path / 'out' / 'spectrum.json', document)
        assert path.read_text().endswith('\n')
        assert read_json(path) == document
