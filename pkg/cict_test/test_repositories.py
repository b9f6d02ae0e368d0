"""Tests for the file and result repositories."""
import json

import numpy as np
import pytest

from lab.cubes import CubeSet, build_tree
from lab.errors import InvalidInputError
from lab.spaces import SymbolicSpace, TorusSpace
from repositories import FileRepository, ResultRepository, records_equal


class TestFileRepository:
    """Test plain file operations."""

    def test_json_round_trip(self, tmp_path):
        """Test JSON writing with sorted keys and reading back."""
        repo = FileRepository(tmp_path)
        assert repo.write_json('sub/data.json', {'b': 1, 'a': [1, 2]})
        text = (tmp_path / 'sub' / 'data.json').read_text()
        assert text.index('"a"') < text.index('"b"')
        assert text.endswith('\n')
        assert repo.read_json('sub/data.json') == {'a': [1, 2], 'b': 1}

    def test_numpy_values_serialized(self, tmp_path):
        """Test numpy scalars and arrays are written as plain JSON."""
        repo = FileRepository(tmp_path)
        assert repo.write_json('np.json', {'x': np.float64(0.5), 'v': np.arange(3)})
        assert repo.read_json('np.json') == {'v': [0, 1, 2], 'x': 0.5}

    def test_missing_file(self, tmp_path):
        """Test reading a missing file returns None."""
        repo = FileRepository(tmp_path)
        assert repo.read_json('nope.json') is None
        assert repo.read_text('nope.txt') is None
        assert not repo.exists('nope.txt')

    def test_invalid_json(self, tmp_path):
        """Test malformed JSON returns None."""
        (tmp_path / 'bad.json').write_text('{not json')
        assert FileRepository(tmp_path).read_json('bad.json') is None

    def test_escape_rejected(self, tmp_path):
        """Test relative paths may not leave the base directory."""
        repo = FileRepository(tmp_path / 'inner')
        assert repo.write_text('../outside.txt', 'x') is False
        assert not (tmp_path / 'outside.txt').exists()


class TestResultRepository:
    """Test experiment artifact files."""

    def test_jsonl_sorted_and_stamped(self, tmp_path):
        """Test one sorted-key object per line with a timestamp field."""
        repo = ResultRepository(tmp_path)
        assert repo.write_jsonl('cover.jsonl', [{'seed': 2, 'dim': 0.5}, {'seed': 3, 'dim': 0.49}],
                                timestamp='2024-06-01T00:00:00+00:00')
        lines = (tmp_path / 'cover.jsonl').read_text().splitlines()
        assert len(lines) == 2
        assert list(json.loads(lines[0])) == ['dim', 'seed', 'timestamp']
        records = repo.read_jsonl('cover.jsonl')
        assert records[1]['seed'] == 3
        assert records[0]['timestamp'] == '2024-06-01T00:00:00+00:00'

    def test_records_equal_ignores_timestamp(self):
        """Test record comparison modulo timestamps."""
        a = [{'seed': 1, 'dim': 0.5, 'timestamp': 'x'}]
        b = [{'seed': 1, 'dim': 0.5, 'timestamp': 'y'}]
        assert records_equal(a, b)
        assert not records_equal(a, [{'seed': 1, 'dim': 0.51, 'timestamp': 'x'}])
        assert not records_equal(a, a + a)

    def test_csv_columns(self, tmp_path):
        """Test CSV header is the sorted key union and gaps are blank."""
        repo = ResultRepository(tmp_path)
        assert repo.write_csv('series.csv', [{'n': 1, 'count': 2}, {'n': 2, 'extra': 'x'}])
        rows = repo.read_csv('series.csv')
        assert list(rows[0]) == ['count', 'extra', 'n']
        assert rows[1] == {'count': '', 'extra': 'x', 'n': '2'}

    def test_cubeset_round_trip(self, tmp_path):
        """Test a cube set written as labels parses back to the same set."""
        tree = build_tree(SymbolicSpace(2, 0.5), max_level=6)
        cubes = CubeSet(tree, 4, [0, 3, 9, 15])
        repo = ResultRepository(tmp_path)
        assert repo.write_cubeset('set.txt', cubes)
        text = (tmp_path / 'set.txt').read_text()
        assert text.splitlines()[1:] == ['0000', '0011', '1001', '1111']
        assert repo.read_cubeset('set.txt', tree) == cubes

    def test_cubeset_other_space_rejected(self, tmp_path):
        """Test cube set files are tied to their space."""
        repo = ResultRepository(tmp_path)
        repo.write_cubeset('set.txt', CubeSet(build_tree(TorusSpace(1), max_level=4), 2, [1]))
        with pytest.raises(InvalidInputError):
            repo.read_cubeset('set.txt', build_tree(SymbolicSpace(2, 0.5), max_level=4))
