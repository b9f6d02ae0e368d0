"""
Tests for the command line surface and exit codes.
"""
import io
import json

import pytest

import main
from cli.commands import build_parser, collect_params, run_command
from config.settings import TestingConfig
from lab.errors import ConfigError
from repositories.result_repository import ResultRepository, records_equal


@pytest.fixture
def run(tmp_path):
    """Run a command with its results in tmp_path; returns (code, stdout text)."""
    def _run(*argv, out=None):
        stdout = io.StringIO()
        target = str(out or tmp_path)
        args = list(argv)
        if args and args[0] != '--help':
            args += ['--out', target]
        code = run_command(args, config=TestingConfig(), stdout=stdout)
        return code, stdout.getvalue()
    return _run


class TestParser:
    """Test argument parsing."""

    def test_no_command_prints_help(self):
        stdout = io.StringIO()
        assert run_command([], config=TestingConfig(), stdout=stdout) == 2
        assert 'limsup-lab' in stdout.getvalue()

    def test_help(self, capsys):
        assert run_command(['--help'], config=TestingConfig(), stdout=io.StringIO()) == 0

    def test_unknown_command(self, capsys):
        assert run_command(['paint'], config=TestingConfig(), stdout=io.StringIO()) == 2

    def test_flags_follow_subcommand(self):
        args = build_parser().parse_args(['cover', '--alpha', '2', '--max-level', '10', '--quick'])
        assert args.alpha == 2.0
        assert args.max_level == 10
        assert args.quick is True


class TestCollectParams:
    """Test config files merged with flags."""

    def test_flags_override_file(self, tmp_path):
        path = tmp_path / 'audit.conf'
        path.write_text('# audit run\ntrials = 50\nlevels = 3\nspace = "torus2"\n')
        args = build_parser().parse_args(['audit', '--config', str(path), '--trials', '40'])
        params = collect_params(args)
        assert params == {'trials': 40, 'levels': 3, 'space': 'torus2'}

    def test_missing_file(self, tmp_path):
        args = build_parser().parse_args(['audit', '--config', str(tmp_path / 'absent.conf')])
        with pytest.raises(ConfigError):
            collect_params(args)


class TestExitCodes:
    """Test failures map to exit codes with one JSON record on stderr."""

    def test_unknown_config_key(self, run, tmp_path, capsys):
        path = tmp_path / 'bad.conf'
        path.write_text('colour = red\n')
        code, _ = run('audit', '--config', str(path))
        assert code == 2
        record = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
        assert record['error'] == 'schema-violation'

    def test_unknown_suite(self, run):
        code, _ = run('suite', 'smoke')
        assert code == 2

    def test_bad_rectangle_order(self, run, capsys):
        code, _ = run('rect', '--a', '2,1')
        assert code == 2
        record = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
        assert record['error'] == 'invalid-parameter'

    def test_zero_critical_exponent(self, run, capsys):
        code, _ = run('cover', '--schedule', 'exponential:1', '--nmax', '1000')
        assert code == 3
        record = json.loads(capsys.readouterr().err.strip().splitlines()[-1])
        assert record['error'] == 'precondition-violated'

    def test_interrupt(self, run, mocker):
        mocker.patch('cli.commands.collect_params', side_effect=KeyboardInterrupt)
        code, _ = run('audit')
        assert code == 130

    def test_internal_error(self, run, mocker):
        mocker.patch('cli.commands.collect_params', side_effect=RuntimeError('boom'))
        code, _ = run('audit')
        assert code == 1


class TestExperiments:
    """Test end-to-end runs write records and print summaries."""

    def test_audit(self, run, tmp_path):
        code, text = run('audit', '--space', 'torus1', '--trials', '300', '--levels', '3', '--seed', '1')
        assert code == 0
        assert text.startswith('audit space=torus1 C=2 s=1')
        records = ResultRepository(str(tmp_path)).read_jsonl('audit.jsonl')
        assert len(records) == 1
        assert records[0]['passed'] is True

    def test_audit_from_structured_space_keys(self, run, tmp_path):
        path = tmp_path / 'symbolic.conf'
        path.write_text('space = symbolic\nm = 3\nb = 0.2\ntrials = 200\nlevels = 3\nseed = 1\n')
        code, text = run('audit', '--config', str(path))
        assert code == 0
        assert text.startswith('audit space=symbolic:3:0.2 C=3')
        records = ResultRepository(str(tmp_path)).read_jsonl('audit.jsonl')
        assert records[0]['space'] == 'symbolic:3:0.2'

    def test_audit_is_reproducible(self, run, tmp_path):
        first, second = tmp_path / 'a', tmp_path / 'b'
        run('audit', '--trials', '200', '--levels', '3', '--seeds', '2', out=first)
        run('audit', '--trials', '200', '--levels', '3', '--seeds', '2', out=second)
        left = ResultRepository(str(first)).read_jsonl('audit.jsonl')
        right = ResultRepository(str(second)).read_jsonl('audit.jsonl')
        assert len(left) == 2
        assert records_equal(left, right)

    def test_cover(self, run, tmp_path):
        code, text = run('cover', '--alpha', '2', '--nmax', '20000', '--levels', '6:10', '--seed', '1')
        assert code == 0
        assert 's0=0.5' in text
        assert (tmp_path / 'cover.jsonl').is_file()
        assert (tmp_path / 'cover_counts.csv').is_file()

    @pytest.mark.slow
    @pytest.mark.integration
    def test_suite_files_are_byte_identical(self, run, tmp_path):
        """Test two quick acceptance runs with one seed write identical files."""
        first, second = tmp_path / 'a', tmp_path / 'b'
        codes = [run('suite', 'acceptance', '--quick', '--seed', '7', out=target)[0]
                 for target in (first, second)]
        assert codes[0] == codes[1]
        for name in ('acceptance.jsonl', 'acceptance_matrix.json'):
            assert (first / name).read_bytes() == (second / name).read_bytes()

    @pytest.mark.slow
    def test_rect(self, run):
        code, text = run('rect', '--factors', 'torus1,torus1', '--a', '1,2', '--quick', '--seed', '1')
        assert code == 0
        assert 'exponent=1.5' in text


class TestMain:
    def test_main_delegates(self, mocker):
        config = TestingConfig()
        mocker.patch('main.get_config', return_value=config)
        setup = mocker.patch('main.setup_logging')
        runner = mocker.patch('main.run_command', return_value=0)

        assert main.main(['audit']) == 0
        setup.assert_called_once_with(config.LOG_LEVEL, config.LOGS_DIR)
        runner.assert_called_once_with(['audit'], config)
