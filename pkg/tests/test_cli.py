"""
Tests for CLI module.

This test suite verifies the command-line interface functionality,
including exit codes and the files each command writes.
"""

import json

import pandas as pd
import pytest
import yaml
from click.testing import CliRunner

from hybridnav import __version__
from hybridnav.cli import (
    EXIT_DIVERGENCE,
    EXIT_ERROR,
    EXIT_VALIDATION,
    cli,
    exit_code_for,
    load_run_config,
)
from hybridnav.exceptions import (
    ConfigurationError,
    RoutingError,
    TrainingDivergenceError,
    ValidationError,
)
from hybridnav.metadata import METADATA_FILENAME, MetadataSerializer
from hybridnav.world import load_world


@pytest.fixture
def runner():
    """Create a Click CLI runner for testing."""
    return CliRunner()


@pytest.fixture
def config_file(run_config, tmp_path):
    """The tiny run configuration written as YAML."""
    path = tmp_path / 'run.yaml'
    path.write_text(yaml.safe_dump(run_config.to_dict()), encoding='utf-8')
    return path


class TestGroup:
    """Test suite for the command group."""

    def test_version(self, runner):
        result = runner.invoke(cli, ['--version'])
        assert result.exit_code == 0
        assert __version__ in result.output

    def test_help_lists_commands(self, runner):
        result = runner.invoke(cli, ['--help'])
        assert result.exit_code == 0
        for command in ('gen-worlds', 'train', 'eval', 'ablate', 'gradcheck',
                        'roundtrip-waypoints'):
            assert command in result.output


class TestExitCodes:
    """Test suite for error to exit code mapping."""

    def test_mapping(self):
        assert exit_code_for(ConfigurationError("x")) == EXIT_VALIDATION
        assert exit_code_for(ValidationError("x")) == EXIT_VALIDATION
        assert exit_code_for(TrainingDivergenceError("x")) == EXIT_DIVERGENCE
        assert exit_code_for(RoutingError("x")) == EXIT_ERROR


class TestLoadRunConfig:
    """Test suite for configuration loading with overrides."""

    def test_file_and_overrides(self, config_file, run_config):
        config = load_run_config(str(config_file), seed=9, jobs=3, out='o', checkpoint='c.ckpt')
        assert config.episode_seed == 9
        assert config.training.seed == 9
        assert config.training.worlds == run_config.training.worlds
        assert (config.jobs, config.output_dir, config.checkpoint) == (3, 'o', 'c.ckpt')

    def test_defaults_without_file(self):
        config = load_run_config(None)
        assert config.checkpoint is None


class TestGenWorlds:
    """Test suite for gen-worlds."""

    def test_writes_worlds(self, runner, config_file, tmp_path):
        out = tmp_path / 'worlds'
        result = runner.invoke(cli, ['gen-worlds', '--config', str(config_file),
                                     '--seed', '5', '--count', '2', '--out', str(out)])
        assert result.exit_code == 0, result.output
        for seed in (5, 6):
            world = load_world(out / f'world_{seed}.json')
            assert len(world.nodes) == 16
        metadata = MetadataSerializer().from_yaml(out / METADATA_FILENAME)
        assert metadata.kind == 'gen-worlds'
        assert len(metadata.outputs) == 2

    def test_bad_count(self, runner, tmp_path):
        result = runner.invoke(cli, ['gen-worlds', '--count', '0', '--out', str(tmp_path)])
        assert result.exit_code == EXIT_VALIDATION

    def test_invalid_config_value(self, runner, tmp_path):
        path = tmp_path / 'bad.yaml'
        path.write_text("world:\n  rooms: 0\n", encoding='utf-8')
        result = runner.invoke(cli, ['gen-worlds', '--config', str(path), '--out', str(tmp_path)])
        assert result.exit_code == EXIT_VALIDATION
        assert 'rooms' in result.output

    def test_missing_config(self, runner, tmp_path):
        result = runner.invoke(cli, ['gen-worlds', '--config', str(tmp_path / 'none.yaml'),
                                     '--out', str(tmp_path)])
        assert result.exit_code == EXIT_VALIDATION


class TestEvalAndAblate:
    """Test suite for eval and ablate argument handling."""

    def test_eval_needs_checkpoint(self, runner, config_file, tmp_path):
        result = runner.invoke(cli, ['eval', '--config', str(config_file),
                                     '--out', str(tmp_path)])
        assert result.exit_code == EXIT_VALIDATION
        assert 'hybridnav train' in result.output

    def test_ablate_needs_checkpoint(self, runner, config_file, tmp_path):
        result = runner.invoke(cli, ['ablate', 'memory_type', '--config', str(config_file),
                                     '--out', str(tmp_path)])
        assert result.exit_code == EXIT_VALIDATION

    def test_unknown_suite(self, runner):
        result = runner.invoke(cli, ['ablate', 'colour'])
        assert result.exit_code == 2
        assert 'colour' in result.output


class TestChecksCommands:
    """Test suite for the self-check commands."""

    def test_roundtrip_waypoints(self, runner):
        result = runner.invoke(cli, ['roundtrip-waypoints', '--trials', '20', '--seed', '1'])
        assert result.exit_code == 0, result.output
        assert 'Recovered 20/20' in result.output

    @pytest.mark.slow
    def test_gradcheck(self, runner, tmp_path):
        result = runner.invoke(cli, ['gradcheck', '--entries', '2', '--out', str(tmp_path)])
        assert result.exit_code == 0, result.output
        payload = json.loads((tmp_path / 'gradcheck.json').read_text(encoding='utf-8'))
        assert payload['passed'] is True
        assert payload['kind_counts']['imagination'] > 0
        assert payload['policy']['d_model'] == 64


@pytest.mark.slow
class TestTrainThenEvaluate:
    """End-to-end run of train followed by eval on the tiny configuration."""

    def test_pipeline(self, runner, config_file, tmp_path):
        train_dir = tmp_path / 'train'
        result = runner.invoke(cli, ['train', '--config', str(config_file),
                                     '--out', str(train_dir), '--no-progress'])
        assert result.exit_code == 0, result.output
        checkpoint = train_dir / 'policy.ckpt'
        assert checkpoint.exists()
        summary = json.loads((train_dir / 'training.json').read_text(encoding='utf-8'))
        assert set(summary['losses']) == {'room', 'waypoint', 'imaginer', 'policy'}
        assert summary['held_out']['world_seed'] == 1

        eval_dir = tmp_path / 'eval'
        result = runner.invoke(cli, ['eval', '--config', str(config_file),
                                     '--checkpoint', str(checkpoint),
                                     '--out', str(eval_dir), '--no-progress'])
        assert result.exit_code == 0, result.output
        report = pd.read_csv(eval_dir / 'report.csv')
        assert report.loc[0, 'label'] == 'all'
        assert report.loc[0, 'episodes'] == 4
        assert (eval_dir / METADATA_FILENAME).exists()
        assert len(list((eval_dir / 'episodes').glob('*.json'))) == 4

    def test_report_independent_of_jobs(self, runner, config_file, tmp_path):
        """Serial and eight-worker evaluations write byte-identical reports."""
        train_dir = tmp_path / 'train'
        result = runner.invoke(cli, ['train', '--config', str(config_file),
                                     '--out', str(train_dir), '--no-progress'])
        assert result.exit_code == 0, result.output

        reports = []
        for jobs in ('1', '8'):
            eval_dir = tmp_path / f'eval_{jobs}'
            result = runner.invoke(cli, ['eval', '--config', str(config_file),
                                         '--checkpoint', str(train_dir / 'policy.ckpt'),
                                         '--jobs', jobs, '--out', str(eval_dir),
                                         '--no-progress'])
            assert result.exit_code == 0, result.output
            reports.append((eval_dir / 'report.json').read_bytes())
        assert reports[0] == reports[1]
