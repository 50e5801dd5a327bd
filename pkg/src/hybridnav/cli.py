"""
Command Line Interface for hybridnav.

Available Commands:
    - hybridnav gen-worlds: Generate and save procedural worlds
    - hybridnav train: Train the policy and the lite auxiliary models
    - hybridnav eval: Evaluate a checkpoint on the benchmark
    - hybridnav ablate SUITE: Run one ablation suite
    - hybridnav gradcheck: Finite-difference check of the policy gradients
    - hybridnav roundtrip-waypoints: Heatmap / NMS round-trip check

Exit codes: 0 on success, 2 on validation failures, 3 on training
divergence, 1 on any other error.

Example:
    $ hybridnav train --config run.yaml --out runs/train
    $ hybridnav eval --config run.yaml --checkpoint runs/train/policy.ckpt --out runs/eval
"""

import json
import logging
import sys
import time
import traceback
from dataclasses import replace
from pathlib import Path
from typing import Dict, List, Optional

import click

from hybridnav import __version__
from hybridnav.config import RunConfig
from hybridnav.evalmetrics import MetricsExporter
from hybridnav.exceptions import (
    ConfigurationError,
    HybridNavError,
    TrainingDivergenceError,
    ValidationError,
    suggest_fix,
)
from hybridnav.harness import (
    SUITES,
    AgentBundle,
    build_benchmark,
    evaluate_episodes,
    fit_bundle,
    policy_gradcheck,
    run_ablation,
    score_results,
    training_worlds,
    waypoint_roundtrip,
)
from hybridnav.metadata import RunKind, RunMetadata, write_run_metadata
from hybridnav.visualization import plot_ablation, plot_gamma_trend
from hybridnav.world import generate_world, save_world


logger = logging.getLogger(__name__)

EXIT_ERROR = 1
EXIT_VALIDATION = 2
EXIT_DIVERGENCE = 3
CHECKPOINT_NAME = 'policy.ckpt'


# ANSI color codes for terminal output
class Colors:
    """ANSI color codes for terminal output."""
    HEADER = '\033[95m'
    OKBLUE = '\033[94m'
    OKCYAN = '\033[96m'
    OKGREEN = '\033[92m'
    WARNING = '\033[93m'
    FAIL = '\033[91m'
    ENDC = '\033[0m'
    BOLD = '\033[1m'


def success_msg(message: str) -> None:
    """Print success message in green."""
    click.echo(f"{Colors.OKGREEN}✓{Colors.ENDC} {message}")


def error_msg(message: str, details: Optional[dict] = None) -> None:
    """Print error message in red with optional details."""
    click.echo(f"{Colors.FAIL}✗{Colors.ENDC} {message}", err=True)
    if details:
        click.echo(f"{Colors.WARNING}  Details:{Colors.ENDC}", err=True)
        for key, value in details.items():
            click.echo(f"    {key}: {value}", err=True)


def info_msg(message: str) -> None:
    """Print info message in blue."""
    click.echo(f"{Colors.OKBLUE}ℹ{Colors.ENDC} {message}")


def warning_msg(message: str) -> None:
    """Print warning message in yellow."""
    click.echo(f"{Colors.WARNING}⚠{Colors.ENDC} {message}")


def tip_msg(message: str) -> None:
    """Print tip message in cyan."""
    click.echo(f"{Colors.OKCYAN}💡{Colors.ENDC} {message}")


def exit_code_for(error: HybridNavError) -> int:
    if isinstance(error, TrainingDivergenceError):
        return EXIT_DIVERGENCE
    if isinstance(error, (ValidationError, ConfigurationError)):
        return EXIT_VALIDATION
    return EXIT_ERROR


def handle_hybridnav_error(error: HybridNavError) -> None:
    """
    Report a package error with its details and a suggested fix, then exit.

    Args:
        error: The exception to handle
    """
    error_msg(str(error))

    if error.details:
        for key, value in error.details.items():
            click.echo(f"  {Colors.WARNING}•{Colors.ENDC} {key}: {value}", err=True)

    suggestion = suggest_fix(error)
    if suggestion:
        tip_msg(suggestion)

    sys.exit(exit_code_for(error))


def handle_unexpected_error(error: Exception) -> None:
    """
    Handle unexpected errors with debugging information.

    Args:
        error: The unexpected exception
    """
    error_msg(f"An unexpected error occurred: {error}")
    click.echo(f"\n{Colors.WARNING}Error type:{Colors.ENDC} {error.__class__.__name__}", err=True)

    if '--verbose' in sys.argv or '-v' in sys.argv:
        click.echo(f"\n{Colors.WARNING}Stack trace:{Colors.ENDC}", err=True)
        traceback.print_exc()

    sys.exit(EXIT_ERROR)


def load_run_config(path: Optional[str], seed: Optional[int] = None,
                    jobs: Optional[int] = None, out: Optional[str] = None,
                    checkpoint: Optional[str] = None) -> RunConfig:
    """
    Run configuration from a file (defaults otherwise) with CLI overrides.

    ``--seed`` replaces the episode seed and the training seed.
    """
    config = RunConfig.from_file(path) if path else RunConfig()
    overrides = {}
    if seed is not None:
        overrides['episode_seed'] = seed
        overrides['training'] = replace(config.training, seed=seed)
    if jobs is not None:
        overrides['jobs'] = jobs
    if out is not None:
        overrides['output_dir'] = out
    if checkpoint is not None:
        overrides['checkpoint'] = checkpoint
    return replace(config, **overrides) if overrides else config


def _write_json(path: Path, payload: Dict) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2) + "\n", encoding='utf-8')
    return path


def _finish_metadata(metadata: RunMetadata, output_dir: Path, outputs: List[Path],
                     durations: Dict[str, float]) -> None:
    metadata.outputs = [str(p) for p in outputs]
    metadata.execution.durations = durations
    write_run_metadata(metadata, output_dir)


def _run(action):
    """Run a command body, mapping errors to messages and exit codes."""
    try:
        return action()
    except HybridNavError as e:
        handle_hybridnav_error(e)
    except (click.ClickException, click.exceptions.Exit, SystemExit):
        raise
    except Exception as e:
        handle_unexpected_error(e)


config_option = click.option('--config', 'config_path', type=click.Path(dir_okay=False),
                             default=None, help='Run configuration (JSON or YAML)')
seed_option = click.option('--seed', type=int, default=None,
                           help='Seed overriding the configured episode/training seed')
jobs_option = click.option('--jobs', type=int, default=None,
                           help='Worker processes for episode evaluation')
out_option = click.option('--out', type=click.Path(file_okay=False), default=None,
                          help='Output directory')
checkpoint_option = click.option('--checkpoint', type=click.Path(dir_okay=False), default=None,
                                 help='Agent checkpoint path')
progress_option = click.option('--progress/--no-progress', default=True, show_default=True,
                               help='Show progress bars')


@click.group()
@click.version_option(version=__version__)
@click.option('--verbose', '-v', is_flag=True, help='Log at INFO level and show stack traces')
def cli(verbose: bool):
    """
    hybridnav Command Line Interface.

    Vision-and-language navigation with a hybrid memory of observed and
    imagined places, on procedural synthetic worlds.
    """
    logging.basicConfig(level=logging.INFO if verbose else logging.WARNING,
                        format='%(asctime)s %(name)s %(levelname)s: %(message)s')


@cli.command('gen-worlds')
@config_option
@click.option('--seed', type=int, default=None,
              help='First world seed [default: the evaluation block start]')
@click.option('--count', type=int, default=1, show_default=True, help='Number of worlds')
@click.option('--out', type=click.Path(file_okay=False), required=True,
              help='Directory receiving world_<seed>.json files')
def gen_worlds(config_path, seed, count, out):
    """
    Generate procedural worlds and save them as JSON.

    \b
    Example:
        hybridnav gen-worlds --seed 1000 --count 5 --out worlds/
    """
    def action():
        config = load_run_config(config_path, out=out)
        first = config.eval_seed_start if seed is None else seed
        if count < 1:
            raise ConfigurationError("--count must be at least 1.", details={'count': count})
        output_dir = Path(out)
        metadata = RunMetadata.for_run(RunKind.GEN_WORLDS, config)
        started = time.perf_counter()
        paths = []
        for world_seed in range(first, first + count):
            world = generate_world(replace(config.world, seed=world_seed))
            paths.append(save_world(world, output_dir / f"world_{world_seed}.json"))
            info_msg(f"World {world_seed}: {len(world.nodes)} nodes, {len(world.edges)} edges")
        _finish_metadata(metadata, output_dir, paths,
                         {'generate': time.perf_counter() - started})
        success_msg(f"Saved {len(paths)} worlds to {output_dir}")

    _run(action)


@cli.command()
@config_option
@seed_option
@out_option
@checkpoint_option
@progress_option
def train(config_path, seed, out, checkpoint, progress):
    """
    Train the auxiliary models, then the policy on expert paths.

    The room model and the waypoint model are fitted first, the learned
    imaginer next, and the policy last on decisions recorded with the
    trained imagination. The last training world is held out for the
    next-action accuracy.

    \b
    Example:
        hybridnav train --config run.yaml --out runs/train
    """
    def action():
        config = load_run_config(config_path, seed, out=out, checkpoint=checkpoint)
        output_dir = Path(config.output_dir)
        target = Path(config.checkpoint) if config.checkpoint else output_dir / CHECKPOINT_NAME
        metadata = RunMetadata.for_run(RunKind.TRAIN, config, checkpoint=str(target))
        info_msg(f"Generating {config.training.worlds} training worlds")
        worlds = training_worlds(config)
        bundle = AgentBundle.initial(worlds[0], config.policy,
                                     history_length=config.agent.history_length)
        try:
            outcome = fit_bundle(config, bundle, worlds, show_progress=progress)
        except TrainingDivergenceError as e:
            module = bundle.modules().get(e.details.get('model'))
            if module is not None and e.last_good_state is not None:
                module.load_state_dict(e.last_good_state)
            bundle.save(target, {'diverged': e.to_dict()})
            warning_msg(f"Saved last good parameters to {target}")
            raise

        if outcome.held_out is not None:
            info_msg(f"Held-out next-action accuracy {outcome.held_out['accuracy']:.3f} "
                     f"(chance {outcome.held_out['chance']:.3f})")
        outputs = [bundle.save(target, {'run_id': metadata.run_id}),
                   _write_json(output_dir / 'training.json', outcome.to_dict())]
        _finish_metadata(metadata, output_dir, outputs, outcome.durations)
        success_msg(f"Checkpoint written to {target}")

    _run(action)


def _require_checkpoint(config: RunConfig) -> str:
    if not config.checkpoint:
        raise ConfigurationError(
            "No checkpoint given: pass --checkpoint or set checkpoint in the config.",
            details={'checkpoint': None}
        )
    return config.checkpoint


@cli.command('eval')
@config_option
@seed_option
@jobs_option
@out_option
@checkpoint_option
@progress_option
@click.option('--plots', is_flag=True, help='Also draw the per-step fusion factor')
def evaluate(config_path, seed, jobs, out, checkpoint, progress, plots):
    """
    Evaluate a checkpoint: report.csv, report.json and episodes/<id>.json.

    \b
    Example:
        hybridnav eval --checkpoint runs/train/policy.ckpt --jobs 4 --out runs/eval
    """
    def action():
        config = load_run_config(config_path, seed, jobs, out, checkpoint)
        path = _require_checkpoint(config)
        output_dir = Path(config.output_dir)
        metadata = RunMetadata.for_run(RunKind.EVAL, config, config.jobs, path)

        started = time.perf_counter()
        _, episodes = build_benchmark(config)
        results = evaluate_episodes(config, episodes, checkpoint=path, jobs=config.jobs,
                                    show_progress=progress)
        summaries, report = score_results(results)
        durations = {'evaluate': time.perf_counter() - started}

        exporter = MetricsExporter(output_dir)
        outputs = exporter.export_report(
            report.rows(),
            extra={'checkpoint': path, 'episodes': report.episodes,
                   'category_counts': report.category_counts},
        )
        outputs.append(exporter.export_episodes_csv([r.record for r in results], summaries))
        for result, summary in zip(results, summaries):
            exporter.export_episode(result.record, summary, [s.to_dict() for s in result.steps])
        if plots:
            try:
                plot_gamma_trend([r.gammas for r in results],
                                 output_path=str(output_dir / 'gamma_trend.png'))
                outputs.append(output_dir / 'gamma_trend.png')
            except ValueError as e:
                warning_msg(f"Skipped gamma plot: {e}")
        _finish_metadata(metadata, output_dir, outputs, durations)

        overall = report.overall
        success_msg(f"{report.episodes} episodes: SR {overall.sr:.1f}% OSR {overall.osr:.1f}% "
                    f"SPL {overall.spl:.3f} NE {overall.ne:.2f} m TL {overall.tl:.2f} m")
        info_msg(f"Reports written to {output_dir}")

    _run(action)


@cli.command()
@click.argument('suite', type=click.Choice(sorted(SUITES)))
@config_option
@seed_option
@jobs_option
@out_option
@checkpoint_option
@progress_option
@click.option('--plots', is_flag=True, help='Also draw SR / SPL per row')
def ablate(suite, config_path, seed, jobs, out, checkpoint, progress, plots):
    """
    Run one ablation suite on a shared benchmark.

    \b
    Example:
        hybridnav ablate memory_type --checkpoint runs/train/policy.ckpt --out runs/memory
    """
    def action():
        config = load_run_config(config_path, seed, jobs, out, checkpoint)
        path = _require_checkpoint(config)
        output_dir = Path(config.output_dir)
        metadata = RunMetadata.for_run(RunKind.ABLATE, config, config.jobs, path)
        metadata.notes['suite'] = suite

        ablation = run_ablation(suite, config, checkpoint=path, jobs=config.jobs,
                                show_progress=progress)
        extra = {key: value for key, value in ablation.to_dict().items() if key != 'rows'}
        outputs = MetricsExporter(output_dir).export_report(ablation.table(), extra=extra)
        if plots:
            plot_ablation(ablation.table(), title=suite,
                          output_path=str(output_dir / f'{suite}.png'))
            outputs.append(output_dir / f'{suite}.png')
        _finish_metadata(metadata, output_dir, outputs, ablation.durations)

        for row in ablation.table():
            info_msg(f"{row['label']:<22} SR {row['SR']:5.1f}%  SPL {row['SPL']:.3f}")
        if ablation.trend is not None:
            info_msg(f"Spearman trend of SR against noise: {ablation.trend:.3f}")
        success_msg(f"Suite {suite} written to {output_dir}")

    _run(action)


@cli.command()
@click.option('--seed', type=int, default=0, show_default=True, help='World and policy seed')
@click.option('--entries', type=int, default=4, show_default=True,
              help='Entries sampled per tensor; 0 checks every entry')
@click.option('--tolerance', type=float, default=1e-4, show_default=True,
              help='Largest accepted relative error')
@click.option('--out', type=click.Path(file_okay=False), default=None,
              help='Optional directory receiving gradcheck.json')
def gradcheck(seed, entries, tolerance, out):
    """
    Compare the policy's analytic gradients with finite differences.

    Exits with code 2 when the relative error exceeds the tolerance.
    """
    def action():
        result = policy_gradcheck(seed, max_entries=entries or None, tolerance=tolerance)
        if out:
            _write_json(Path(out) / 'gradcheck.json', result.to_dict())
        worst = max(result.per_tensor, key=result.per_tensor.get)
        info_msg(f"Worst tensor: {worst} ({result.per_tensor[worst]:.3e})")
        if not result.passed:
            error_msg(f"Gradient check failed: {result.max_error:.3e} > {tolerance:.0e}")
            sys.exit(EXIT_VALIDATION)
        success_msg(f"Gradient check passed: max relative error {result.max_error:.3e}")

    _run(action)


@cli.command('roundtrip-waypoints')
@click.option('--trials', type=int, default=1000, show_default=True, help='Random neighbor sets')
@click.option('--seed', type=int, default=0, show_default=True, help='Sampling seed')
def roundtrip_waypoints(trials, seed):
    """
    Check that NMS recovers every neighbor from its ground-truth heatmap.

    Exits with code 2 unless every trial is recovered.
    """
    def action():
        result = waypoint_roundtrip(trials, seed)
        if result.recovered < result.trials:
            error_msg(f"Recovered {result.recovered}/{result.trials} neighbor sets",
                      details={'first failures': result.failures[:10]})
            sys.exit(EXIT_VALIDATION)
        success_msg(f"Recovered {result.recovered}/{result.trials} neighbor sets")

    _run(action)


def main():
    """Main entry point for CLI."""
    cli()


if __name__ == '__main__':
    main()
