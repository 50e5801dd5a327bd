"""
Tests for the harness: seeds, benchmarks, the episode loop, training,
evaluation, ablation suites, statistics and the built-in checks.
"""

import math
from dataclasses import replace

import numpy as np
import pytest
import torch

from hybridnav.config import AgentConfig, ImaginerConfig, PolicyConfig, RunConfig, WorldConfig
from hybridnav.exceptions import AggregationError, ConfigurationError, TrainingDivergenceError
from hybridnav.harness import (
    BOOTSTRAP_RESAMPLES,
    SUITES,
    AgentBundle,
    RoomSample,
    bootstrap_gap,
    build_benchmark,
    build_episodes,
    check_benchmark_size,
    build_sap_samples,
    derive_seed,
    evaluate_episodes,
    fit_bundle,
    harvest_imaginer_samples,
    harvest_room_samples,
    harvest_waypoint_samples,
    mean_sap_loss,
    next_action_accuracy,
    policy_gradcheck,
    room_accuracy,
    run_ablation,
    run_episode,
    score_results,
    spearman_trend,
    splitmix64,
    suite_rows,
    train_imaginer,
    train_policy,
    train_room,
    train_waypoint,
    training_worlds,
    waypoint_roundtrip,
    world_for_seed,
)
from hybridnav.harness.checks import gradcheck_memory
from hybridnav.harness.training import SGDStepper
from hybridnav.imagination import LearnedImaginerModel, RoomTypeModel, WaypointModel
from hybridnav.memory import STOP_ID, NodeKind
from hybridnav.policy import assign_imagination
from hybridnav.world import generate_world, save_world


def reality(**overrides):
    return AgentConfig(memory_type='reality', **overrides)


class TestSeeds:
    """Test suite for seed derivation."""

    def test_splitmix_zero(self):
        assert splitmix64(0) == 0

    def test_sixty_four_bits(self):
        for value in (1, 2**63, 2**64 - 1, -5):
            assert 0 <= splitmix64(value) < 2**64

    def test_streams_are_distinct(self):
        seeds = {derive_seed(42, i) for i in range(100)}
        assert len(seeds) == 100
        assert derive_seed(42, 0) == derive_seed(42, 0)
        assert derive_seed(42, 0) != derive_seed(43, 0)


class TestBenchmark:
    """Test suite for episode construction."""

    def test_episodes_follow_expert_paths(self, world, episodes):
        assert [e.category for e in episodes] == ['S1', 'plain']
        for episode in episodes:
            path, _ = world.shortest_path(episode.start, episode.goal)
            assert list(episode.expert_path) == path
            assert len(path) - 1 >= 2
            assert episode.instruction.goal_node_id == episode.goal

    def test_same_seed_same_episodes(self, world, episodes):
        again = build_episodes(world, 7, ('S1', 'plain'), base_seed=0)
        assert again == episodes

    def test_large_benchmark_warns(self):
        with pytest.warns(UserWarning, match="recommended maximum"):
            check_benchmark_size(6000)

    def test_small_benchmark_silent(self, recwarn):
        check_benchmark_size(300)
        assert len(recwarn) == 0

    def test_episode_seeds_differ(self, world):
        built = build_episodes(world, 7, ('plain',), base_seed=0, rounds=3)
        assert len({e.seed for e in built}) == 3
        assert [e.episode_id for e in built] == ['7-plain-0', '7-plain-1', '7-plain-2']

    def test_generated_benchmark(self, run_config):
        worlds, episodes = build_benchmark(run_config)
        assert sorted(worlds) == [100, 101]
        assert len(episodes) == 4
        assert len({e.episode_id for e in episodes}) == 4

    def test_episode_cap(self, run_config):
        _, episodes = build_benchmark(replace(run_config, episodes=3))
        assert len(episodes) == 3

    def test_world_file_benchmark(self, run_config, world, tmp_path):
        path = save_world(world, tmp_path / 'world.json')
        config = replace(run_config, world_path=str(path), eval_worlds=3, categories=('plain',))
        worlds, episodes = build_benchmark(config)
        assert list(worlds) == [None]
        assert [e.episode_id for e in episodes] == ['file-plain-0', 'file-plain-1', 'file-plain-2']

    def test_training_worlds(self, run_config):
        worlds = training_worlds(run_config)
        assert [w.seed for w in worlds] == [0, 1]

    def test_world_cache(self, run_config):
        a = world_for_seed(run_config.world, 100)
        assert world_for_seed(run_config.world, 100) is a

    def test_overlapping_seed_blocks_rejected(self, run_config):
        with pytest.raises(ConfigurationError):
            replace(run_config, eval_seed_start=1)


class TestRunEpisode:
    """Test suite for the navigation loop."""

    def test_zero_steps(self, world, episodes, bundle):
        result = run_episode(world, episodes[0], bundle, AgentConfig(max_steps=0))
        assert result.record.trajectory == [episodes[0].start]
        assert result.steps == []

    def test_trajectory_follows_world_edges(self, world, episodes, bundle, agent_config):
        result = run_episode(world, episodes[0], bundle, agent_config)
        trajectory = result.record.trajectory
        assert not result.record.aborted
        assert trajectory[0] == episodes[0].start
        for a, b in zip(trajectory, trajectory[1:]):
            assert world.has_edge(a, b)
        assert len(result.steps) <= agent_config.max_steps

    def test_deterministic(self, world, episodes, bundle, agent_config):
        noisy = replace(agent_config, imaginer=ImaginerConfig('oracle', 0.3, 0),
                        action_mode='sample')
        a = run_episode(world, episodes[1], bundle, noisy)
        b = run_episode(world, episodes[1], bundle, noisy)
        assert a.record.trajectory == b.record.trajectory
        assert a.gammas == b.gammas
        assert [s.to_dict() for s in a.steps] == [s.to_dict() for s in b.steps]

    def test_reality_never_imagines(self, world, episodes, bundle):
        result = run_episode(world, episodes[0], bundle, reality(max_steps=4))
        assert all(step.node_counts['imagination'] == 0 for step in result.steps)

    def test_imagination_stays_under_cap(self, world, episodes, bundle, agent_config):
        result = run_episode(world, episodes[0], bundle, agent_config)
        for step in result.steps:
            assert step.node_counts['imagination'] <= agent_config.imagination_cap
            assert 0.0 < step.gamma < 1.0

    def test_step_logs(self, world, episodes, bundle, agent_config):
        step = run_episode(world, episodes[0], bundle, agent_config).steps[0].to_dict()
        assert step['step'] == 1
        assert step['node_id'] == episodes[0].start
        assert set(step['scores']) == {'s_r', 's_i', 'fused'}
        assert step['action']['type'] in ('goto', 'stop')


class TestPolicyTraining:
    """Test suite for teacher-forced policy training."""

    @pytest.fixture
    def samples(self, world, episodes):
        return build_sap_samples(world, episodes[:1], reality())

    def test_one_sample_per_decision(self, episodes, samples):
        path = episodes[0].expert_path
        assert len(samples) == len(path)
        assert [s.expert_target for s in samples] == [*path[1:], STOP_ID]
        assert [s.step for s in samples] == list(range(1, len(path) + 1))

    def test_zero_learning_rate(self, world, samples, policy_config):
        bundle = AgentBundle.initial(world, replace(policy_config, seed=3), hidden=8)
        before = {k: v.clone() for k, v in bundle.policy.state_dict().items()}
        train_policy(bundle.policy, samples, reality(), epochs=2, batch=2, lr=0.0)
        for name, value in bundle.policy.state_dict().items():
            assert torch.equal(value, before[name]), name

    def test_zero_epochs(self, world, samples, policy_config):
        bundle = AgentBundle.initial(world, policy_config, hidden=8)
        assert train_policy(bundle.policy, samples, reality(), epochs=0) == []

    def test_loss_history(self, world, samples, policy_config):
        bundle = AgentBundle.initial(world, policy_config, hidden=8)
        history = train_policy(bundle.policy, samples, reality(), epochs=2, batch=4, lr=0.01)
        assert len(history) == 2
        assert all(math.isfinite(v) and v > 0 for v in history)
        assert math.isfinite(mean_sap_loss(bundle.policy, samples, reality()))

    def test_accuracy_bounds(self, world, samples, policy_config):
        bundle = AgentBundle.initial(world, policy_config, hidden=8)
        accuracy, chance = next_action_accuracy(bundle.policy, samples, reality())
        assert 0.0 <= accuracy <= 1.0
        assert 0.0 < chance < 1.0

    def test_imagined_samples(self, world, episodes, bundle, agent_config):
        samples = build_sap_samples(world, episodes[:1], agent_config, bundle)
        assert len(samples) == len(episodes[0].expert_path)
        for sample in samples:
            assert sample.memory.count(NodeKind.IMAGINATION) <= agent_config.imagination_cap


class TestAuxiliaryTraining:
    """Test suite for the lite auxiliary models."""

    def test_waypoint_samples(self, world):
        samples = harvest_waypoint_samples([world])
        assert len(samples) == len(world.nodes)
        assert samples[0].heatmap.shape == (120, 12)

    def test_waypoint_training(self, world):
        model = WaypointModel(world.appearance_dim, world.geometry_dim, hidden=8)
        history = train_waypoint(model, harvest_waypoint_samples([world]), epochs=3)
        assert len(history) == 3
        assert all(0.0 <= v <= 1.0 for v in history)

    def test_room_training_reduces_loss(self, world):
        samples = harvest_room_samples([world])
        model = RoomTypeModel(world.object_vocab_size, world.geometry_dim, world.room_vocab_size)
        history = train_room(model, samples, epochs=50, lr=0.1)
        assert history[-1] < history[0]
        assert 0.0 <= room_accuracy(model, samples) <= 1.0

    @pytest.mark.slow
    def test_room_classifier_separates_rooms(self):
        """Rooms that favor disjoint objects are classified without error."""
        rng = np.random.default_rng(5)
        samples = []
        for room_type in range(4):
            for _ in range(40):
                semantic = rng.uniform(0.0, 0.05, 8)
                semantic[2 * room_type:2 * room_type + 2] += 0.4
                samples.append(RoomSample(semantic / semantic.sum(), rng.normal(0.0, 0.1, 3),
                                          room_type))
        model = RoomTypeModel(8, 3, 4)
        train_room(model, samples, epochs=500, lr=0.5)
        assert room_accuracy(model, samples) == 1.0

    def test_divergence_keeps_last_good_state(self, world):
        samples = harvest_room_samples([world])
        samples[0] = RoomSample(np.full_like(samples[0].semantic, np.nan),
                                samples[0].geometry, samples[0].room_type)
        model = RoomTypeModel(world.object_vocab_size, world.geometry_dim, world.room_vocab_size)
        before = {k: v.clone() for k, v in model.state_dict().items()}
        with pytest.raises(TrainingDivergenceError) as info:
            train_room(model, samples, epochs=3)
        assert info.value.details['model'] == 'room'
        assert info.value.details['epoch'] == 1
        for name, value in info.value.last_good_state.items():
            assert torch.equal(value, before[name])

    def test_divergence_after_update_restores_previous_parameters(self):
        """A loss that turns non-finite reports the state before the last update."""
        torch.manual_seed(0)
        model = torch.nn.Linear(2, 1).double()
        stepper = SGDStepper(model, torch.optim.SGD(model.parameters(), lr=0.1), 'linear')
        x = torch.ones(1, 2, dtype=torch.float64)
        initial = {k: v.clone() for k, v in model.state_dict().items()}
        stepper.step(model(x).sum(), epoch=1)
        updated = {k: v.clone() for k, v in model.state_dict().items()}
        assert not torch.equal(updated['weight'], initial['weight'])
        with pytest.raises(TrainingDivergenceError) as info:
            stepper.step(model(x).sum() * float('nan'), epoch=2)
        assert info.value.details['model'] == 'linear'
        assert info.value.details['epoch'] == 2
        assert math.isnan(info.value.details['loss'])
        for name, value in info.value.last_good_state.items():
            assert torch.equal(value, initial[name])
        for name, value in model.state_dict().items():
            assert torch.equal(value, updated[name])

    def test_imaginer_training(self, world, episodes):
        samples = harvest_imaginer_samples(world, episodes)
        assert len(samples) == sum(len(e.expert_path) - 1 for e in episodes)
        model = LearnedImaginerModel(world.appearance_dim, world.geometry_dim,
                                     world.object_vocab_size, hidden=8)
        history = train_imaginer(model, samples, epochs=3)
        assert len(history) == 3
        assert all(math.isfinite(v) for v in history)


class TestEvaluation:
    """Test suite for benchmark evaluation."""

    def test_needs_agent(self, run_config):
        _, episodes = build_benchmark(run_config)
        with pytest.raises(ConfigurationError):
            evaluate_episodes(run_config, episodes)

    def test_results_in_episode_order(self, run_config, bundle):
        _, episodes = build_benchmark(run_config)
        results = evaluate_episodes(run_config, episodes, bundle=bundle)
        assert [r.record.episode_id for r in results] == [e.episode_id for e in episodes]
        summaries, report = score_results(results)
        assert len(summaries) == report.episodes == len(episodes)
        assert set(report.category_counts) == {'S1', 'plain'}

    def test_checkpoint_matches_bundle(self, run_config, bundle, tmp_path):
        _, episodes = build_benchmark(run_config)
        path = bundle.save(tmp_path / 'policy.ckpt')
        from_bundle = evaluate_episodes(run_config, episodes[:2], bundle=bundle)
        from_file = evaluate_episodes(run_config, episodes[:2], checkpoint=str(path))
        assert ([r.record.trajectory for r in from_bundle]
                == [r.record.trajectory for r in from_file])

    @pytest.mark.slow
    def test_workers_do_not_change_results(self, run_config, bundle):
        _, episodes = build_benchmark(run_config)
        serial = evaluate_episodes(run_config, episodes, bundle=bundle, jobs=1)
        parallel = evaluate_episodes(run_config, episodes, bundle=bundle, jobs=2)
        assert score_results(serial)[1].to_dict() == score_results(parallel)[1].to_dict()


class TestAblation:
    """Test suite for ablation suites."""

    @pytest.mark.parametrize('suite, rows', [
        ('memory_type', 3),
        ('imagination_range', 4),
        ('auxiliary_models', 4),
        ('decision_weight', 2),
        ('instruction_split', 3),
        ('imaginer_noise', 4),
    ])
    def test_suite_sizes(self, suite, rows):
        assert len(suite_rows(suite, AgentConfig())) == rows

    def test_every_suite_is_listed(self):
        assert set(SUITES) == {'memory_type', 'imagination_range', 'auxiliary_models',
                               'decision_weight', 'instruction_split', 'imaginer_noise'}

    def test_unknown_suite(self):
        with pytest.raises(ConfigurationError):
            suite_rows('lighting', AgentConfig())

    def test_row_overrides(self):
        base = AgentConfig()
        range_rows = suite_rows('imagination_range', base)
        assert range_rows[0][1].imagination_enabled is False
        noise_rows = suite_rows('imaginer_noise', base)
        assert [r[1].imaginer.noise for r in noise_rows] == [0.0, 0.25, 0.5, 1.0]
        split_rows = suite_rows('instruction_split', base)
        assert [r[2] for r in split_rows] == ['S1', 'S2', 'S3']

    def test_missing_category(self, run_config, bundle):
        """The benchmark holds no S2 episodes for the S2 row."""
        with pytest.raises(ConfigurationError):
            run_ablation('instruction_split', run_config, bundle=bundle)

    def test_needs_agent(self, run_config):
        with pytest.raises(ConfigurationError):
            run_ablation('memory_type', run_config)

    @pytest.mark.slow
    def test_decision_weight(self, run_config, bundle):
        report = run_ablation('decision_weight', run_config, bundle=bundle)
        assert [row.label for row in report.rows] == ['dynamic', 'fixed 0.5']
        assert set(report.gaps) == {'fixed 0.5'}
        assert report.gaps['fixed 0.5'].resamples == BOOTSTRAP_RESAMPLES == 10_000
        assert report.trend is None
        table = report.table()
        assert [row['episodes'] for row in table] == [4, 4]
        assert set(report.to_dict()) == {'suite', 'rows', 'trend', 'gaps'}


class TestAnalysis:
    """Test suite for ablation statistics."""

    def test_no_gap(self):
        gap = bootstrap_gap([1, 0, 1, 0], [1, 0, 1, 0])
        assert gap.gap == 0.0
        assert not gap.significant

    def test_clear_gap(self):
        gap = bootstrap_gap([0.0] * 20, [1.0] * 20)
        assert gap.gap == 1.0
        assert gap.significant

    def test_default_resamples(self):
        gap = bootstrap_gap([0, 1, 1, 0], [1, 1, 1, 0])
        assert gap.resamples == 10_000
        assert gap.to_dict()['resamples'] == 10_000
        assert bootstrap_gap([0, 1], [1, 1], resamples=50).resamples == 50

    def test_bootstrap_is_seeded(self):
        a, b = [0, 1, 0, 1, 1], [1, 1, 0, 1, 1]
        assert bootstrap_gap(a, b, seed=4) == bootstrap_gap(a, b, seed=4)

    def test_bootstrap_needs_pairs(self):
        with pytest.raises(AggregationError):
            bootstrap_gap([], [])
        with pytest.raises(AggregationError):
            bootstrap_gap([1.0], [1.0, 0.0])

    def test_monotone_trend(self):
        assert spearman_trend([0, 0.25, 0.5, 1.0], [60, 55, 50, 41]) == pytest.approx(-1.0)

    def test_constant_metric(self):
        assert math.isnan(spearman_trend([0, 1, 2], [5, 5, 5]))

    def test_trend_needs_pairs(self):
        with pytest.raises(AggregationError):
            spearman_trend([0.0], [1.0])


class TestChecks:
    """Test suite for the built-in numerical checks."""

    def test_waypoint_roundtrip(self):
        result = waypoint_roundtrip(trials=50, seed=3)
        assert result.rate == 1.0
        assert result.failures == []
        assert result.to_dict()['trials'] == 50

    def test_gradcheck_memory_keeps_imagination(self):
        world = generate_world(WorldConfig(rooms=1, nodes_per_room=5, seed=0))
        memory = gradcheck_memory(world, seed=0)
        assert memory.count(NodeKind.IMAGINATION) > 0
        assigned = assign_imagination(memory)
        assert any(assigned.values())

    @pytest.mark.slow
    @pytest.mark.parametrize('seed', [0, 1])
    def test_policy_gradcheck(self, seed):
        """Default-scale policy; imagined scores and fusion carry gradient."""
        result = policy_gradcheck(seed=seed, max_entries=3)
        assert result.passed, result.per_tensor
        assert result.max_error < 1e-4
        assert result.policy['d_model'] == PolicyConfig().d_model == 64
        assert result.kind_counts['imagination'] > 0
        assert result.reached('imagined_score.')
        assert result.reached('fusion.')
        assert result.gradient_norms['real_score.2.bias'] < 1e-12
        assert result.per_tensor['real_score.2.bias'] < 1e-4


@pytest.fixture(scope='module')
def benchmark_config():
    """Default schedule: 50 training worlds, 300 episodes, oracle noise 0.1."""
    return RunConfig(eval_seed_start=1000, eval_worlds=100,
                     agent=AgentConfig(imaginer=ImaginerConfig('oracle', 0.1, 0)), jobs=4)


@pytest.fixture(scope='module')
def trained_agent(benchmark_config):
    worlds = training_worlds(benchmark_config)
    bundle = AgentBundle.initial(worlds[0], benchmark_config.policy,
                                 history_length=benchmark_config.agent.history_length)
    return bundle, fit_bundle(benchmark_config, bundle, worlds)


@pytest.mark.slow
class TestTrainedAgent:
    """Behaviour of an agent trained on the default schedule."""

    def test_held_out_accuracy(self, trained_agent):
        _, outcome = trained_agent
        assert outcome.held_out['accuracy'] >= 0.9
        assert outcome.held_out['accuracy'] > outcome.held_out['chance']
        assert outcome.room_accuracy > 0.0

    def test_hybrid_memory_leads(self, benchmark_config, trained_agent):
        """Reality plus imagination >= reality alone >= imagination alone."""
        bundle, _ = trained_agent
        report = run_ablation('memory_type', benchmark_config, bundle=bundle,
                              jobs=benchmark_config.jobs)
        sr = {row.label: row.report.overall.sr for row in report.rows}
        assert report.rows[0].report.episodes == 300
        assert sr['reality+imagination'] >= sr['reality'] >= sr['imagination']

    def test_success_does_not_rise_with_noise(self, benchmark_config, trained_agent):
        bundle, _ = trained_agent
        report = run_ablation('imaginer_noise', benchmark_config, bundle=bundle,
                              jobs=benchmark_config.jobs)
        assert math.isnan(report.trend) or report.trend <= 0.0
