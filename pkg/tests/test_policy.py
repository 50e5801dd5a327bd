"""
Tests for the policy: attention layers, cross-modal scoring, the fusion
factor, score fusion, action selection, the imitation loss, gradient
checking and checkpoints.
"""

import math

import numpy as np
import pytest
import torch

from hybridnav.exceptions import (
    ConfigurationError,
    EncodingError,
    FusionError,
    NumericalError,
    RoutingError,
    ShapeError,
    SupervisionError,
)
from hybridnav.memory import STOP_ID, FeatureLayout, MemoryMap, NodeKind
from hybridnav.policy import (
    CHECKPOINT_VERSION,
    GraphAwareSelfAttentionLayer,
    MultiHeadAttention,
    NavigationPolicy,
    action_probabilities,
    assign_imagination,
    cross_modal_encode,
    decide,
    encode_instruction,
    fuse_scores,
    fusion_factor,
    gasa_attention,
    grad_check,
    hop_buckets,
    load_modules,
    read_checkpoint,
    sap_loss,
    save_checkpoint,
    score_nodes,
    select_action,
)
from hybridnav.policy.network import NodeEncodings
from hybridnav.world import NeighborStub, Observation, observe


TOKENS = ('walk', 'through', 'the', 'kitchen', 'and', 'stop')
LAYOUT = FeatureLayout(2, 1, 1)


def small_map():
    """Current 0 at the origin, Navigable 1 at (1, 0, 0) and 2 at (-1, 0, 0)."""
    memory = MemoryMap(LAYOUT, imagination_cap=8)
    stubs = (
        NeighborStub(1, np.array([1.0, 0, 0]), np.array([0.0, 1]), np.zeros(1), np.ones(1)),
        NeighborStub(2, np.array([-1.0, 0, 0]), np.array([1.0, 1]), np.zeros(1), np.ones(1)),
    )
    obs = Observation(0, np.zeros(3), np.array([1.0, 0]), np.zeros(1), np.ones(1), stubs)
    return memory.integrate_observation(obs, step=1)


@pytest.fixture
def policy(bundle):
    return bundle.policy


@pytest.fixture
def imagined_memory(memory):
    """Shared-world memory with two Imagination nodes beyond node 0's neighbors."""
    for k, neighbor in enumerate(memory.ids(NodeKind.NAVIGABLE)[:2]):
        node = memory.node(neighbor)
        feature = node.feature.copy()
        feature[k] += 3.0
        memory.add_imagination_node(feature, node.position + np.array([0.0, 2.0, 0.0]),
                                    parent_id=neighbor)
    return memory


class TestLayers:
    """Test suite for the attention building blocks."""

    def test_hop_buckets(self):
        buckets = hop_buckets(torch.tensor([[0, 1, 3], [4, 9, -1]]))
        assert buckets.tolist() == [[0, 1, 3], [4, 4, 5]]

    def test_attention_rows_sum_to_one(self):
        attention = MultiHeadAttention(8, 2).double()
        x = torch.randn(5, 8, dtype=torch.float64)
        _, weights = attention(x, x)
        assert weights.shape == (2, 5, 5)
        assert torch.allclose(weights.sum(-1), torch.ones(2, 5, dtype=torch.float64), atol=1e-6)

    def test_width_mismatch(self):
        attention = MultiHeadAttention(8, 2).double()
        with pytest.raises(ShapeError):
            attention(torch.zeros(3, 4, dtype=torch.float64), torch.zeros(3, 8, dtype=torch.float64))

    def test_heads_must_divide_width(self):
        with pytest.raises(ShapeError):
            MultiHeadAttention(10, 3)

    def test_graph_layer_rejects_bad_hops(self):
        layer = GraphAwareSelfAttentionLayer(8, 2).double()
        with pytest.raises(ShapeError):
            layer(torch.zeros(3, 8, dtype=torch.float64), torch.zeros(2, 2, dtype=torch.long))

    def test_gasa_attention_shape(self, policy):
        d = policy.config.d_model
        x = torch.randn(4, d, dtype=torch.float64)
        hops = torch.tensor([[0, 1, 2, 1], [1, 0, 1, 1], [2, 1, 0, 1], [1, 1, 1, 0]])
        assert gasa_attention(x, hops, policy, 0).shape == (4, d)
        with pytest.raises(ShapeError):
            gasa_attention(torch.zeros(4, d + 1, dtype=torch.float64), hops, policy, 0)


class TestEncoding:
    """Test suite for instruction and memory encoding."""

    def test_instruction_shape(self, policy):
        encoded = encode_instruction(TOKENS, policy)
        assert encoded.shape == (len(TOKENS), policy.config.d_model)
        assert encoded.dtype == torch.float64
        assert torch.all(torch.isfinite(encoded))

    def test_empty_instruction(self, policy):
        with pytest.raises(EncodingError):
            encode_instruction([], policy)

    def test_unknown_token(self, policy):
        with pytest.raises(EncodingError):
            encode_instruction(['walk', 'teleport'], policy)

    def test_too_long(self, policy):
        with pytest.raises(EncodingError):
            encode_instruction(['walk'] * (policy.config.max_tokens + 1), policy)

    def test_cross_modal_split(self, policy, imagined_memory):
        """Real rows cover non-Imagination nodes; imagined rows the rest."""
        instruction = encode_instruction(TOKENS, policy)
        real, imagined = cross_modal_encode(imagined_memory, instruction, policy, 1)
        assert sorted(real.ids + imagined.ids) == imagined_memory.ids()
        assert imagined.ids == imagined_memory.ids(NodeKind.IMAGINATION)
        assert real.vectors.shape == (len(real), policy.config.d_model)
        assert torch.all(torch.isfinite(real.vectors))
        weights = policy.graph_layers[0].last_weights
        assert torch.allclose(weights.sum(-1), torch.ones_like(weights.sum(-1)), atol=1e-6)

    def test_score_keys(self, policy, imagined_memory):
        instruction = encode_instruction(TOKENS, policy)
        s_r, s_i = score_nodes(*cross_modal_encode(imagined_memory, instruction, policy, 1), policy)
        assert set(s_r) == set(imagined_memory.ids(NodeKind.NAVIGABLE, NodeKind.STOP))
        assert set(s_i) == set(imagined_memory.ids(NodeKind.IMAGINATION))

    def test_fusion_factor_in_unit_interval(self, policy, imagined_memory, memory):
        instruction = encode_instruction(TOKENS, policy)
        for m in (imagined_memory, memory):
            real, imagined = cross_modal_encode(m, instruction, policy, 1)
            gamma = float(fusion_factor(real, imagined, policy))
            assert 0.0 < gamma < 1.0

    def test_fusion_factor_needs_real_nodes(self, policy, memory):
        instruction = encode_instruction(TOKENS, policy)
        real, imagined = cross_modal_encode(memory, instruction, policy, 1)
        with pytest.raises(ShapeError):
            fusion_factor(real.select([]), imagined, policy)


class TestFuseScores:
    """Test suite for score fusion."""

    def test_identity_without_imagination(self):
        memory = small_map()
        s_r = {1: 0.3, 2: -1.2, STOP_ID: 0.1}
        assert fuse_scores(s_r, {}, 0.7, memory) == s_r

    def test_hybrid_example(self):
        """fused = s_r + gamma * s_i of the assigned Imagination node."""
        memory = small_map()
        imagined = memory.add_imagination_node([0, 0, 1, 0], [2.0, 0, 0], parent_id=1)
        fused = fuse_scores({1: 1.0, 2: 0.0, STOP_ID: 0.0}, {imagined: 2.0}, 0.5, memory)
        assert fused[1] == 2.0
        assert fused[2] == 0.0
        assert fused[STOP_ID] == 0.0

    def test_imagination_only(self):
        memory = small_map()
        imagined = memory.add_imagination_node([0, 0, 1, 0], [2.0, 0, 0], parent_id=1)
        fused = fuse_scores({1: 1.0, 2: 5.0, STOP_ID: 0.25}, {imagined: 2.0}, 0.5, memory,
                            memory_type='imagination')
        assert fused == {1: 2.0, 2: 0.0, STOP_ID: 0.25}

    def test_reality_ignores_imagination(self):
        memory = small_map()
        imagined = memory.add_imagination_node([0, 0, 1, 0], [2.0, 0, 0], parent_id=1)
        s_r = {1: 1.0, 2: 5.0, STOP_ID: 0.25}
        assert fuse_scores(s_r, {imagined: 9.0}, 0.5, memory, memory_type='reality') == s_r

    def test_equidistant_goes_to_lowest_id(self):
        memory = small_map()
        imagined = memory.add_imagination_node([0, 0, 1, 0], [0, 3.0, 0])
        assert assign_imagination(memory)[1] == [imagined]
        assert assign_imagination(memory)[2] == []

    def test_key_mismatch(self):
        memory = small_map()
        with pytest.raises(FusionError):
            fuse_scores({1: 1.0, STOP_ID: 0.0}, {}, 0.5, memory)
        memory.add_imagination_node([0, 0, 1, 0], [2.0, 0, 0], parent_id=1)
        with pytest.raises(FusionError):
            fuse_scores({1: 1.0, 2: 0.0, STOP_ID: 0.0}, {}, 0.5, memory)

    def test_tensor_scores_keep_gradients(self):
        memory = small_map()
        imagined = memory.add_imagination_node([0, 0, 1, 0], [2.0, 0, 0], parent_id=1)
        gamma = torch.tensor(0.5, dtype=torch.float64, requires_grad=True)
        s_i = {imagined: torch.tensor(2.0, dtype=torch.float64)}
        fused = fuse_scores({1: torch.tensor(1.0, dtype=torch.float64), 2: 0.0, STOP_ID: 0.0},
                            s_i, gamma, memory)
        fused[1].backward()
        assert float(gamma.grad) == 2.0


@pytest.mark.slow
class TestFusionSweep:
    """Fusion identities over many random score sets."""

    def test_identity_and_vanishing_gamma(self):
        rng = np.random.default_rng(11)
        plain = small_map()
        memory = small_map()
        imagined = [memory.add_imagination_node([0, 0, 1, 0], [2.0 + k, float(k), 0], parent_id=1)
                    for k in range(3)]
        for _ in range(10_000):
            s_r = dict(zip((1, 2, STOP_ID), rng.normal(0.0, 10.0, 3).tolist()))
            s_i = dict(zip(imagined, rng.normal(0.0, 10.0, len(imagined)).tolist()))
            assert fuse_scores(s_r, {}, float(rng.random()), plain) == s_r
            fused = fuse_scores(s_r, s_i, 1e-12, memory)
            assert max(abs(fused[n] - s_r[n]) for n in s_r) < 1e-9

    def test_gamma_in_unit_interval(self, policy):
        generator = torch.Generator().manual_seed(3)
        d = policy.config.d_model
        with torch.no_grad():
            for k in range(10_000):
                scale = 10.0 ** (k % 6 - 2)
                imagined_rows = k % 4
                real = NodeEncodings(
                    [0, 1], [NodeKind.CURRENT, NodeKind.NAVIGABLE],
                    torch.randn(2, d, generator=generator, dtype=torch.float64) * scale,
                )
                imagined = NodeEncodings(
                    list(range(imagined_rows)), [NodeKind.IMAGINATION] * imagined_rows,
                    torch.randn(imagined_rows, d, generator=generator, dtype=torch.float64) * scale,
                )
                gamma = float(fusion_factor(real, imagined, policy))
                assert 0.0 < gamma < 1.0


class TestSelectAction:
    """Test suite for action selection."""

    def test_greedy_goto(self):
        memory = small_map()
        action = select_action({1: 0.1, 2: 0.9, STOP_ID: 0.0}, memory)
        assert action.target == 2
        assert action.route == (0, 2)
        assert action.to_dict() == {'type': 'goto', 'target': 2, 'route': [0, 2]}

    def test_greedy_stop(self):
        memory = small_map()
        action = select_action({1: 0.1, 2: 0.2, STOP_ID: 3.0}, memory)
        assert action.is_stop
        assert action.to_dict() == {'type': 'stop'}

    def test_ties_go_to_lowest_id(self):
        memory = small_map()
        assert select_action({1: 1.0, 2: 1.0, STOP_ID: 1.0}, memory).target == 1

    @pytest.mark.parametrize('shift', [-1e6, -3.5, 0.0, 42.0, 1e6])
    def test_constant_shift_invariance(self, shift):
        memory = small_map()
        scores = {1: 0.1, 2: 0.9, STOP_ID: 0.5}
        shifted = {k: v + shift for k, v in scores.items()}
        assert select_action(shifted, memory) == select_action(scores, memory)

    def test_routes_follow_memory_edges(self, world, memory):
        """After a move every Navigable target is routed from the new Current node."""
        first = world.neighbors(0)[0]
        memory.integrate_observation(observe(world, first), step=2)
        candidates = memory.ids(NodeKind.NAVIGABLE, NodeKind.STOP)
        for target in memory.ids(NodeKind.NAVIGABLE):
            fused = {n: 0.0 for n in candidates}
            fused[target] = 1.0
            action = select_action(fused, memory)
            assert action.route[0] == first
            assert action.route[-1] == target
            assert STOP_ID not in action.route
            for a, b in zip(action.route, action.route[1:]):
                assert memory.has_edge(a, b)

    def test_imagination_target_rejected(self):
        memory = small_map()
        imagined = memory.add_imagination_node([0, 0, 1, 0], [2.0, 0, 0], parent_id=1)
        with pytest.raises(RoutingError):
            select_action({1: 0.0, imagined: 5.0}, memory)

    def test_empty_scores(self):
        with pytest.raises(RoutingError):
            select_action({}, small_map())

    def test_sampling_is_seeded(self):
        memory = small_map()
        scores = {1: 0.1, 2: 0.2, STOP_ID: 0.3}
        a = [select_action(scores, memory, 'sample', np.random.default_rng(5)).target
             for _ in range(3)]
        b = [select_action(scores, memory, 'sample', np.random.default_rng(5)).target
             for _ in range(3)]
        assert a == b

    def test_probabilities(self):
        probs = action_probabilities({1: 0.0, 2: 0.0})
        assert probs == pytest.approx({1: 0.5, 2: 0.5})


class TestSapLoss:
    """Test suite for the single-step action prediction loss."""

    @pytest.mark.parametrize('k', [2, 3, 7])
    def test_uniform(self, k):
        fused = {i: 0.0 for i in range(k)}
        assert float(sap_loss(fused, 0)) == pytest.approx(math.log(k))

    def test_confident_expert(self):
        assert float(sap_loss({1: 200.0, 2: 0.0, STOP_ID: 0.0}, 1)) == pytest.approx(0.0, abs=1e-12)

    def test_hand_computed(self):
        scores = [0.5, -1.0, 2.0]
        expected = math.log(sum(math.exp(s) for s in scores)) - scores[1]
        assert float(sap_loss({10: 0.5, 11: -1.0, 12: 2.0}, 11)) == pytest.approx(expected)

    def test_target_must_be_candidate(self):
        with pytest.raises(SupervisionError):
            sap_loss({1: 0.0, 2: 0.0}, 3)


class TestDecide:
    """Test suite for one scoring step."""

    def test_reality_memory_skips_fusion(self, policy, imagined_memory):
        instruction = encode_instruction(TOKENS, policy)
        scores = decide(imagined_memory, instruction, policy, 1, memory_type='reality')
        assert set(scores.fused) == set(scores.s_r)

    def test_fixed_gamma(self, policy, imagined_memory):
        instruction = encode_instruction(TOKENS, policy)
        scores = decide(imagined_memory, instruction, policy, 1, gamma_mode='fixed',
                        gamma_value=0.25)
        assert float(scores.gamma) == 0.25
        assert set(scores.fused) == set(imagined_memory.ids(NodeKind.NAVIGABLE, NodeKind.STOP))

    def test_as_floats_is_plain(self, policy, imagined_memory):
        instruction = encode_instruction(TOKENS, policy)
        floats = decide(imagined_memory, instruction, policy, 1).as_floats()
        assert set(floats) == {'s_r', 's_i', 'fused'}
        assert all(isinstance(v, float) for v in floats['fused'].values())


class TestGradCheck:
    """Test suite for finite-difference gradient checking."""

    def test_linear_model(self):
        torch.manual_seed(0)
        model = torch.nn.Linear(3, 2).double()
        x = torch.randn(5, 3, dtype=torch.float64)
        assert grad_check(model, lambda: (model(x) ** 2).sum()) < 1e-9

    def test_corrupted_gradient_detected(self):
        torch.manual_seed(0)
        model = torch.nn.Linear(3, 2).double()
        x = torch.randn(5, 3, dtype=torch.float64)

        def corrupt(name, grad):
            return grad * 1.5 if name == 'weight' else grad

        error = grad_check(model, lambda: (model(x) ** 2).sum(), gradient_hook=corrupt)
        assert error > 1e-2

    def test_report_names_tensors(self):
        model = torch.nn.Linear(2, 1).double()
        report = {}
        grad_check(model, lambda: model(torch.ones(1, 2, dtype=torch.float64)).sum(),
                   report=report)
        assert set(report) == {'weight', 'bias'}

    def test_shift_invariant_bias(self):
        """A bias shared by every logit has zero gradient under cross-entropy."""
        generator = torch.Generator().manual_seed(0)
        weight = torch.randn(4, 3, dtype=torch.float64, generator=generator).requires_grad_()
        shift = torch.full((1,), 0.3, dtype=torch.float64, requires_grad=True)
        x = torch.randn(3, dtype=torch.float64, generator=generator)

        def loss_fn():
            logits = weight @ x + shift
            return torch.nn.functional.cross_entropy(logits.unsqueeze(0), torch.tensor([2]))

        report = {}
        error = grad_check([('weight', weight), ('shift', shift)], loss_fn, report=report)
        assert error < 1e-6
        assert report['shift'] < 1e-8

    def test_float32_rejected(self):
        model = torch.nn.Linear(2, 1)
        with pytest.raises(NumericalError):
            grad_check(model, lambda: model(torch.ones(1, 2)).sum())

    def test_non_finite_gradient(self):
        weight = torch.zeros(2, dtype=torch.float64, requires_grad=True)
        with pytest.raises(NumericalError):
            grad_check([('weight', weight)], lambda: torch.sqrt(weight).sum())

    @pytest.mark.slow
    def test_full_policy(self, policy, imagined_memory):
        """The whole policy matches finite differences on a sampled subset."""
        instruction_tokens = TOKENS
        target = imagined_memory.ids(NodeKind.NAVIGABLE)[0]

        def loss_fn():
            instruction = encode_instruction(instruction_tokens, policy)
            return sap_loss(decide(imagined_memory, instruction, policy, 1).fused, target)

        assert grad_check(policy, loss_fn, max_entries=3) < 1e-4


class TestCheckpoint:
    """Test suite for parameter checkpoints."""

    def test_roundtrip(self, policy, tmp_path):
        path = save_checkpoint(tmp_path / 'p.ckpt', {'policy': policy}, {'policy': policy.spec()})
        loaded = load_modules(path, {'policy': NavigationPolicy.from_spec})['policy']
        for (name, a), (_, b) in zip(policy.state_dict().items(), loaded.state_dict().items()):
            assert torch.equal(a, b), name

    def test_header(self, policy, tmp_path):
        path = save_checkpoint(tmp_path / 'p.ckpt', {'policy': policy}, {'policy': policy.spec()},
                               extra={'note': 'x'})
        header, states = read_checkpoint(path)
        assert header['version'] == CHECKPOINT_VERSION == 'sali-ckpt-v1'
        assert header['extra'] == {'note': 'x'}
        assert set(states) == {'policy'}

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigurationError):
            read_checkpoint(tmp_path / 'absent.ckpt')

    def test_truncated(self, policy, tmp_path):
        path = save_checkpoint(tmp_path / 'p.ckpt', {'policy': policy}, {'policy': policy.spec()})
        path.write_bytes(path.read_bytes()[:-8])
        with pytest.raises(ConfigurationError):
            read_checkpoint(path)

    def test_trailing_bytes(self, policy, tmp_path):
        path = save_checkpoint(tmp_path / 'p.ckpt', {'policy': policy}, {'policy': policy.spec()})
        path.write_bytes(path.read_bytes() + b'\x00' * 8)
        with pytest.raises(ConfigurationError):
            read_checkpoint(path)

    def test_wrong_version(self, policy, tmp_path):
        path = save_checkpoint(tmp_path / 'p.ckpt', {'policy': policy}, {'policy': policy.spec()})
        raw = path.read_bytes().replace(b'sali-ckpt-v1', b'sali-ckpt-v0', 1)
        path.write_bytes(raw)
        with pytest.raises(ConfigurationError):
            read_checkpoint(path)
