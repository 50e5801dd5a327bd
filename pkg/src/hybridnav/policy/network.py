"""
Policy Network Module

The learnable part of the decision core: an instruction encoder, a node
embedding, alternating graph-aware self-attention and cross-attention
rounds, separate score heads for real and imagined nodes and the fusion
head that produces the fusion factor.

All tensors are float64.
"""

import logging
from dataclasses import dataclass
from typing import Any, Dict, List, Sequence

import numpy as np
import torch
from torch import nn

from hybridnav.config import PolicyConfig
from hybridnav.exceptions import EncodingError, ShapeError
from hybridnav.memory.models import (
    KIND_INDEX,
    LOCATION_CODE_DIM,
    EmbeddingInputs,
    NodeKind,
)
from hybridnav.policy.layers import (
    CrossAttentionLayer,
    GraphAwareSelfAttentionLayer,
    SelfAttentionLayer,
    uniform_init_,
)
from hybridnav.world.instructions import TOKEN_TYPES, Vocabulary


logger = logging.getLogger(__name__)

MAX_STEP_CODE = 63
FUSION_LOGIT_LIMIT = 30.0


def _two_layer(d_in: int, hidden: int, d_out: int) -> nn.Sequential:
    return nn.Sequential(nn.Linear(d_in, hidden), nn.GELU(), nn.Linear(hidden, d_out))


@dataclass
class NodeEncodings:
    """Contextual vectors of a group of memory nodes, row-aligned with ids and kinds."""
    ids: List[int]
    kinds: List[NodeKind]
    vectors: torch.Tensor

    def __len__(self) -> int:
        return len(self.ids)

    def select(self, rows: Sequence[int]) -> 'NodeEncodings':
        rows = list(rows)
        index = torch.as_tensor(rows, dtype=torch.long)
        vectors = self.vectors.index_select(0, index) if rows else self.vectors[:0]
        return NodeEncodings([self.ids[r] for r in rows], [self.kinds[r] for r in rows], vectors)


class NavigationPolicy(nn.Module):
    """
    Instruction-conditioned node scorer over the hybrid memory map.

    Args:
        config: PolicyConfig with the layer sizes and the init seed.
        vocabulary: Token vocabulary of the instructions.
        feature_dim: Length of a node feature vector.

    Example:
        >>> vocabulary = Vocabulary.for_sizes(8, 16)
        >>> policy = NavigationPolicy(PolicyConfig(), vocabulary, feature_dim=64)
        >>> policy.encode_tokens(['walk', 'and', 'stop']).shape
        torch.Size([3, 64])
    """

    def __init__(self, config: PolicyConfig, vocabulary: Vocabulary, feature_dim: int):
        super().__init__()
        if feature_dim <= 0:
            raise ShapeError("feature_dim must be positive.", details={'feature_dim': feature_dim})
        self.config = config
        self.vocabulary = vocabulary
        self.feature_dim = feature_dim
        d = config.d_model

        self.token_embedding = nn.Embedding(len(vocabulary), d)
        self.position_embedding = nn.Embedding(config.max_tokens, d)
        self.type_embedding = nn.Embedding(len(TOKEN_TYPES), d)
        self.instruction_norm = nn.LayerNorm(d)
        self.instruction_layers = nn.ModuleList(
            SelfAttentionLayer(d, config.n_heads, config.ffn_multiplier)
            for _ in range(config.instruction_layers)
        )

        self.node_projection = nn.Linear(feature_dim, d)
        if config.separate_imagination_encoder:
            self.imagination_projection = nn.Linear(feature_dim, d)
        self.location_projection = nn.Linear(LOCATION_CODE_DIM, d)
        self.step_embedding = nn.Embedding(MAX_STEP_CODE + 1, d)
        self.kind_embedding = nn.Embedding(len(KIND_INDEX), d)
        self.node_norm = nn.LayerNorm(d)

        self.graph_layers = nn.ModuleList(
            GraphAwareSelfAttentionLayer(d, config.n_heads, config.ffn_multiplier)
            for _ in range(config.graph_layers)
        )
        self.cross_layers = nn.ModuleList(
            CrossAttentionLayer(d, config.n_heads, config.ffn_multiplier)
            for _ in range(config.graph_layers)
        )

        self.real_score = _two_layer(d, d, 1)
        self.imagined_score = _two_layer(d, d, 1)
        self.fusion = _two_layer(2 * d, d, 1)

        self.to(torch.float64)
        generator = torch.Generator().manual_seed(int(config.seed))
        uniform_init_(self, generator)

    # -- construction ----------------------------------------------------

    def spec(self) -> Dict[str, Any]:
        """Constructor arguments, for checkpoint headers."""
        return {
            'policy': self.config.to_dict(),
            'room_vocab_size': len(self.vocabulary.room_words),
            'object_vocab_size': len(self.vocabulary.object_words),
            'feature_dim': self.feature_dim,
        }

    @classmethod
    def from_spec(cls, spec: Dict[str, Any]) -> 'NavigationPolicy':
        vocabulary = Vocabulary.for_sizes(spec['room_vocab_size'], spec['object_vocab_size'])
        return cls(PolicyConfig.from_dict(spec['policy']), vocabulary, spec['feature_dim'])

    # -- instruction -----------------------------------------------------

    def encode_tokens(self, tokens: Sequence[str]) -> torch.Tensor:
        """
        Contextual token vectors (T, d_model).

        Raises:
            EncodingError: On an empty, over-long or out-of-vocabulary
                instruction.
        """
        token_ids, type_ids = self.vocabulary.encode(tokens)
        if len(token_ids) > self.config.max_tokens:
            raise EncodingError(
                f"Instruction has {len(token_ids)} tokens, more than {self.config.max_tokens}.",
                details={'length': len(token_ids), 'max_tokens': self.config.max_tokens}
            )
        positions = torch.arange(len(token_ids))
        x = (self.token_embedding(torch.as_tensor(token_ids))
             + self.position_embedding(positions)
             + self.type_embedding(torch.as_tensor(type_ids)))
        x = self.instruction_norm(x)
        for layer in self.instruction_layers:
            x = layer(x)
        return x

    # -- nodes -----------------------------------------------------------

    def embed_nodes(self, inputs: Sequence[EmbeddingInputs]) -> torch.Tensor:
        """
        Input vectors (n, d_model): feature projection plus location, step
        and kind embeddings.

        Raises:
            ShapeError: If a feature has the wrong length.
        """
        features = np.stack([item.feature for item in inputs])
        if features.shape[1] != self.feature_dim:
            raise ShapeError(
                f"Node features have length {features.shape[1]}, expected {self.feature_dim}.",
                details={'length': int(features.shape[1]), 'expected': self.feature_dim}
            )
        features = torch.as_tensor(features, dtype=torch.float64)
        locations = torch.as_tensor(np.stack([item.location_code for item in inputs]),
                                    dtype=torch.float64)
        steps = torch.as_tensor([min(item.step_code, MAX_STEP_CODE) for item in inputs])
        kinds = torch.as_tensor([KIND_INDEX[item.kind] for item in inputs])

        projected = self.node_projection(features)
        if self.config.separate_imagination_encoder:
            imagined = (kinds == KIND_INDEX[NodeKind.IMAGINATION]).unsqueeze(1)
            projected = torch.where(imagined, self.imagination_projection(features), projected)
        x = (projected + self.location_projection(locations)
             + self.step_embedding(steps) + self.kind_embedding(kinds))
        return self.node_norm(x)

    def graph_encode(
        self,
        node_vectors: torch.Tensor,
        hops: torch.Tensor,
        instruction: torch.Tensor
    ) -> torch.Tensor:
        """Alternate graph-aware self-attention and cross-attention rounds."""
        if instruction.shape[0] == 0:
            raise EncodingError("Cannot attend to an empty instruction.", details={'length': 0})
        x = node_vectors
        for graph_layer, cross_layer in zip(self.graph_layers, self.cross_layers):
            x = graph_layer(x, hops)
            x = cross_layer(x, instruction)
        return x

    # -- heads -----------------------------------------------------------

    def score(self, vectors: torch.Tensor, imagined: bool = False) -> torch.Tensor:
        """Scalar score per row."""
        head = self.imagined_score if imagined else self.real_score
        return head(vectors).squeeze(-1)

    def fusion_logit(self, real: torch.Tensor, imagined: torch.Tensor) -> torch.Tensor:
        """Pre-sigmoid fusion value of the mean-pooled real and imagined vectors."""
        d = self.config.d_model
        real_pool = real.mean(dim=0)
        imagined_pool = imagined.mean(dim=0) if imagined.shape[0] else real.new_zeros(d)
        return self.fusion(torch.cat([real_pool, imagined_pool])).squeeze(-1)
