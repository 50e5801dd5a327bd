"""
Attention Layers Module

Transformer building blocks of the policy: multi-head attention with an
optional additive logit bias, the position-wise feed-forward network,
post-norm self-attention and cross-attention layers, and the graph-aware
self-attention layer whose bias is a learned scalar per hop bucket.

Everything works on unbatched (sequence, d_model) tensors.
"""

import math
from typing import Optional, Tuple

import torch
from torch import nn
import torch.nn.functional as F

from hybridnav.exceptions import ShapeError


HOP_BUCKETS = 6
DISCONNECTED_BUCKET = 5
MAX_HOP_BUCKET = 4


def hop_buckets(hops: torch.Tensor) -> torch.Tensor:
    """Bucket ids {0, 1, 2, 3, >=4, disconnected} of a hop matrix (-1 = disconnected)."""
    hops = torch.as_tensor(hops, dtype=torch.long)
    return torch.where(hops < 0, torch.full_like(hops, DISCONNECTED_BUCKET),
                       hops.clamp(max=MAX_HOP_BUCKET))


def uniform_init_(module: nn.Module, generator: torch.Generator) -> None:
    """
    Seeded initialization of every learnable tensor.

    Linear weights and biases are uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)];
    embedding tables use the embedding width as fan-in; layer norms start
    as the identity and graph bias tables at zero.
    """
    for child in module.modules():
        if isinstance(child, nn.Linear):
            bound = 1.0 / math.sqrt(child.in_features)
            with torch.no_grad():
                child.weight.copy_(_uniform(child.weight.shape, bound, generator))
                if child.bias is not None:
                    child.bias.copy_(_uniform(child.bias.shape, bound, generator))
        elif isinstance(child, nn.Embedding):
            bound = 1.0 / math.sqrt(child.embedding_dim)
            with torch.no_grad():
                child.weight.copy_(_uniform(child.weight.shape, bound, generator))
        elif isinstance(child, nn.LayerNorm):
            with torch.no_grad():
                child.weight.fill_(1.0)
                child.bias.fill_(0.0)
        elif isinstance(child, GraphAwareSelfAttentionLayer):
            with torch.no_grad():
                child.hop_bias.zero_()


def _uniform(shape, bound: float, generator: torch.Generator) -> torch.Tensor:
    return (torch.rand(shape, generator=generator, dtype=torch.float64) * 2.0 - 1.0) * bound


class MultiHeadAttention(nn.Module):
    """
    Scaled dot-product attention over H heads. The key projection has no bias.
    """

    def __init__(self, d_model: int, n_heads: int):
        super().__init__()
        if d_model % n_heads:
            raise ShapeError(
                "d_model must be divisible by n_heads.",
                details={'d_model': d_model, 'n_heads': n_heads}
            )
        self.d_model = d_model
        self.n_heads = n_heads
        self.d_head = d_model // n_heads
        self.query = nn.Linear(d_model, d_model)
        self.key = nn.Linear(d_model, d_model, bias=False)
        self.value = nn.Linear(d_model, d_model)
        self.output = nn.Linear(d_model, d_model)

    def _heads(self, x: torch.Tensor) -> torch.Tensor:
        return x.view(x.shape[0], self.n_heads, self.d_head).transpose(0, 1)

    def forward(
        self,
        query: torch.Tensor,
        memory: torch.Tensor,
        bias: Optional[torch.Tensor] = None
    ) -> Tuple[torch.Tensor, torch.Tensor]:
        """
        Attend from ``query`` rows to ``memory`` rows.

        Args:
            query: (n, d_model).
            memory: (m, d_model).
            bias: Optional (n, m) additive logit bias shared by all heads.

        Returns:
            (output (n, d_model), attention weights (H, n, m)).
        """
        if query.shape[-1] != self.d_model or memory.shape[-1] != self.d_model:
            raise ShapeError(
                f"Attention inputs must have width {self.d_model}.",
                details={'query': list(query.shape), 'memory': list(memory.shape)}
            )
        q = self._heads(self.query(query))
        k = self._heads(self.key(memory))
        v = self._heads(self.value(memory))
        logits = q @ k.transpose(1, 2) / math.sqrt(self.d_head)
        if bias is not None:
            logits = logits + bias.unsqueeze(0)
        weights = torch.softmax(logits, dim=-1)
        out = (weights @ v).transpose(0, 1).reshape(query.shape[0], self.d_model)
        return self.output(out), weights


class FeedForward(nn.Module):
    """Position-wise two-layer network with GELU."""

    def __init__(self, d_model: int, hidden: int):
        super().__init__()
        self.inner = nn.Linear(d_model, hidden)
        self.outer = nn.Linear(hidden, d_model)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.outer(F.gelu(self.inner(x)))


class SelfAttentionLayer(nn.Module):
    """Post-norm transformer layer: norm(x + attn(x)), then norm(x + ffn(x))."""

    def __init__(self, d_model: int, n_heads: int, ffn_multiplier: int = 4):
        super().__init__()
        self.attention = MultiHeadAttention(d_model, n_heads)
        self.attention_norm = nn.LayerNorm(d_model)
        self.feed_forward = FeedForward(d_model, ffn_multiplier * d_model)
        self.output_norm = nn.LayerNorm(d_model)
        self.last_weights: Optional[torch.Tensor] = None

    def forward(self, x: torch.Tensor, bias: Optional[torch.Tensor] = None) -> torch.Tensor:
        attended, self.last_weights = self.attention(x, x, bias)
        x = self.attention_norm(x + attended)
        return self.output_norm(x + self.feed_forward(x))


class GraphAwareSelfAttentionLayer(SelfAttentionLayer):
    """
    Self-attention whose logits get a learned scalar per hop bucket.

    Buckets: 0, 1, 2, 3, 4 or more hops, disconnected.
    """

    def __init__(self, d_model: int, n_heads: int, ffn_multiplier: int = 4):
        super().__init__(d_model, n_heads, ffn_multiplier)
        self.hop_bias = nn.Parameter(torch.zeros(HOP_BUCKETS, dtype=torch.float64))

    def forward(self, x: torch.Tensor, hops: torch.Tensor) -> torch.Tensor:
        hops = torch.as_tensor(hops)
        if hops.shape != (x.shape[0], x.shape[0]):
            raise ShapeError(
                f"Hop matrix shape {tuple(hops.shape)} does not match {x.shape[0]} nodes.",
                details={'hops': list(hops.shape), 'nodes': int(x.shape[0])}
            )
        return super().forward(x, self.hop_bias[hop_buckets(hops)])


class CrossAttentionLayer(nn.Module):
    """Post-norm cross-attention from node vectors to instruction tokens."""

    def __init__(self, d_model: int, n_heads: int, ffn_multiplier: int = 4):
        super().__init__()
        self.attention = MultiHeadAttention(d_model, n_heads)
        self.attention_norm = nn.LayerNorm(d_model)
        self.feed_forward = FeedForward(d_model, ffn_multiplier * d_model)
        self.output_norm = nn.LayerNorm(d_model)
        self.last_weights: Optional[torch.Tensor] = None

    def forward(self, x: torch.Tensor, tokens: torch.Tensor) -> torch.Tensor:
        attended, self.last_weights = self.attention(x, tokens)
        x = self.attention_norm(x + attended)
        return self.output_norm(x + self.feed_forward(x))
