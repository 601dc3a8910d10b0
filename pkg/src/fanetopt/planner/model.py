"""Attention encoder/decoder for sequential route construction.

Encoder: separate input projections for start tokens and waypoints, then a
stack of attention layers, each one multi-head attention with a skip
connection and batch normalization followed by a feed-forward sublayer with
its own skip and normalization. The graph embedding is the mean of the
final node embeddings. Decoder: a learned query built from the graph
embedding plus a fixed-size summary of the construction state, scored
against node keys through a tanh-clipped single-head attention.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, asdict

import torch
import torch.nn as nn

from ..errors import ShapeMismatch


@dataclass(frozen=True)
class PlannerConfig:
    embed_dim: int = 128   # total embedding width across heads
    n_heads: int = 8
    n_layers: int = 3
    ff_dim: int = 512
    logit_clip: float = 10.0

    def __post_init__(self):
        if self.embed_dim % self.n_heads != 0:
            raise ShapeMismatch(
                f"embed_dim {self.embed_dim} not divisible by n_heads {self.n_heads}")
        if min(self.embed_dim, self.n_heads, self.n_layers, self.ff_dim) < 1:
            raise ShapeMismatch("model dimensions must be positive")

    def to_dict(self) -> dict:
        return asdict(self)


class MultiHeadAttention(nn.Module):
    def __init__(self, embed_dim: int, n_heads: int):
        super().__init__()
        self.n_heads = n_heads
        self.head_dim = embed_dim // n_heads
        self.w_q = nn.Linear(embed_dim, embed_dim, bias=False)
        self.w_k = nn.Linear(embed_dim, embed_dim, bias=False)
        self.w_v = nn.Linear(embed_dim, embed_dim, bias=False)
        self.w_o = nn.Linear(embed_dim, embed_dim, bias=False)

    def forward(self, h: torch.Tensor, collect: bool = False):
        b, n, d = h.shape
        def split(x):
            return x.view(b, n, self.n_heads, self.head_dim).transpose(1, 2)
        q, k, v = split(self.w_q(h)), split(self.w_k(h)), split(self.w_v(h))
        scores = q @ k.transpose(-2, -1) / math.sqrt(self.head_dim)
        attn = torch.softmax(scores, dim=-1)  # (b, heads, n, n)
        out = (attn @ v).transpose(1, 2).reshape(b, n, d)
        return self.w_o(out), (attn if collect else None)


class EncoderLayer(nn.Module):
    def __init__(self, embed_dim: int, n_heads: int, ff_dim: int):
        super().__init__()
        self.mha = MultiHeadAttention(embed_dim, n_heads)
        self.bn1 = nn.BatchNorm1d(embed_dim)
        self.bn2 = nn.BatchNorm1d(embed_dim)
        self.ff = nn.Sequential(
            nn.Linear(embed_dim, ff_dim),
            nn.ReLU(),
            nn.Linear(ff_dim, embed_dim),
        )

    def _norm(self, bn: nn.BatchNorm1d, x: torch.Tensor) -> torch.Tensor:
        b, n, d = x.shape
        return bn(x.reshape(b * n, d)).reshape(b, n, d)

    def forward(self, h: torch.Tensor, collect: bool = False):
        attn_out, attn = self.mha(h, collect)
        h_hat = self._norm(self.bn1, h + attn_out)
        out = self._norm(self.bn2, h_hat + self.ff(h_hat))
        return out, attn


class AttentionPlanner(nn.Module):
    """Encoder/decoder policy over start and waypoint tokens."""

    # context summary: last node, current start, mean of unallocated nodes,
    # remaining-time fraction, normalized minimum neighbor count
    CONTEXT_SCALARS = 2

    def __init__(self, config: PlannerConfig | None = None):
        super().__init__()
        self.config = config or PlannerConfig()
        d = self.config.embed_dim
        self.start_proj = nn.Linear(3, d)
        self.wp_proj = nn.Linear(3, d)
        self.layers = nn.ModuleList(
            EncoderLayer(d, self.config.n_heads, self.config.ff_dim)
            for _ in range(self.config.n_layers))
        self.ctx_graph = nn.Linear(d, d)
        self.ctx_state = nn.Linear(3 * d + self.CONTEXT_SCALARS, d)
        self.dec_q = nn.Linear(d, d, bias=False)
        self.dec_k = nn.Linear(d, d, bias=False)

    def encode(self, xyz: torch.Tensor, n_starts: int, collect_attn: bool = False):
        """Embed nodes; returns (node_emb (b,n,d), graph_emb (b,d), attn list)."""
        if xyz.ndim != 3 or xyz.shape[-1] != 3:
            raise ShapeMismatch(f"expected (batch, nodes, 3) coordinates, got {tuple(xyz.shape)}")
        h = torch.cat([
            self.start_proj(xyz[:, :n_starts]),
            self.wp_proj(xyz[:, n_starts:]),
        ], dim=1)
        attns = []
        for layer in self.layers:
            h, attn = layer(h, collect_attn)
            if collect_attn:
                attns.append(attn)
        return h, h.mean(dim=1), attns

    def context(self, graph_emb: torch.Tensor, last_emb: torch.Tensor,
                start_emb: torch.Tensor, unalloc_emb: torch.Tensor,
                scalars: torch.Tensor) -> torch.Tensor:
        state = torch.cat([last_emb, start_emb, unalloc_emb, scalars], dim=-1)
        return self.ctx_graph(graph_emb) + self.ctx_state(state)

    def logits(self, node_emb: torch.Tensor, context: torch.Tensor) -> torch.Tensor:
        """Clipped single-head scores of every node against the context."""
        q = self.dec_q(context)                      # (b, d)
        k = self.dec_k(node_emb)                     # (b, n, d)
        scores = (k @ q.unsqueeze(-1)).squeeze(-1) / math.sqrt(k.shape[-1])
        return self.config.logit_clip * torch.tanh(scores)
