"""Sequential decoding: greedy / sampled rollouts and their log-probs."""

from __future__ import annotations

import contextlib
from dataclasses import dataclass

import numpy as np
import torch

from ..errors import DeadEnd
from .instance import FleetState, Instance
from .masking import feasibility_mask, neighbor_counts
from .model import AttentionPlanner

DEAD_END_PENALTY_FACTOR = 2.0  # times the instance's pairwise-distance bound


@dataclass
class Rollout:
    tokens: list[int]
    routes: list[list[int]]
    total_length: float
    cost: float
    dead_end: bool
    log_prob: torch.Tensor | None = None


def _state_scalars(state: FleetState, pair_range: np.ndarray) -> tuple[float, float]:
    inst = state.instance
    if state.current is None:
        rt_frac = 1.0
    else:
        u = state.current
        rt_frac = max(0.0, (inst.t_max[u] - state.elapsed(u)) / inst.t_max[u])
    if inst.num_uavs < 2:
        k_norm = 1.0
    else:
        ends = np.stack([state.end_position(u) for u in range(inst.num_uavs)])
        k_norm = neighbor_counts(ends, pair_range).min() / (inst.num_uavs - 1)
    return rt_frac, float(k_norm)


def _step_logits(model: AttentionPlanner, state: FleetState, node_emb: torch.Tensor,
                 graph_emb: torch.Tensor, mask: np.ndarray,
                 pair_range: np.ndarray) -> torch.Tensor:
    dtype = node_emb.dtype
    d = node_emb.shape[-1]
    zeros = torch.zeros(1, d, dtype=dtype)
    last = node_emb[0, state.tokens[-1]].unsqueeze(0) if state.tokens else zeros
    start = node_emb[0, state.current].unsqueeze(0) if state.current is not None else zeros
    unalloc = node_emb[0, ~state.allocated]
    unalloc_mean = unalloc.mean(dim=0, keepdim=True)
    scalars = torch.tensor([_state_scalars(state, pair_range)], dtype=dtype)
    context = model.context(graph_emb, last, start, unalloc_mean, scalars)
    logits = model.logits(node_emb, context).squeeze(0)
    return logits.masked_fill(torch.as_tensor(mask), float("-inf"))


def decode_rollout(model: AttentionPlanner, instance: Instance, mode: str = "greedy",
                   generator: torch.Generator | None = None,
                   with_grad: bool = False) -> Rollout:
    """Construct one token sequence; ``sample`` draws, ``greedy`` argmaxes."""
    if mode not in ("greedy", "sample"):
        raise ValueError(f"unknown rollout mode {mode!r}")
    dtype = next(model.parameters()).dtype
    pair_range = instance.pair_range()
    state = FleetState(instance)
    log_terms: list[torch.Tensor] = []
    grad_ctx = contextlib.nullcontext() if with_grad else torch.no_grad()
    with grad_ctx:
        xyz = torch.as_tensor(instance.normalized_node_xyz(), dtype=dtype).unsqueeze(0)
        node_emb, graph_emb, _ = model.encode(xyz, instance.num_uavs)
        dead_end = False
        for _ in range(instance.num_nodes):
            mask = feasibility_mask(state, pair_range)
            if mask.all():
                dead_end = True
                break
            logits = _step_logits(model, state, node_emb, graph_emb, mask, pair_range)
            log_probs = torch.log_softmax(logits, dim=-1)
            if mode == "greedy":
                token = int(torch.argmax(log_probs))
            else:
                probs = torch.exp(log_probs.detach())
                token = int(torch.multinomial(probs, 1, generator=generator))
            log_terms.append(log_probs[token])
            state.apply(token)
    length = state.total_length()
    cost = length
    if dead_end:
        cost = length + DEAD_END_PENALTY_FACTOR * state.pairwise_distance_bound()
    log_prob = torch.stack(log_terms).sum() if (with_grad and log_terms) else None
    return Rollout(tokens=list(state.tokens), routes=[list(r) for r in state.routes],
                   total_length=length, cost=cost, dead_end=dead_end, log_prob=log_prob)


def sequence_log_prob(model: AttentionPlanner, instance: Instance,
                      tokens: list[int]) -> torch.Tensor:
    """Differentiable log g(pi | s) of a frozen token sequence."""
    dtype = next(model.parameters()).dtype
    pair_range = instance.pair_range()
    state = FleetState(instance)
    xyz = torch.as_tensor(instance.normalized_node_xyz(), dtype=dtype).unsqueeze(0)
    node_emb, graph_emb, _ = model.encode(xyz, instance.num_uavs)
    terms = []
    for token in tokens:
        mask = feasibility_mask(state, pair_range)
        if mask[token]:
            raise DeadEnd(f"frozen sequence picks masked token {token}")
        logits = _step_logits(model, state, node_emb, graph_emb, mask, pair_range)
        terms.append(torch.log_softmax(logits, dim=-1)[token])
        state.apply(token)
    return torch.stack(terms).sum()


def greedy_costs(model: AttentionPlanner, instances: list[Instance]) -> np.ndarray:
    """Greedy rollout cost per instance, in eval mode without gradients."""
    was_training = model.training
    model.eval()
    try:
        costs = [decode_rollout(model, inst, mode="greedy").cost for inst in instances]
    finally:
        model.train(was_training)
    return np.array(costs)
