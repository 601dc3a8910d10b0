"""REINFORCE with a greedy rollout baseline and a t-test gate.

Per batch: sample rollouts under the live policy, greedy rollouts under the
frozen baseline; the advantage is the cost difference and the surrogate
loss is its product with the sequence log-probability (batch mean). The
baseline is replaced whenever a one-sided paired t-test on a fixed
validation pool finds the live policy significantly better.
"""

from __future__ import annotations

import copy
import csv
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import torch
from scipy.stats import ttest_rel

from ..errors import NonFiniteGradient
from .instance import Instance
from .model import AttentionPlanner
from .rollout import decode_rollout, greedy_costs

InstanceGen = Callable[[np.random.Generator], Instance]


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 10
    steps_per_epoch: int = 20
    batch_size: int = 32
    alpha: float = 0.05
    lr: float = 1e-4
    seed: int = 0
    val_size: int = 20


@dataclass
class EpochStats:
    epoch: int
    mean_len: float
    baseline_len: float
    ttest_p: float


@dataclass
class TrainResult:
    model: AttentionPlanner            # the best (baseline) model
    history: list[EpochStats] = field(default_factory=list)
    baseline_val_curve: list[float] = field(default_factory=list)


def check_finite_grads(model: AttentionPlanner, context: str) -> None:
    """Abort with a diagnostic if any accumulated gradient is NaN/Inf."""
    for name, p in model.named_parameters():
        if p.grad is not None and not torch.isfinite(p.grad).all():
            raise NonFiniteGradient(f"{context}: non-finite gradient in {name}")


def one_sided_paired_ttest(candidate: np.ndarray, baseline: np.ndarray) -> float:
    """p-value that the candidate's paired costs are lower.

    Zero-variance differences make the statistic undefined: uniformly lower
    costs count as certain improvement, anything else as no evidence.
    """
    diffs = candidate - baseline
    if np.std(diffs) == 0.0:
        return 0.0 if diffs.mean() < 0.0 else 1.0
    p = ttest_rel(candidate, baseline, alternative="less").pvalue
    return 1.0 if np.isnan(p) else float(p)


def train(model: AttentionPlanner, instance_gen: InstanceGen, config: TrainConfig,
          val_pool: list[Instance] | None = None,
          stop_when_val_below: float | None = None) -> TrainResult:
    torch.manual_seed(config.seed)
    rng = np.random.default_rng(config.seed)
    sample_gen = torch.Generator()
    sample_gen.manual_seed(config.seed)

    if val_pool is None:
        val_rng = np.random.default_rng(config.seed + 10_000)
        val_pool = [instance_gen(val_rng) for _ in range(config.val_size)]

    baseline = copy.deepcopy(model)
    baseline.eval()
    base_val = greedy_costs(baseline, val_pool)
    result = TrainResult(model=baseline, baseline_val_curve=[float(base_val.mean())])
    optimizer = torch.optim.Adam(model.parameters(), lr=config.lr)

    for epoch in range(1, config.epochs + 1):
        epoch_sample_costs: list[float] = []
        last_p = 1.0
        for step in range(1, config.steps_per_epoch + 1):
            batch = [instance_gen(rng) for _ in range(config.batch_size)]
            model.train()
            rollouts = [decode_rollout(model, s, mode="sample", generator=sample_gen,
                                       with_grad=True) for s in batch]
            bm_costs = greedy_costs(baseline, batch)
            advantages = np.array([r.cost for r in rollouts]) - bm_costs
            terms = [float(adv) * r.log_prob
                     for adv, r in zip(advantages, rollouts) if r.log_prob is not None]
            loss = torch.stack(terms).mean()
            optimizer.zero_grad()
            loss.backward()
            check_finite_grads(model, f"epoch {epoch} step {step} "
                                      f"(loss={float(loss.detach()):.6g})")
            optimizer.step()
            epoch_sample_costs.extend(r.cost for r in rollouts)

            cand_val = greedy_costs(model, val_pool)
            last_p = one_sided_paired_ttest(cand_val, base_val)
            if last_p < config.alpha and cand_val.mean() < base_val.mean():
                baseline = copy.deepcopy(model)
                baseline.eval()
                base_val = cand_val
                result.model = baseline
                result.baseline_val_curve.append(float(base_val.mean()))
        result.history.append(EpochStats(
            epoch=epoch,
            mean_len=float(np.mean(epoch_sample_costs)),
            baseline_len=float(base_val.mean()),
            ttest_p=last_p,
        ))
        if stop_when_val_below is not None and base_val.mean() <= stop_when_val_below:
            break
    return result


def write_training_log(history: list[EpochStats], path) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["epoch", "mean_len", "baseline_len", "ttest_p"])
        for row in history:
            writer.writerow([row.epoch, f"{row.mean_len:.6f}",
                             f"{row.baseline_len:.6f}", f"{row.ttest_p:.6g}"])
