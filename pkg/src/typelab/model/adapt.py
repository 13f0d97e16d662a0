"""Domain adaptation: adversarial alignment, critic-guided alignment, fine-tuning."""

from __future__ import annotations

from typing import Callable

import numpy as np
import torch
from torch import nn
from torch.nn import functional as F

from .encoder import TypeEncoder, triplet_loss
from .samples import SampleTensors
from .training import TrainHistory, iterate_triplet_batches, train

__all__ = [
    "GradientReversalLayer",
    "dann_train",
    "wdgrl_train",
    "fine_tune",
    "default_lambda_schedule",
]

CRITIC_STEPS = 5
PENALTY_WEIGHT = 10.0
GP_WEIGHT = 10.0
DISC_STEPS = 5


class _ReverseGrad(torch.autograd.Function):
    @staticmethod
    def forward(ctx, x, lam):
        ctx.lam = lam
        return x.view_as(x)

    @staticmethod
    def backward(ctx, grad_output):
        return -ctx.lam * grad_output, None


class GradientReversalLayer(nn.Module):
    """Identity forward; backward multiplies the gradient by -lambda."""

    def __init__(self, lam: float = 1.0):
        super().__init__()
        self.lam = lam

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return _ReverseGrad.apply(x, self.lam)


def default_lambda_schedule(progress: float) -> float:
    """Warm-up from 0 to 1 over training."""
    return float(2.0 / (1.0 + np.exp(-10.0 * progress)) - 1.0)


def _domain_head(in_dim: int, seed: int) -> nn.Sequential:
    torch.manual_seed(seed)
    return nn.Sequential(
        nn.Linear(in_dim, 64),
        nn.ReLU(),
        nn.Linear(64, 1),
    )


def _target_batch(target: SampleTensors, size: int, rng: np.random.Generator) -> SampleTensors:
    idx = rng.integers(len(target), size=size)
    return target.take(idx)



def dann_train(
    encoder: TypeEncoder,
    source_data: SampleTensors,
    target_data: SampleTensors,
    epochs: int,
    lr: float,
    batch_size: int,
    seed: int = 0,
    lambda_schedule: Callable[[float], float] | None = None,
    margin: float | None = None,
    disc_steps: int = DISC_STEPS,
) -> TrainHistory:
    """Adversarial adaptation with a gradient-reversed domain discriminator.

    Each batch first trains the discriminator (several steps, detached
    features) so it stays near its optimum, then updates the encoder: the
    triplet objective on labeled source data plus the discriminator loss
    whose gradient enters the encoder sign-reversed and scaled by the
    scheduled lambda. Against a near-optimal discriminator the reversed
    gradient pushes the two feature distributions together instead of
    merely flipping predictions. With a zero schedule this reduces exactly
    to plain training.
    """
    if len(target_data) == 0:
        raise ValueError("empty target set")
    if lambda_schedule is None:
        lambda_schedule = default_lambda_schedule
    margin = encoder.params.margin if margin is None else margin

    discriminator = _domain_head(encoder.params.dense_dim, seed * 1000003 + 17)
    grl = GradientReversalLayer()
    enc_opt = torch.optim.Adam(encoder.parameters(), lr=lr)
    disc_opt = torch.optim.Adam(discriminator.parameters(), lr=lr)

    n_batches = max(1, int(np.ceil(len(source_data) / batch_size)))
    total_steps = max(1, epochs * n_batches)
    history = TrainHistory()
    step = 0

    def domain_loss_of(feats: torch.Tensor, n_src: int) -> torch.Tensor:
        logits = discriminator(feats).squeeze(-1)
        labels = torch.cat([torch.zeros(n_src), torch.ones(feats.shape[0] - n_src)])
        return F.binary_cross_entropy_with_logits(logits, labels)

    encoder.train()
    for epoch in range(epochs):
        rng_domain = np.random.default_rng([seed, epoch, 7])
        total = 0.0
        count = 0
        for a_idx, p_idx, n_idx in iterate_triplet_batches(source_data, batch_size, seed, epoch):
            grl.lam = lambda_schedule(step / total_steps)
            step += 1
            target_batch = _target_batch(target_data, len(a_idx), rng_domain)

            with torch.no_grad():
                f_s_det = encoder.encode_batch(source_data.take(a_idx))
                f_t_det = encoder.encode_batch(target_batch)
            det = torch.cat([f_s_det, f_t_det], dim=0)
            for _ in range(disc_steps):
                disc_opt.zero_grad()
                domain_loss_of(det, len(a_idx)).backward()
                disc_opt.step()

            t_a = encoder.encode_batch(source_data.take(a_idx))
            t_p = encoder.encode_batch(source_data.take(p_idx))
            t_n = encoder.encode_batch(source_data.take(n_idx))
            task_loss = triplet_loss(t_a, t_p, t_n, margin).mean()

            f_t = encoder.encode_batch(target_batch)
            feats = grl(torch.cat([t_a, f_t], dim=0))
            domain_loss = domain_loss_of(feats, len(a_idx))

            enc_opt.zero_grad()
            disc_opt.zero_grad()
            (task_loss + domain_loss).backward()
            enc_opt.step()  # discriminator stays frozen on this pass

            total += float(task_loss.detach()) * len(a_idx)
            count += len(a_idx)
        history.epoch_losses.append(total / max(count, 1))
    return history


def _gradient_penalty(
    critic: nn.Module,
    f_s: torch.Tensor,
    f_t: torch.Tensor,
    rng: np.random.Generator,
) -> torch.Tensor:
    n = min(f_s.shape[0], f_t.shape[0])
    eps = torch.from_numpy(rng.random((n, 1))).to(f_s.dtype)
    mixed = (eps * f_s[:n] + (1.0 - eps) * f_t[:n]).requires_grad_(True)
    out = critic(mixed).sum()
    (grad,) = torch.autograd.grad(out, mixed, create_graph=True)
    return ((grad.norm(2, dim=1) - 1.0) ** 2).mean()


def wd_estimate(
    encoder: TypeEncoder, critic: nn.Module, source: SampleTensors, target: SampleTensors
) -> float:
    """Critic estimate of the feature-distribution distance on full sets."""
    with torch.no_grad():
        encoder.eval()
        f_s = encoder.encode_batch(source)
        f_t = encoder.encode_batch(target)
        encoder.train()
        return float(critic(f_s).mean() - critic(f_t).mean())


def wdgrl_train(
    encoder: TypeEncoder,
    source_data: SampleTensors,
    target_data: SampleTensors,
    epochs: int,
    lr: float,
    batch_size: int,
    seed: int = 0,
    critic_steps: int = CRITIC_STEPS,
    penalty_weight: float = PENALTY_WEIGHT,
    gp_weight: float = GP_WEIGHT,
    margin: float | None = None,
    critic_lr: float | None = None,
) -> tuple[TrainHistory, list[float]]:
    """Critic-guided feature alignment.

    A critic with a gradient-norm penalty estimates a smoothed distance
    between source and target feature distributions; the encoder minimizes
    the triplet loss plus the weighted estimate, alternating critic_steps
    critic updates per encoder step. Returns the loss history and the
    per-epoch critic estimates on the full sets.
    """
    if len(target_data) == 0:
        raise ValueError("empty target set")
    margin = encoder.params.margin if margin is None else margin

    critic = _domain_head(encoder.params.dense_dim, seed * 1000003 + 29)
    enc_opt = torch.optim.Adam(encoder.parameters(), lr=lr)
    critic_opt = torch.optim.Adam(critic.parameters(), lr=critic_lr if critic_lr else lr)

    history = TrainHistory()
    estimates: list[float] = []

    encoder.train()
    for epoch in range(epochs):
        rng_domain = np.random.default_rng([seed, epoch, 11])
        total = 0.0
        count = 0
        for a_idx, p_idx, n_idx in iterate_triplet_batches(source_data, batch_size, seed, epoch):
            target_batch = _target_batch(target_data, len(a_idx), rng_domain)

            if critic_steps > 0:
                with torch.no_grad():
                    f_s_det = encoder.encode_batch(source_data.take(a_idx))
                    f_t_det = encoder.encode_batch(target_batch)
                for _ in range(critic_steps):
                    est = critic(f_s_det).mean() - critic(f_t_det).mean()
                    gp = _gradient_penalty(critic, f_s_det, f_t_det, rng_domain)
                    critic_loss = -est + gp_weight * gp
                    critic_opt.zero_grad()
                    critic_loss.backward()
                    critic_opt.step()

            t_a = encoder.encode_batch(source_data.take(a_idx))
            t_p = encoder.encode_batch(source_data.take(p_idx))
            t_n = encoder.encode_batch(source_data.take(n_idx))
            loss = triplet_loss(t_a, t_p, t_n, margin).mean()
            if penalty_weight != 0.0:
                f_t = encoder.encode_batch(target_batch)
                loss = loss + penalty_weight * (critic(t_a).mean() - critic(f_t).mean())

            enc_opt.zero_grad()
            critic_opt.zero_grad()
            loss.backward()
            enc_opt.step()

            total += float(loss.detach()) * len(a_idx)
            count += len(a_idx)
        history.epoch_losses.append(total / max(count, 1))
        estimates.append(wd_estimate(encoder, critic, source_data, target_data))
    return history, estimates


def fine_tune(
    encoder: TypeEncoder,
    target_data: SampleTensors,
    epochs: int,
    lr: float,
    batch_size: int,
    seed: int = 0,
    margin: float | None = None,
) -> TrainHistory:
    """Continue training on labeled target data only.

    The caller rebuilds the type cluster from the target training samples
    afterwards; predictions then come from the target label space.
    """
    if len(target_data) == 0:
        raise ValueError("empty target train set")
    return train(
        encoder, target_data, epochs=epochs, lr=lr, batch_size=batch_size,
        seed=seed, margin=margin,
    )
