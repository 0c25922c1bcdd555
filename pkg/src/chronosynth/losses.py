"""Non-saturating adversarial losses, L1 reconstruction, and the gradient
penalty applied to the discriminator at real samples."""

from __future__ import annotations

import torch
import torch.nn.functional as F


class NonFiniteLoss(RuntimeError):
    def __init__(self, term: str, value: float):
        super().__init__(f"non-finite loss term {term!r}: {value}")
        self.term = term


def _check_finite(term: str, value: torch.Tensor) -> torch.Tensor:
    if not torch.isfinite(value).all():
        raise NonFiniteLoss(term, float(value.detach().reshape(-1)[0]))
    return value


def generator_loss(d_fake: torch.Tensor, fake: torch.Tensor, real: torch.Tensor,
                   lambda_l1: float):
    """Total generator loss and its (gan, l1) parts.

    mean softplus(-d_fake) + lambda * mean |real - fake|
    """
    gan = _check_finite("g_gan", F.softplus(-d_fake).mean())
    l1 = _check_finite("g_l1", (real - fake).abs().mean())
    return gan + lambda_l1 * l1, gan, l1


def discriminator_loss(d_real: torch.Tensor, d_fake: torch.Tensor) -> torch.Tensor:
    """mean softplus(-d_real) + mean softplus(d_fake)"""
    return _check_finite(
        "d_loss", F.softplus(-d_real).mean() + F.softplus(d_fake).mean()
    )


def r1_penalty(discriminator, candidate, coord_grid, lr, hr_ref,
               weight: float) -> torch.Tensor:
    """(weight / 2) * batch mean of ||grad_candidate D||^2 at real samples.

    The returned tensor carries second-order graph so the penalty can be
    backpropagated into the discriminator's parameters.
    """
    candidate = candidate.detach().requires_grad_(True)
    scores = discriminator(candidate, coord_grid, lr, hr_ref)
    (grad,) = torch.autograd.grad(scores.sum(), candidate, create_graph=True)
    if not torch.isfinite(grad).all():
        raise NonFiniteLoss("r1_grad", float("nan"))
    sq_norm = grad.pow(2).flatten(1).sum(dim=1).mean()
    return _check_finite("r1", 0.5 * weight * sq_norm)
