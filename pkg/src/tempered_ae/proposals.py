"""Proposal kernels for the Metropolis-Hastings chains.

Three kernels are available per step:

* random_walk -- isotropic Gaussian jitter on the weights, symmetric.
* lg          -- Langevin step: the proposal mean sits one gradient-descent
                 step downhill of the current weights, which makes the
                 kernel asymmetric and requires a proposal-density
                 correction in the acceptance ratio.
* adapt_lg    -- same shape but the drift uses bias-corrected,
                 variance-normalized moment estimates of the gradient
                 (the Adam recurrences), accumulated per replica.

All kernels also jitter log(tau^2) with a symmetric Gaussian step, so the
noise-variance part never contributes to the density ratio.

The adaptive drift depends on the moment history, which makes the exact
reverse kernel intractable; the reverse mean is computed by applying the
same frozen pre-update moment state to the gradient at the proposed
point.  The two-phase schedule (adaptive during burn-in, plain Langevin
after) exists precisely so retained samples come from a time-homogeneous
kernel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .model import ModelState

KERNEL_RANDOM_WALK = "random_walk"
KERNEL_LG = "lg"
KERNEL_ADAPT_LG = "adapt_lg"
KERNEL_KINDS = (KERNEL_RANDOM_WALK, KERNEL_LG, KERNEL_ADAPT_LG)


@dataclass
class ProposalConfig:
    step_sd: float = 0.005        # Gaussian noise sd on weights
    learn_rate: float = 0.01      # drift scale for gradient kernels
    tau_step_sd: float = 0.01     # random-walk sd on log tau^2; 0 pins tau^2
    lg_rate: float = 0.5          # probability a proposal uses a gradient kernel
    adam_beta1: float = 0.99
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8

    def __post_init__(self):
        if self.step_sd <= 0:
            raise ValueError("step_sd must be positive")
        if self.learn_rate <= 0:
            raise ValueError("learn_rate must be positive")
        if self.tau_step_sd < 0:
            raise ValueError("tau_step_sd must be non-negative")
        if not 0.0 <= self.lg_rate <= 1.0:
            raise ValueError("lg_rate must lie in [0, 1]")
        for b in (self.adam_beta1, self.adam_beta2):
            if not 0.0 < b < 1.0:
                raise ValueError("adam betas must lie in (0, 1)")


@dataclass
class AdamState:
    """First/second gradient moment accumulators plus the step counter."""

    first_moment: np.ndarray
    second_moment: np.ndarray
    step_count: int = 0

    @classmethod
    def zeros(cls, n_params: int) -> "AdamState":
        return cls(np.zeros(n_params), np.zeros(n_params), 0)


@dataclass
class ProposalOutcome:
    proposed_state: ModelState
    kind: str
    log_q_ratio: float
    # loss at the proposed weights when the kernel already evaluated it
    # (gradient kernels do); lets the caller skip a forward pass
    proposed_loss: float | None = field(default=None, repr=False)


def _step_tau(log_tau_sq: float, cfg: ProposalConfig, rng) -> float:
    # symmetric in log space, so it never enters the density ratio
    if cfg.tau_step_sd == 0.0:
        return log_tau_sq
    return log_tau_sq + cfg.tau_step_sd * rng.standard_normal()


def propose_random_walk(state: ModelState, cfg: ProposalConfig, rng) -> ProposalOutcome:
    """Symmetric Gaussian jitter on weights and log noise variance."""
    theta = state.params + cfg.step_sd * rng.standard_normal(state.params.size)
    log_tau = _step_tau(state.log_tau_sq, cfg, rng)
    return ProposalOutcome(ModelState(theta, log_tau), KERNEL_RANDOM_WALK, 0.0)


def log_q_ratio_gaussian(current, proposed, mean_fwd, mean_rev, step_sd) -> float:
    """log q(current|proposed) - log q(proposed|current) for isotropic
    Gaussian kernels centered at the drifted means.

    Equals (||proposed - mean_fwd||^2 - ||current - mean_rev||^2) / (2 sd^2);
    the normalizing constants cancel because both kernels share one sd.
    """
    fwd = proposed - mean_fwd
    rev = current - mean_rev
    return float(
        (np.dot(fwd, fwd) - np.dot(rev, rev)) / (2.0 * step_sd * step_sd)
    )


def propose_lg(state: ModelState, cfg: ProposalConfig, target, rng) -> ProposalOutcome:
    """Langevin-gradient proposal: Gaussian centered one descent step
    downhill, with the asymmetry correction computed from the gradient at
    the proposed point."""
    _, grad = target.loss_and_grad(state.params)
    if not np.all(np.isfinite(grad)):
        raise FloatingPointError("non-finite gradient at current state")
    mean_fwd = state.params - cfg.learn_rate * grad
    theta = mean_fwd + cfg.step_sd * rng.standard_normal(state.params.size)
    log_tau = _step_tau(state.log_tau_sq, cfg, rng)

    loss_prop, grad_prop = target.loss_and_grad(theta)
    mean_rev = theta - cfg.learn_rate * grad_prop
    log_q = log_q_ratio_gaussian(state.params, theta, mean_fwd, mean_rev, cfg.step_sd)
    return ProposalOutcome(
        ModelState(theta, log_tau), KERNEL_LG, log_q, proposed_loss=loss_prop
    )


def adam_update(grad, adam: AdamState, cfg: ProposalConfig):
    """One step of the moment recurrences; returns the normalized gradient
    and the advanced state without mutating the input.

    eta_k = b1 eta_{k-1} + (1-b1) g
    mu_k  = b2 mu_{k-1}  + (1-b2) g^2
    ghat  = sqrt(1-b2^k)/sqrt(1-b1^k) * eta_k / (sqrt(mu_k) + eps)
    """
    grad = np.asarray(grad, dtype=float)
    k = adam.step_count + 1
    eta = cfg.adam_beta1 * adam.first_moment + (1.0 - cfg.adam_beta1) * grad
    mu = cfg.adam_beta2 * adam.second_moment + (1.0 - cfg.adam_beta2) * grad * grad
    scale = math.sqrt(1.0 - cfg.adam_beta2**k) / math.sqrt(1.0 - cfg.adam_beta1**k)
    ghat = scale * eta / (np.sqrt(mu) + cfg.adam_eps)
    return ghat, AdamState(eta, mu, k)


def propose_adapt_lg(
    state: ModelState, adam: AdamState, cfg: ProposalConfig, target, rng
):
    """Adaptive Langevin proposal driven by the normalized gradient.

    The reverse-direction mean reuses the frozen pre-update moment state
    on the gradient at the proposed point, so both directions see the
    same normalization.  The moment state advances exactly once per call,
    accepted or not.

    Returns (ProposalOutcome, advanced AdamState).
    """
    _, grad = target.loss_and_grad(state.params)
    if not np.all(np.isfinite(grad)):
        raise FloatingPointError("non-finite gradient at current state")
    ghat_fwd, adam_next = adam_update(grad, adam, cfg)
    mean_fwd = state.params - cfg.learn_rate * ghat_fwd
    theta = mean_fwd + cfg.step_sd * rng.standard_normal(state.params.size)
    log_tau = _step_tau(state.log_tau_sq, cfg, rng)

    loss_prop, grad_prop = target.loss_and_grad(theta)
    ghat_rev, _ = adam_update(grad_prop, adam, cfg)  # same frozen moments
    mean_rev = theta - cfg.learn_rate * ghat_rev
    log_q = log_q_ratio_gaussian(state.params, theta, mean_fwd, mean_rev, cfg.step_sd)
    outcome = ProposalOutcome(
        ModelState(theta, log_tau), KERNEL_ADAPT_LG, log_q, proposed_loss=loss_prop
    )
    return outcome, adam_next


def select_kernel(sample_index: int, r_switch: int, lg_rate: float, rng) -> str:
    """Draw the kernel for one step: with probability (1 - lg_rate) a
    random walk, otherwise the adaptive kernel before the switch sample
    and the plain Langevin kernel after."""
    if rng.random() >= lg_rate:
        return KERNEL_RANDOM_WALK
    return KERNEL_ADAPT_LG if sample_index < r_switch else KERNEL_LG
