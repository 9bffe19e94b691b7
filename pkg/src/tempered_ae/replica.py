"""A single replica's Metropolis-Hastings chain at a fixed temperature.

The runner owns the replica's RNG stream, its adaptive-moment state, and
its trace; the tempering engine only tells it how many steps to take and
which temperature to hold, so identical streams produce identical chains
whether replicas run in one process or many.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import runio
from .model import ModelState
from .proposals import (
    KERNEL_ADAPT_LG,
    KERNEL_LG,
    KERNEL_RANDOM_WALK,
    KERNEL_KINDS,
    AdamState,
    ProposalConfig,
    propose_adapt_lg,
    propose_lg,
    propose_random_walk,
    select_kernel,
)


@dataclass
class ReplicaChain:
    """Per-replica sample history and acceptance accounting."""

    replica_id: int
    temperature: float = 1.0
    kernel: list = field(default_factory=list)
    accepted: list = field(default_factory=list)
    log_likelihoods: list = field(default_factory=list)
    train_mse: list = field(default_factory=list)
    test_mse: list = field(default_factory=list)
    log_tau_sq: list = field(default_factory=list)
    # thinned full states as (sample_index, ModelState)
    states: list = field(default_factory=list)
    propose_count: dict = field(
        default_factory=lambda: {k: 0 for k in KERNEL_KINDS}
    )
    accept_count: dict = field(
        default_factory=lambda: {k: 0 for k in KERNEL_KINDS}
    )
    propose_count_post: dict = field(
        default_factory=lambda: {k: 0 for k in KERNEL_KINDS}
    )
    accept_count_post: dict = field(
        default_factory=lambda: {k: 0 for k in KERNEL_KINDS}
    )

    def __len__(self):
        return len(self.accepted)

    def acceptance_pct(self, post_switch_only: bool = False) -> float:
        prop = self.propose_count_post if post_switch_only else self.propose_count
        acc = self.accept_count_post if post_switch_only else self.accept_count
        total = sum(prop.values())
        return 100.0 * sum(acc.values()) / total if total else float("nan")


class ReplicaRunner:
    """Steps one replica: propose, evaluate the tempered posterior,
    accept/reject, record.

    ``target`` must expose loss/loss_and_grad over flat weights plus
    log_likelihood_from_loss / log_prior / train_mse_from_loss / test_mse
    (see AutoencoderTarget).  Passing ``trace_path``/``params_path`` makes
    the runner append rows incrementally so partial traces survive a
    crashed run.
    """

    def __init__(
        self,
        replica_id: int,
        target,
        cfg: ProposalConfig,
        state: ModelState,
        rng,
        temperature: float = 1.0,
        r_switch: int = 0,
        thin_interval: int = 25,
        trace_path=None,
        params_path=None,
    ):
        self.replica_id = replica_id
        self.target = target
        self.cfg = cfg
        self.rng = rng
        self.temperature = float(temperature)
        self.r_switch = int(r_switch)
        self.thin_interval = max(1, int(thin_interval))
        self.sample_index = 0
        self.adam = AdamState.zeros(target.n_params)
        self.chain = ReplicaChain(replica_id=replica_id, temperature=temperature)

        self.state = state
        sse = target.loss(state.params)
        self._loss = sse
        self._log_lik = target.log_likelihood_from_loss(sse, state.log_tau_sq)
        self._log_prior = target.log_prior(state.params, state.log_tau_sq)
        if not (math.isfinite(self._log_lik) and math.isfinite(self._log_prior)):
            raise FloatingPointError("initial state has non-finite log-posterior")

        self._trace = runio.TraceWriter(trace_path) if trace_path else None
        self._params_out = (
            runio.ParamsWriter(params_path, getattr(target, "topology", None))
            if params_path
            else None
        )

    @property
    def log_likelihood(self) -> float:
        """Untempered log-likelihood of the current state (swap currency)."""
        return self._log_lik

    def _tempered(self, log_lik: float, log_prior: float) -> float:
        return log_lik / self.temperature + log_prior

    def mh_step(self):
        """One proposal + Metropolis-Hastings decision.

        Returns (state, accepted).  Proposals that evaluate to a
        non-finite posterior are auto-rejected but still counted.
        """
        i = self.sample_index
        kind = select_kernel(i, self.r_switch, self.cfg.lg_rate, self.rng)
        if kind == KERNEL_RANDOM_WALK:
            outcome = propose_random_walk(self.state, self.cfg, self.rng)
        elif kind == KERNEL_LG:
            outcome = propose_lg(self.state, self.cfg, self.target, self.rng)
        else:
            outcome, self.adam = propose_adapt_lg(
                self.state, self.adam, self.cfg, self.target, self.rng
            )

        prop = outcome.proposed_state
        sse = outcome.proposed_loss
        if sse is None:
            sse = self.target.loss(prop.params)

        accepted = False
        if math.isfinite(sse) and math.isfinite(outcome.log_q_ratio):
            log_lik = self.target.log_likelihood_from_loss(sse, prop.log_tau_sq)
            log_pri = self.target.log_prior(prop.params, prop.log_tau_sq)
            if math.isfinite(log_lik) and math.isfinite(log_pri):
                log_alpha = (
                    self._tempered(log_lik, log_pri)
                    - self._tempered(self._log_lik, self._log_prior)
                    + outcome.log_q_ratio
                )
                u = self.rng.random()
                log_u = math.log(u) if u > 0.0 else -math.inf
                if log_u < min(0.0, log_alpha):
                    accepted = True
                    self.state = prop
                    self._loss = sse
                    self._log_lik = log_lik
                    self._log_prior = log_pri

        self._record(kind, accepted)
        self.sample_index += 1
        return self.state, accepted

    def _record(self, kind: str, accepted: bool):
        i = self.sample_index
        ch = self.chain
        ch.propose_count[kind] += 1
        if accepted:
            ch.accept_count[kind] += 1
        if i >= self.r_switch:
            ch.propose_count_post[kind] += 1
            if accepted:
                ch.accept_count_post[kind] += 1

        train_mse = self.target.train_mse_from_loss(self._loss)
        test_mse = self.target.test_mse(self.state.params)
        ch.kernel.append(kind)
        ch.accepted.append(accepted)
        ch.log_likelihoods.append(self._log_lik)
        ch.train_mse.append(train_mse)
        ch.test_mse.append(test_mse)
        ch.log_tau_sq.append(self.state.log_tau_sq)
        if (i + 1) % self.thin_interval == 0:
            ch.states.append((i, self.state.copy()))
            if self._params_out:
                self._params_out.write(i, self.state)
        if self._trace:
            self._trace.write(
                i, kind, accepted, self._log_lik, train_mse, test_mse,
                self.state.log_tau_sq,
            )

    def run_segment(self, n_steps: int):
        """Run ``n_steps`` consecutive MH steps (one swap-interval worth)."""
        if n_steps < 1:
            raise ValueError("n_steps must be >= 1")
        for _ in range(n_steps):
            self.mh_step()
        self.flush()
        return self.state

    def flush(self):
        if self._trace:
            self._trace.flush()
        if self._params_out:
            self._params_out.flush()

    def close(self):
        self.chain.temperature = self.temperature
        if self._trace:
            self._trace.close()
        if self._params_out:
            self._params_out.close()
