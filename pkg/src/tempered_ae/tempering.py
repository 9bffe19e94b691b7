"""Replica-exchange ensemble: geometric temperature ladder, synchronized
swap barriers, and the tempered-to-canonical switch.

Replicas hold their temperatures fixed between barriers.  At a barrier,
adjacent temperature rungs are offered a swap; an accepted swap exchanges
the two replicas' *temperature values*, never their weights, which keeps
inter-process traffic down to (replica id, log-likelihood, temperature)
triples.  The rung-to-replica assignment is logged at every barrier so
trajectories can be re-keyed by temperature afterwards.

At the switch sample every temperature drops to 1 and the adaptive
burn-in kernel gives way to the plain Langevin kernel; only samples from
the canonical phase enter the pooled posterior.

Both execution modes (``single``: replicas stepped round-robin in one
process; ``pool``: one worker process per replica) consume identical RNG
streams in identical order, so they produce bit-identical results.
"""

from __future__ import annotations

import math
import multiprocessing
import os
import time
from dataclasses import dataclass, field

import numpy as np

from . import runio
from .model import AutoencoderTarget, ModelState, PriorConfig
from .proposals import ProposalConfig
from .replica import ReplicaChain, ReplicaRunner
from .rngstreams import INIT_STREAM, SWAP_STREAM, replica_stream, stream


@dataclass
class TemperingConfig:
    n_replicas: int = 8
    t_max: float = 2.0
    swap_interval: int = 5
    max_samples: int = 6000
    switch_sample: int = 3000
    seed: int = 0

    def __post_init__(self):
        if self.n_replicas < 1:
            raise ValueError("n_replicas must be >= 1")
        if self.t_max < 1.0:
            raise ValueError("t_max must be >= 1")
        if not 1 <= self.swap_interval <= self.max_samples:
            raise ValueError("swap_interval must lie in [1, max_samples]")
        if not 0 <= self.switch_sample <= self.max_samples:
            raise ValueError("switch_sample must lie in [0, max_samples]")


@dataclass
class PosteriorSample:
    replica_id: int
    sample_index: int
    state: ModelState


@dataclass
class EnsembleResult:
    chains: list
    final_states: list
    ladder: list
    posterior: list
    swap_attempts: int = 0
    swap_accepts: int = 0
    swap_attempts_canonical: int = 0
    swap_accepts_canonical: int = 0
    swap_events: list = field(default_factory=list)
    temperature_log: list = field(default_factory=list)
    rung_log: list = field(default_factory=list)
    wall_time: float = 0.0

    @property
    def swap_pct(self) -> float:
        if self.swap_attempts == 0:
            return float("nan")
        return 100.0 * self.swap_accepts / self.swap_attempts

    def acceptance_pct(self, post_switch_only: bool = False) -> float:
        prop = acc = 0
        for ch in self.chains:
            src_p = ch.propose_count_post if post_switch_only else ch.propose_count
            src_a = ch.accept_count_post if post_switch_only else ch.accept_count
            prop += sum(src_p.values())
            acc += sum(src_a.values())
        return 100.0 * acc / prop if prop else float("nan")


def build_ladder(n_replicas: int, t_max: float) -> list:
    """Geometric temperatures T_i = t_max**(i/(M-1)); [1.0] for one replica."""
    if n_replicas < 1:
        raise ValueError("n_replicas must be >= 1")
    if t_max < 1.0:
        raise ValueError("t_max must be >= 1")
    if n_replicas == 1:
        return [1.0]
    return [t_max ** (i / (n_replicas - 1)) for i in range(n_replicas)]


def swap_log_ratio(log_lik_a: float, log_lik_b: float, t_a: float, t_b: float) -> float:
    """Log acceptance ratio for exchanging the states at temperatures
    t_a and t_b, given their *untempered* log-likelihoods.  Proposal
    symmetry and the untempered priors cancel, leaving
    (1/t_b - 1/t_a) * (logL_a - logL_b)."""
    return (1.0 / t_b - 1.0 / t_a) * (log_lik_a - log_lik_b)


def swap_pair_schedule(barrier_index: int, n_replicas: int) -> list:
    """Alternating even/odd adjacent rung pairs: barrier 0 offers
    (0,1),(2,3),...; barrier 1 offers (1,2),(3,4),...; so every neighbor
    pair is proposed half the time without overlaps."""
    start = 0 if barrier_index % 2 == 0 else 1
    return [(i, i + 1) for i in range(start, n_replicas - 1, 2)]


# ---------------------------------------------------------------------------
# executors: identical stepping semantics, in-process or one process/replica

class _LocalExecutor:
    def __init__(self, runner_args):
        self.runners = [ReplicaRunner(**kw) for kw in runner_args]

    def run_all(self, n_steps, temps):
        out = []
        for runner, temp in zip(self.runners, temps):
            runner.temperature = temp
            runner.run_segment(n_steps)
            out.append(runner.log_likelihood)
        return out

    def finish(self):
        chains, states = [], []
        for runner in self.runners:
            runner.close()
            chains.append(runner.chain)
            states.append(runner.state)
        return chains, states

    def abort(self):
        for runner in self.runners:
            runner.flush()


def _worker_main(conn, runner_kwargs):
    try:
        runner = ReplicaRunner(**runner_kwargs)
        while True:
            msg = conn.recv()
            if msg[0] == "segment":
                _, n_steps, temp = msg
                runner.temperature = temp
                runner.run_segment(n_steps)
                conn.send(("ok", runner.log_likelihood))
            elif msg[0] == "finish":
                runner.close()
                conn.send(("chain", runner.chain, runner.state))
                return
    except EOFError:
        pass
    except Exception as exc:  # report, let the coordinator abort the run
        try:
            conn.send(("error", f"{type(exc).__name__}: {exc}"))
        except (BrokenPipeError, OSError):
            pass
    finally:
        conn.close()


class _PoolExecutor:
    def __init__(self, runner_args):
        ctx = multiprocessing.get_context("fork")
        self.conns = []
        self.procs = []
        for kw in runner_args:
            parent, child = ctx.Pipe()
            proc = ctx.Process(target=_worker_main, args=(child, kw), daemon=True)
            proc.start()
            child.close()
            self.conns.append(parent)
            self.procs.append(proc)

    def _recv(self, conn):
        msg = conn.recv()
        if msg[0] == "error":
            raise RuntimeError(f"replica worker failed: {msg[1]}")
        return msg

    def run_all(self, n_steps, temps):
        for conn, temp in zip(self.conns, temps):
            conn.send(("segment", n_steps, temp))
        return [self._recv(conn)[1] for conn in self.conns]

    def finish(self):
        for conn in self.conns:
            conn.send(("finish",))
        chains, states = [], []
        for conn in self.conns:
            msg = self._recv(conn)
            chains.append(msg[1])
            states.append(msg[2])
        self.abort()
        return chains, states

    def abort(self):
        for conn in self.conns:
            conn.close()
        for proc in self.procs:
            proc.join(timeout=10)
            if proc.is_alive():
                proc.terminate()


def run_ensemble_target(
    cfg: TemperingConfig,
    proposal_cfg: ProposalConfig,
    target,
    *,
    thin_interval: int = 25,
    mode: str = "single",
    run_dir=None,
    shared_init: bool = True,
    init_fn=None,
) -> EnsembleResult:
    """Run the replica ensemble against any sampling target.

    ``init_fn(rng) -> ModelState`` overrides the target's own initializer.
    With ``shared_init`` all replicas start from one draw, so the
    between-replica convergence diagnostic measures mixing rather than
    basin multiplicity; disable it for overdispersed starts.
    """
    if mode not in ("single", "pool"):
        raise ValueError(f"unknown execution mode {mode!r}")
    t0 = time.perf_counter()
    m = cfg.n_replicas
    ladder = build_ladder(m, cfg.t_max)

    draw = init_fn if init_fn is not None else target.init_state
    init_rng = stream(cfg.seed, INIT_STREAM)
    if shared_init:
        first = draw(init_rng)
        init_states = [first.copy() for _ in range(m)]
    else:
        init_states = [draw(init_rng) for _ in range(m)]

    switched = cfg.switch_sample == 0
    temps = [1.0] * m if switched else list(ladder)

    runner_args = []
    for i in range(m):
        runner_args.append(
            dict(
                replica_id=i,
                target=target,
                cfg=proposal_cfg,
                state=init_states[i],
                rng=replica_stream(cfg.seed, i),
                temperature=temps[i],
                r_switch=cfg.switch_sample,
                thin_interval=thin_interval,
                trace_path=(
                    os.path.join(run_dir, f"chain_r{i}.csv") if run_dir else None
                ),
                params_path=(
                    os.path.join(run_dir, f"params_r{i}.csv") if run_dir else None
                ),
            )
        )

    executor = (
        _PoolExecutor(runner_args) if mode == "pool" else _LocalExecutor(runner_args)
    )
    swap_rng = stream(cfg.seed, SWAP_STREAM)
    swap_writer = (
        runio.SwapLogWriter(os.path.join(run_dir, "swaps.csv")) if run_dir else None
    )

    result = EnsembleResult(
        chains=[], final_states=[], ladder=ladder, posterior=[]
    )
    replica_of_rung = list(range(m))
    result.temperature_log.append((0, tuple(temps)))
    result.rung_log.append((0, tuple(replica_of_rung)))

    log_liks = [None] * m
    done = 0
    barrier = 0
    try:
        while done < cfg.max_samples:
            next_stop = ((done // cfg.swap_interval) + 1) * cfg.swap_interval
            if not switched:
                next_stop = min(next_stop, cfg.switch_sample)
            next_stop = min(next_stop, cfg.max_samples)
            log_liks = executor.run_all(next_stop - done, temps)
            done = next_stop

            if not switched and done >= cfg.switch_sample:
                switched = True
                temps = [1.0] * m
                _log_assignment(result, done, temps, replica_of_rung)

            if done % cfg.swap_interval == 0 and done < cfg.max_samples:
                for rung_a, rung_b in swap_pair_schedule(barrier, m):
                    a = replica_of_rung[rung_a]
                    b = replica_of_rung[rung_b]
                    ratio = swap_log_ratio(
                        log_liks[a], log_liks[b], temps[a], temps[b]
                    )
                    u = swap_rng.random()
                    accepted = (math.log(u) if u > 0 else -math.inf) < min(0.0, ratio)
                    if switched:
                        result.swap_attempts_canonical += 1
                        result.swap_accepts_canonical += int(accepted)
                    else:
                        result.swap_attempts += 1
                        result.swap_accepts += int(accepted)
                    if accepted:
                        temps[a], temps[b] = temps[b], temps[a]
                        replica_of_rung[rung_a] = b
                        replica_of_rung[rung_b] = a
                    result.swap_events.append(
                        (barrier, rung_a, rung_b, ratio, accepted)
                    )
                    if swap_writer:
                        swap_writer.write(barrier, rung_a, rung_b, ratio, accepted)
                if swap_writer:
                    swap_writer.flush()
                _log_assignment(result, done, temps, replica_of_rung)
                barrier += 1
    except BaseException:
        executor.abort()
        if swap_writer:
            swap_writer.close()
        raise

    chains, states = executor.finish()
    if swap_writer:
        swap_writer.close()
    if run_dir:
        runio.write_temperature_log(
            os.path.join(run_dir, "temperatures.csv"), result.temperature_log, m
        )

    result.chains = chains
    result.final_states = states
    for ch in chains:
        for s, st in ch.states:
            if s >= cfg.switch_sample:
                result.posterior.append(PosteriorSample(ch.replica_id, s, st))
    result.wall_time = time.perf_counter() - t0
    return result


def _log_assignment(result, start_sample, temps, replica_of_rung):
    result.temperature_log.append((start_sample, tuple(temps)))
    result.rung_log.append((start_sample, tuple(replica_of_rung)))


def run_ensemble(
    cfg: TemperingConfig,
    proposal_cfg: ProposalConfig,
    prior_cfg: PriorConfig,
    topology,
    train,
    test=None,
    *,
    thin_interval: int = 25,
    mode: str = "single",
    run_dir=None,
    shared_init: bool = True,
) -> EnsembleResult:
    """Ensemble run for the autoencoder posterior over a train/test pair."""
    target = AutoencoderTarget(topology, train, prior_cfg, test=test)
    return run_ensemble_target(
        cfg,
        proposal_cfg,
        target,
        thin_interval=thin_interval,
        mode=mode,
        run_dir=run_dir,
        shared_init=shared_init,
    )


def replica_holding_rung(result: EnsembleResult, rung: int, sample_index: int) -> int:
    """Which replica held the given temperature rung at a sample index."""
    holder = result.rung_log[0][1][rung]
    for start, assignment in result.rung_log:
        if start > sample_index:
            break
        holder = assignment[rung]
    return holder


def temperature_trajectory(result: EnsembleResult, rung: int = 0) -> np.ndarray:
    """Per-sample replica id of the trajectory keyed to one temperature
    rung, reconstructed from the barrier assignment log.  Meaningful for
    the tempered phase; after the switch all rungs sit at temperature 1."""
    n = len(result.chains[0])
    holders = np.empty(n, dtype=int)
    log = result.rung_log
    j = 0
    current = log[0][1][rung]
    for s in range(n):
        while j + 1 < len(log) and log[j + 1][0] <= s:
            j += 1
            current = log[j][1][rung]
        holders[s] = current
    return holders
