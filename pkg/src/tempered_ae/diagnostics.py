"""Convergence diagnostics, posterior summaries, posterior-ensemble
dimensionality reduction, and the downstream kNN benchmark.

All operations are read-only over completed run output.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import network
from .model import ModelState, PriorConfig, log_likelihood, log_prior


@dataclass
class RHatReport:
    parameter_ids: list
    r_hat: list
    n_chains: int
    n_samples_per_chain: int


@dataclass
class PosteriorSummary:
    best_train_mse: float
    mean_train_mse: float
    std_train_mse: float
    best_test_mse: float
    mean_test_mse: float
    std_test_mse: float
    map_state: ModelState | None
    map_log_posterior: float
    acceptance_pct: float = float("nan")
    swap_pct: float = float("nan")
    wall_minutes: float = float("nan")
    n_samples: int = 0


@dataclass
class ReducedEnsemble:
    members: list          # latent matrices, one per retained posterior sample
    mean: np.ndarray       # per-cell mean over members
    sd: np.ndarray         # per-cell standard deviation over members


def gelman_rubin(chains) -> float:
    """Potential scale reduction over parallel chains of one scalar.

    W     = mean of within-chain variances
    B/n   = variance of the chain means
    V_hat = ((n-1)/n) W + B/n
    R_hat = sqrt(V_hat / W)

    Returns NaN when every chain is constant (W = 0, the statistic is
    degenerate).  Chains must number at least two, with equal lengths of
    at least ten.
    """
    seqs = [np.asarray(c, dtype=float) for c in chains]
    if len(seqs) < 2:
        raise ValueError("need at least two chains")
    n = seqs[0].size
    if n < 10:
        raise ValueError("need at least 10 samples per chain")
    if any(s.size != n for s in seqs):
        raise ValueError("chains must share one length")
    w = float(np.mean([np.var(s, ddof=1) for s in seqs]))
    b_over_n = float(np.var([np.mean(s) for s in seqs], ddof=1))
    if w == 0.0:
        return float("nan")
    v_hat = (n - 1) / n * w + b_over_n
    return math.sqrt(v_hat / w)


def rhat_report(chains_by_replica, parameter_ids) -> RHatReport:
    """Gelman-Rubin per flat parameter index over the post-burn-in chains.

    ``chains_by_replica``: one list of ModelState (or flat vectors) per
    replica, equal lengths.  Raises if an id falls outside the parameter
    vector.
    """
    series = []
    for chain in chains_by_replica:
        mats = [
            st.params if isinstance(st, ModelState) else np.asarray(st, dtype=float)
            for st in chain
        ]
        series.append(np.array(mats))
    n_params = series[0].shape[1] if series and series[0].size else 0
    values = []
    for pid in parameter_ids:
        if not 0 <= pid < n_params:
            raise ValueError(
                f"parameter id {pid} out of range for {n_params} parameters"
            )
        values.append(gelman_rubin([mat[:, pid] for mat in series]))
    return RHatReport(
        parameter_ids=list(parameter_ids),
        r_hat=values,
        n_chains=len(series),
        n_samples_per_chain=series[0].shape[0] if series else 0,
    )


def summarize(posterior, train, test, topology, prior_cfg: PriorConfig) -> PosteriorSummary:
    """Best/mean/std reconstruction error over posterior samples plus the
    maximum-a-posteriori state (untempered likelihood + prior)."""
    states = [p.state if hasattr(p, "state") else p for p in posterior]
    if not states:
        raise ValueError("empty posterior")
    train_mse, test_mse = [], []
    best_lp = -math.inf
    map_state = None
    for st in states:
        train_mse.append(network.mse(topology, st.params, _feat(train)))
        if test is not None:
            test_mse.append(network.mse(topology, st.params, _feat(test)))
        lp = log_likelihood(st, train, topology) + log_prior(st, prior_cfg)
        if lp > best_lp:
            best_lp = lp
            map_state = st
    tr = np.array(train_mse)
    te = np.array(test_mse) if test_mse else np.array([float("nan")])
    return PosteriorSummary(
        best_train_mse=float(tr.min()),
        mean_train_mse=float(tr.mean()),
        std_train_mse=float(tr.std()),
        best_test_mse=float(np.nanmin(te)),
        mean_test_mse=float(np.nanmean(te)),
        std_test_mse=float(np.nanstd(te)),
        map_state=map_state,
        map_log_posterior=best_lp,
        n_samples=len(states),
    )


def _feat(data):
    return data.features if hasattr(data, "features") else np.asarray(data, dtype=float)


def reduce_ensemble(posterior, data, topology, max_members: int = 30) -> ReducedEnsemble:
    """Encode the dataset with up to ``max_members`` posterior samples.

    The per-cell mean is the ensemble's reduced representation; the
    per-cell standard deviation is its uncertainty."""
    states = [p.state if hasattr(p, "state") else p for p in posterior]
    if not states:
        raise ValueError("empty posterior")
    if max_members < 1:
        raise ValueError("max_members must be >= 1")
    if len(states) > max_members:
        # evenly spaced members across the posterior, deterministic
        idx = np.linspace(0, len(states) - 1, max_members).round().astype(int)
        states = [states[i] for i in idx]
    x = _feat(data)
    members = [network.encode(topology, st.params, x) for st in states]
    stack = np.stack(members)
    return ReducedEnsemble(
        members=members,
        mean=stack.mean(axis=0),
        sd=stack.std(axis=0),
    )


def knn_classify(train_features, train_labels, test_features, test_labels, k: int = 5):
    """Euclidean k-nearest-neighbor majority vote.

    Ties are broken in favor of the candidate class with the smallest
    summed neighbor distance.  Returns accuracy in [0, 1].
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    xtr = np.asarray(train_features, dtype=float)
    xte = np.asarray(test_features, dtype=float)
    ytr = np.asarray(train_labels)
    yte = np.asarray(test_labels)
    if xtr.shape[0] == 0:
        raise ValueError("empty training set")
    k = min(k, xtr.shape[0])

    correct = 0
    tr_sq = np.sum(xtr * xtr, axis=1)
    for i in range(xte.shape[0]):
        d2 = tr_sq - 2.0 * xtr @ xte[i] + np.dot(xte[i], xte[i])
        nn = np.argpartition(d2, k - 1)[:k]
        votes = {}
        for j in nn:
            lbl = int(ytr[j])
            cnt, dist = votes.get(lbl, (0, 0.0))
            votes[lbl] = (cnt + 1, dist + math.sqrt(max(d2[j], 0.0)))
        best = max(votes.items(), key=lambda kv: (kv[1][0], -kv[1][1]))
        if best[0] == int(yte[i]):
            correct += 1
    return correct / xte.shape[0] if xte.shape[0] else float("nan")
