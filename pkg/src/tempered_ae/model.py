"""Log-likelihood, log-prior, and tempered log-posterior for the joint
sampler state (weights, noise variance).

Everything stays in log space; the noise variance is carried as
log(tau^2) so random-walk updates on it are multiplicative and can never
leave the positive half-line.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import network
from .data import Dataset

WEIGHT_INIT_SD = 0.1


@dataclass
class ModelState:
    """One replica's full state: flat weight vector plus log noise variance."""

    params: np.ndarray
    log_tau_sq: float

    def __post_init__(self):
        self.params = np.asarray(self.params, dtype=float)
        self.log_tau_sq = float(self.log_tau_sq)

    @property
    def tau_sq(self) -> float:
        return math.exp(self.log_tau_sq)

    def copy(self) -> "ModelState":
        return ModelState(self.params.copy(), self.log_tau_sq)


@dataclass
class PriorConfig:
    """Gaussian prior variance on weights plus inverse-gamma shape/scale on
    the noise variance."""

    sigma_sq: float = 25.0
    nu_1: float = 0.0
    nu_2: float = 3.0

    def __post_init__(self):
        if self.sigma_sq <= 0:
            raise ValueError("sigma_sq must be positive")
        if self.nu_2 <= 0:
            raise ValueError("nu_2 must be positive")


def _features(data) -> np.ndarray:
    if isinstance(data, Dataset):
        return data.features
    return np.atleast_2d(np.asarray(data, dtype=float))


def log_likelihood(state: ModelState, data, topology) -> float:
    """Gaussian log-likelihood of the reconstruction at noise variance tau^2.

    Returns -(N*D/2) log(2 pi tau^2) - SSE / (2 tau^2) over all N
    instances and D features.  Raises on non-finite reconstructions,
    which signal diverged parameters.
    """
    x = _features(data)
    recon = network.forward(topology, state.params, x).reconstruction
    if not np.all(np.isfinite(recon)):
        raise FloatingPointError("non-finite reconstruction: diverged parameters")
    sse = float(np.sum((x - recon) ** 2))
    return log_likelihood_from_loss(sse, state.log_tau_sq, x.size)


def log_likelihood_from_loss(sse: float, log_tau_sq: float, n_entries: int) -> float:
    """Same quantity computed from a precomputed sum of squared errors."""
    tau_sq = math.exp(log_tau_sq)
    return -0.5 * n_entries * math.log(2.0 * math.pi * tau_sq) - sse / (2.0 * tau_sq)


def log_prior(state: ModelState, cfg: PriorConfig, n_params: int | None = None) -> float:
    """Unnormalized log-prior: Gaussian on every weight, inverse-gamma on tau^2.

    -(L/2) log(2 pi sigma^2) - sum(theta^2)/(2 sigma^2)
    - (1 + nu_1) log tau^2 - nu_2 / tau^2,
    dropping the inverse-gamma normalizing constant throughout.
    """
    L = state.params.size if n_params is None else n_params
    ss = float(np.dot(state.params, state.params))
    tau_sq = math.exp(state.log_tau_sq)
    return (
        -0.5 * L * math.log(2.0 * math.pi * cfg.sigma_sq)
        - ss / (2.0 * cfg.sigma_sq)
        - (1.0 + cfg.nu_1) * state.log_tau_sq
        - cfg.nu_2 / tau_sq
    )


def tempered_log_posterior(
    state: ModelState, data, topology, cfg: PriorConfig, temperature: float = 1.0
) -> float:
    """(1/temperature) * log-likelihood + log-prior.

    Only the likelihood is attenuated; the prior enters untempered, so
    swap ratios between temperatures depend on likelihoods alone.
    """
    if temperature < 1.0:
        raise ValueError("temperature must be >= 1")
    return (
        log_likelihood(state, data, topology) / temperature
        + log_prior(state, cfg)
    )


class AutoencoderTarget:
    """Bundles topology, datasets, and prior into the evaluation surface the
    samplers consume: loss/gradient of the fit term plus log-density pieces.

    Any object with the same methods can be sampled, which is how the test
    suite drives the machinery against analytically known targets.
    """

    def __init__(self, topology, train, prior_cfg: PriorConfig, test=None):
        self.topology = topology
        self.train = _features(train)
        self.test = None if test is None else _features(test)
        if self.test is not None and self.test.size == 0:
            self.test = None
        self.prior_cfg = prior_cfg
        self.n_params = network.total_params(topology)
        self._n_entries = self.train.size

    def init_state(self, rng) -> ModelState:
        """Gaussian starting weights; tau^2 starts at the residual variance
        of that initial reconstruction so the noise scale is immediately
        compatible with the data."""
        params = network.init_params(self.topology, rng, WEIGHT_INIT_SD)
        sse = network.loss(self.topology, params, self.train)
        resid_var = max(sse / self._n_entries, 1e-10)
        return ModelState(params, math.log(resid_var))

    def loss(self, params) -> float:
        return network.loss(self.topology, params, self.train)

    def loss_and_grad(self, params):
        return network.loss_and_gradient(self.topology, params, self.train)

    def log_likelihood_from_loss(self, sse: float, log_tau_sq: float) -> float:
        return log_likelihood_from_loss(sse, log_tau_sq, self._n_entries)

    def log_prior(self, params, log_tau_sq: float) -> float:
        return log_prior(ModelState(params, log_tau_sq), self.prior_cfg)

    def train_mse_from_loss(self, sse: float) -> float:
        return sse / self._n_entries

    def test_mse(self, params) -> float:
        if self.test is None:
            return float("nan")
        return network.mse(self.topology, params, self.test)
