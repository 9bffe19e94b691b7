"""Bayesian autoencoders sampled by replica-exchange MCMC with
Langevin-gradient and adaptive-moment proposal distributions."""

from .data import (
    Dataset,
    SplitSpec,
    denormalize,
    generate_clusters,
    generate_swiss_roll,
    load_csv,
    load_dataset,
    normalize,
    save_dataset,
    split,
)
from .diagnostics import (
    PosteriorSummary,
    ReducedEnsemble,
    RHatReport,
    gelman_rubin,
    knn_classify,
    reduce_ensemble,
    rhat_report,
    summarize,
)
from .model import (
    AutoencoderTarget,
    ModelState,
    PriorConfig,
    log_likelihood,
    log_prior,
    tempered_log_posterior,
)
from .network import (
    AutoencoderTopology,
    ForwardResult,
    decode,
    encode,
    forward,
    gradient,
    loss,
    loss_and_gradient,
    mse,
    total_params,
)
from .proposals import (
    AdamState,
    ProposalConfig,
    ProposalOutcome,
    adam_update,
    log_q_ratio_gaussian,
    propose_adapt_lg,
    propose_lg,
    propose_random_walk,
    select_kernel,
)
from .replica import ReplicaChain, ReplicaRunner
from .tempering import (
    EnsembleResult,
    PosteriorSample,
    TemperingConfig,
    build_ladder,
    run_ensemble,
    run_ensemble_target,
    swap_log_ratio,
    swap_pair_schedule,
    temperature_trajectory,
)

__version__ = "0.1.0"
