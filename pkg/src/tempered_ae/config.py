"""Experiment configuration: flat key=value files with dotted section
prefixes, mirrored one-to-one by CLI flags.

Unknown ``run.*`` keys are ignored so a run manifest (config echo plus
run info) can be fed straight back as a config file.
"""

from __future__ import annotations

import os

import numpy as np

from .data import (
    DataError,
    Dataset,
    SplitSpec,
    generate_clusters,
    generate_swiss_roll,
    load_csv,
)
from .model import PriorConfig
from .network import ACTIVATIONS, AutoencoderTopology, total_params
from .proposals import ProposalConfig
from .tempering import TemperingConfig

OUTPUT_ENV = "TEMPERED_AE_OUTPUT"

DATASET_KINDS = ("swissroll", "clusters", "csv")
EXECUTION_MODES = ("single", "pool")


class ConfigError(ValueError):
    """Invalid experiment configuration; message lists every problem."""


def _parse_bool(text):
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _parse_int_list(text):
    if isinstance(text, (list, tuple)):
        return [int(v) for v in text]
    s = str(text).strip()
    return [int(v) for v in s.split(",") if v.strip() != ""]


_PARSERS = {
    "int": int,
    "float": float,
    "str": str,
    "bool": _parse_bool,
    "int_list": _parse_int_list,
}

# key -> (type name, default, help)
SCHEMA = {
    "dataset.kind": ("str", "swissroll", "swissroll | clusters | csv"),
    "dataset.path": ("str", "", "source file for dataset.kind=csv"),
    "dataset.has_labels": ("bool", False, "csv: split off a label column"),
    "dataset.label_column": ("int", -1, "csv: label column index (-1 = last)"),
    "dataset.n_points": ("int", 5000, "generator: number of instances"),
    "dataset.n_features": ("int", 50, "clusters generator: feature count"),
    "dataset.n_clusters": ("int", 8, "clusters generator: blob count"),
    "dataset.noise_sd": ("float", 0.0, "generator: Gaussian noise sd"),
    "dataset.seed": ("int", 1, "generator seed"),
    "split.train_count": ("int", 3750, "training instances"),
    "split.test_count": ("int", 1250, "test instances"),
    "split.shuffle_seed": ("int", 1, "shuffle seed for the split"),
    "topology.layers": ("int_list", [3, 10, 5, 2, 5, 10, 3], "layer sizes"),
    "topology.latent_index": ("int", -1, "bottleneck index (-1 = smallest)"),
    "topology.hidden_activation": ("str", "sigmoid", "sigmoid | tanh | linear"),
    "topology.output_activation": ("str", "sigmoid", "sigmoid | linear"),
    "prior.sigma_sq": ("float", 25.0, "weight prior variance"),
    "prior.nu_1": ("float", 0.0, "noise-variance prior shape offset"),
    "prior.nu_2": ("float", 3.0, "noise-variance prior scale"),
    "proposal.step_sd": ("float", 0.005, "Gaussian proposal sd on weights"),
    "proposal.learn_rate": ("float", 0.01, "gradient drift scale"),
    "proposal.tau_step_sd": ("float", 0.01, "random-walk sd on log tau^2"),
    "proposal.lg_rate": ("float", 0.5, "probability of a gradient kernel"),
    "proposal.adam_beta1": ("float", 0.99, "first-moment decay"),
    "proposal.adam_beta2": ("float", 0.999, "second-moment decay"),
    "proposal.adam_eps": ("float", 1e-8, "moment-normalization epsilon"),
    "tempering.n_replicas": ("int", 8, "ensemble size M"),
    "tempering.t_max": ("float", 2.0, "hottest ladder temperature"),
    "tempering.swap_interval": ("int", 5, "samples between swap barriers"),
    "tempering.max_samples": ("int", 6000, "samples per replica"),
    "tempering.switch_sample": ("int", 3000, "tempered-to-canonical switch"),
    "tempering.seed": ("int", 1, "master seed for all sampler streams"),
    "execution.mode": ("str", "single", "single | pool"),
    "execution.thin_interval": ("int", 25, "full-state snapshot interval"),
    "execution.shared_init": ("bool", True, "replicas share one start state"),
    "output.dir": ("str", "", f"output root (default ${OUTPUT_ENV} or ./runs)"),
    "output.name": ("str", "", "run directory name (default derived)"),
    "diagnostics.parameter_ids": ("int_list", [0, 50, 100, 150], "R-hat ids"),
    "benchmark.k": ("int", 5, "kNN neighbor count"),
    "reduce.max_members": ("int", 30, "posterior members in the ensemble"),
}


class ExperimentConfig:
    """Typed view over the flat key=value configuration."""

    def __init__(self, values=None):
        self.values = {k: spec[1] for k, spec in SCHEMA.items()}
        if values:
            for k, v in values.items():
                self.set(k, v)

    def set(self, key: str, raw):
        if key.startswith("run."):
            return  # manifest info keys pass through silently
        if key not in SCHEMA:
            raise ConfigError(f"unknown config key: {key}")
        typ = SCHEMA[key][0]
        try:
            self.values[key] = _PARSERS[typ](raw)
        except (ValueError, TypeError) as exc:
            raise ConfigError(f"bad value for {key}: {raw!r} ({exc})") from None

    def __getitem__(self, key):
        return self.values[key]

    def copy(self) -> "ExperimentConfig":
        clone = ExperimentConfig()
        clone.values = dict(self.values)
        return clone

    # ------------------------------------------------------------------
    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        if not os.path.exists(path):
            raise ConfigError(f"config file not found: {path}")
        cfg = cls()
        with open(path) as fh:
            for lineno, ln in enumerate(fh, start=1):
                ln = ln.strip()
                if not ln or ln.startswith("#"):
                    continue
                if "=" not in ln:
                    raise ConfigError(f"{path}:{lineno}: expected key=value")
                k, v = ln.split("=", 1)
                cfg.set(k.strip(), v.strip())
        return cfg

    def echo(self) -> dict:
        """Config as writable strings, suitable for the run manifest."""
        out = {}
        for k in SCHEMA:
            v = self.values[k]
            if isinstance(v, bool):
                out[k] = "true" if v else "false"
            elif isinstance(v, list):
                out[k] = ",".join(str(x) for x in v)
            else:
                out[k] = str(v)
        return out

    # ------------------------------------------------------------------
    def dataset_feature_count(self):
        kind = self["dataset.kind"]
        if kind == "swissroll":
            return 3
        if kind == "clusters":
            return self["dataset.n_features"]
        path = self["dataset.path"]
        if not os.path.exists(path):
            return None
        with open(path) as fh:
            first = fh.readline()
        n = len(first.strip().split(","))
        return n - 1 if self["dataset.has_labels"] else n

    def dataset_instance_count(self):
        kind = self["dataset.kind"]
        if kind in ("swissroll", "clusters"):
            return self["dataset.n_points"]
        path = self["dataset.path"]
        if not os.path.exists(path):
            return None
        with open(path) as fh:
            lines = [ln for ln in fh if ln.strip()]
        if not lines:
            return 0
        header = False
        for c in lines[0].strip().split(","):
            try:
                float(c)
            except ValueError:
                header = True
                break
        return len(lines) - 1 if header else len(lines)

    def validate(self) -> list:
        """Collect every statically checkable problem before any compute."""
        errors = []
        v = self.values
        if v["dataset.kind"] not in DATASET_KINDS:
            errors.append(f"dataset.kind must be one of {DATASET_KINDS}")
        elif v["dataset.kind"] == "csv":
            if not v["dataset.path"]:
                errors.append("dataset.kind=csv requires dataset.path")
            elif not os.path.exists(v["dataset.path"]):
                errors.append(f"dataset.path does not exist: {v['dataset.path']}")
        else:
            if v["dataset.n_points"] <= 0:
                errors.append("dataset.n_points must be positive")
            if v["dataset.noise_sd"] < 0:
                errors.append("dataset.noise_sd must be non-negative")

        if v["execution.mode"] not in EXECUTION_MODES:
            errors.append(f"execution.mode must be one of {EXECUTION_MODES}")
        if v["execution.thin_interval"] < 1:
            errors.append("execution.thin_interval must be >= 1")
        if v["benchmark.k"] < 1:
            errors.append("benchmark.k must be >= 1")
        if v["reduce.max_members"] < 1:
            errors.append("reduce.max_members must be >= 1")

        topology = None
        try:
            topology = self.make_topology()
        except ValueError as exc:
            errors.append(f"topology: {exc}")
        if topology is not None:
            nfeat = self.dataset_feature_count()
            if nfeat is not None and topology.input_dim != nfeat:
                errors.append(
                    f"topology input dim {topology.input_dim} != dataset "
                    f"feature count {nfeat}"
                )
            bad_ids = [
                p for p in v["diagnostics.parameter_ids"]
                if not 0 <= p < total_params(topology)
            ]
            if bad_ids:
                errors.append(
                    f"diagnostics.parameter_ids out of range for "
                    f"{total_params(topology)} parameters: {bad_ids}"
                )

        n_inst = self.dataset_instance_count()
        if n_inst is not None:
            if v["split.train_count"] + v["split.test_count"] > n_inst:
                errors.append(
                    f"split needs {v['split.train_count'] + v['split.test_count']}"
                    f" instances, dataset has {n_inst}"
                )

        for maker, label in (
            (self.make_prior, "prior"),
            (self.make_proposal, "proposal"),
            (self.make_tempering, "tempering"),
        ):
            try:
                maker()
            except ValueError as exc:
                errors.append(f"{label}: {exc}")
        return errors

    # ------------------------------------------------------------------
    def make_topology(self) -> AutoencoderTopology:
        return AutoencoderTopology(
            layer_sizes=tuple(self["topology.layers"]),
            latent_index=self["topology.latent_index"],
            hidden_activation=self["topology.hidden_activation"],
            output_activation=self["topology.output_activation"],
        )

    def make_prior(self) -> PriorConfig:
        return PriorConfig(
            sigma_sq=self["prior.sigma_sq"],
            nu_1=self["prior.nu_1"],
            nu_2=self["prior.nu_2"],
        )

    def make_proposal(self) -> ProposalConfig:
        return ProposalConfig(
            step_sd=self["proposal.step_sd"],
            learn_rate=self["proposal.learn_rate"],
            tau_step_sd=self["proposal.tau_step_sd"],
            lg_rate=self["proposal.lg_rate"],
            adam_beta1=self["proposal.adam_beta1"],
            adam_beta2=self["proposal.adam_beta2"],
            adam_eps=self["proposal.adam_eps"],
        )

    def make_tempering(self) -> TemperingConfig:
        return TemperingConfig(
            n_replicas=self["tempering.n_replicas"],
            t_max=self["tempering.t_max"],
            swap_interval=self["tempering.swap_interval"],
            max_samples=self["tempering.max_samples"],
            switch_sample=self["tempering.switch_sample"],
            seed=self["tempering.seed"],
        )

    def make_split(self) -> SplitSpec:
        return SplitSpec(
            train_count=self["split.train_count"],
            test_count=self["split.test_count"],
            shuffle_seed=self["split.shuffle_seed"],
        )

    def build_dataset(self) -> Dataset:
        kind = self["dataset.kind"]
        if kind == "swissroll":
            return generate_swiss_roll(
                self["dataset.n_points"], self["dataset.noise_sd"],
                self["dataset.seed"],
            )
        if kind == "clusters":
            return generate_clusters(
                self["dataset.n_points"], self["dataset.n_features"],
                self["dataset.n_clusters"], self["dataset.noise_sd"],
                self["dataset.seed"],
            )
        return load_csv(
            self["dataset.path"], self["dataset.has_labels"],
            self["dataset.label_column"],
        )

    def output_root(self) -> str:
        if self["output.dir"]:
            return self["output.dir"]
        return os.environ.get(OUTPUT_ENV, "runs")

    def run_name(self) -> str:
        if self["output.name"]:
            return self["output.name"]
        return f"{self['dataset.kind']}_seed{self['tempering.seed']}"
