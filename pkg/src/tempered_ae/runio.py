"""Run-directory artifacts: chain traces, parameter snapshots, swap log,
temperature-assignment log, and the manifest.

All files are delimited text with deterministic float formatting
(shortest round-trip repr), so identically seeded runs produce
byte-identical artifacts regardless of execution mode.

Formats (version 1):

* ``chain_r<i>.csv``   -- header then one row per sample:
  sample,kernel,accepted,log_likelihood,train_mse,test_mse,log_tau_sq
* ``params_r<i>.csv``  -- ``#`` header lines naming the format version and
  topology, then rows: sample,log_tau_sq,<flat parameter values>
* ``swaps.csv``        -- barrier,rung_a,rung_b,log_ratio,accepted
* ``temperatures.csv`` -- start_sample,t_r0,...,t_r<M-1>; each row is the
  assignment in effect from that sample onward
* ``manifest.txt``     -- key=value config echo plus run.* info keys; the
  file is itself a valid config file
"""

from __future__ import annotations

import os

import numpy as np

from .model import ModelState

TRACE_HEADER = "sample,kernel,accepted,log_likelihood,train_mse,test_mse,log_tau_sq"
SWAP_HEADER = "barrier,rung_a,rung_b,log_ratio,accepted"
PARAMS_FORMAT = "tempered-ae-params v1"


class RunArtifactError(ValueError):
    """Missing or corrupt run-directory artifact."""


def fmt(x: float) -> str:
    return repr(float(x))


class TraceWriter:
    def __init__(self, path):
        self._fh = open(path, "w")
        self._fh.write(TRACE_HEADER + "\n")

    def write(self, sample, kernel, accepted, log_lik, train_mse, test_mse, log_tau_sq):
        self._fh.write(
            f"{sample},{kernel},{int(accepted)},{fmt(log_lik)},"
            f"{fmt(train_mse)},{fmt(test_mse)},{fmt(log_tau_sq)}\n"
        )

    def flush(self):
        self._fh.flush()

    def close(self):
        self._fh.close()


class ParamsWriter:
    def __init__(self, path, topology=None):
        self._fh = open(path, "w")
        self._fh.write(f"# {PARAMS_FORMAT}\n")
        if topology is not None:
            layers = ",".join(str(d) for d in topology.layer_sizes)
            self._fh.write(f"# layers={layers}\n")
            self._fh.write(f"# latent_index={topology.latent_index}\n")
        self._fh.write("# columns=sample,log_tau_sq,theta\n")

    def write(self, sample: int, state: ModelState):
        values = ",".join(fmt(v) for v in state.params)
        self._fh.write(f"{sample},{fmt(state.log_tau_sq)},{values}\n")

    def flush(self):
        self._fh.flush()

    def close(self):
        self._fh.close()


def read_trace(path):
    """Chain trace as a dict of column arrays."""
    if not os.path.exists(path):
        raise RunArtifactError(f"missing trace: {path}")
    samples, kernels, accepted = [], [], []
    floats = {"log_likelihood": [], "train_mse": [], "test_mse": [], "log_tau_sq": []}
    with open(path) as fh:
        header = fh.readline().strip()
        if header != TRACE_HEADER:
            raise RunArtifactError(f"unexpected trace header in {path}: {header!r}")
        for ln in fh:
            cells = ln.strip().split(",")
            if len(cells) != 7:
                raise RunArtifactError(f"corrupt trace row in {path}: {ln!r}")
            samples.append(int(cells[0]))
            kernels.append(cells[1])
            accepted.append(cells[2] == "1")
            for key, cell in zip(floats, cells[3:]):
                floats[key].append(float(cell))
    out = {k: np.array(v) for k, v in floats.items()}
    out["sample"] = np.array(samples, dtype=int)
    out["kernel"] = kernels
    out["accepted"] = np.array(accepted, dtype=bool)
    return out


def read_params(path):
    """Parameter snapshots: (meta dict, [(sample, ModelState), ...])."""
    if not os.path.exists(path):
        raise RunArtifactError(f"missing parameter snapshots: {path}")
    meta = {}
    rows = []
    with open(path) as fh:
        first = fh.readline().strip()
        if first != f"# {PARAMS_FORMAT}":
            raise RunArtifactError(f"unknown parameter file format in {path}")
        for ln in fh:
            ln = ln.strip()
            if not ln:
                continue
            if ln.startswith("#"):
                body = ln[1:].strip()
                if "=" in body:
                    k, v = body.split("=", 1)
                    meta[k] = v
                continue
            cells = ln.split(",")
            sample = int(cells[0])
            log_tau = float(cells[1])
            params = np.array([float(c) for c in cells[2:]])
            rows.append((sample, ModelState(params, log_tau)))
    return meta, rows


class SwapLogWriter:
    def __init__(self, path):
        self._fh = open(path, "w")
        self._fh.write(SWAP_HEADER + "\n")

    def write(self, barrier, rung_a, rung_b, log_ratio, accepted):
        self._fh.write(
            f"{barrier},{rung_a},{rung_b},{fmt(log_ratio)},{int(accepted)}\n"
        )

    def flush(self):
        self._fh.flush()

    def close(self):
        self._fh.close()


def read_swaps(path):
    rows = []
    with open(path) as fh:
        header = fh.readline().strip()
        if header != SWAP_HEADER:
            raise RunArtifactError(f"unexpected swap header: {header!r}")
        for ln in fh:
            b, a, c, r, acc = ln.strip().split(",")
            rows.append((int(b), int(a), int(c), float(r), acc == "1"))
    return rows


def write_temperature_log(path, entries, n_replicas):
    """entries: [(start_sample, (t_r0, ..., t_r{M-1})), ...]"""
    with open(path, "w") as fh:
        cols = ",".join(f"t_r{i}" for i in range(n_replicas))
        fh.write(f"start_sample,{cols}\n")
        for start, temps in entries:
            fh.write(f"{start}," + ",".join(fmt(t) for t in temps) + "\n")


def read_temperature_log(path):
    entries = []
    with open(path) as fh:
        fh.readline()
        for ln in fh:
            cells = ln.strip().split(",")
            entries.append((int(cells[0]), tuple(float(c) for c in cells[1:])))
    return entries


def write_kv(path, mapping):
    with open(path, "w") as fh:
        for k, v in mapping.items():
            fh.write(f"{k}={v}\n")


def read_kv(path):
    if not os.path.exists(path):
        raise RunArtifactError(f"missing file: {path}")
    out = {}
    with open(path) as fh:
        for ln in fh:
            ln = ln.strip()
            if not ln or ln.startswith("#") or "=" not in ln:
                continue
            k, v = ln.split("=", 1)
            out[k.strip()] = v.strip()
    return out


class RunDir:
    """Read-side view of a completed (or partially written) run directory."""

    def __init__(self, path):
        self.path = str(path)
        manifest = os.path.join(self.path, "manifest.txt")
        if not os.path.exists(manifest):
            raise RunArtifactError(f"not a run directory (no manifest.txt): {path}")
        self.manifest = read_kv(manifest)

    def _int(self, key):
        try:
            return int(self.manifest[key])
        except KeyError:
            raise RunArtifactError(f"manifest lacks {key}") from None

    @property
    def n_replicas(self) -> int:
        return self._int("tempering.n_replicas")

    @property
    def switch_sample(self) -> int:
        return self._int("tempering.switch_sample")

    @property
    def max_samples(self) -> int:
        return self._int("tempering.max_samples")

    def file(self, name) -> str:
        return os.path.join(self.path, name)

    def trace(self, replica_id: int):
        return read_trace(self.file(f"chain_r{replica_id}.csv"))

    def traces(self):
        return [self.trace(i) for i in range(self.n_replicas)]

    def snapshots(self, replica_id: int):
        return read_params(self.file(f"params_r{replica_id}.csv"))[1]

    def posterior_snapshots(self, replica_id: int):
        """Thinned states from the canonical phase only."""
        cut = self.switch_sample
        return [(s, st) for s, st in self.snapshots(replica_id) if s >= cut]

    def train_dataset_path(self) -> str:
        return self.file("train.csv")

    def test_dataset_path(self) -> str:
        return self.file("test.csv")
