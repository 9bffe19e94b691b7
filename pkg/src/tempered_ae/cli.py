"""Command-line front end.

Subcommands: generate, sample, diagnose, reduce, benchmark, sweep.
Every configuration key can arrive from a ``--config`` file and be
overridden by a same-named flag.  Exit codes: 0 success, 2 configuration
or usage error, 3 missing/corrupt files or artifacts, 1 runtime failure.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import network, runio
from .config import SCHEMA, ConfigError, ExperimentConfig
from .data import (
    DataError,
    apply_bounds,
    load_dataset,
    save_dataset,
    split,
)
from .data import meta_path as data_meta_path
from .diagnostics import (
    knn_classify,
    reduce_ensemble,
    rhat_report,
    summarize,
)
from .runio import RunArtifactError, RunDir, fmt
from .tempering import run_ensemble

FORMAT_VERSION = "1"


def _add_config_flags(parser):
    parser.add_argument("--config", metavar="FILE", help="key=value config file")
    for key, (_typ, _default, help_text) in SCHEMA.items():
        parser.add_argument(f"--{key}", dest=key, metavar="V", help=help_text)


def _load_config(args) -> ExperimentConfig:
    cfg = (
        ExperimentConfig.from_file(args.config)
        if getattr(args, "config", None)
        else ExperimentConfig()
    )
    for key in SCHEMA:
        val = getattr(args, key, None)
        if val is not None:
            cfg.set(key, val)
    return cfg


def _fail_config(errors) -> int:
    for e in errors:
        print(f"config error: {e}", file=sys.stderr)
    return 2


# ---------------------------------------------------------------------------
# generate

def cmd_generate(args) -> int:
    cfg = _load_config(args)
    errors = [
        e for e in cfg.validate()
        if e.startswith("dataset") or e.startswith("split")
    ]
    if cfg["dataset.kind"] == "csv":
        errors.append("generate needs a generator dataset.kind, not csv")
    if errors:
        return _fail_config(errors)
    dataset = cfg.build_dataset()
    out = args.out or os.path.join(
        cfg.output_root(), f"{cfg['dataset.kind']}_seed{cfg['dataset.seed']}.csv"
    )
    os.makedirs(os.path.dirname(out) or ".", exist_ok=True)
    save_dataset(dataset, out)
    print(f"wrote {out} and {data_meta_path(out)}")
    return 0


# ---------------------------------------------------------------------------
# sample

def _prepare_run_dir(cfg) -> str:
    run_dir = os.path.join(cfg.output_root(), cfg.run_name())
    if os.path.exists(run_dir) and os.listdir(run_dir):
        raise ConfigError(f"run directory already exists and is not empty: {run_dir}")
    os.makedirs(run_dir, exist_ok=True)
    return run_dir


def _write_manifest(cfg, run_dir, extra=None):
    mapping = dict(cfg.echo())
    mapping["run.format_version"] = FORMAT_VERSION
    if extra:
        mapping.update(extra)
    runio.write_kv(os.path.join(run_dir, "manifest.txt"), mapping)


def cmd_sample(args) -> int:
    cfg = _load_config(args)
    errors = cfg.validate()
    if errors:
        return _fail_config(errors)

    run_dir = _prepare_run_dir(cfg)
    dataset = cfg.build_dataset()
    train, test = split(dataset, cfg.make_split())
    save_dataset(train, os.path.join(run_dir, "train.csv"))
    save_dataset(test, os.path.join(run_dir, "test.csv"))
    _write_manifest(cfg, run_dir)

    result = run_ensemble(
        cfg.make_tempering(),
        cfg.make_proposal(),
        cfg.make_prior(),
        cfg.make_topology(),
        train,
        test,
        thin_interval=cfg["execution.thin_interval"],
        mode=cfg["execution.mode"],
        run_dir=run_dir,
        shared_init=cfg["execution.shared_init"],
    )

    extra = {
        "run.ladder": ",".join(fmt(t) for t in result.ladder),
        "run.mode": cfg["execution.mode"],
        "run.wall_minutes": fmt(result.wall_time / 60.0),
        "run.swap_attempts": str(result.swap_attempts),
        "run.swap_accepts": str(result.swap_accepts),
        "run.swap_attempts_canonical": str(result.swap_attempts_canonical),
        "run.swap_accepts_canonical": str(result.swap_accepts_canonical),
        "run.swap_log": "swaps.csv",
        "run.temperature_log": "temperatures.csv",
    }
    _write_manifest(cfg, run_dir, extra)
    print(
        f"run complete: {run_dir}  "
        f"acceptance={result.acceptance_pct():.2f}%  "
        f"swap={result.swap_pct:.2f}%  "
        f"wall={result.wall_time / 60.0:.2f} min"
    )
    return 0


# ---------------------------------------------------------------------------
# shared run-dir loading

def _load_run(run_dir):
    rd = RunDir(run_dir)
    cfg = ExperimentConfig.from_file(rd.file("manifest.txt"))
    topology = cfg.make_topology()
    prior = cfg.make_prior()
    train = load_dataset(rd.train_dataset_path())
    test_path = rd.test_dataset_path()
    test = load_dataset(test_path) if os.path.exists(test_path) else None
    if test is not None and test.n_instances == 0:
        test = None
    return rd, cfg, topology, prior, train, test


def _posterior_states(rd):
    """Pooled canonical-phase snapshots across replicas, replica-major."""
    pooled = []
    for i in range(rd.n_replicas):
        pooled.extend(st for _s, st in rd.posterior_snapshots(i))
    if not pooled:
        raise RunArtifactError(
            "no posterior snapshots in the canonical phase; "
            "check tempering.switch_sample vs execution.thin_interval"
        )
    return pooled


def _swap_pcts(rd):
    swaps = runio.read_swaps(rd.file("swaps.csv"))
    interval = rd._int("tempering.swap_interval")
    cut = rd.switch_sample
    tempered = [s for s in swaps if (s[0] + 1) * interval < cut]
    canonical = [s for s in swaps if (s[0] + 1) * interval >= cut]

    def pct(rows):
        if not rows:
            return float("nan")
        return 100.0 * sum(1 for r in rows if r[4]) / len(rows)

    return pct(tempered), pct(canonical)


# ---------------------------------------------------------------------------
# diagnose

def cmd_diagnose(args) -> int:
    rd, cfg, topology, prior, train, test = _load_run(args.run_dir)
    ids = (
        [int(x) for x in args.ids.split(",") if x.strip() != ""]
        if args.ids is not None
        else cfg["diagnostics.parameter_ids"]
    )

    traces = rd.traces()
    cut = rd.switch_sample
    post = [
        {k: (v[tr["sample"] >= cut] if isinstance(v, np.ndarray) else v)
         for k, v in tr.items()}
        for tr in traces
    ]

    posterior = _posterior_states(rd)
    summary = summarize(posterior, train, test, topology, prior)
    acc_all = _acceptance_pct(traces)
    acc_post = _acceptance_pct(post)
    swap_pct, swap_pct_canonical = _swap_pcts(rd)

    lines = {
        "n_posterior_samples": str(summary.n_samples),
        "train_mse_best": fmt(summary.best_train_mse),
        "train_mse_mean": fmt(summary.mean_train_mse),
        "train_mse_std": fmt(summary.std_train_mse),
        "test_mse_best": fmt(summary.best_test_mse),
        "test_mse_mean": fmt(summary.mean_test_mse),
        "test_mse_std": fmt(summary.std_test_mse),
        "trace_train_mse_best": fmt(min(tr["train_mse"].min() for tr in post)),
        "trace_test_mse_best": fmt(min(tr["test_mse"].min() for tr in post)),
        "acceptance_pct": fmt(acc_all),
        "acceptance_pct_post_switch": fmt(acc_post),
        "swap_pct": fmt(swap_pct),
        "swap_pct_canonical": fmt(swap_pct_canonical),
        "map_log_posterior": fmt(summary.map_log_posterior),
        "wall_minutes": rd.manifest.get("run.wall_minutes", "nan"),
    }
    runio.write_kv(rd.file("summary.txt"), lines)

    # R-hat over canonical-phase chains, one row per requested parameter id
    chains = [
        [st for _s, st in rd.posterior_snapshots(i)] for i in range(rd.n_replicas)
    ]
    rows = []
    for pid in ids:
        try:
            rep = rhat_report(chains, [pid])
            val = rep.r_hat[0]
            status = "degenerate" if np.isnan(val) else "ok"
            rows.append((pid, val, status))
        except ValueError as exc:
            rows.append((pid, float("nan"), f"error: {exc}"))
    with open(rd.file("rhat.csv"), "w") as fh:
        fh.write("parameter_id,r_hat,status\n")
        for pid, val, status in rows:
            fh.write(f"{pid},{fmt(val)},{status}\n")

    with open(rd.file("traces.csv"), "w") as fh:
        fh.write("replica,sample,log_likelihood,train_mse,test_mse,log_tau_sq\n")
        for i, tr in enumerate(traces):
            for j in range(len(tr["sample"])):
                fh.write(
                    f"{i},{tr['sample'][j]},{fmt(tr['log_likelihood'][j])},"
                    f"{fmt(tr['train_mse'][j])},{fmt(tr['test_mse'][j])},"
                    f"{fmt(tr['log_tau_sq'][j])}\n"
                )

    from . import plots

    plots.mse_trace_figure(traces, cut, rd.file("mse_trace.png"))
    plots.loglik_trace_figure(traces, cut, rd.file("loglik_trace.png"))

    print(f"summary: {rd.file('summary.txt')}")
    print(f"rhat:    {rd.file('rhat.csv')}")
    for pid, val, status in rows:
        print(f"  id {pid}: r_hat={val:.4f} ({status})")
    return 0


def _acceptance_pct(traces) -> float:
    total = sum(len(tr["accepted"]) for tr in traces)
    acc = sum(int(tr["accepted"].sum()) for tr in traces)
    return 100.0 * acc / total if total else float("nan")


# ---------------------------------------------------------------------------
# reduce

def cmd_reduce(args) -> int:
    rd, cfg, topology, prior, train, _test = _load_run(args.run_dir)
    max_members = (
        int(args.max_members) if args.max_members else cfg["reduce.max_members"]
    )
    if args.data:
        data = load_dataset(args.data)
        if not data.is_normalized:
            data = apply_bounds(data, train.norm_min, train.norm_max)
    else:
        data = train

    posterior = _posterior_states(rd)
    reduced = reduce_ensemble(posterior, data, topology, max_members)

    def write_matrix(path, mat):
        with open(path, "w") as fh:
            for row in np.atleast_2d(mat):
                fh.write(",".join(fmt(x) for x in row) + "\n")

    write_matrix(rd.file("latent_mean.csv"), reduced.mean)
    write_matrix(rd.file("latent_sd.csv"), reduced.sd)
    if args.write_members:
        for k, member in enumerate(reduced.members):
            write_matrix(rd.file(f"latent_member_{k}.csv"), member)

    if reduced.mean.shape[1] == 2:
        with open(rd.file("latent_scatter.csv"), "w") as fh:
            has_color = data.color is not None
            fh.write("z0,z1,color\n" if has_color else "z0,z1\n")
            for i in range(reduced.mean.shape[0]):
                row = f"{fmt(reduced.mean[i, 0])},{fmt(reduced.mean[i, 1])}"
                if has_color:
                    row += f",{fmt(data.color[i])}"
                fh.write(row + "\n")
        from . import plots

        plots.latent_scatter_figure(
            reduced.mean, data.color, rd.file("latent_scatter.png")
        )

    print(
        f"reduced {data.n_instances}x{data.n_features} -> "
        f"{reduced.mean.shape[0]}x{reduced.mean.shape[1]} "
        f"({len(reduced.members)} members), mean sd="
        f"{float(np.mean(reduced.sd)):.5f}"
    )
    return 0


# ---------------------------------------------------------------------------
# benchmark

def cmd_benchmark(args) -> int:
    rd, cfg, topology, prior, train, test = _load_run(args.run_dir)
    if args.data:
        raw = load_dataset(args.data)
        if raw.labels is None:
            raise DataError(f"dataset has no labels: {args.data}")
        # re-split the supplied data exactly as the run split its own
        train, test = split(raw, cfg.make_split())
    if train.labels is None or test is None or test.labels is None:
        raise DataError("benchmark needs labeled train and test datasets")
    k = int(args.k) if args.k else cfg["benchmark.k"]
    if k < 1:
        raise ConfigError("k must be >= 1")

    posterior = _posterior_states(rd)
    summary = summarize(posterior, train, test, topology, prior)
    map_params = summary.map_state.params

    acc_original = knn_classify(
        train.features, train.labels, test.features, test.labels, k
    )
    enc_tr = network.encode(topology, map_params, train.features)
    enc_te = network.encode(topology, map_params, test.features)
    acc_map = knn_classify(enc_tr, train.labels, enc_te, test.labels, k)

    max_members = cfg["reduce.max_members"]
    members = posterior
    if len(members) > max_members:
        idx = np.linspace(0, len(members) - 1, max_members).round().astype(int)
        members = [members[i] for i in idx]
    per_member = []
    for st in members:
        etr = network.encode(topology, st.params, train.features)
        ete = network.encode(topology, st.params, test.features)
        per_member.append(
            knn_classify(etr, train.labels, ete, test.labels, k)
        )
    per_member = np.array(per_member)

    with open(rd.file("benchmark.csv"), "w") as fh:
        fh.write("representation,k,best,mean,std\n")
        fh.write(f"original,{k},{fmt(acc_original)},{fmt(acc_original)},0.0\n")
        fh.write(f"map_reduced,{k},{fmt(acc_map)},{fmt(acc_map)},0.0\n")
        fh.write(
            f"posterior_reduced,{k},{fmt(per_member.max())},"
            f"{fmt(per_member.mean())},{fmt(per_member.std())}\n"
        )
    print(f"kNN (k={k}) accuracy:")
    print(f"  original features:   {acc_original:.4f}")
    print(f"  MAP-reduced:         {acc_map:.4f}")
    print(
        f"  posterior-reduced:   best {per_member.max():.4f} "
        f"(mean {per_member.mean():.4f}, std {per_member.std():.4f}) "
        f"over {len(per_member)} members"
    )
    return 0


# ---------------------------------------------------------------------------
# sweep

SWEEP_AXES = {
    "lg_rate": ("proposal.lg_rate", float),
    "n_replicas": ("tempering.n_replicas", int),
}


def cmd_sweep(args) -> int:
    cfg = _load_config(args)
    if args.axis not in SWEEP_AXES:
        print(
            f"config error: axis must be one of {sorted(SWEEP_AXES)}",
            file=sys.stderr,
        )
        return 2
    key, cast = SWEEP_AXES[args.axis]
    try:
        values = [cast(v) for v in args.values.split(",") if v.strip() != ""]
    except ValueError as exc:
        print(f"config error: bad sweep values: {exc}", file=sys.stderr)
        return 2
    if not values:
        print("config error: sweep values are empty", file=sys.stderr)
        return 2

    sweep_dir = os.path.join(cfg.output_root(), cfg.run_name() + f"_sweep_{args.axis}")
    os.makedirs(sweep_dir, exist_ok=True)
    rows = []
    for val in values:
        sub = cfg.copy()
        sub.set(key, val)
        sub.set("output.dir", sweep_dir)
        sub.set("output.name", f"{args.axis}_{val}")
        errors = sub.validate()
        run_dir = os.path.join(sweep_dir, f"{args.axis}_{val}")
        row = {"value": val, "run_dir": run_dir, "error": ""}
        try:
            if errors:
                raise ConfigError("; ".join(errors))
            _run_for_sweep(sub, run_dir, row)
        except Exception as exc:  # record and continue with the next value
            row["error"] = f"{type(exc).__name__}: {exc}"
            print(f"sweep value {val} failed: {row['error']}", file=sys.stderr)
        rows.append(row)

    ok_rows = [r for r in rows if not r["error"]]
    with open(os.path.join(sweep_dir, "sweep.csv"), "w") as fh:
        fh.write(
            "value,train_best,train_mean,train_std,test_best,test_mean,"
            "test_std,swap_pct,acceptance_pct,minutes,error\n"
        )
        for r in rows:
            if r["error"]:
                fh.write(f"{r['value']},,,,,,,,,,{r['error']}\n")
            else:
                fh.write(
                    f"{r['value']},{fmt(r['train_best'])},{fmt(r['train_mean'])},"
                    f"{fmt(r['train_std'])},{fmt(r['test_best'])},"
                    f"{fmt(r['test_mean'])},{fmt(r['test_std'])},"
                    f"{fmt(r['swap_pct'])},{fmt(r['acceptance_pct'])},"
                    f"{fmt(r['minutes'])},\n"
                )
    if ok_rows:
        from . import plots

        plots.sweep_figure(
            args.axis,
            [r["value"] for r in ok_rows],
            ok_rows,
            os.path.join(sweep_dir, "sweep.png"),
        )
    print(f"sweep table: {os.path.join(sweep_dir, 'sweep.csv')}")
    return 0 if ok_rows else 1


def _run_for_sweep(cfg, run_dir, row):
    if os.path.exists(run_dir) and os.listdir(run_dir):
        raise ConfigError(f"run directory already exists: {run_dir}")
    os.makedirs(run_dir, exist_ok=True)
    dataset = cfg.build_dataset()
    train, test = split(dataset, cfg.make_split())
    save_dataset(train, os.path.join(run_dir, "train.csv"))
    save_dataset(test, os.path.join(run_dir, "test.csv"))
    _write_manifest(cfg, run_dir)
    topology = cfg.make_topology()
    prior = cfg.make_prior()
    result = run_ensemble(
        cfg.make_tempering(),
        cfg.make_proposal(),
        prior,
        topology,
        train,
        test,
        thin_interval=cfg["execution.thin_interval"],
        mode=cfg["execution.mode"],
        run_dir=run_dir,
        shared_init=cfg["execution.shared_init"],
    )
    _write_manifest(cfg, run_dir, {
        "run.ladder": ",".join(fmt(t) for t in result.ladder),
        "run.wall_minutes": fmt(result.wall_time / 60.0),
    })
    summary = summarize(result.posterior, train, test, topology, prior)
    row.update(
        train_best=summary.best_train_mse,
        train_mean=summary.mean_train_mse,
        train_std=summary.std_train_mse,
        test_best=summary.best_test_mse,
        test_mean=summary.mean_test_mse,
        test_std=summary.std_test_mse,
        swap_pct=result.swap_pct,
        acceptance_pct=result.acceptance_pct(),
        minutes=result.wall_time / 60.0,
    )


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tempered-ae",
        description=(
            "Bayesian autoencoder sampling by replica-exchange MCMC with "
            "Langevin-gradient proposals"
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a synthetic dataset + sidecar")
    _add_config_flags(p)
    p.add_argument("--out", help="output csv path")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("sample", help="run the replica ensemble")
    _add_config_flags(p)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("diagnose", help="convergence + posterior summary reports")
    p.add_argument("run_dir")
    p.add_argument("--ids", help="comma-separated parameter ids for R-hat")
    p.set_defaults(func=cmd_diagnose)

    p = sub.add_parser("reduce", help="posterior-ensemble reduced representation")
    p.add_argument("run_dir")
    p.add_argument("--data", help="dataset to encode (default: run's train set)")
    p.add_argument("--max-members", help="posterior members to use")
    p.add_argument(
        "--write-members", action="store_true", help="emit per-member latents"
    )
    p.set_defaults(func=cmd_reduce)

    p = sub.add_parser("benchmark", help="kNN accuracy on reduced features")
    p.add_argument("run_dir")
    p.add_argument("--data", help="labeled dataset (default: run's datasets)")
    p.add_argument("--k", help="neighbor count")
    p.set_defaults(func=cmd_benchmark)

    p = sub.add_parser("sweep", help="one full run per value of an axis")
    _add_config_flags(p)
    p.add_argument("--axis", required=True, help="lg_rate | n_replicas")
    p.add_argument("--values", required=True, help="comma-separated values")
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (DataError, RunArtifactError) as exc:
        print(f"artifact error: {exc}", file=sys.stderr)
        return 3
    except Exception as exc:  # pragma: no cover - unexpected failures
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
