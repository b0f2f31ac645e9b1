"""
Experiment runner: configuration, per-chain trace files and the summary
table (NMI, VI, mean occupied count, mean concentration, extra weight).

Output directory layout::

    config.ini                      resolved configuration
    data.csv                        data used, last column the true label
    traces/trace_K{K}_seed{S}.csv   one row per retained iteration
    traces/assign_K{K}_seed{S}.csv  assignment snapshots
    summary.txt                     aligned table
    summary.json                    machine-readable summary
"""
import configparser
import csv
import json
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import metrics, synth
from .alpha_posterior import GammaHyper
from .gibbs import ChainConfig, Trace, run_chain
from .niw import NIWParams

__all__ = [
    "RunConfig",
    "load_config",
    "save_config",
    "run",
    "emit_trace",
    "emit_assignments",
    "read_trace",
    "summarize",
    "batch_means_se",
    "format_summary",
]

log = logging.getLogger(__name__)

BATCH_COUNT = 20
COLUMNS = ("nmi", "vi", "k_bar", "alpha_bar", "extra_weight")
COLUMN_TITLES = {"nmi": "NMI", "vi": "VI", "k_bar": "K_bar", "alpha_bar": "alpha_bar", "extra_weight": "pi_extra"}


@dataclass
class RunConfig:
    """
    Experiment configuration.

    ``data_source`` is ``"simulate"`` (uses ``sim``) or ``"csv"`` (uses
    ``data_path``). ``prior`` is ``"auto"`` for empirical NIW defaults, or a
    dict with ``mean0`` (list or ``"data"``), ``kappa0``, ``nu0``, ``psi0``.
    """

    data_source: str = "simulate"
    data_path: str = None
    sim: synth.SimSpec = field(default_factory=synth.sim1)
    k_values: tuple = (3, 4, 5, 6)
    hyper: GammaHyper = field(default_factory=GammaHyper)
    prior: object = "auto"
    iterations: int = 5000
    burn_in: int = 1000
    thinning: int = 1
    seeds: tuple = (1, 2, 3, 4, 5)
    output_dir: str = "runs/out"
    k_true: int = None
    nmi_normalization: str = "geometric"
    workers: int = 1

    def validate(self):
        if not self.k_values:
            raise ValueError("k_values must list at least one K")
        if not self.seeds:
            raise ValueError("seeds must list at least one seed")
        if any(k < 1 for k in self.k_values):
            raise ValueError(f"every K must be positive, got {self.k_values}")
        if self.iterations <= self.burn_in:
            raise ValueError(f"iterations ({self.iterations}) must exceed burn_in ({self.burn_in})")
        if self.thinning < 1:
            raise ValueError("thinning must be positive")
        if self.data_source not in ("simulate", "csv"):
            raise ValueError(f"unknown data source {self.data_source!r}")
        if self.data_source == "csv" and not self.data_path:
            raise ValueError("data source 'csv' needs a path")
        if self.nmi_normalization not in ("geometric", "arithmetic", "max"):
            raise ValueError(f"unknown NMI normalization {self.nmi_normalization!r}")
        return self

    def load_data(self):
        if self.data_source == "simulate":
            return synth.generate(self.sim)
        path = Path(self.data_path)
        if not path.is_file():
            raise FileNotFoundError(f"data file not found: {path}")
        return synth.read_csv(path)

    def resolve_prior(self, data):
        if self.prior == "auto":
            return NIWParams.from_data(data)
        spec = dict(self.prior)
        d = data.shape[1]
        mean0 = data.mean(axis=0) if spec.get("mean0", "data") == "data" else spec["mean0"]
        psi0 = np.asarray(spec.get("psi0", np.eye(d)), dtype=float).reshape(d, d)
        return NIWParams(mean0, float(spec.get("kappa0", 1.0)), float(spec.get("nu0", d + 2.0)), psi0)


def _floats(text):
    return [float(v) for v in text.replace(",", " ").split()]


def _ints(text):
    return [int(v) for v in text.replace(",", " ").split()]


def _matrix(text):
    rows = [r for r in text.split(";") if r.strip()]
    return [_floats(r) for r in rows]


def load_config(path):
    """Parse an INI run configuration. Missing keys take the defaults."""
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"config file not found: {path}")
    # '#' starts an inline comment; ';' stays literal since it separates psi0 rows
    cp = configparser.ConfigParser(inline_comment_prefixes=("#",))
    cp.read(path)
    cfg = RunConfig()
    if cp.has_section("data"):
        sec = cp["data"]
        cfg.data_source = sec.get("source", cfg.data_source)
        cfg.data_path = sec.get("path", cfg.data_path)
        if cfg.data_path and not os.path.isabs(cfg.data_path):
            cfg.data_path = str((path.parent / cfg.data_path).resolve())
        if cfg.data_source == "simulate":
            default = synth.sim1()
            weights = _floats(sec["weights"]) if "weights" in sec else default.weights
            means = _floats(sec["means"]) if "means" in sec else default.means[:, 0]
            sds = np.asarray(_floats(sec["sds"])) if "sds" in sec else np.ones(len(weights))
            cfg.sim = synth.SimSpec(
                sec.getint("n", default.n),
                tuple(weights),
                tuple(means),
                tuple(sds**2),
                sec.getint("seed", default.seed),
            )
    if cp.has_section("model"):
        sec = cp["model"]
        if "k_values" in sec:
            cfg.k_values = tuple(_ints(sec["k_values"]))
        cfg.hyper = GammaHyper(sec.getfloat("a", 1.0), sec.getfloat("b", 1.0))
        if "k_true" in sec:
            cfg.k_true = sec.getint("k_true")
    if cp.has_section("prior"):
        sec = cp["prior"]
        if sec.get("mode", "auto") == "auto":
            cfg.prior = "auto"
        else:
            prior = {}
            if "mean0" in sec:
                prior["mean0"] = "data" if sec["mean0"].strip() == "data" else _floats(sec["mean0"])
            if "kappa0" in sec:
                prior["kappa0"] = sec.getfloat("kappa0")
            if "nu0" in sec:
                prior["nu0"] = sec.getfloat("nu0")
            if "psi0" in sec:
                prior["psi0"] = _matrix(sec["psi0"])
            cfg.prior = prior
    if cp.has_section("chain"):
        sec = cp["chain"]
        cfg.iterations = sec.getint("iterations", cfg.iterations)
        cfg.burn_in = sec.getint("burn_in", cfg.iterations // 5)
        cfg.thinning = sec.getint("thinning", cfg.thinning)
        if "seeds" in sec:
            cfg.seeds = tuple(_ints(sec["seeds"]))
        cfg.workers = sec.getint("workers", cfg.workers)
    if cp.has_section("output"):
        sec = cp["output"]
        cfg.output_dir = sec.get("dir", cfg.output_dir)
        if not os.path.isabs(cfg.output_dir):
            cfg.output_dir = str((path.parent / cfg.output_dir).resolve())
        cfg.nmi_normalization = sec.get("nmi_normalization", cfg.nmi_normalization)
    return cfg.validate()


def _fmt_list(values):
    return ", ".join(repr(float(v)) if isinstance(v, (float, np.floating)) else str(v) for v in values)


def save_config(cfg, path, resolved_prior=None):
    """Write ``cfg`` as INI; ``resolved_prior`` pins the prior actually used."""
    cp = configparser.ConfigParser()
    data = {"source": cfg.data_source}
    if cfg.data_source == "csv":
        data["path"] = str(cfg.data_path)
    else:
        sim = cfg.sim
        data.update(
            n=str(sim.n),
            weights=_fmt_list(sim.weights),
            means=_fmt_list(sim.means[:, 0]),
            sds=_fmt_list(np.sqrt(sim.covariances[:, 0, 0])),
            seed=str(sim.seed),
        )
    cp["data"] = data
    model = {"k_values": _fmt_list(cfg.k_values), "a": repr(cfg.hyper.a), "b": repr(cfg.hyper.b)}
    if cfg.k_true is not None:
        model["k_true"] = str(cfg.k_true)
    cp["model"] = model
    if resolved_prior is not None:
        cp["prior"] = {
            "mode": "explicit",
            "mean0": _fmt_list(resolved_prior.mean0),
            "kappa0": repr(resolved_prior.kappa0),
            "nu0": repr(resolved_prior.nu0),
            "psi0": "; ".join(_fmt_list(row) for row in resolved_prior.psi0),
        }
    elif cfg.prior == "auto":
        cp["prior"] = {"mode": "auto"}
    cp["chain"] = {
        "iterations": str(cfg.iterations),
        "burn_in": str(cfg.burn_in),
        "thinning": str(cfg.thinning),
        "seeds": _fmt_list(cfg.seeds),
        "workers": str(cfg.workers),
    }
    cp["output"] = {"dir": str(cfg.output_dir), "nmi_normalization": cfg.nmi_normalization}
    with open(path, "w") as fh:
        cp.write(fh)


def batch_means_se(x, n_batches=BATCH_COUNT):
    """
    Standard error of the mean of an autocorrelated series by non-overlapping
    batch means. Series shorter than ``n_batches`` use one sample per batch.
    """
    x = np.asarray(x, dtype=float)
    n = x.size
    if n < 2:
        return float("nan")
    b = min(n_batches, n)
    m = n // b
    means = x[: b * m].reshape(b, m).mean(axis=1)
    return float(math.sqrt(means.var(ddof=1) / b))


# -- trace files --------------------------------------------------------------


def _trace_header(k, d):
    header = ["iteration", "alpha", "occupied"] + [f"weight_{j}" for j in range(k)]
    header += [f"mean_{j}_{a}" for j in range(k) for a in range(d)]
    header += [f"cov_{j}_{a}_{b}" for j in range(k) for a in range(d) for b in range(a, d)]
    return header


def emit_trace(trace, path):
    """Write the per-iteration trace as CSV (one row per retained iteration)."""
    k, d = trace.k_max, trace.dim
    iu = np.triu_indices(d)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(_trace_header(k, d))
        for t in range(len(trace)):
            row = [int(trace.iteration[t]), repr(float(trace.alpha[t])), int(trace.occupied[t])]
            row += [repr(float(w)) for w in trace.weights[t]]
            row += [repr(float(v)) for v in trace.means[t].ravel()]
            row += [repr(float(v)) for j in range(k) for v in trace.covs[t, j][iu]]
            writer.writerow(row)


def emit_assignments(trace, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        n = trace.assignments.shape[1]
        writer.writerow(["iteration"] + [f"z_{i}" for i in range(n)])
        for it, z in zip(trace.snapshot_iterations, trace.assignments):
            writer.writerow([int(it)] + [int(v) for v in z])


def read_trace(path, assignments_path=None):
    """Parse a trace CSV (and optionally its assignment snapshots) back into a :class:`Trace`."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [r for r in reader if r]
    k = sum(1 for h in header if h.startswith("weight_"))
    d = sum(1 for h in header if h.startswith("mean_0_"))
    arr = np.array([[float(v) for v in r] for r in rows]).reshape(len(rows), len(header))
    t = len(rows)
    col = 3
    weights = arr[:, col : col + k]
    col += k
    means = arr[:, col : col + k * d].reshape(t, k, d)
    col += k * d
    iu = np.triu_indices(d)
    n_tri = len(iu[0])
    covs = np.zeros((t, k, d, d))
    tri = arr[:, col : col + k * n_tri].reshape(t, k, n_tri)
    covs[:, :, iu[0], iu[1]] = tri
    covs[:, :, iu[1], iu[0]] = tri
    snap_it = np.zeros(0, dtype=np.int64)
    assignments = np.zeros((0, 0), dtype=np.int64)
    if assignments_path is not None:
        with open(assignments_path, newline="") as fh:
            reader = csv.reader(fh)
            header_z = next(reader)
            zrows = [[int(v) for v in r] for r in reader if r]
        z = np.array(zrows, dtype=np.int64).reshape(len(zrows), len(header_z))
        snap_it, assignments = z[:, 0], z[:, 1:]
    return Trace(
        k_max=k,
        dim=d,
        iteration=arr[:, 0].astype(np.int64),
        alpha=arr[:, 1].copy(),
        weights=weights.copy(),
        occupied=arr[:, 2].astype(np.int64),
        means=means,
        covs=covs,
        snapshot_iterations=snap_it,
        assignments=assignments,
    )


# -- summary --------------------------------------------------------------------


def chain_series(trace, truth, k_true, normalization="geometric"):
    """Per-sample series of the summary quantities for one chain."""
    series = {
        "k_bar": trace.occupied.astype(float),
        "alpha_bar": trace.alpha.astype(float),
        "extra_weight": np.array(
            [metrics.extra_weight(w, min(k_true, trace.k_max)) for w in trace.weights]
        ),
    }
    if truth is not None and trace.assignments.shape[0]:
        series["nmi"] = np.array([metrics.nmi(truth, z, normalization) for z in trace.assignments])
        series["vi"] = np.array([metrics.vi(truth, z) for z in trace.assignments])
    else:
        series["nmi"] = np.full(0, np.nan)
        series["vi"] = np.full(0, np.nan)
    return series


def aggregate(per_seed):
    """
    Combine chains for one K: the mean of per-chain means, with standard
    error ``sqrt(sum_s SE_s^2) / S`` from per-chain batch means.
    """
    row = {}
    for col in COLUMNS:
        means, ses = [], []
        for series in per_seed:
            x = series[col]
            if x.size:
                means.append(float(x.mean()))
                ses.append(batch_means_se(x))
        if means:
            row[col] = math.fsum(means) / len(means)
            row[col + "_se"] = math.sqrt(math.fsum(s * s for s in ses)) / len(ses)
        else:
            row[col] = float("nan")
            row[col + "_se"] = float("nan")
    return row


def _chain_paths(out_dir, k, seed):
    traces = Path(out_dir) / "traces"
    return traces / f"trace_K{k}_seed{seed}.csv", traces / f"assign_K{k}_seed{seed}.csv"


def _run_one(args):
    data, k, seed, cfg, prior, out_dir = args
    chain = ChainConfig(
        k_max=k,
        hyper=cfg.hyper,
        prior=prior,
        iterations=cfg.iterations,
        burn_in=cfg.burn_in,
        thinning=cfg.thinning,
        seed=seed,
    )
    try:
        trace = run_chain(data, chain)
    except Exception as exc:  # reported per cell, other chains continue
        return k, seed, None, repr(exc)
    trace_path, assign_path = _chain_paths(out_dir, k, seed)
    emit_trace(trace, trace_path)
    emit_assignments(trace, assign_path)
    return k, seed, trace, None


def _k_true(cfg, truth):
    if cfg.k_true is not None:
        return cfg.k_true
    if truth is not None:
        return int(np.unique(truth).size)
    raise ValueError("k_true must be set when the data carry no labels")


def run(cfg):
    """
    Run every (K, seed) chain, write trace files and the summary.

    Returns the summary dict (as written to ``summary.json``). A failing
    chain is recorded under ``failed`` and does not stop the others.
    """
    cfg.validate()
    data, truth = cfg.load_data()
    data = np.asarray(data, dtype=float)
    if data.ndim == 1:
        data = data[:, None]
    prior = cfg.resolve_prior(data)
    k_true = _k_true(cfg, truth)
    out_dir = Path(cfg.output_dir)
    (out_dir / "traces").mkdir(parents=True, exist_ok=True)
    save_config(cfg, out_dir / "config.ini", resolved_prior=prior)
    synth.write_csv(out_dir / "data.csv", data, truth)

    jobs = [(data, k, s, cfg, prior, out_dir) for k in cfg.k_values for s in cfg.seeds]
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            results = list(pool.map(_run_one, jobs))
    else:
        results = [_run_one(j) for j in jobs]

    series = {k: [] for k in cfg.k_values}
    failed = []
    for k, seed, trace, err in results:
        if trace is None:
            log.error("chain K=%d seed=%d failed: %s", k, seed, err)
            failed.append({"k": k, "seed": seed, "error": err})
            continue
        series[k].append(chain_series(trace, truth, k_true, cfg.nmi_normalization))
    summary = _build_summary(cfg, series, failed, k_true)
    write_summary(summary, out_dir)
    return summary


def _build_summary(cfg, series, failed, k_true):
    rows = []
    for k in cfg.k_values:
        row = {"k": k, "n_chains": len(series[k])}
        if series[k]:
            row.update(aggregate(series[k]))
        else:
            row["failed"] = True
        rows.append(row)
    return {
        "k_true": k_true,
        "iterations": cfg.iterations,
        "burn_in": cfg.burn_in,
        "thinning": cfg.thinning,
        "seeds": list(cfg.seeds),
        "batch_count": BATCH_COUNT,
        "rows": rows,
        "failed": failed,
    }


def format_summary(summary):
    """Aligned text table; each cell is ``mean (SE)``."""
    titles = ["K"] + [COLUMN_TITLES[c] for c in COLUMNS]
    lines = []
    body = []
    for row in summary["rows"]:
        cells = [str(row["k"])]
        for c in COLUMNS:
            if row.get("failed"):
                cells.append("FAILED")
            else:
                cells.append(f"{row[c]:.4g} ({row[c + '_se']:.2g})")
        body.append(cells)
    widths = [max(len(titles[j]), *(len(b[j]) for b in body)) for j in range(len(titles))]
    lines.append("  ".join(t.rjust(w) for t, w in zip(titles, widths)))
    lines.append("  ".join("-" * w for w in widths))
    for cells in body:
        lines.append("  ".join(c.rjust(w) for c, w in zip(cells, widths)))
    if summary["failed"]:
        lines.append("")
        for f in summary["failed"]:
            lines.append(f"failed: K={f['k']} seed={f['seed']}: {f['error']}")
    return "\n".join(lines) + "\n"


def _jsonable(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_jsonable(v) for v in obj]
    return obj


def write_summary(summary, out_dir):
    out_dir = Path(out_dir)
    (out_dir / "summary.txt").write_text(format_summary(summary))
    with open(out_dir / "summary.json", "w") as fh:
        json.dump(_jsonable(summary), fh, indent=2)


def summarize(out_dir):
    """Recompute the summary from the files a previous :func:`run` wrote."""
    out_dir = Path(out_dir)
    cfg = load_config(out_dir / "config.ini")
    _, truth = synth.read_csv(out_dir / "data.csv")
    k_true = _k_true(cfg, truth)
    series = {k: [] for k in cfg.k_values}
    failed = []
    for k in cfg.k_values:
        for seed in cfg.seeds:
            trace_path, assign_path = _chain_paths(out_dir, k, seed)
            if not trace_path.is_file():
                failed.append({"k": k, "seed": seed, "error": f"missing {trace_path.name}"})
                continue
            trace = read_trace(trace_path, assign_path if assign_path.is_file() else None)
            series[k].append(chain_series(trace, truth, k_true, cfg.nmi_normalization))
    return _build_summary(cfg, series, failed, k_true)
