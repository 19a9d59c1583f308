"""Inference drivers for the benchmark models and the timing harness."""

import csv
import io
import json
import time
from dataclasses import dataclass, field

import numpy as np

from .algebra import to_json
from .engine import InferenceEngine
from .errors import ConfigError
from .metrics import average_error
from .models import build_hgf, build_hmm, build_lgssm, normalize_config
from .simulate import Dataset, simulate


@dataclass
class RunReport:
    model: str
    n: int
    iterations: int
    wall_time_ms: float
    peak_marginal_count: int  # largest update count across marginal streams
    average_errors: dict  # latent sequence name -> AE
    bfe_trace: list
    config: dict
    posteriors: dict = field(default_factory=dict)  # name -> list of JSON dists

    def to_json(self):
        return {
            "model": self.model,
            "n": self.n,
            "iterations": self.iterations,
            "wall_time_ms": self.wall_time_ms,
            "peak_marginal_count": self.peak_marginal_count,
            "average_errors": self.average_errors,
            "bfe_trace": list(self.bfe_trace),
            "config": self.config,
            "posteriors": self.posteriors,
        }


def _check_model(dataset, expected):
    if dataset.model != expected:
        raise ConfigError(
            "dataset was generated for model %r, not %r" % (dataset.model, expected)
        )


def infer_lgssm(dataset, config=None, keep_posteriors=False, track_bfe=False, trace=None):
    """Full-graph sum-product smoothing: exact marginal posteriors."""
    _check_model(dataset, "lgssm")
    cfg = normalize_config({**dataset.config, **(config or {})})
    ys = [np.asarray(y, float) for y in dataset.observations]
    n = len(ys)
    start = time.perf_counter()
    graph, refs = build_lgssm(n, cfg["A"], cfg["B"], cfg["P"], cfg["Q"])
    engine = InferenceEngine(graph)
    if trace is not None:
        engine.attach_trace(trace)
    bfe = []
    if track_bfe:
        engine.get_bfe_stream().subscribe(lambda u: bfe.append(u.total))
    engine.run_iterations({refs["y"][t]: ys[t] for t in range(n)}, 1)
    wall_ms = (time.perf_counter() - start) * 1e3
    posteriors = [engine.latest_marginal(x) for x in refs["x"]]
    truth = np.asarray(dataset.latents["x"], float)
    ae = average_error(posteriors, truth, transform="squared")
    report = RunReport(
        "lgssm", n, 1, wall_ms,
        max(engine.marginal_update_count(x) for x in refs["x"]),
        {"x": ae}, bfe, cfg,
    )
    if keep_posteriors:
        report.posteriors["x"] = [to_json(q) for q in posteriors]
    return report


def infer_hmm(dataset, config=None, keep_posteriors=False, trace=None):
    """Structured variational message passing with matrix-Dirichlet
    parameter posteriors; reports the BFE trace and the decode-mismatch AE."""
    _check_model(dataset, "hmm")
    cfg = normalize_config({**dataset.config, **(config or {})})
    iters = cfg["vmp_iterations"]
    ys = [np.asarray(y, float) for y in dataset.observations]
    n = len(ys)
    start = time.perf_counter()
    graph, refs = build_hmm(n, cfg["M"], cfg["priorA"], cfg["priorB"])
    engine = InferenceEngine(graph)
    if trace is not None:
        engine.attach_trace(trace)
    bfe = []
    engine.get_bfe_stream().subscribe(lambda u: bfe.append(u.total))
    engine.run_iterations({refs["y"][t]: ys[t] for t in range(n)}, iters)
    wall_ms = (time.perf_counter() - start) * 1e3
    posteriors = [engine.latest_marginal(z) for z in refs["z"]]
    ae = average_error(posteriors, list(dataset.latents["z"]), transform="decode")
    report = RunReport(
        "hmm", n, iters, wall_ms,
        max(engine.marginal_update_count(z) for z in refs["z"]),
        {"z": ae}, bfe, cfg,
    )
    report.average_errors["state_accuracy"] = 1.0 - ae
    if keep_posteriors:
        report.posteriors["z"] = [to_json(q) for q in posteriors]
        report.posteriors["A"] = to_json(engine.latest_marginal(refs["A"]))
        report.posteriors["B"] = to_json(engine.latest_marginal(refs["B"]))
    return report


def infer_hgf(dataset, config=None, keep_posteriors=False, trace=None):
    """Online filtering on the single-slice graph through chain redirection,
    with ``vmp_iterations`` sweeps per observation."""
    _check_model(dataset, "hgf")
    cfg = normalize_config({**dataset.config, **(config or {})})
    iters = cfg["vmp_iterations"]
    ys = [float(y) for y in dataset.observations]
    n = len(ys)
    start = time.perf_counter()
    graph, refs = build_hgf(cfg["kappa"], cfg["omega"], cfg["s2_w"], cfg["y_w"], cfg["gh_n"])
    engine = InferenceEngine(graph)
    if trace is not None:
        engine.attach_trace(trace)
    bfe = []
    engine.get_bfe_stream().subscribe(lambda u: bfe.append(u.total))
    engine.chain_redirect(refs["s1"], refs["s1_prior"], initial=refs["s1_init"])
    engine.chain_redirect(refs["s2"], refs["s2_prior"], initial=refs["s2_init"])
    q1_hist, q2_hist = [], []
    for t in range(n):
        engine.chain_step({refs["y"]: ys[t]}, iters)
        q1_hist.append(engine.latest_marginal(refs["s1"]))
        q2_hist.append(engine.latest_marginal(refs["s2"]))
    wall_ms = (time.perf_counter() - start) * 1e3
    ae1 = average_error(q1_hist, list(dataset.latents["s1"]), transform="squared")
    ae2 = average_error(q2_hist, list(dataset.latents["s2"]), transform="squared")
    report = RunReport(
        "hgf", n, iters, wall_ms,
        max(engine.marginal_update_count(refs["s1"]), engine.marginal_update_count(refs["s2"])),
        {"s1": ae1, "s2": ae2}, bfe, cfg,
    )
    if keep_posteriors:
        report.posteriors["s1"] = [to_json(q) for q in q1_hist]
        report.posteriors["s2"] = [to_json(q) for q in q2_hist]
    return report


_DRIVERS = {"lgssm": infer_lgssm, "hmm": infer_hmm, "hgf": infer_hgf}


def infer(dataset, config=None, **kwargs):
    driver = _DRIVERS.get(dataset.model)
    if driver is None:
        raise ConfigError("unknown model %r" % (dataset.model,))
    return driver(dataset, config, **kwargs)


def averaged_bfe_by_iteration(report):
    """Chain-mode BFE traces interleave steps and iterations; fold to the
    per-iteration-index mean over all steps."""
    trace = np.asarray(report.bfe_trace, float)
    k = report.iterations
    if trace.size == 0 or trace.size % k:
        return trace
    return trace.reshape(-1, k).mean(axis=0)


def benchmark(grid, repetitions, out=None):
    """Run each config in ``grid`` ``repetitions`` times; report the minimum
    wall time per cell plus log-log scaling slopes over n and iterations.

    Returns CSV text with one row per cell (kind=cell) followed by slope rows
    (kind=slope); every row carries its full config for provenance.
    """
    if repetitions < 1:
        raise ConfigError("repetitions must be at least 1")
    if not grid:
        raise ConfigError("benchmark grid is empty")
    rows = []
    for config in grid:
        cfg = normalize_config(config)
        times = []
        report = None
        for _ in range(repetitions):
            dataset = simulate(cfg)
            report = infer(dataset)
            times.append(report.wall_time_ms)
        rows.append({
            "kind": "cell",
            "model": cfg["model"],
            "n": cfg["n"],
            "iterations": report.iterations,
            "repetitions": repetitions,
            "min_wall_ms": min(times),
            "config": json.dumps(cfg, sort_keys=True, default=_jsonable),
        })
    rows.extend(_slope_rows(rows))
    text = _to_csv(rows)
    if out is not None:
        out.write(text)
    return text


def _jsonable(x):
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    raise TypeError(repr(x))


def _slope_rows(rows):
    """Least-squares slope of log(time) vs log(n) and vs log(iterations),
    per model, over cells varying in that axis."""
    out = []
    cells = [r for r in rows if r["kind"] == "cell"]
    for model in sorted({r["model"] for r in cells}):
        sub = [r for r in cells if r["model"] == model]
        for axis in ("n", "iterations"):
            xs = np.asarray([r[axis] for r in sub], float)
            ts = np.asarray([r["min_wall_ms"] for r in sub], float)
            if len(set(xs)) < 2:
                continue
            slope = np.polyfit(np.log(xs), np.log(ts), 1)[0]
            out.append({
                "kind": "slope_%s" % axis,
                "model": model,
                "n": "",
                "iterations": "",
                "repetitions": "",
                "min_wall_ms": float(slope),
                "config": "",
            })
    return out


def _to_csv(rows):
    buf = io.StringIO()
    writer = csv.DictWriter(
        buf,
        fieldnames=["kind", "model", "n", "iterations", "repetitions", "min_wall_ms", "config"],
    )
    writer.writeheader()
    for row in rows:
        writer.writerow(row)
    return buf.getvalue()
