"""Scenario orchestration: one task per (scenario point, channel redraw),
executed serially or in worker processes, reduced in a fixed order and
written as CSV + JSON."""
from __future__ import annotations

import csv
import io
import json
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np
from threadpoolctl import threadpool_limits

from . import __version__
from .channel import ChannelSet, FadingParams, synthesize_channels
from .config import ExperimentConfig, from_mapping, validate
from .evaluation import (
    DetectionSystem, LikelihoodRatioRule, WidelyLinearRule, detection_at_pfa, format_float,
    interpolate_roc, observation_bound, observation_bound_at_pfa, power_comparison,
    PowerModel, roc_monte_carlo_many,
)
from .fusion import DesignKind, optimal_weights
from .geometry import SceneConfig, build_scene
from .optimizer import AOOptions, PhaseConfig, ao_joint_design, quantize_phases
from .rng import RandomStreams
from .sensing import SensorStats

log = logging.getLogger(__name__)

KINDS = (DesignKind.FUC0, DesignKind.FUC1, DesignKind.IS)
PF_GRID = np.unique(np.concatenate([np.logspace(-4, -1, 31), np.linspace(0.1, 1.0, 19)]))


class ScenarioError(RuntimeError):
    pass


@dataclass
class Instance:
    channels: ChannelSet
    stats: SensorStats
    noise_power: float
    init: PhaseConfig
    trial_seed: int


def build_instance(cfg: ExperimentConfig, redraw: int, n_rhs: int, n_feeds: int,
                   n_sensors: Optional[int] = None, digital: bool = False) -> Instance:
    """Scene, fading and channels of one redraw, each from its own named substream."""
    K = cfg.n_sensors if n_sensors is None else n_sensors
    streams = RandomStreams(cfg.seed)
    scene_cfg = SceneConfig(n_sensors=K, n_rhs=n_rhs, n_feeds=n_feeds, n_digital=cfg.n_digital,
                            rhs_spacing=cfg.rhs_spacing, feed_spacing=cfg.feed_spacing,
                            directivity_exponent=cfg.q)
    scene = build_scene(scene_cfg, streams.generator("scene", redraw))
    fading = FadingParams.draw(K, streams.generator("fading", redraw), mu_db=cfg.mu_db, d0=cfg.d0,
                               nu=cfg.nu, kappa_db_range=tuple(cfg.kappa_db), eta=cfg.eta)
    channels = synthesize_channels(
        scene, fading, streams.generator("h_rhs", redraw, n_rhs),
        streams.generator("h_digital", redraw) if digital else None)
    stats = SensorStats.independent(cfg.pd, cfg.pf, cfg.alpha, K)
    init = PhaseConfig.random(n_rhs, streams.generator("rhs_init", redraw, n_rhs))
    return Instance(channels, stats, cfg.noise_power, init, streams.child_seed("trials", redraw))


def _ao_opts(cfg: ExperimentConfig) -> AOOptions:
    return AOOptions(max_iter=cfg.ao_max_iter, rtol=cfg.ao_rtol)


def _design_all(cfg, inst: Instance):
    out = {}
    for kind in KINDS:
        w, p, trace = ao_joint_design(kind, inst.channels, inst.stats, inst.noise_power,
                                      inst.init, _ao_opts(cfg))
        out[kind] = (w, p, trace)
    return out


def _evaluate(cfg, inst: Instance, channel_eff, named_rules, keep_roc=False):
    system = DetectionSystem(channel_eff, inst.stats, inst.noise_power)
    names = list(named_rules)
    curves = roc_monte_carlo_many(system, [named_rules[n] for n in names], cfg.trials,
                                  inst.trial_seed)
    pd = {n: detection_at_pfa(c, cfg.target_pfa) for n, c in zip(names, curves)}
    roc = {n: interpolate_roc(c, PF_GRID).tolist() for n, c in zip(names, curves)} if keep_roc else {}
    return pd, roc


def _trace_summary(trace) -> dict:
    return {"iterations": trace.iterations, "reason": trace.reason,
            "initial": trace.objective[0], "final": trace.objective[-1],
            "monotone": trace.is_monotone()}


# ---------------------------------------------------------------- task bodies

def task_roc_design(cfg: ExperimentConfig, point: tuple, redraw: int) -> dict:
    inst = build_instance(cfg, redraw, cfg.rhs_size, cfg.n_feeds)
    h_rand = inst.channels.effective(inst.init.theta)
    rand_rules = {f"{k.value} / RHS rand": WidelyLinearRule(
        optimal_weights(k, h_rand, inst.stats, inst.noise_power)) for k in KINDS}
    rand_rules["LLR / RHS rand"] = LikelihoodRatioRule()
    pd, roc = _evaluate(cfg, inst, h_rand, rand_rules, keep_roc=True)
    ao = {}
    for kind, (w, p, trace) in _design_all(cfg, inst).items():
        rules = {kind.value: WidelyLinearRule(w), f"LLR / {kind.value} RHS": LikelihoodRatioRule()}
        d_pd, d_roc = _evaluate(cfg, inst, inst.channels.effective(p.theta), rules, keep_roc=True)
        pd.update(d_pd)
        roc.update(d_roc)
        ao[kind.value] = trace.to_dict()
    return {"pd": pd, "roc": roc, "ao": ao}


def task_pd_vs_M(cfg: ExperimentConfig, point: tuple, redraw: int) -> dict:
    if point[0] == "digital":
        return _digital(cfg, redraw, cfg.n_sensors)
    _, M, N = point
    inst = build_instance(cfg, redraw, M, N)
    pd, ao = {}, {}
    for kind, (w, p, trace) in _design_all(cfg, inst).items():
        d_pd, _ = _evaluate(cfg, inst, inst.channels.effective(p.theta),
                            {kind.value: WidelyLinearRule(w)})
        pd.update(d_pd)
        ao[kind.value] = _trace_summary(trace)
    return {"pd": pd, "ao": ao}


def _digital(cfg: ExperimentConfig, redraw: int, K: int) -> dict:
    inst = build_instance(cfg, redraw, cfg.rhs_size, cfg.n_feeds, n_sensors=K, digital=True)
    H = inst.channels.H_dig
    rules = {k.value: WidelyLinearRule(optimal_weights(k, H, inst.stats, inst.noise_power))
             for k in KINDS}
    pd, _ = _evaluate(cfg, inst, H, rules)
    return {"pd": pd}


def task_pd_vs_K(cfg: ExperimentConfig, point: tuple, redraw: int) -> dict:
    arch, K = point
    if arch == "digital":
        return _digital(cfg, redraw, K)
    inst = build_instance(cfg, redraw, cfg.rhs_size, cfg.n_feeds, n_sensors=K)
    pd, ao = {}, {}
    for kind, (w, p, trace) in _design_all(cfg, inst).items():
        d_pd, _ = _evaluate(cfg, inst, inst.channels.effective(p.theta),
                            {kind.value: WidelyLinearRule(w)})
        pd.update(d_pd)
        ao[kind.value] = _trace_summary(trace)
    return {"pd": pd, "ao": ao}


def task_quantization(cfg: ExperimentConfig, point: tuple, redraw: int) -> dict:
    inst = build_instance(cfg, redraw, cfg.rhs_size, cfg.n_feeds)
    pd, roc, ao = {}, {}, {}
    for kind, (w, p, trace) in _design_all(cfg, inst).items():
        ao[kind.value] = _trace_summary(trace)
        variants = [("full", p)] + [(str(b), quantize_phases(p, b)) for b in cfg.bits]
        for label, phases in variants:
            h = inst.channels.effective(phases.theta)
            # the fusion center knows the deployed (quantized) configuration
            weights = optimal_weights(kind, h, inst.stats, inst.noise_power)
            d_pd, d_roc = _evaluate(cfg, inst, h, {f"{kind.value}|{label}": WidelyLinearRule(weights)},
                                    keep_roc=True)
            pd.update(d_pd)
            roc.update(d_roc)
    return {"pd": pd, "roc": roc, "ao": ao}


TASKS = {
    "roc_design": task_roc_design,
    "pd_vs_M": task_pd_vs_M,
    "pd_vs_K": task_pd_vs_K,
    "quantization": task_quantization,
}


def scenario_points(cfg: ExperimentConfig) -> List[tuple]:
    if cfg.scenario == "pd_vs_M":
        pts = [("holo", M, N) for M in cfg.m_values for N in cfg.n_values]
        return pts + [("digital",)]
    if cfg.scenario == "pd_vs_K":
        return [(arch, K) for K in cfg.k_values for arch in ("holo", "digital")]
    return [()]


def _run_task(args):
    cfg_dict, point, redraw = args
    cfg = from_mapping(cfg_dict)
    with threadpool_limits(1):
        try:
            return TASKS[cfg.scenario](cfg, tuple(point), redraw)
        except Exception as exc:  # add scenario context for the error report
            raise ScenarioError(
                f"{cfg.scenario} point={point} redraw={redraw}: {type(exc).__name__}: {exc}"
            ) from exc


def execute(cfg: ExperimentConfig) -> Dict[Tuple[tuple, int], dict]:
    """Run every (point, redraw) task; results keyed and ordered deterministically."""
    jobs = [(cfg.to_dict(), p, r) for p in scenario_points(cfg) for r in range(cfg.redraws)]
    if cfg.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            results = list(pool.map(_run_task, jobs, chunksize=1))
    else:
        results = [_run_task(j) for j in jobs]
    return {(tuple(j[1]), j[2]): res for j, res in zip(jobs, results)}


# ---------------------------------------------------------------- reduction

def _mean_se(values) -> Tuple[float, float]:
    v = np.asarray(values, float)
    se = v.std(ddof=1) / np.sqrt(v.size) if v.size > 1 else 0.0
    return float(v.mean()), float(se)


def _collect(results, point, key="pd"):
    """{name: [value per redraw]} for one scenario point."""
    out: Dict[str, list] = {}
    for (p, _r), res in sorted(results.items(), key=lambda kv: kv[0][1]):
        if p != point:
            continue
        for name, val in res[key].items():
            out.setdefault(name, []).append(val)
    return out


def summarize(cfg: ExperimentConfig, results) -> Dict[str, List[list]]:
    """Tables (header row first) for each CSV the scenario emits."""
    tables: Dict[str, List[list]] = {}
    s = cfg.scenario
    if s in ("roc_design", "quantization"):
        pds = _collect(results, ())
        rows = [["rule", "pd0_mean", "pd0_se", "redraws"]]
        for name in pds:
            m, se = _mean_se(pds[name])
            rows.append([name, m, se, len(pds[name])])
        tables["summary.csv"] = rows
        rocs = _collect(results, (), key="roc")
        roc_rows = [["rule", "pf0", "pd0_mean", "pd0_se"]]
        for name, curves in rocs.items():
            arr = np.asarray(curves)
            for j, pf in enumerate(PF_GRID):
                m, se = _mean_se(arr[:, j])
                roc_rows.append([name, pf, m, se])
        tables["roc.csv"] = roc_rows
    elif s == "pd_vs_M":
        rows = [["architecture", "M", "N", "design", "pd0_mean", "pd0_se", "redraws"]]
        for p in scenario_points(cfg):
            for name, vals in _collect(results, p).items():
                m, se = _mean_se(vals)
                if p[0] == "digital":
                    rows.append(["digital", "", cfg.n_digital, name, m, se, len(vals)])
                else:
                    rows.append(["holographic", p[1], p[2], name, m, se, len(vals)])
        tables["pd_vs_M.csv"] = rows
    elif s == "pd_vs_K":
        rows = [["architecture", "K", "design", "pd0_mean", "pd0_se", "redraws"]]
        for p in scenario_points(cfg):
            arch, K = p
            for name, vals in _collect(results, p).items():
                m, se = _mean_se(vals)
                rows.append(["holographic" if arch == "holo" else "digital", K, name, m, se, len(vals)])
        for K in cfg.k_values:
            rows.append(["observation_bound", K, "counting",
                         observation_bound_at_pfa(K, cfg.pd, cfg.pf, cfg.target_pfa), 0.0, 0])
        tables["pd_vs_K.csv"] = rows
        ob = [["K", "nu", "pf0", "pd0"]]
        for K in cfg.k_values:
            for nu, (pf0, pd0) in enumerate(observation_bound(K, cfg.pd, cfg.pf)):
                ob.append([K, nu, pf0, pd0])
        tables["observation_bound.csv"] = ob
    elif s == "power_table":
        rows = [["M", "N", "N_dig", "eps_holo", "eps_dig", "rx_ratio"]]
        alpha = np.full(cfg.n_sensors, cfg.alpha)
        for M in cfg.m_values:
            for N in cfg.n_values:
                e_h, e_d, ratio = power_comparison(PowerModel(
                    cfg.eps_tx_sensor, cfg.eps_rhs, cfg.eps_rx_feed, cfg.eps_static,
                    M, N, cfg.n_digital, alpha))
                rows.append([M, N, cfg.n_digital, e_h, e_d, ratio])
        tables["power_table.csv"] = rows
    return tables


def render_csv(cfg: ExperimentConfig, rows: List[list]) -> str:
    buf = io.StringIO()
    buf.write(f"# holofusion {__version__} scenario={cfg.scenario} seed={cfg.seed} "
              f"config_sha256={cfg.digest()}\n")
    w = csv.writer(buf, lineterminator="\n")
    for row in rows:
        w.writerow([format_float(v) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


def run(cfg: ExperimentConfig) -> Dict[str, Path]:
    """Validate, execute and write all artifacts; returns the written paths."""
    problems = validate(cfg)
    if problems:
        raise ValueError("invalid config: " + "; ".join(problems))
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    results = {} if cfg.scenario == "power_table" else execute(cfg)
    tables = summarize(cfg, results)
    written = {}
    for name, rows in tables.items():
        path = out / name
        path.write_text(render_csv(cfg, rows))
        written[name] = path
    meta = {
        "package": "holofusion", "version": __version__, "scenario": cfg.scenario,
        "seed": cfg.seed, "config_sha256": cfg.digest(), "config": cfg.to_dict(),
        "frame": "RHS in the y-z plane facing -x; feeds on a line along +x",
        "elapsed_s": time.perf_counter() - t0,
        "tasks": [{"point": list(p), "redraw": r,
                   "pd": res.get("pd", {}), "ao": res.get("ao", {})}
                  for (p, r), res in results.items()],
    }
    path = out / "results.json"
    path.write_text(json.dumps(meta, indent=1, default=float))
    written["results.json"] = path
    return written
