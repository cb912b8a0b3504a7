"""Acceptance criteria 1-11, each at its stated tolerance.

Every test prints one ``CRITERION n: PASS|FAIL`` line; the lines are repeated
in the pytest terminal summary.
"""
import itertools
import time

import numpy as np
import pytest

from holofusion.config import ExperimentConfig
from holofusion.evaluation import PowerModel, observation_bound, power_comparison
from holofusion.experiments import run
from holofusion.fusion import DesignKind, llr, optimal_weights
from holofusion.geometry import SceneConfig, build_scene, fraunhofer_distance
from holofusion.optimizer import AOOptions, PhaseConfig, ao_joint_design, build_psi, build_signature_matrix, build_xi
from holofusion.fusion import FusionWeights
from holofusion.sensing import augment, conditional_moments
from helpers import crandn, random_instance, random_stats, report
from oracles import llr_enumeration, observation_bound_enumeration

KINDS = list(DesignKind)
SEED = 20250501


def rel_err(a, b):
    return abs(a - b) / max(abs(b), 1e-300)


# ------------------------------------------------------------------ 1

def test_criterion_01_quadratic_form_identities():
    rng = np.random.default_rng(SEED + 1)
    worst_xi = worst_psi = 0.0
    for _ in range(100):
        K, M, N = int(rng.integers(1, 7)), int(rng.integers(1, 17)), int(rng.integers(1, 4))
        ch, s, noise = random_instance(rng, K=K, M=M, N=N)
        w = FusionWeights.from_half(crandn(rng, N))
        ph = PhaseConfig.random(M, rng)
        t = ph.theta_aug
        h_eff = ch.effective(ph.theta)
        for kind in KINDS:
            target = np.ones(K) if kind is DesignKind.IS else s.rho10
            Xi = build_xi(w, build_signature_matrix(ch, s, target)[1])
            num = abs(np.vdot(w.a_aug, augment(h_eff @ (s.alpha * target)))) ** 2
            worst_xi = max(worst_xi, rel_err(np.vdot(t, Xi @ t).real, num))
        for h in (0, 1):
            Psi = build_psi(w, ch, s, noise, h)
            den = np.vdot(w.a_aug, conditional_moments(h_eff, s, noise, h).aug_cov @ w.a_aug).real
            worst_psi = max(worst_psi, rel_err(np.vdot(t, Psi @ t).real, den))
    ok = worst_xi <= 1e-10 and worst_psi <= 1e-10
    assert report(1, ok, f"max rel err numerator {worst_xi:.2e}, denominator {worst_psi:.2e} (tol 1e-10)")


# ------------------------------------------------------------------ 2

def test_criterion_02_ao_monotone():
    rng = np.random.default_rng(SEED + 2)
    bad, worst, n = 0, 0.0, 0
    for _ in range(50):
        ch, s, noise = random_instance(rng)
        init = PhaseConfig.random(ch.shape[1], rng)
        for kind in KINDS:
            _, _, trace = ao_joint_design(kind, ch, s, noise, init, AOOptions())
            o = np.asarray(trace.objective)
            drops = (o[:-1] - o[1:]) / np.abs(o[:-1])
            worst = max(worst, float(drops.max()) if drops.size else 0.0)
            bad += not trace.is_monotone(1e-9)
            n += 1
    assert report(2, bad == 0, f"{n - bad}/{n} traces nondecreasing, largest relative drop {worst:.2e} (tol 1e-9)")


# ------------------------------------------------------------------ 3

def probe_deflections(kind, probes, h_eff, s, noise):
    """Deflection of each row of ``probes`` (augmented unit vectors), vectorized."""
    target = np.ones(s.n_sensors) if kind is DesignKind.IS else s.rho10
    v = augment(h_eff @ (s.alpha * target))
    num = 4 * np.abs(probes.conj() @ v) ** 2
    if kind is DesignKind.IS:
        C = noise * np.eye(v.size)
    else:
        C = conditional_moments(h_eff, s, noise, kind.hypothesis).aug_cov
    den = np.einsum("pi,ij,pj->p", probes.conj(), C, probes).real
    return num / den


def test_criterion_03_weights_beat_random_probes():
    rng = np.random.default_rng(SEED + 3)
    failures, margin = 0, np.inf
    for _ in range(50):
        ch, s, noise = random_instance(rng)
        h_eff = ch.effective(PhaseConfig.random(ch.shape[1], rng).theta)
        N = h_eff.shape[0]
        half = crandn(rng, 1000, N)
        probes = np.hstack([half, half.conj()])
        probes /= np.linalg.norm(probes, axis=1, keepdims=True)
        for kind in KINDS:
            best = probe_deflections(kind, optimal_weights(kind, h_eff, s, noise).a_aug[None, :], h_eff, s, noise)[0]
            others = probe_deflections(kind, probes, h_eff, s, noise)
            failures += bool(np.any(others > best))
            margin = min(margin, (best - others.max()) / best)
    assert report(3, failures == 0,
                  f"{failures} of 150 (instance, kind) pairs beaten by a probe; smallest relative margin {margin:.2e}")


# ------------------------------------------------------------------ 4

def test_criterion_04_llr_enumeration():
    rng = np.random.default_rng(SEED + 4)
    worst = 0.0
    for _ in range(1000):
        K, N = int(rng.integers(1, 5)), int(rng.integers(1, 4))
        s = random_stats(rng, K)
        H = crandn(rng, N, K)
        noise = float(10 ** rng.uniform(-1, 0.5))
        y = H @ (s.alpha * rng.choice([-1.0, 1.0], K)) + np.sqrt(noise) * crandn(rng, N)
        worst = max(worst, rel_err(llr(y, H, s, noise), llr_enumeration(y, H, s.rho1, s.rho0, s.alpha, noise)))
    assert report(4, worst <= 1e-12, f"max rel err {worst:.2e} over 1000 pairs (tol 1e-12)")


# ------------------------------------------------------------------ 5

def test_criterion_05_observation_bound():
    got = np.array(observation_bound(10, 0.5, 0.05))
    ref = np.array(observation_bound_enumeration(10, 0.5, 0.05))
    err = float(np.abs(got - ref).max())
    assert report(5, err <= 1e-12, f"max abs err {err:.2e} over nu=0..10 (tol 1e-12)")


# ------------------------------------------------------------------ 6

def test_criterion_06_geometry_numbers():
    d100 = fraunhofer_distance(100, 2, 1 / 3, 0.5)
    d25 = fraunhofer_distance(25, 2, 1 / 3, 0.5)
    scene = build_scene(SceneConfig(n_feeds=2), np.random.default_rng(0))
    sep = float(np.linalg.norm(scene.rhs_center - scene.feed_center))
    e100, e25, esep = rel_err(d100, 22.0), rel_err(d25, 5.5), rel_err(sep, 2.8)
    ok = e100 <= 0.02 and e25 <= 0.02 and esep <= 0.01
    assert report(6, ok, f"d_fr(M=100)={d100:.4f} ({e100:.2%}), d_fr(M=25)={d25:.4f} ({e25:.2%}), "
                         f"feed-RHS separation={sep:.4f} ({esep:.3%} vs 2.8, tol 1%)")


# ------------------------------------------------------------------ 7

def test_criterion_07_power_ratio():
    _, _, ratio = power_comparison(PowerModel(0.0, 1.0, 10.0, 0.0, 144, 1, 100, np.ones(10)))
    err = rel_err(ratio, 6.5)
    assert report(7, err <= 0.02, f"receive ratio {ratio:.4f} ({err:.2%} from 6.5, tol 2%)")


# ------------------------------------------------------------------ 8-11: scenario runs

def pd_table(path, key_cols):
    rows = [l.split(",") for l in path.read_text().splitlines() if not l.startswith("#")]
    head = rows[0]
    idx = [head.index(c) for c in key_cols]
    m = head.index("pd0_mean")
    return {tuple(r[i] for i in idx) if len(idx) > 1 else r[idx[0]]: float(r[m]) for r in rows[1:]}


def test_criterion_08_design_ordering(tmp_path):
    t0 = time.perf_counter()
    cfg = ExperimentConfig(scenario="roc_design", n_rhs=64, n_feeds=1, n_sensors=10, redraws=20,
                           trials=20_000, seed=SEED, output_dir=str(tmp_path))
    pd = pd_table(run(cfg)["summary.csv"], ["rule"])
    rand = {k: v for k, v in pd.items() if k.endswith("RHS rand")}
    best_rand = max(rand.values())
    checks = {
        "FuC-0 >= FuC-1": pd["FuC-0"] >= pd["FuC-1"],
        "FuC-1 >= IS": pd["FuC-1"] >= pd["IS"],
        "IS > every random-RHS rule": pd["IS"] > best_rand,
        "FuC-0 >= LLR/rand + 0.15": pd["FuC-0"] >= pd["LLR / RHS rand"] + 0.15,
        "FuC-1 >= LLR/rand + 0.15": pd["FuC-1"] >= pd["LLR / RHS rand"] + 0.15,
    }
    failed = [k for k, v in checks.items() if not v]
    vals = ", ".join(f"{k}={v:.4f}" for k, v in pd.items())
    detail = (f"P_D0@0.01: {vals}; failed: {failed or 'none'}; {time.perf_counter() - t0:.0f}s")
    assert report(8, not failed, detail)


def test_criterion_09_size_sweep(tmp_path):
    t0 = time.perf_counter()
    cfg = ExperimentConfig(scenario="pd_vs_M", m_values=[25, 49, 100, 144], n_values=[1, 2],
                           redraws=20, trials=20_000, seed=SEED, output_dir=str(tmp_path))
    pd = pd_table(run(cfg)["pd_vs_M.csv"], ["architecture", "M", "N", "design"])
    problems = []
    for N in ("1", "2"):
        for kind in ("FuC-0", "FuC-1", "IS"):
            seq = [pd[("holographic", str(M), N, kind)] for M in (25, 49, 100, 144)]
            if any(b < a - 0.02 for a, b in zip(seq, seq[1:])):
                problems.append(f"{kind} N={N} not nondecreasing: {np.round(seq, 4).tolist()}")
    gaps = {}
    for kind in ("FuC-0", "FuC-1", "IS"):
        gaps[kind] = pd[("digital", "", "100", kind)] - pd[("holographic", "144", "1", kind)]
        if abs(gaps[kind]) > 0.10:
            problems.append(f"{kind} M=144 gap to digital {gaps[kind]:.4f}")
    detail = (f"digital-minus-holographic at M=144: "
              + ", ".join(f"{k}={v:+.4f}" for k, v in gaps.items())
              + f"; problems: {problems or 'none'}; {time.perf_counter() - t0:.0f}s")
    assert report(9, not problems, detail)


def test_criterion_10_quantization(tmp_path):
    t0 = time.perf_counter()
    cfg = ExperimentConfig(scenario="quantization", n_rhs=100, n_feeds=1, bits=[1, 2, 3],
                           redraws=20, trials=20_000, seed=SEED, output_dir=str(tmp_path))
    pd = pd_table(run(cfg)["summary.csv"], ["rule"])
    loss = {k: pd[f"{k}|full"] - pd[f"{k}|3"] for k in ("FuC-0", "FuC-1", "IS")}
    problems = [f"{k} 3-bit loss {v:.4f}" for k, v in loss.items() if v > 0.05]
    if pd["IS|1"] < pd["FuC-1|1"] - 0.02:
        problems.append(f"1-bit IS {pd['IS|1']:.4f} < FuC-1 {pd['FuC-1|1']:.4f} - 0.02")
    detail = (", ".join(f"{k} 3-bit loss={v:+.4f}" for k, v in loss.items())
              + f"; 1-bit IS={pd['IS|1']:.4f} FuC-1={pd['FuC-1|1']:.4f}"
              + f"; problems: {problems or 'none'}; {time.perf_counter() - t0:.0f}s")
    assert report(10, not problems, detail)


def test_criterion_11_determinism_across_parallelism(tmp_path):
    base = dict(trials=4000, redraws=3, n_rhs=16, m_values=[9, 16], n_values=[1], k_values=[4, 5],
                bits=[1, 3], seed=SEED)
    mismatches, compared = [], 0
    for scenario in ("roc_design", "pd_vs_M", "pd_vs_K", "quantization", "power_table"):
        outs = []
        for jobs in (1, 2, 1):
            cfg = ExperimentConfig(scenario=scenario, jobs=jobs,
                                   output_dir=str(tmp_path / f"{scenario}-{jobs}-{len(outs)}"), **base)
            outs.append({k: p.read_bytes() for k, p in run(cfg).items() if k.endswith(".csv")})
        for name in outs[0]:
            compared += 1
            if not (outs[0][name] == outs[1][name] == outs[2][name]):
                mismatches.append(f"{scenario}/{name}")
    assert report(11, not mismatches and compared > 0,
                  f"{compared} CSV files byte-compared across jobs=1, jobs=2 and a repeat; mismatches: {mismatches or 'none'}")
