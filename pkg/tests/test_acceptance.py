"""Acceptance gate: one test per criterion, each reporting a PASS/FAIL line.

Studies run on the desk-scale toy tasks pinned in ``scripts/configs``; the
tuned hyperparameters below were produced by the tuning studies in
``scripts/`` and are frozen here.

Run just this gate with ``pytest tests/test_acceptance.py -v``; the
criterion lines are repeated in the terminal summary.
"""

from __future__ import annotations

import json
import math
import time
from pathlib import Path

import numpy as np
import pytest

from gapaware import losses as L
from gapaware.cli import main as cli_main
from gapaware.losses import LOG2, LOG4, GanVariant
from gapaware.metrics import bootstrap_best_curve
from gapaware.nn import Activation, backward, finite_diff_gradient, flatten, forward, init_net
from gapaware.optim import Adam, Sgd, clip_weights
from gapaware.scheduler import (
    DecaySchedule,
    Interpolation,
    LossEstimator,
    decrease_multiplier,
    default_params,
    increase_multiplier,
)
from gapaware.study import ExperimentConfig, run_correlate, run_stability, run_tune

from conftest import ACCEPTANCE_LINES

CONFIGS = Path(__file__).resolve().parents[1] / "scripts" / "configs"

# frozen outputs of the tuning studies (see README)
GAN_TUNED = {"lr": 0.00030601781269119, "beta1": 0.5772721087810389}
DANN_TUNED = {"lr": 0.002774471525239756, "beta1": 0.47308014189921804, "lam": 1.0,
              "v_star": 0.990857273053221}


def report(n: int, ok: bool, detail: str, elapsed: float, budget: float):
    within = elapsed < budget
    status = "PASS" if ok and within else "FAIL"
    line = f"criterion {n:2d}: {status}  {detail}  [{elapsed:.1f}s / {budget:g}s]"
    ACCEPTANCE_LINES[n] = line
    print(line)
    assert ok, line
    assert within, f"criterion {n} exceeded its runtime budget: {line}"


def _boundary_errors(params) -> float:
    return max(
        abs(increase_multiplier(0.0, params) - 1.0),
        abs(increase_multiplier(params.x_max, params) - params.f_max),
        abs(decrease_multiplier(0.0, params) - 1.0),
        abs(decrease_multiplier(params.x_min, params) - params.h_min),
    )


def _bounds_and_monotonicity(mode: Interpolation, rng) -> tuple[int, int]:
    """Violation counts over 1e5 random gaps for every variant's defaults."""
    out_of_range = not_monotone = 0
    for variant in GanVariant:
        p = default_params(variant)
        p = type(p)(**{**p.to_dict(), "interpolation": mode})
        n = 100_000 // len(GanVariant)
        gaps = np.concatenate([
            rng.uniform(0, 3 * p.x_max, n // 2),
            np.exp(rng.uniform(math.log(1e-9), math.log(1e3), n - n // 2)),
        ])
        gaps.sort()
        up = np.array([increase_multiplier(x, p) for x in gaps])
        down = np.array([decrease_multiplier(x, p) for x in gaps])
        out_of_range += int(np.sum((up < 1) | (up > p.f_max) | (down < p.h_min) | (down > 1)))
        not_monotone += int(np.sum(np.diff(up) < 0) + np.sum(np.diff(down) > 0))
    return out_of_range, not_monotone


def test_criterion_01_boundary_values():
    t0 = time.perf_counter()
    err = max(_boundary_errors(default_params(v)) for v in GanVariant)
    widths = {v.value: default_params(v).x_max for v in GanVariant}
    ok = (err <= 1e-12 and widths["wgan"] == 0.1
          and abs(widths["nsgan"] - 0.1 * LOG4) < 1e-15 and abs(widths["lsgan"] - 0.05) < 1e-15)
    report(1, ok, f"max boundary error {err:.1e} (tol 1e-12)", time.perf_counter() - t0, 1)


def test_criterion_02_bounds_and_monotonicity():
    t0 = time.perf_counter()
    rng = np.random.default_rng(0)
    counts = {m.value: _bounds_and_monotonicity(m, rng) for m in Interpolation}
    ok = all(c == (0, 0) for c in counts.values())
    report(2, ok, f"(out-of-range, non-monotone) violations per mode {counts}", time.perf_counter() - t0, 5)


def test_criterion_03_ideal_constants():
    t0 = time.perf_counter()
    got = [L.ideal_disc_loss(v) for v in ("standard", "nsgan", "wgan", "lsgan")]
    ok = got == [math.log(4), math.log(4), 0.0, 0.5] and L.ideal_gen_loss("nsgan") == math.log(2)
    report(3, ok, f"V* = {got}, NSGAN generator ideal = {L.ideal_gen_loss('nsgan')}",
           time.perf_counter() - t0, 1)


def test_criterion_04_ema_geometric_convergence():
    t0 = time.perf_counter()
    # with v = 0 the deviation is the estimate itself, so it is representable to full precision
    est = LossEstimator(LOG4, 0.95)
    dev_err = 0.0
    for n in range(1, 201):
        est.update(0.0)
        dev_err = max(dev_err, abs(est.estimate - 0.95**n * LOG4) / (0.95**n * LOG4))
    # for v != 0 the deviation falls below ulp(v) resolution, so compare the estimate itself
    est_err = 0.0
    for v in (0.5, 2.0, -1.0):
        est = LossEstimator(LOG4, 0.95)
        for n in range(1, 201):
            est.update(v)
            exact = v + 0.95**n * (LOG4 - v)
            est_err = max(est_err, abs(est.estimate - exact) / abs(exact))
    ok = dev_err <= 1e-12 and est_err <= 1e-12
    report(4, ok, f"deviation rel. error {dev_err:.1e} (v=0), estimate rel. error {est_err:.1e} "
                  f"(v in 0.5, 2, -1); tol 1e-12", time.perf_counter() - t0, 1)


def _gradient_triples(n: int):
    rng = np.random.default_rng(2024)
    acts = list(Activation)
    for i in range(n):
        depth = int(rng.integers(1, 4))
        sizes = [int(s) for s in rng.integers(1, 7, size=depth + 1)]
        hidden = [acts[j] for j in rng.integers(0, len(acts), size=depth)]
        kind = ("squared", "standard", "nsgan", "wgan", "lsgan", "dann")[i % 6]
        if kind != "squared":
            sizes[-1] = 1
            head = Activation.SIGMOID if kind in ("standard", "nsgan", "dann") else Activation.IDENTITY
            hidden[-1] = head
        net = init_net(sizes, hidden, rng, slope=float(rng.uniform(0.05, 0.5)))
        for p in net.params():
            p += rng.normal(scale=0.2, size=p.shape)
        m = int(rng.integers(1, 5))
        batch = rng.normal(size=(2 * m, sizes[0]))
        if kind == "squared":
            target = rng.normal(size=(2 * m, sizes[-1]))
            yield net, batch, (lambda o, t=target: float(np.mean((o - t) ** 2))), \
                (lambda o, t=target: 2 * (o - t) / o.size)
        elif kind == "dann":
            yield net, batch, (lambda o, m=m: L.dann_disc_loss(o[:m, 0], o[m:, 0])), \
                (lambda o, m=m: np.concatenate(L.dann_disc_loss_grad(o[:m, 0], o[m:, 0]))[:, None])
        else:
            yield net, batch, (lambda o, m=m, k=kind: L.disc_loss(k, o[:m, 0], o[m:, 0])
                               + L.gen_loss(k, o[m:, 0])), \
                (lambda o, m=m, k=kind: (np.concatenate(L.disc_loss_grad(k, o[:m, 0], o[m:, 0]))
                                         + np.concatenate([np.zeros(m), L.gen_loss_grad(k, o[m:, 0])]))[:, None])


def test_criterion_05_gradient_correctness():
    t0 = time.perf_counter()
    errors = []
    for net, batch, loss, grad in _gradient_triples(30):
        out, cache = forward(net, batch)
        analytic = flatten(backward(net, cache, grad(out))[0])
        numeric = flatten(finite_diff_gradient(net, loss, batch, h=1e-5))
        rel = np.abs(analytic - numeric) / np.maximum(np.abs(analytic) + np.abs(numeric), 1e-7)
        errors.append(float(rel.max()))
    worst = max(errors)
    report(5, worst < 1e-4 and len(errors) >= 20,
           f"{len(errors)} triples, max relative error {worst:.1e} (tol 1e-4)", time.perf_counter() - t0, 30)


def test_criterion_06_optimizer_contracts():
    t0 = time.perf_counter()
    w = np.zeros(1)
    Adam(0.001, beta1=0.9, beta2=0.999, epsilon=1e-8).step([w], [np.ones(1)])
    adam_err = abs(-w[0] - 0.000999999990)
    a, b = np.zeros(5), np.zeros(5)
    g = np.random.default_rng(1).normal(size=5)
    Sgd(0.1).step([a], [g], 1.0)
    Sgd(0.1).step([b], [g], 2.0)
    linear = bool(np.array_equal(b, 2 * a))
    p = np.random.default_rng(2).normal(scale=3, size=100)
    clip_weights([p], 0.01)
    clipped = float(np.abs(p).max())
    ok = adam_err <= 1e-9 and linear and clipped <= 0.01
    report(6, ok, f"Adam first-step error {adam_err:.1e}, SGD linear={linear}, max|w| after clip {clipped}",
           time.perf_counter() - t0, 1)


def test_criterion_07_determinism(tmp_path):
    t0 = time.perf_counter()
    args = ["train", "--config", str(CONFIGS / "toy_tune.json"), "--total-steps", "1000",
            "--seed", "11", "--parallelism", "1"]
    codes = [cli_main([*args, "--output", str(tmp_path / name)]) for name in ("a", "b")]
    same = (tmp_path / "a" / "summary.json").read_bytes() == (tmp_path / "b" / "summary.json").read_bytes()
    report(7, codes == [0, 0] and same, f"exit codes {codes}, summaries byte-identical={same}",
           time.perf_counter() - t0, 120)


@pytest.mark.slow
def test_criterion_08_gap_reduction(tmp_path):
    t0 = time.perf_counter()
    cfg = ExperimentConfig.load(CONFIGS / "toy_tune.json").replace(
        lr_g=GAN_TUNED["lr"], lr_d=GAN_TUNED["lr"], beta1=GAN_TUNED["beta1"],
        n_seeds=20, seed=500, arms=("off", "on"), output=str(tmp_path))
    rep = run_stability(cfg)
    med_on = rep["arms"]["on"]["final_gap"]["median"]
    med_off = rep["arms"]["off"]["final_gap"]["median"]
    c = rep["comparison"]["final_gap"]
    ok = med_on <= med_off and c["sign_p"] < 0.05
    report(8, ok, f"median final gap on {med_on:.4f} vs off {med_off:.4f}; sign test "
                  f"{c['sign_wins']}/{c['sign_n']} p={c['sign_p']:.2g} (need < 0.05)",
           time.perf_counter() - t0, 15 * 60)


@pytest.mark.slow
def test_criterion_09_correlation_sign(tmp_path):
    t0 = time.perf_counter()
    cfg = ExperimentConfig.load(CONFIGS / "toy_correlate.json").replace(output=str(tmp_path))
    rep = run_correlate(cfg)
    ok = rep["status"] == "ok" and rep["n_runs"] >= 50 and rep["rho"] > 0 and rep["p_value"] < 0.05
    report(9, ok, f"Spearman rho={rep['rho']:.3f} p={rep['p_value']:.2g} over {rep['n_used']} of "
                  f"{rep['n_runs']} runs", time.perf_counter() - t0, 45 * 60)


def _bootstrap_analytic_ok() -> tuple[bool, str]:
    single = bootstrap_best_curve([0.7], [1, 5, 30])
    flat = all(p.mean == p.ci_low == p.ci_high == 0.7 for p in single.points)
    # min of k draws from {1, 2} equals 1 unless every draw is 2
    two = bootstrap_best_curve([1.0, 2.0], [1, 2, 3], seed=5)
    expect = [1 + 0.5**k for k in (1, 2, 3)]
    # 4 standard errors of a 5000-draw mean of a variable with sd <= 0.5
    tol = 4 * 0.5 / math.sqrt(5000)
    close = all(abs(p.mean - e) <= tol for p, e in zip(two.points, expect))
    return flat and close and two.n_boot == 5000 and two.confidence == 0.99, \
        f"analytic bootstrap flat={flat} two-value={[round(p.mean, 4) for p in two.points]} vs {expect}"


@pytest.mark.slow
def test_criterion_10_tuning_curve_dominance(tmp_path):
    t0 = time.perf_counter()
    analytic_ok, analytic = _bootstrap_analytic_ok()
    cfg = ExperimentConfig.load(CONFIGS / "toy_tune.json").replace(output=str(tmp_path))
    rep = run_tune(cfg)
    on = {p["k"]: p["mean"] for p in rep["arms"]["on"]["curve"]}
    off = {p["k"]: p["mean"] for p in rep["arms"]["off"]["curve"]}
    ks = (1, 5, 10, 30)
    dominated = all(on[k] <= off[k] for k in ks)
    detail = ", ".join(f"k={k}: {on[k]:.2e} vs {off[k]:.2e}" for k in ks)
    report(10, dominated and analytic_ok and cfg.n_trials == 30,
           f"scheduler vs baseline best-of-k means {detail}; {analytic}", time.perf_counter() - t0, 3600)


@pytest.mark.slow
def test_criterion_11_dann_direction(tmp_path):
    t0 = time.perf_counter()
    cfg = ExperimentConfig.load(CONFIGS / "dann.json").replace(
        lr_g=DANN_TUNED["lr"], lr_d=DANN_TUNED["lr"], beta1=DANN_TUNED["beta1"],
        lam=DANN_TUNED["lam"], v_star=DANN_TUNED["v_star"], n_seeds=20, seed=700,
        arms=("source_only", "on"), output=str(tmp_path))
    rep = run_stability(cfg)
    acc_on = rep["arms"]["on"]["test_metric"]["mean"]
    acc_src = rep["arms"]["source_only"]["test_metric"]["mean"]
    p = rep["comparison"]["test_metric"]["p_value"]
    ok = cfg.lam > 0 and acc_on > acc_src and p < 0.05
    report(11, ok, f"target accuracy DANN+scheduler {acc_on:.4f} vs source-only {acc_src:.4f}, "
                   f"one-sided t-test p={p:.2g}", time.perf_counter() - t0, 15 * 60)


def test_criterion_12_baselines(tmp_path):
    t0 = time.perf_counter()
    d = DecaySchedule(0.003, 1234)
    endpoints = d.multiplier(0) == 1.0 and d.multiplier(1234) == 0.003
    lin_boundary = max(_boundary_errors(type(p)(**{**p.to_dict(), "interpolation": "linear"}))
                       for p in map(default_params, GanVariant))
    lin_counts = _bounds_and_monotonicity(Interpolation.LINEAR, np.random.default_rng(1))
    # the comparison study runs end to end on a tiny budget
    tiny = ["--config", str(CONFIGS / "toy_tune.json"), "--total-steps", "20", "--eval-period", "10",
            "--n-eval", "100", "--n-trials", "2", "--seeds-per-trial", "1", "--budgets", "1,2"]
    code = cli_main(["tune", *tiny, "--arms", "off,on,decay", "--output", str(tmp_path / "decay")])
    code |= cli_main(["tune", *tiny, "--interpolation", "linear", "--output", str(tmp_path / "linear")])
    runnable = code == 0 and (tmp_path / "decay" / "curve_decay.csv").exists()
    ok = endpoints and lin_boundary <= 1e-12 and lin_counts == (0, 0) and runnable
    report(12, ok, f"decay endpoints exact={endpoints}, linear boundary error {lin_boundary:.1e}, "
                   f"linear violations {lin_counts}, comparison studies runnable={runnable}",
           time.perf_counter() - t0, 5)
