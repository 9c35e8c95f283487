"""Experiment configs and the studies built on them.

A study expands an :class:`ExperimentConfig` into jobs, one per
(trial_id, seed, arm), runs them (optionally in a process pool), and
writes canonically ordered CSV and JSON reports.  Arms:

``off``          no scheduler
``on``           gap-aware scheduler on the discriminator
``decay``        exponential-decay baseline on both players
``source_only``  DANN with lambda = 0 and no scheduler
"""

from __future__ import annotations

import csv
import dataclasses
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .data import DomainPair, RingSampler
from .losses import LOG4, GanVariant, ideal_disc_loss
from .metrics import (
    UndefinedCorrelation,
    bootstrap_best_curve,
    mean_stderr,
    sign_test,
    spearman,
    two_sample_ttest,
    write_rows,
)
from .scheduler import DecaySchedule, Interpolation, SchedulerParams
from .trainer import RunRecord, TrainConfig, make_dann_task, make_gan_task, train_dann, train_gan

ARMS = ("off", "on", "decay", "source_only")
SWEEP_PARAMS = ("h_min", "f_max", "x_min", "x_max")
TRIALS_HEADER = ("trial_id", "seed", "variant", "scheduler", "lr_g", "lr_d", "beta1", "clip",
                 "lambda", "v_star", "final_metric", "final_gap", "gen_gap", "diverged")


class ConfigError(ValueError):
    """The experiment configuration is malformed."""


@dataclass
class ExperimentConfig:
    # task and model
    task: str = "nsgan"
    hidden: tuple[int, ...] = (64, 64)
    d_hidden: tuple[int, ...] | None = None
    noise_dim: int = 4
    k_modes: int = 8
    radius: float = 0.8
    sigma: float = 0.05
    feature_hidden: tuple[int, ...] = (32,)
    feature_dim: int = 16
    head_hidden: tuple[int, ...] = (32,)
    lam: float = 0.1
    v_star: float | None = None
    domain_sigma: float = 0.5
    domain_angle: float = 35.0
    domain_shift: tuple[float, float] = (0.7, 0.0)
    # training
    batch_size: int = 128
    total_steps: int = 20000
    lr_g: float = 2e-4
    lr_d: float = 2e-4
    optimizer: str = "adam"
    beta1: float = 0.5
    clip: float | None = None
    seed: int = 0
    eval_period: int = 500
    update_style: str = "simultaneous"
    n_eval: int = 2000
    eval_seed: int = 2024
    reset_on_eval: bool = False
    # scheduler
    scheduler: str = "on"
    interpolation: str = "exponential"
    h_min: float = 0.1
    f_max: float = 2.0
    x_min: float | None = None  # None -> 0.1 * V* (0.1 when V* = 0)
    x_max: float | None = None
    ema_decay: float = 0.95
    decay_rho: float = 0.01
    # studies
    n_trials: int = 100
    seeds_per_trial: int = 5
    parallelism: int = 1
    output: str = "runs/experiment"
    arms: tuple[str, ...] = ("off", "on")
    decoupled: bool = False
    lr_range: tuple[float, float] = (1e-5, 1e-3)
    beta1_range: tuple[float, float] = (0.0, 1.0)
    clip_range: tuple[float, float] | None = None
    lambda_choices: tuple[float, ...] = (0.01, 0.1, 1.0)
    v_star_range: tuple[float, float] = (0.5 * LOG4, LOG4)
    decay_rho_range: tuple[float, float] = (1e-4, 0.1)
    budgets: tuple[int, ...] = (1, 5, 10, 30, 50, 100)
    n_boot: int = 5000
    confidence: float = 0.99
    save_traces: bool = False
    # correlate
    log_gap: bool = False
    metric_threshold: float | None = None
    # sweep
    sweep_param: str = "h_min"
    grid: tuple[float, ...] = (0.01, 0.03, 0.1, 0.3, 1.0)
    # stability
    n_seeds: int = 20
    best_from: str | None = None

    def __post_init__(self):
        try:
            self._normalize()
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc
        self.validate()

    def _normalize(self):
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, list):
                setattr(self, f.name, tuple(v))
        self.hidden = tuple(int(h) for h in self.hidden)
        if self.d_hidden is not None:
            self.d_hidden = tuple(int(h) for h in self.d_hidden)
        self.feature_hidden = tuple(int(h) for h in self.feature_hidden)
        self.head_hidden = tuple(int(h) for h in self.head_hidden)
        self.budgets = tuple(int(k) for k in self.budgets)
        self.arms = tuple(str(a) for a in self.arms)

    def validate(self) -> None:
        if self.task != "dann":
            try:
                GanVariant(self.task)
            except ValueError:
                raise ConfigError(f"unknown task {self.task!r}") from None
        if self.scheduler not in ("on", "off", "decay"):
            raise ConfigError("scheduler must be 'on', 'off' or 'decay'")
        for arm in self.arms:
            if arm not in ARMS:
                raise ConfigError(f"unknown arm {arm!r}")
            if arm == "source_only" and self.task != "dann":
                raise ConfigError("the source_only arm needs the dann task")
        if not self.arms:
            raise ConfigError("need at least one arm")
        for name in ("lr_range", "beta1_range", "clip_range", "v_star_range", "decay_rho_range"):
            r = getattr(self, name)
            if r is not None and (len(r) != 2 or not r[0] <= r[1]):
                raise ConfigError(f"{name} must be an ordered pair")
        if self.lr_range[0] <= 0 or (self.clip_range and self.clip_range[0] <= 0):
            raise ConfigError("log-uniform ranges need positive bounds")
        if not (0 <= self.beta1_range[0] and self.beta1_range[1] <= 1):
            raise ConfigError("beta1_range must lie in [0, 1]")
        if self.n_trials < 1 or self.seeds_per_trial < 1 or self.n_seeds < 1 or self.parallelism < 1:
            raise ConfigError("n_trials, seeds_per_trial, n_seeds and parallelism must be >= 1")
        if self.sweep_param not in SWEEP_PARAMS:
            raise ConfigError(f"sweep_param must be one of {SWEEP_PARAMS}")
        if self.lam < 0:
            raise ConfigError("lam must be nonnegative")
        if not self.lambda_choices:
            raise ConfigError("lambda_choices must be nonempty")

    @property
    def ideal_loss(self) -> float:
        if self.task == "dann":
            return LOG4 if self.v_star is None else float(self.v_star)
        return ideal_disc_loss(self.task)

    def to_dict(self) -> dict:
        return {f.name: _plain(getattr(self, f.name)) for f in fields(self)}

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        try:
            with open(path) as f:
                d = json.load(f)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
        return cls.from_dict(d)

    def replace(self, **kw) -> "ExperimentConfig":
        return dataclasses.replace(self, **kw)


def _plain(v):
    if isinstance(v, tuple):
        return [_plain(x) for x in v]
    return v


# building runs

@dataclass(frozen=True)
class Job:
    trial_id: int
    seed: int
    arm: str
    hparams: dict = field(default_factory=dict)


def scheduler_params(cfg: ExperimentConfig, v_star: float) -> SchedulerParams:
    width = 0.1 * v_star if v_star > 0 else 0.1
    return SchedulerParams(
        ideal_loss=v_star,
        f_max=cfg.f_max,
        x_max=width if cfg.x_max is None else cfg.x_max,
        h_min=cfg.h_min,
        x_min=width if cfg.x_min is None else cfg.x_min,
        interpolation=Interpolation(cfg.interpolation),
        ema_decay=cfg.ema_decay,
    )


def resolve(cfg: ExperimentConfig, job: Job) -> dict[str, Any]:
    """Effective hyperparameters of a job: config values overridden by its draws."""
    hp = {
        "lr_g": cfg.lr_g, "lr_d": cfg.lr_d, "beta1": cfg.beta1, "clip": cfg.clip,
        "lambda": cfg.lam if cfg.task == "dann" else None,
        "v_star": cfg.ideal_loss, "decay_rho": cfg.decay_rho,
    }
    hp.update(job.hparams)
    if job.arm == "source_only":
        hp["lambda"] = 0.0
    return hp


def run_job(cfg: ExperimentConfig, job: Job) -> RunRecord:
    hp = resolve(cfg, job)
    v_star = hp["v_star"]
    sched = decay = None
    if job.arm == "on":
        sched = scheduler_params(cfg, v_star)
    elif job.arm == "decay":
        decay = DecaySchedule(hp["decay_rho"], cfg.total_steps)
    tc = TrainConfig(
        batch_size=cfg.batch_size, total_steps=cfg.total_steps, lr_g=hp["lr_g"], lr_d=hp["lr_d"],
        optimizer=cfg.optimizer, beta1=hp["beta1"], clip=hp["clip"], seed=job.seed,
        eval_period=cfg.eval_period, update_style=cfg.update_style, scheduler=sched, decay=decay,
        ema_decay=cfg.ema_decay, reset_on_eval=cfg.reset_on_eval, n_eval=cfg.n_eval,
        eval_seed=cfg.eval_seed,
    )
    if cfg.task == "dann":
        pair = DomainPair(sigma=cfg.domain_sigma, angle=cfg.domain_angle,
                          shift=tuple(cfg.domain_shift))
        task = make_dann_task(job.seed, hp["lambda"], cfg.feature_hidden, cfg.feature_dim,
                              cfg.head_hidden, pair)
        return train_dann(task, tc, v_star=v_star)
    sampler = RingSampler(cfg.k_modes, cfg.radius, cfg.sigma)
    task = make_gan_task(cfg.task, job.seed, cfg.hidden, cfg.noise_dim, sampler, cfg.d_hidden)
    return train_gan(task, tc)


def run_name(job: Job) -> str:
    return f"t{job.trial_id:04d}_s{job.seed}_{job.arm}"


def _worker(args) -> tuple[Job, dict, float]:
    cfg, job, run_dir = args
    rec = run_job(cfg, job)
    if run_dir is not None:
        path = Path(run_dir)
        _write_json(path / f"{run_name(job)}.json", rec.summary())
        if cfg.save_traces:
            rec.write_jsonl(path / f"{run_name(job)}.jsonl")
    row = {
        "final_metric": rec.final_metric,
        "test_metric": rec.best.get("test_metric", math.nan),
        "last_metric": rec.last_metric,
        "final_gap": rec.final_gap,
        "gen_gap": rec.final_gen_gap,
        "diverged": rec.diverged,
    }
    return job, row, rec.wall_time


def execute(cfg: ExperimentConfig, jobs: Sequence[Job], run_dir=None) -> list[tuple[Job, dict, float]]:
    """Run jobs, in a process pool when ``parallelism > 1``; results in canonical order."""
    if run_dir is not None:
        Path(run_dir).mkdir(parents=True, exist_ok=True)
    args = [(cfg, job, run_dir) for job in jobs]
    if cfg.parallelism == 1:
        results = [_worker(a) for a in args]
    else:
        with ProcessPoolExecutor(max_workers=cfg.parallelism) as pool:
            results = list(pool.map(_worker, args))
    results.sort(key=lambda r: (r[0].trial_id, r[0].seed, ARMS.index(r[0].arm)))
    return results


# hyperparameter draws

def _log_uniform(rng, lo, hi):
    return float(math.exp(rng.uniform(math.log(lo), math.log(hi))))


def draw_hparams(cfg: ExperimentConfig, n: int, rng: np.random.Generator) -> list[dict]:
    """One dict per trial; the draw order is fixed so every arm sees the same values."""
    draws = []
    for _ in range(n):
        hp = {"lr_g": _log_uniform(rng, *cfg.lr_range)}
        hp["lr_d"] = _log_uniform(rng, *cfg.lr_range) if cfg.decoupled else hp["lr_g"]
        hp["beta1"] = float(rng.uniform(*cfg.beta1_range))
        if cfg.clip_range is not None:
            hp["clip"] = _log_uniform(rng, *cfg.clip_range)
        if cfg.task == "dann":
            hp["lambda"] = float(cfg.lambda_choices[int(rng.integers(len(cfg.lambda_choices)))])
            hp["v_star"] = float(rng.uniform(*cfg.v_star_range))
        if "decay" in cfg.arms:
            hp["decay_rho"] = _log_uniform(rng, *cfg.decay_rho_range)
        draws.append(hp)
    return draws


def trial_seeds(cfg: ExperimentConfig, trial_id: int, n: int) -> list[int]:
    return [cfg.seed + trial_id * n + j for j in range(n)]


# reporting helpers

def _write_json(path, obj) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as f:
        json.dump(_jsonable(obj), f, indent=2, sort_keys=True)
        f.write("\n")


def _jsonable(v):
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    return v


def _trial_row(cfg: ExperimentConfig, job: Job, row: dict) -> list:
    hp = resolve(cfg, job)
    return [job.trial_id, job.seed, cfg.task, job.arm, hp["lr_g"], hp["lr_d"], hp["beta1"],
            "" if hp["clip"] is None else hp["clip"],
            "" if hp["lambda"] is None else hp["lambda"], hp["v_star"],
            row["final_metric"], row["final_gap"], row["gen_gap"], int(row["diverged"])]


def _timing(out: Path, results) -> None:
    _write_json(out / "timing.json", {run_name(j): w for j, _, w in results})


def read_trials(path) -> list[dict]:
    with open(path, newline="") as f:
        return list(csv.DictReader(f))


# studies

def run_train(cfg: ExperimentConfig) -> RunRecord:
    out = Path(cfg.output)
    job = Job(0, cfg.seed, cfg.scheduler)
    rec = run_job(cfg, job)
    out.mkdir(parents=True, exist_ok=True)
    rec.write_jsonl(out / "trace.jsonl")
    _write_json(out / "summary.json", rec.summary())
    _write_json(out / "timing.json", {"wall_time": rec.wall_time})
    return rec


def run_tune(cfg: ExperimentConfig) -> dict:
    """Paired random search: trial i of every arm shares its draws and seed list."""
    out = Path(cfg.output)
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 17]))
    draws = draw_hparams(cfg, cfg.n_trials, rng)
    jobs = [Job(i, s, arm, hp)
            for i, hp in enumerate(draws)
            for s in trial_seeds(cfg, i, cfg.seeds_per_trial)
            for arm in cfg.arms]
    results = execute(cfg, jobs, out / "runs")
    write_rows(out / "trials.csv", TRIALS_HEADER, [_trial_row(cfg, j, r) for j, r, _ in results])
    _timing(out, results)

    direction = "max" if cfg.task == "dann" else "min"
    budgets = [k for k in cfg.budgets if k <= cfg.n_trials] or [1]
    report = {"direction": direction, "n_trials": cfg.n_trials,
              "seeds_per_trial": cfg.seeds_per_trial, "arms": {}}
    for arm in cfg.arms:
        per_trial = trial_means(results, arm, cfg.n_trials)
        curve = bootstrap_best_curve(per_trial, budgets, cfg.n_boot, cfg.confidence, direction,
                                     seed=cfg.seed)
        curve.to_csv(out / f"curve_{arm}.csv")
        n_div = sum(r["diverged"] for j, r, _ in results if j.arm == arm)
        best = int(np.argmin(per_trial) if direction == "min" else np.argmax(per_trial))
        report["arms"][arm] = {
            "curve": [dataclasses.asdict(p) for p in curve.points],
            "diverged_runs": n_div,
            "best_trial": best,
            "best_hparams": draws[best],
            "best_metric": float(per_trial[best]),
        }
    report["all_diverged"] = all(r["diverged"] for _, r, _ in results)
    _write_json(out / "summary.json", report)
    return report


def trial_means(results, arm: str, n_trials: int, key: str = "final_metric") -> np.ndarray:
    """Per-trial mean of ``key`` over seeds for one arm."""
    sums = np.zeros(n_trials)
    counts = np.zeros(n_trials)
    for job, row, _ in results:
        if job.arm == arm:
            sums[job.trial_id] += row[key]
            counts[job.trial_id] += 1
    with np.errstate(invalid="ignore"):
        return sums / counts


def run_correlate(cfg: ExperimentConfig) -> dict:
    """Random-hyperparameter runs without the scheduler; end-of-training gap vs metric."""
    out = Path(cfg.output)
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 23]))
    draws = draw_hparams(cfg, cfg.n_trials, rng)
    jobs = [Job(i, s, "off", hp)
            for i, hp in enumerate(draws) for s in trial_seeds(cfg, i, cfg.seeds_per_trial)]
    results = execute(cfg, jobs, out / "runs")
    write_rows(out / "trials.csv", TRIALS_HEADER, [_trial_row(cfg, j, r) for j, r, _ in results])
    _timing(out, results)
    gaps = trial_means(results, "off", cfg.n_trials, "final_gap")
    metrics = trial_means(results, "off", cfg.n_trials, "last_metric")
    report = correlation_report(gaps, metrics, cfg.log_gap, cfg.metric_threshold, out / "scatter.csv")
    report["all_diverged"] = all(r["diverged"] for _, r, _ in results)
    _write_json(out / "summary.json", report)
    return report


def correlation_report(gaps, metrics, log_gap=False, metric_threshold=None, scatter_path=None) -> dict:
    gaps = np.asarray(gaps, float)
    metrics = np.asarray(metrics, float)
    keep = np.isfinite(gaps) & np.isfinite(metrics)
    n_diverged = int(np.sum(~keep))
    if metric_threshold is not None:
        keep &= metrics <= metric_threshold
    ids = np.flatnonzero(keep)
    x = gaps[keep]
    if log_gap:
        x = np.log(np.maximum(x, 1e-12))
    y = metrics[keep]
    if scatter_path is not None:
        write_rows(scatter_path, ("trial_id", "gap", "metric"),
                   [[int(i), float(a), float(b)] for i, a, b in zip(ids, x, y)])
    report = {"n_runs": int(gaps.size), "n_used": int(ids.size), "n_diverged": n_diverged,
              "log_gap": bool(log_gap), "metric_threshold": metric_threshold}
    try:
        res = spearman(x, y)
        report.update(status="ok", rho=res.rho, p_value=res.p_value)
    except UndefinedCorrelation as exc:
        status = "unavailable" if ids.size < 3 else "undefined"
        report.update(status=status, rho=None, p_value=None, reason=str(exc))
    return report


def run_sweep(cfg: ExperimentConfig) -> list[list]:
    """Vary one scheduler parameter over ``grid`` with the others at their defaults."""
    out = Path(cfg.output)
    base = scheduler_params(cfg.replace(h_min=0.1, f_max=2.0, x_min=None, x_max=None), cfg.ideal_loss)
    configs = []
    for value in cfg.grid:
        try:
            params = dataclasses.replace(base, **{cfg.sweep_param: float(value)})
        except ValueError as exc:
            raise ConfigError(f"invalid {cfg.sweep_param}={value}: {exc}") from exc
        configs.append(cfg.replace(h_min=params.h_min, f_max=params.f_max,
                                   x_min=params.x_min, x_max=params.x_max))
    rows = []
    seeds = trial_seeds(cfg, 0, cfg.seeds_per_trial)
    all_results = []
    for value, sub in zip(cfg.grid, configs):
        tag = f"{cfg.sweep_param}={value!r}"
        results = execute(sub, [Job(0, s, "on") for s in seeds], out / "runs" / tag)
        all_results.extend(results)
        m, se = mean_stderr([r["final_metric"] for _, r, _ in results])
        rows.append([cfg.sweep_param, float(value), m, se])
    write_rows(out / "sweep.csv", ("param", "value", "mean_metric", "stderr"), rows)
    _write_json(out / "summary.json", {"rows": rows,
                                       "all_diverged": all(r["diverged"] for _, r, _ in all_results)})
    return rows


def best_hparams_from(path, arm: str, direction: str) -> dict:
    rows = [r for r in read_trials(path) if r["scheduler"] == arm]
    if not rows:
        raise ConfigError(f"no rows for arm {arm!r} in {path}")
    by_trial: dict[int, list[float]] = {}
    for r in rows:
        by_trial.setdefault(int(r["trial_id"]), []).append(float(r["final_metric"]))
    means = {t: float(np.mean(v)) for t, v in by_trial.items()}
    pick = min(means, key=means.get) if direction == "min" else max(means, key=means.get)
    r = next(r for r in rows if int(r["trial_id"]) == pick)
    hp = {"lr_g": float(r["lr_g"]), "lr_d": float(r["lr_d"]), "beta1": float(r["beta1"]),
          "v_star": float(r["v_star"])}
    if r["clip"]:
        hp["clip"] = float(r["clip"])
    if r["lambda"]:
        hp["lambda"] = float(r["lambda"])
    return hp


def run_stability(cfg: ExperimentConfig) -> dict:
    """Many seeds at fixed hyperparameters for every arm, with paired comparisons."""
    out = Path(cfg.output)
    direction = "max" if cfg.task == "dann" else "min"
    seeds = [cfg.seed + j for j in range(cfg.n_seeds)]
    jobs = []
    for arm in cfg.arms:
        hp = best_hparams_from(cfg.best_from, arm, direction) if cfg.best_from else {}
        jobs.extend(Job(0, s, arm, hp) for s in seeds)
    results = execute(cfg, jobs, out / "runs")
    rows = []
    for job, r, _ in results:
        rows.append([job.seed, job.arm, r["final_metric"], r["test_metric"], r["final_gap"],
                     r["gen_gap"], int(r["diverged"])])
    rows.sort(key=lambda r: (cfg.arms.index(r[1]), r[0]))
    write_rows(out / "stability.csv",
               ("seed", "arm", "final_metric", "test_metric", "gap", "gen_gap", "diverged"), rows)
    _timing(out, results)

    def column(arm, key):
        return np.array([r[key] for j, r, _ in results if j.arm == arm], dtype=float)

    report: dict[str, Any] = {"seeds": seeds, "arms": {}}
    for arm in cfg.arms:
        report["arms"][arm] = {key: _describe(column(arm, key))
                               for key in ("final_metric", "test_metric", "final_gap", "gen_gap")}
    if len(cfg.arms) >= 2:
        a, b = cfg.arms[1], cfg.arms[0]
        comp = {"arms": [a, b]}
        for key in ("final_gap", "final_metric", "test_metric"):
            xa, xb = column(a, key), column(b, key)
            ok = np.isfinite(xa) & np.isfinite(xb)
            alt = "greater" if key != "final_gap" and direction == "max" else "less"
            entry = {"alternative": alt}
            if ok.sum() >= 2 and (np.std(xa[ok]) > 0 or np.std(xb[ok]) > 0):
                t, p = two_sample_ttest(xa[ok], xb[ok], alt)
                entry.update(t=t, p_value=p)
            lo, hi = (xa, xb) if alt == "less" else (xb, xa)
            wins, n, p = sign_test(lo[ok], hi[ok])
            entry.update(sign_wins=wins, sign_n=n, sign_p=p)
            comp[key] = entry
        report["comparison"] = comp
    report["all_diverged"] = all(r["diverged"] for _, r, _ in results)
    _write_json(out / "summary.json", report)
    return report


def _describe(x: np.ndarray) -> dict:
    finite = x[np.isfinite(x)]
    m, se = mean_stderr(x) if finite.size == x.size else (math.inf, math.nan)
    q = np.percentile(finite, [25, 50, 75]) if finite.size else [math.nan] * 3
    return {"mean": m, "stderr": se, "q25": float(q[0]), "median": float(q[1]),
            "q75": float(q[2]), "n": int(x.size), "n_finite": int(finite.size)}
