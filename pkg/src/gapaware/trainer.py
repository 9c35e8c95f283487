"""Two-player minibatch training loops for GANs and DANN with full tracing."""

from __future__ import annotations

import enum
import json
import math
import time
from dataclasses import asdict, dataclass, field
from typing import Any

import numpy as np

from . import losses as L
from .data import DomainPair, RingSampler
from .losses import GanVariant
from .metrics import fit_gaussian, frechet_gaussian_distance, optimality_gap
from .nn import Activation, DenseNet, backward, forward, mlp
from .optim import clip_weights, make_optimizer
from .scheduler import (
    DecaySchedule,
    GapScheduler,
    LossEstimator,
    NonFiniteLossError,
    SchedulerParams,
)


class UpdateStyle(str, enum.Enum):
    SIMULTANEOUS = "simultaneous"
    ALTERNATING = "alternating"


@dataclass
class GanTask:
    variant: GanVariant
    generator: DenseNet
    discriminator: DenseNet
    noise_dim: int
    sampler: RingSampler = field(default_factory=RingSampler)

    def __post_init__(self):
        self.variant = GanVariant(self.variant)
        if self.generator.in_dim != self.noise_dim:
            raise ValueError("generator input width must equal noise_dim")
        if self.generator.out_dim != 2 or self.discriminator.in_dim != 2:
            raise ValueError("generator output and discriminator input must be 2-D")


def make_gan_task(
    variant,
    seed: int,
    hidden: tuple[int, ...] = (64, 64),
    noise_dim: int = 4,
    sampler: RingSampler | None = None,
    d_hidden: tuple[int, ...] | None = None,
) -> GanTask:
    """Tanh-headed generator and a discriminator whose head matches the variant.

    ``hidden`` sizes both nets unless ``d_hidden`` is given for the discriminator.
    """
    variant = GanVariant(variant)
    ss = np.random.SeedSequence(seed).spawn(2)
    g = mlp(noise_dim, hidden, 2, Activation.TANH, np.random.default_rng(ss[0]))
    head = Activation.SIGMOID if variant.probabilistic else Activation.IDENTITY
    d = mlp(2, d_hidden or hidden, 1, head, np.random.default_rng(ss[1]))
    return GanTask(variant, g, d, noise_dim, sampler or RingSampler())


@dataclass
class DannTask:
    features: DenseNet
    labeller: DenseNet
    discriminator: DenseNet
    lam: float = 0.1
    pair: DomainPair = field(default_factory=DomainPair)

    def __post_init__(self):
        if self.lam < 0:
            raise ValueError("lambda must be nonnegative")
        width = self.features.out_dim
        if self.labeller.in_dim != width or self.discriminator.in_dim != width:
            raise ValueError("feature width must match label predictor and discriminator inputs")


def make_dann_task(
    seed: int,
    lam: float = 0.1,
    feature_hidden: tuple[int, ...] = (32,),
    feature_dim: int = 16,
    head_hidden: tuple[int, ...] = (32,),
    pair: DomainPair | None = None,
) -> DannTask:
    ss = np.random.SeedSequence(seed).spawn(3)
    f = mlp(2, feature_hidden, feature_dim, Activation.LEAKY_RELU, np.random.default_rng(ss[0]))
    y = mlp(feature_dim, head_hidden, 1, Activation.SIGMOID, np.random.default_rng(ss[1]))
    d = mlp(feature_dim, head_hidden, 1, Activation.SIGMOID, np.random.default_rng(ss[2]))
    return DannTask(f, y, d, lam, pair or DomainPair())


@dataclass
class TrainConfig:
    batch_size: int = 128
    total_steps: int = 20000
    lr_g: float = 2e-4
    lr_d: float = 2e-4
    optimizer: str = "adam"
    beta1: float = 0.5
    clip: float | None = None
    seed: int = 0
    eval_period: int = 500
    update_style: UpdateStyle = UpdateStyle.SIMULTANEOUS
    scheduler: SchedulerParams | None = None
    decay: DecaySchedule | None = None
    ema_decay: float = 0.95  # for the monitoring estimate when no scheduler is active
    reset_on_eval: bool = False
    n_eval: int = 2000
    eval_seed: int = 2024

    def __post_init__(self):
        self.update_style = UpdateStyle(self.update_style)
        if isinstance(self.scheduler, dict):
            self.scheduler = SchedulerParams.from_dict(self.scheduler)
        if isinstance(self.decay, dict):
            self.decay = DecaySchedule(**self.decay)
        if self.batch_size < 1 or self.total_steps < 1 or self.eval_period < 1:
            raise ValueError("batch_size, total_steps and eval_period must be positive")
        if self.scheduler is not None and self.decay is not None:
            raise ValueError("gap scheduler and decay baseline are mutually exclusive")
        if self.clip is not None and self.clip <= 0:
            raise ValueError("clip must be positive")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["update_style"] = self.update_style.value
        d["scheduler"] = self.scheduler.to_dict() if self.scheduler else None
        d["decay"] = asdict(self.decay) if self.decay else None
        return d


STEP_FIELDS = ("batch_disc_loss", "ema_estimate", "gap", "multiplier", "gen_batch_loss")


@dataclass
class RunRecord:
    """Everything observed during one training run.

    ``steps`` holds one array per entry of :data:`STEP_FIELDS`, truncated at
    the step where a divergence was detected.  ``evals`` holds one dict per
    evaluation.  ``best`` is the early-stopping snapshot chosen by the
    validation metric; the gap properties instead describe the end of
    training (the last evaluation), which is what gap statistics compare.
    """

    kind: str
    ideal_loss: float
    direction: str
    steps: dict[str, np.ndarray]
    evals: list[dict[str, float]]
    best: dict[str, float]
    diverged: bool
    wall_time: float
    config: dict[str, Any]
    best_params: list[np.ndarray] | None = None

    @property
    def n_steps(self) -> int:
        return len(self.steps["multiplier"])

    @property
    def final_metric(self) -> float:
        return self.best["metric"]

    def _last(self, key: str) -> float:
        if self.diverged:
            return math.inf if key != "metric" or self.direction == "min" else 0.0
        if not self.evals:
            return math.nan
        return self.evals[-1].get(key, math.nan)

    @property
    def last_metric(self) -> float:
        return self._last("metric")

    @property
    def final_gap(self) -> float:
        return self._last("gap")

    @property
    def final_gen_gap(self) -> float:
        return self._last("gen_gap")

    def summary(self) -> dict[str, Any]:
        """JSON-ready summary; excludes wall time so reruns compare byte-for-byte."""
        m = self.steps["multiplier"]
        return {
            "kind": self.kind,
            "ideal_loss": self.ideal_loss,
            "direction": self.direction,
            "diverged": self.diverged,
            "n_steps": self.n_steps,
            "best": {k: _json_float(v) for k, v in self.best.items()},
            "multiplier": {
                "min": _json_float(float(m.min())) if m.size else None,
                "max": _json_float(float(m.max())) if m.size else None,
                "mean": _json_float(float(m.mean())) if m.size else None,
                "all_one": bool(np.all(m == 1.0)),
            },
            "final_gap": _json_float(self.final_gap),
            "last_eval": {k: _json_float(v) for k, v in self.evals[-1].items()} if self.evals else None,
            "config": self.config,
        }

    def iter_events(self):
        for i in range(self.n_steps):
            ev = {"event": "step", "step": i}
            ev.update({k: _json_float(float(self.steps[k][i])) for k in STEP_FIELDS})
            yield ev
        for e in self.evals:
            yield {"event": "eval", **{k: _json_float(v) for k, v in e.items()}}

    def write_jsonl(self, path) -> None:
        with open(path, "w") as f:
            for ev in self.iter_events():
                f.write(json.dumps(ev) + "\n")


def _json_float(v):
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return int(v)
    v = float(v)
    if math.isnan(v):
        return "nan"
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return v


def read_jsonl(path) -> tuple[dict[str, np.ndarray], list[dict]]:
    """Load step arrays and eval dicts written by :meth:`RunRecord.write_jsonl`."""
    cols = {k: [] for k in STEP_FIELDS}
    evals = []
    with open(path) as f:
        for line in f:
            ev = json.loads(line)
            kind = ev.pop("event")
            if kind == "step":
                for k in STEP_FIELDS:
                    cols[k].append(float(ev[k]))
            else:
                evals.append({k: float(v) for k, v in ev.items()})
    return {k: np.array(v) for k, v in cols.items()}, evals


class _Trace:
    def __init__(self, n: int):
        self.data = {k: np.empty(n) for k in STEP_FIELDS}
        self.n = 0

    def add(self, *values):
        for k, v in zip(STEP_FIELDS, values):
            self.data[k][self.n] = v
        self.n += 1

    def arrays(self):
        return {k: v[: self.n].copy() for k, v in self.data.items()}


class _RateControl:
    """Produces the adversary's multiplier and a loss estimate at each step."""

    def __init__(self, config: TrainConfig, ideal_loss: float):
        self.config = config
        self.ideal_loss = ideal_loss
        if config.scheduler is not None:
            self.scheduler = GapScheduler(config.scheduler)
            self.monitor = None
        else:
            self.scheduler = None
            self.monitor = LossEstimator(ideal_loss, config.ema_decay)

    def observe(self, step: int, batch_loss: float) -> tuple[float, float, float]:
        """Return (multiplier for D, multiplier for the other player, estimate)."""
        if self.scheduler is not None:
            mult = self.scheduler.observe(batch_loss)
            return mult, 1.0, self.scheduler.estimate
        est = self.monitor.update(batch_loss)
        if self.config.decay is not None:
            m = self.config.decay.multiplier(step)
            return m, m, est
        return 1.0, 1.0, est

    def reset(self, value: float) -> None:
        if self.scheduler is not None:
            self.scheduler.reset(value)
        else:
            self.monitor.estimate = float(value)


def _finite(*arrays) -> None:
    for a in arrays:
        if not np.all(np.isfinite(a)):
            raise NonFiniteLossError("network produced non-finite outputs")


def _check_loss(v: float) -> float:
    if not math.isfinite(v):
        raise NonFiniteLossError(f"non-finite loss {v!r}")
    return v


def train_gan(task: GanTask, config: TrainConfig) -> RunRecord:
    """Train ``task`` in place and return its trace.

    Each step draws one real batch and one noise batch shared by both players.
    The discriminator's rate is ``lr_d * multiplier``; the generator keeps
    ``lr_g`` (the decay baseline scales both).
    """
    t0 = time.perf_counter()
    variant = task.variant
    G, D = task.generator, task.discriminator
    v_star = L.ideal_disc_loss(variant)
    n = config.batch_size
    data_rng = np.random.default_rng(np.random.SeedSequence([config.seed, 1]))
    eval_rng = np.random.default_rng(np.random.SeedSequence([config.eval_seed, 7]))
    real_val = task.sampler.sample(config.n_eval, eval_rng)
    real_test = task.sampler.sample(config.n_eval, eval_rng)
    z_eval = eval_rng.standard_normal((config.n_eval, task.noise_dim))
    val_summary, test_summary = fit_gaussian(real_val), fit_gaussian(real_test)

    opt_d = make_optimizer(config.optimizer, config.lr_d, config.beta1)
    opt_g = make_optimizer(config.optimizer, config.lr_g, config.beta1)
    control = _RateControl(config, v_star)
    trace = _Trace(config.total_steps)
    evals: list[dict] = []
    best = {"metric": math.inf, "gap": math.inf, "gen_gap": math.inf, "test_metric": math.inf,
            "step": -1}
    best_params = None
    diverged = False
    simultaneous = config.update_style is UpdateStyle.SIMULTANEOUS

    def evaluate(step: int) -> dict:
        fake = G(z_eval)
        _finite(fake)
        d_real, d_fake = D(real_val)[:, 0], D(fake)[:, 0]
        _finite(d_real, d_fake)
        full_loss = L.disc_loss(variant, d_real, d_fake)
        g_loss = L.gen_loss(variant, d_fake)
        fake_summary = fit_gaussian(fake)
        return {
            "step": step,
            "metric": frechet_gaussian_distance(fake_summary, val_summary),
            "test_metric": frechet_gaussian_distance(fake_summary, test_summary),
            "disc_loss": full_loss,
            "gap": optimality_gap(full_loss, v_star),
            "gen_loss": g_loss,
            "gen_gap": abs(g_loss - L.ideal_gen_loss(variant)),
        }

    with np.errstate(over="ignore", invalid="ignore"):
        try:
            for step in range(config.total_steps):
                real = task.sampler.sample(n, data_rng)
                z = data_rng.standard_normal((n, task.noise_dim))
                fake, g_cache = forward(G, z)
                d_out, d_cache = forward(D, np.concatenate([real, fake]))
                _finite(d_out)
                d_real, d_fake = d_out[:n, 0], d_out[n:, 0]
                v_batch = _check_loss(L.disc_loss(variant, d_real, d_fake))
                g_batch = _check_loss(L.gen_loss(variant, d_fake))
                mult_d, mult_g, est = control.observe(step, v_batch)
                trace.add(v_batch, est, abs(est - v_star), mult_d, g_batch)

                gr, gf = L.disc_loss_grad(variant, d_real, d_fake)
                grads_d, _ = backward(D, d_cache, np.concatenate([gr, gf])[:, None])
                if simultaneous:
                    grads_g = _generator_grads(variant, G, D, g_cache, d_cache, d_fake, n)
                    _step(opt_d, D, grads_d, mult_d, config.clip)
                    _step(opt_g, G, grads_g, mult_g, None)
                else:
                    _step(opt_d, D, grads_d, mult_d, config.clip)
                    d_fake2, d_cache2 = forward(D, fake)
                    _finite(d_fake2)
                    gd = L.gen_loss_grad(variant, d_fake2[:, 0])
                    _, g_in = backward(D, d_cache2, gd[:, None])
                    grads_g, _ = backward(G, g_cache, g_in)
                    _step(opt_g, G, grads_g, mult_g, None)

                if (step + 1) % config.eval_period == 0:
                    ev = evaluate(step + 1)
                    evals.append(ev)
                    if config.reset_on_eval:
                        control.reset(ev["disc_loss"])
                    if ev["metric"] < best["metric"]:
                        best = {k: ev[k] for k in ("metric", "gap", "gen_gap", "test_metric", "step")}
                        best_params = [p.copy() for p in G.params()]
        except (NonFiniteLossError, FloatingPointError):
            diverged = True

    if diverged:
        best = {"metric": math.inf, "gap": math.inf, "gen_gap": math.inf, "test_metric": math.inf,
                "step": -1}
    return RunRecord(
        kind=f"gan:{variant.value}",
        ideal_loss=v_star,
        direction="min",
        steps=trace.arrays(),
        evals=evals,
        best=best,
        diverged=diverged,
        wall_time=time.perf_counter() - t0,
        config=config.to_dict(),
        best_params=best_params,
    )


def _generator_grads(variant, G, D, g_cache, d_cache, d_fake, n):
    # backprop the generator loss through the pre-update discriminator
    gd = L.gen_loss_grad(variant, d_fake)
    out_grad = np.zeros((2 * n, 1))
    out_grad[n:, 0] = gd
    _, d_in = backward(D, d_cache, out_grad)
    grads_g, _ = backward(G, g_cache, d_in[n:])
    return grads_g


def _step(opt, net, grads, mult, clip):
    opt.step(net.params(), grads, mult)
    if clip is not None:
        clip_weights(net.params(), clip)


def generate_samples(task: GanTask, n: int, seed) -> np.ndarray:
    z = np.random.default_rng(seed).standard_normal((n, task.noise_dim))
    return task.generator(z)


def train_dann(task: DannTask, config: TrainConfig, v_star: float = L.LOG4) -> RunRecord:
    """Simultaneous DANN updates.

    The discriminator descends its domain risk ``L_d`` with rate
    ``lr_d * multiplier``; feature extractor and label predictor descend
    ``L_y - lam * L_d`` with ``lr_g``.  The validation metric is target-domain
    accuracy (higher is better).
    """
    if not 0 < v_star <= L.LOG4 + 1e-12:
        raise ValueError(f"v_star must lie in (0, log 4], got {v_star}")
    if config.scheduler is not None and config.scheduler.ideal_loss != v_star:
        raise ValueError("scheduler ideal_loss must equal v_star")
    t0 = time.perf_counter()
    F, Y, D = task.features, task.labeller, task.discriminator
    lam = task.lam
    n = config.batch_size
    data_rng = np.random.default_rng(np.random.SeedSequence([config.seed, 1]))
    eval_rng = np.random.default_rng(np.random.SeedSequence([config.eval_seed, 11]))
    src_val_x, _ = task.pair.sample_source(config.n_eval, eval_rng)
    tgt_val_x, tgt_val_y = task.pair.sample_target(config.n_eval, eval_rng)
    tgt_test_x, tgt_test_y = task.pair.sample_target(config.n_eval, eval_rng)

    opt_d = make_optimizer(config.optimizer, config.lr_d, config.beta1)
    opt_f = make_optimizer(config.optimizer, config.lr_g, config.beta1)
    opt_y = make_optimizer(config.optimizer, config.lr_g, config.beta1)
    control = _RateControl(config, v_star)
    trace = _Trace(config.total_steps)
    evals: list[dict] = []
    best = {"metric": -math.inf, "gap": math.inf, "test_metric": -math.inf, "step": -1}
    diverged = False

    def accuracy(x, y):
        p = Y(F(x))[:, 0]
        return float(np.mean((p > 0.5) == (y > 0.5)))

    def evaluate(step: int) -> dict:
        d_s, d_t = D(F(src_val_x))[:, 0], D(F(tgt_val_x))[:, 0]
        _finite(d_s, d_t)
        full = L.dann_disc_loss(d_s, d_t)
        return {
            "step": step,
            "metric": accuracy(tgt_val_x, tgt_val_y),
            "test_metric": accuracy(tgt_test_x, tgt_test_y),
            "disc_loss": full,
            "gap": optimality_gap(full, v_star),
        }

    with np.errstate(over="ignore", invalid="ignore"):
        try:
            for step in range(config.total_steps):
                xs, ys = task.pair.sample_source(n, data_rng)
                xt, _ = task.pair.sample_target(n, data_rng)
                h, f_cache = forward(F, np.concatenate([xs, xt]))
                p, y_cache = forward(Y, h[:n])
                d_out, d_cache = forward(D, h)
                _finite(p, d_out)
                d_s, d_t = d_out[:n, 0], d_out[n:, 0]
                l_y = _check_loss(L.binary_cross_entropy(p[:, 0], ys))
                l_d = _check_loss(L.dann_disc_loss(d_s, d_t))
                mult_d, mult_o, est = control.observe(step, l_d)
                trace.add(l_d, est, abs(est - v_star), mult_d,
                          L.dann_feature_objective(l_y, l_d, lam))

                gs, gt = L.dann_disc_loss_grad(d_s, d_t)
                grads_d, h_grad_d = backward(D, d_cache, np.concatenate([gs, gt])[:, None])
                grads_y, h_grad_y = backward(Y, y_cache, L.binary_cross_entropy_grad(p[:, 0], ys)[:, None])
                h_grad = -lam * h_grad_d
                h_grad[:n] += h_grad_y
                grads_f, _ = backward(F, f_cache, h_grad)
                _step(opt_d, D, grads_d, mult_d, config.clip)
                _step(opt_y, Y, grads_y, mult_o, None)
                _step(opt_f, F, grads_f, mult_o, None)

                if (step + 1) % config.eval_period == 0:
                    ev = evaluate(step + 1)
                    evals.append(ev)
                    if config.reset_on_eval:
                        control.reset(ev["disc_loss"])
                    if ev["metric"] > best["metric"]:
                        best = {k: ev[k] for k in ("metric", "gap", "test_metric", "step")}
        except (NonFiniteLossError, FloatingPointError):
            diverged = True

    if diverged:
        # zero accuracy is the worst attainable value; keeps study statistics finite
        best = {"metric": 0.0, "gap": math.inf, "test_metric": 0.0, "step": -1}
    return RunRecord(
        kind="dann",
        ideal_loss=v_star,
        direction="max",
        steps=trace.arrays(),
        evals=evals,
        best=best,
        diverged=diverged,
        wall_time=time.perf_counter() - t0,
        config={**config.to_dict(), "lambda": lam, "v_star": v_star},
    )
