"""
Alternating adversarial training for GAN, DAN-S and DAN-2S.

One iteration has three phases, each drawing fresh minibatches and taking
exactly one Adam step:

1. pointwise discriminator D ascends the lambda1-weighted GAN objective
   (skipped when lambda1 is 0)
2. every k-th iteration the distributional adversary ascends the
   lambda2-weighted sample-classifier or two-sample objective
   (skipped when lambda2 is 0 or in GAN mode)
3. the generator descends its combined loss
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from ..errors import NonFiniteError, TrainingAbort, ValidationError
from . import tensor as T
from .adversaries import (
    LOSS_FORMS,
    build_discriminator,
    build_generator,
    build_sample_classifier,
    build_two_sample,
    pointwise_loss,
    sample_classifier_loss,
    two_sample_loss,
    two_sample_predict,
)
from .data import sample_mixture, sample_noise, NoiseSpec
from .nn import AdamState, adam_step

log = logging.getLogger(__name__)

MODES = ("S", "2S", "gan")
G_LOSS_FORMS = ("saturating", "nonsaturating")


@dataclass
class TrainConfig:
    """Hyperparameters of one training run."""

    iterations: int = 25000
    batch_size: int = 512
    k: int = 1
    xi: str = "S"
    lambda1: float = 0.0
    lambda2: float = 1.0
    lr: float = 1e-4
    beta1: float = 0.5
    beta2: float = 0.999
    eps: float = 1e-8
    g_loss_form: str = "nonsaturating"
    loss_form: str = "crossentropy"
    seed: int = 0
    snapshot_every: int = 1000

    def problems(self):
        """Every violated constraint, as human-readable strings."""
        found = []
        if self.iterations < 1:
            found.append(f"train.iterations must be at least 1, got {self.iterations}")
        if self.batch_size < 1:
            found.append(f"train.batch_size must be at least 1, got {self.batch_size}")
        if self.k < 1:
            found.append(f"train.k must be at least 1, got {self.k}")
        if self.xi not in MODES:
            found.append(f"train.xi must be one of {MODES}, got {self.xi!r}")
        if self.xi == "2S" and self.batch_size % 2:
            found.append(f"train.batch_size must be even for xi=2S, got {self.batch_size}")
        if self.lambda1 < 0 or self.lambda2 < 0:
            found.append("train.lambda1 and train.lambda2 must be non-negative")
        if self.lambda1 + self.lambda2 <= 0:
            found.append("train.lambda1 + train.lambda2 must be positive")
        if self.xi == "gan" and self.lambda1 <= 0:
            found.append("train.lambda1 must be positive for xi=gan")
        if self.lr <= 0:
            found.append(f"train.lr must be positive, got {self.lr}")
        if not 0 <= self.beta1 < 1 or not 0 <= self.beta2 < 1:
            found.append("train.beta1 and train.beta2 must lie in [0, 1)")
        if self.eps <= 0:
            found.append(f"train.eps must be positive, got {self.eps}")
        if self.g_loss_form not in G_LOSS_FORMS:
            found.append(f"train.g_loss_form must be one of {G_LOSS_FORMS}, got {self.g_loss_form!r}")
        if self.loss_form not in LOSS_FORMS:
            found.append(f"train.loss_form must be one of {LOSS_FORMS}, got {self.loss_form!r}")
        if self.snapshot_every < 1:
            found.append(f"train.snapshot_every must be at least 1, got {self.snapshot_every}")
        return found

    def validate(self):
        found = self.problems()
        if found:
            raise ValidationError(found)
        return self


@dataclass
class NetworkDims:
    """Layer widths of every network, input first."""

    generator: list = field(default_factory=lambda: [256, 128, 128, 128, 2])
    discriminator: list = field(default_factory=lambda: [2, 32, 32, 32, 1])
    phi: list = field(default_factory=lambda: [2, 32, 32])
    head: list = field(default_factory=lambda: [32, 32, 1])
    generator_out_act: str = "none"

    def problems(self, data_dim=None, noise_dim=None):
        found = []
        for name in ("generator", "discriminator", "phi", "head"):
            dims = getattr(self, name)
            if len(dims) < 2 or any(int(d) < 1 for d in dims):
                found.append(f"networks.{name} must list at least two positive widths, got {dims}")
        if found:
            return found
        if self.phi[-1] != self.head[0]:
            found.append(f"networks.head must start at the encoding width {self.phi[-1]}, got {self.head[0]}")
        if self.discriminator[-1] != 1 or self.head[-1] != 1:
            found.append("networks.discriminator and networks.head must end in width 1")
        if data_dim is not None:
            for name, width in (("generator", self.generator[-1]), ("discriminator", self.discriminator[0]), ("phi", self.phi[0])):
                if width != data_dim:
                    found.append(f"networks.{name} data width {width} does not match data dimension {data_dim}")
        if noise_dim is not None and self.generator[0] != noise_dim:
            found.append(f"networks.generator input width {self.generator[0]} does not match noise dimension {noise_dim}")
        if self.generator_out_act not in ("none", "tanh", "sigmoid"):
            found.append(f"networks.generator_out_act must be none, tanh or sigmoid, got {self.generator_out_act!r}")
        return found


@dataclass
class LossRecord:
    iteration: int
    loss_d: float = None
    loss_m: float = None
    loss_g: float = None


@dataclass
class LossTrace:
    """One LossRecord per iteration plus run metadata."""

    records: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def append(self, record):
        self.records.append(record)

    def __len__(self):
        return len(self.records)

    def column(self, name):
        return np.array(
            [np.nan if getattr(r, name) is None else getattr(r, name) for r in self.records],
            dtype=np.float64,
        )


class TrainState:
    """Networks, optimizer states, RNG streams and iteration counter of a run."""

    def __init__(self, cfg, data, noise, dims):
        self.data = data
        self.noise = noise
        # independent streams: init, data, noise; batch size never shifts init
        init_ss, data_ss, noise_ss = np.random.SeedSequence(cfg.seed).spawn(3)
        g_seed, d_seed, m_seed = (int(s) for s in init_ss.generate_state(3))
        self.data_rng = np.random.default_rng(data_ss)
        self.noise_rng = np.random.default_rng(noise_ss)

        self.generator = build_generator(dims.generator, out_act=dims.generator_out_act, seed=g_seed)
        self.discriminator = build_discriminator(dims.discriminator, seed=d_seed)
        if cfg.xi == "2S":
            self.adversary = build_two_sample(dims.phi, dims.head, seed=m_seed)
        elif cfg.xi == "S":
            self.adversary = build_sample_classifier(dims.phi, dims.head, seed=m_seed)
        else:
            self.adversary = None

        self.g_params = self.generator.parameters()
        self.d_params = self.discriminator.parameters()
        self.m_params = self.adversary.parameters() if self.adversary is not None else None
        opt = dict(lr=cfg.lr, beta1=cfg.beta1, beta2=cfg.beta2, eps=cfg.eps)
        self.g_opt = AdamState(self.g_params, **opt)
        self.d_opt = AdamState(self.d_params, **opt)
        self.m_opt = AdamState(self.m_params, **opt) if self.m_params is not None else None
        self.iteration = 0

    def zero_all_grads(self):
        for store in (self.g_params, self.d_params, self.m_params):
            if store is not None:
                store.zero_grad()


def init_state(cfg, data, noise=None, dims=None):
    """Validate the configuration and build a fresh TrainState."""
    noise = noise or NoiseSpec()
    dims = dims or NetworkDims()
    found = cfg.problems() + dims.problems(data.dim, noise.dim)
    if found:
        raise ValidationError(found)
    return TrainState(cfg, data, noise, dims)


def g_pointwise_term(d, fake, form="nonsaturating"):
    """
    Generator's pointwise term, to be descended.

    saturating: (1/B) sum log(1 - D(fake)); nonsaturating: -(1/B) sum log D(fake).
    """
    p = d(fake)
    if form == "saturating":
        per_point = T.log(T.sub(1.0, p))
    elif form == "nonsaturating":
        per_point = T.neg(T.log(p))
    else:
        raise ValidationError(f"unknown generator loss form {form!r}")
    return T.reduce_sum(T.mean_over_batch(per_point))


def _halves(t):
    half = t.shape[0] // 2
    return T.Tensor(t.data[:half]), T.Tensor(t.data[half:])


def _sample(state, cfg):
    x, _ = sample_mixture(state.data, cfg.batch_size, state.data_rng)
    z = sample_noise(state.noise, cfg.batch_size, state.noise_rng)
    return x, z


def _descend(objective, store, opt, term, iteration):
    """Backpropagate an objective to be minimized and step its store."""
    value = objective.item()
    if not np.isfinite(value):
        raise TrainingAbort(term, iteration, "loss")
    T.backward(objective)
    adam_step(store, opt)
    if not store.all_finite():
        raise TrainingAbort(term, iteration, "parameters after update")
    return value


def _discriminator_phase(state, cfg, i):
    x, z = _sample(state, cfg)
    fake = state.generator(z).detach()
    objective = T.mul(cfg.lambda1, pointwise_loss(state.discriminator, x, fake))
    state.zero_all_grads()
    return -_descend(T.neg(objective), state.d_params, state.d_opt, "D loss", i)


def _adversary_phase(state, cfg, i):
    x, z = _sample(state, cfg)
    m = state.adversary
    if cfg.xi == "S":
        fake = state.generator(z).detach()
        objective = T.mul(cfg.lambda2, sample_classifier_loss(m, x, fake))
        term = "M_S loss"
    else:
        x1, x2 = _halves(x)
        z1, z2 = _halves(z)
        f1 = state.generator(z1).detach()
        f2 = state.generator(z2).detach()
        pairs = (
            two_sample_loss(m, x1, x2, True, cfg.loss_form),
            two_sample_loss(m, f1, f2, True, cfg.loss_form),
            two_sample_loss(m, x1, f2, False, cfg.loss_form),
            two_sample_loss(m, f1, x2, False, cfg.loss_form),
        )
        total = pairs[0]
        for pair in pairs[1:]:
            total = T.add(total, pair)
        objective = T.mul(cfg.lambda2 / 2.0, total)
        term = "M_2S loss"
    state.zero_all_grads()
    return -_descend(T.neg(objective), state.m_params, state.m_opt, term, i)


def _generator_phase(state, cfg, i):
    x, z = _sample(state, cfg)
    loss = None
    fake = state.generator(z) if cfg.lambda1 > 0 or cfg.xi == "S" else None
    if cfg.lambda1 > 0:
        loss = T.mul(cfg.lambda1, g_pointwise_term(state.discriminator, fake, cfg.g_loss_form))
    if cfg.xi != "gan" and cfg.lambda2 > 0:
        m = state.adversary
        if cfg.xi == "S":
            p_fake = m.predict(fake)
            dist = T.mul(cfg.lambda2, T.reduce_sum(T.log(T.sub(1.0, p_fake))))
        else:
            x1, x2 = _halves(x)
            z1, z2 = _halves(z)
            p_a = two_sample_predict(m, x1, state.generator(z2))
            p_b = two_sample_predict(m, state.generator(z1), x2)
            # both forms weigh the two mixed pairs by lambda2 / 2, as the adversary does
            if cfg.loss_form == "crossentropy":
                both = T.neg(T.add(T.log(p_a), T.log(p_b)))
            else:
                both = T.add(T.sub(1.0, T.log(p_a)), T.sub(1.0, T.log(p_b)))
            dist = T.mul(cfg.lambda2 / 2.0, T.reduce_sum(both))
        loss = dist if loss is None else T.add(loss, dist)
    state.zero_all_grads()
    return _descend(loss, state.g_params, state.g_opt, "G loss", i)


def train_step(state, cfg):
    """
    Run one iteration and return its LossRecord.

    Raises:
        TrainingAbort: a loss or parameter became non-finite
    """
    i = state.iteration + 1
    record = LossRecord(iteration=i)
    term = "D loss"
    try:
        if cfg.lambda1 > 0:
            record.loss_d = _discriminator_phase(state, cfg, i)
        term = "M loss"
        if cfg.xi != "gan" and cfg.lambda2 > 0 and i % cfg.k == 0:
            record.loss_m = _adversary_phase(state, cfg, i)
        term = "G loss"
        record.loss_g = _generator_phase(state, cfg, i)
    except NonFiniteError as e:
        raise TrainingAbort(term, i, str(e)) from e
    state.iteration = i
    return record


def run_training(cfg, data, noise=None, dims=None, callback=None):
    """
    Run cfg.iterations training iterations.

    Args:
        cfg: TrainConfig
        data: MixtureSpec of the real distribution
        noise: NoiseSpec (default: uniform on [-1, 1]^256)
        dims: NetworkDims (default: the 8-Gaussian architecture)
        callback: Optional function(state, record) called after each iteration

    Returns:
        tuple: (TrainState, LossTrace, snapshots) where snapshots maps
        iteration -> generator parameter arrays

    Raises:
        TrainingAbort: carries the partial trace and snapshots
    """
    state = init_state(cfg, data, noise, dims)
    trace = LossTrace(metadata={
        "xi": cfg.xi,
        "seed": cfg.seed,
        "g_loss_form": cfg.g_loss_form,
        "loss_form": cfg.loss_form,
        "lambda1": cfg.lambda1,
        "lambda2": cfg.lambda2,
    })
    snapshots = {}
    log.info("training xi=%s seed=%d for %d iterations", cfg.xi, cfg.seed, cfg.iterations)

    while state.iteration < cfg.iterations:
        try:
            record = train_step(state, cfg)
        except TrainingAbort as abort:
            abort.trace = trace
            abort.snapshots = snapshots
            log.error("run aborted: %s", abort)
            raise
        trace.append(record)
        if record.iteration % cfg.snapshot_every == 0 or record.iteration == cfg.iterations:
            snapshots[record.iteration] = state.g_params.state()
        if callback is not None:
            callback(state, record)

    log.info("training finished after %d iterations", state.iteration)
    return state, trace, snapshots
