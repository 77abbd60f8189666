"""Adversarial training with FCN, RBF and RBF-cluster discriminators.

The discriminator produces a raw score which is squashed by a logistic
sigmoid into D(x) in (0, 1). Losses:

    L_D = -mean log D(x) - mean log(1 - D(G(z)))
    L_G =  mean log(1 - D(G(z)))

with D clamped to [eps, 1 - eps] inside the logarithms.
"""
import time
from dataclasses import asdict, dataclass, field, fields, replace

import numpy as np

from .arch import parse_architecture
from .datasets import V_MIN, Dataset, NormStats, burgers_solution
from .errors import (
    ConfigError,
    ContractError,
    DimensionError,
    DivergenceError,
    NonFiniteError,
    ParameterError,
)
from .kernels import KernelKind
from .layers import DenseLayer, RbfClusterLayer, RbfOutput, sigmoid
from .metrics import mse
from .tensor import Adam, SeededRng, check_finite

MODES = ("gan", "cgan")
DISCRIMINATORS = ("fcn", "rbf", "rbfc")

# sub-stream keys of the config seed
_INIT, _SHUFFLE, _NOISE, _EVAL = 1, 2, 3, 4


class Network:
    """Ordered stack of layers with a role tag."""

    def __init__(self, layers, role):
        self.layers = list(layers)
        self.role = role
        for a, b in zip(self.layers, self.layers[1:]):
            if a.output_dim != b.input_dim:
                raise DimensionError(f"layer output {a.output_dim} does not feed layer input {b.input_dim}")

    @property
    def input_dim(self):
        return self.layers[0].input_dim

    @property
    def output_dim(self):
        return self.layers[-1].output_dim

    def forward(self, x):
        caches = []
        for layer in self.layers:
            x, c = layer.forward(x)
            caches.append(c)
        return x, caches

    def __call__(self, x):
        return self.forward(x)[0]

    def backward(self, caches, dy):
        grads = {}
        for k in range(len(self.layers) - 1, -1, -1):
            dy, g = self.layers[k].backward(caches[k], dy)
            for name, arr in g.items():
                grads[f"{k}.{name}"] = arr
        return dy, grads

    def named_params(self):
        return [(f"{k}.{name}", arr) for k, layer in enumerate(self.layers) for name, arr in layer.params.items()]

    def post_update(self):
        for layer in self.layers:
            layer.post_update()


def build_network(spec, role, rng, discriminator="fcn", input_dim=None, freeze_lambdas=False):
    """Instantiate a network from an :class:`~rbfgan.arch.ArchSpec`.

    ``input_dim`` overrides the spec's input width (the generator of a
    conditional GAN also receives the condition).
    """
    n_in = spec.input_dim if input_dim is None else input_dim
    if role == "discriminator" and discriminator != "fcn":
        if discriminator == "rbfc":
            if not spec.clusters:
                raise ConfigError(f"RBF-cluster discriminator needs cluster sizes, got {spec.text!r}")
            layer = RbfClusterLayer.init(spec.clusters, n_in, rng, freeze_lambdas=freeze_lambdas)
        elif discriminator == "rbf":
            if spec.clusters or len(spec.hidden) != 1:
                raise ConfigError(f"RBF discriminator has exactly one hidden layer, got {spec.text!r}")
            layer = RbfOutput.init(spec.hidden[0], n_in, rng, KernelKind.GAUSSIAN)
        else:
            raise ConfigError(f"unknown discriminator kind {discriminator!r}")
        return Network([layer], role)
    if spec.clusters:
        raise ConfigError(f"cluster sizes need the rbfc discriminator, got {spec.text!r}")
    dims = (n_in, *spec.hidden, spec.output_dim)
    layers = []
    for k in range(len(dims) - 1):
        act = "relu" if k < len(dims) - 2 else "linear"
        layers.append(DenseLayer.init(dims[k], dims[k + 1], act, rng))
    return Network(layers, role)


@dataclass
class GanConfig:
    mode: str = "gan"
    discriminator: str = "rbfc"
    generator_arch: str = "G(62,128*2,4)"
    discriminator_arch: str = "D(4,(42,43,43),1)"
    regressor_arch: str = "F(3,32*5,1)"
    noise_dim: int = 62
    learning_rate: float = 1e-4
    batch_size: int = 128
    epochs: int = 2000
    seed: int = 0
    d_steps: int = 1
    clamp_eps: float = 1e-7
    eval_draws: int = 1
    eval_samples: int = 0
    freeze_lambdas: bool = False

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.discriminator not in DISCRIMINATORS:
            raise ConfigError(f"discriminator must be one of {DISCRIMINATORS}, got {self.discriminator!r}")
        for k in ("noise_dim", "batch_size", "d_steps", "eval_draws"):
            if int(getattr(self, k)) < 1:
                raise ConfigError(f"{k} must be positive")
        if self.epochs < 0 or self.eval_samples < 0 or self.seed < 0:
            raise ConfigError("epochs, eval_samples and seed must be non-negative")
        if not 0.0 < self.clamp_eps < 0.1:
            raise ConfigError(f"clamp_eps must lie in (0, 0.1), got {self.clamp_eps}")
        if not self.learning_rate > 0:
            raise ConfigError("learning_rate must be positive")

    def to_mapping(self):
        return {k: _fmt_value(v) for k, v in asdict(self).items()}

    @classmethod
    def from_mapping(cls, kv):
        kwargs = {}
        for f in fields(cls):
            if f.name in kv:
                kwargs[f.name] = _parse_value(f.type, kv[f.name], f.name)
        return cls(**kwargs)


def _fmt_value(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


def _parse_value(typ, text, name):
    text = str(text).strip()
    try:
        if typ in (bool, "bool"):
            low = text.lower()
            if low not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError
            return low in ("true", "1", "yes")
        if typ in (int, "int"):
            return int(text)
        if typ in (float, "float"):
            return float(text)
    except ValueError:
        raise ConfigError(f"invalid value {text!r} for {name}") from None
    return text


@dataclass
class TrainingTrace:
    epoch: list = field(default_factory=list)
    loss_d: list = field(default_factory=list)
    loss_g: list = field(default_factory=list)
    val_mse: list = field(default_factory=list)
    wall_ms: list = field(default_factory=list)

    def append(self, epoch, loss_d, loss_g, val_mse, wall_ms):
        if self.epoch and epoch <= self.epoch[-1]:
            raise ParameterError("trace epochs must increase")
        self.epoch.append(int(epoch))
        self.loss_d.append(float(loss_d))
        self.loss_g.append(float(loss_g))
        self.val_mse.append(float(val_mse))
        self.wall_ms.append(float(wall_ms))

    def __len__(self):
        return len(self.epoch)

    def rows(self, timing=False):
        for i in range(len(self)):
            row = [str(self.epoch[i]), _fmt_value(self.loss_d[i]), _fmt_value(self.loss_g[i]),
                   _fmt_value(self.val_mse[i])]
            if timing:
                row.append(_fmt_value(self.wall_ms[i]))
            yield row

    def to_csv(self, path, timing=False):
        """Write the trace; wall-clock is excluded unless ``timing`` so reruns are byte-identical."""
        header = ["epoch", "loss_d", "loss_g", "val_mse"] + (["wall_ms"] if timing else [])
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(",".join(header) + "\n")
            for row in self.rows(timing):
                fh.write(",".join(row) + "\n")

    @classmethod
    def from_csv(cls, path):
        tr = cls()
        with open(path, encoding="utf-8") as fh:
            header = fh.readline().strip().split(",")
            for line in fh:
                cells = dict(zip(header, line.strip().split(",")))
                tr.append(int(cells["epoch"]), float(cells["loss_d"]), float(cells["loss_g"]),
                          float(cells["val_mse"]), float(cells.get("wall_ms", "nan")))
        return tr


# ---------------------------------------------------------------- losses

def _clamped(p, eps, what):
    p = np.asarray(p, dtype=np.float64).ravel()
    check_finite(p, what)
    if p.size == 0:
        raise DimensionError(f"{what} is empty")
    if (p < 0).any() or (p > 1).any():
        raise ContractError(f"{what} must lie in [0, 1]")
    return np.clip(p, eps, 1.0 - eps)


def d_loss(d_real, d_fake, eps=1e-7):
    r = _clamped(d_real, eps, "D(x)")
    f = _clamped(d_fake, eps, "D(G(z))")
    return float(-np.mean(np.log(r)) - np.mean(np.log1p(-f)))


def g_loss(d_fake, eps=1e-7):
    f = _clamped(d_fake, eps, "D(G(z))")
    return float(np.mean(np.log1p(-f)))


def d_loss_raw(raw_real, raw_fake, eps=1e-7):
    """L_D from raw scores and its gradient w.r.t. each raw score."""
    pr, pf = sigmoid(raw_real), sigmoid(raw_fake)
    loss = d_loss(pr, pf, eps)
    live_r = (pr > eps) & (pr < 1.0 - eps)
    live_f = (pf > eps) & (pf < 1.0 - eps)
    gr = np.where(live_r, -(1.0 - pr), 0.0) / pr.shape[0]
    gf = np.where(live_f, pf, 0.0) / pf.shape[0]
    return loss, gr, gf


def g_loss_raw(raw_fake, eps=1e-7):
    pf = sigmoid(raw_fake)
    loss = g_loss(pf, eps)
    live = (pf > eps) & (pf < 1.0 - eps)
    return loss, np.where(live, -pf, 0.0) / pf.shape[0]


# ---------------------------------------------------------------- evaluation

class BurgersEvaluator:
    """Reference u from the exact solution at generated (t, x, v).

    Generated design values are clipped into ``bounds`` (column -> (lo, hi))
    before the solution is evaluated.
    """

    def __init__(self, family="hump", bounds=None):
        self.family = family
        self.bounds = dict(bounds or {})

    def compare(self, rows):
        rows = np.asarray(rows, dtype=np.float64)
        t, x, v = rows[:, 0].copy(), rows[:, 1].copy(), rows[:, 2].copy()
        for col, arr in (("t", t), ("x", x), ("v", v)):
            if col in self.bounds:
                lo, hi = self.bounds[col]
                np.clip(arr, lo, hi, out=arr)
        np.maximum(t, 0.0, out=t)
        np.maximum(v, V_MIN, out=v)
        return rows[:, 3:4], np.asarray(burgers_solution(x, t, v, self.family)).reshape(-1, 1)


@dataclass
class GanModel:
    """Trained networks plus everything needed to generate physical data."""

    config: GanConfig
    networks: dict
    stats: NormStats
    design_columns: list
    response_columns: list
    schema: str = "custom"

    @property
    def generator(self):
        return self.networks.get("generator")

    @property
    def discriminator(self):
        return self.networks.get("discriminator")

    @property
    def regressor(self):
        return self.networks.get("regressor")

    @property
    def n_design(self):
        return len(self.design_columns)

    def eval_noise(self, n):
        return SeededRng(self.config.seed).child(_EVAL).uniform(self.config.eval_draws * n, self.config.noise_dim)

    def generate(self, rng, n):
        """n physical rows from the unconditional generator."""
        return self.stats.denormalize(generate(self.generator, rng, n))

    def generate_conditional(self, rng, conditions, draws=None, noise=None):
        """Physical responses at physical ``conditions``, averaged over noise draws."""
        draws = self.config.eval_draws if draws is None else draws
        cond = np.asarray(conditions, dtype=np.float64)
        if cond.ndim != 2 or cond.shape[1] != self.n_design:
            raise DimensionError(f"conditions need {self.n_design} columns, got shape {cond.shape}")
        dstats = self.stats.select(self.design_columns)
        rstats = self.stats.select(self.response_columns)
        out = generate_conditional(self.generator, rng, dstats.normalize(cond), draws,
                                   self.config.noise_dim, noise=noise)
        return rstats.denormalize(out)

    def predict(self, design):
        dstats = self.stats.select(self.design_columns)
        rstats = self.stats.select(self.response_columns)
        return rstats.denormalize(self.regressor(dstats.normalize(np.asarray(design, dtype=np.float64))))

    def validation_pairs(self, validation):
        """(predicted, actual) physical responses used for the per-epoch validation MSE."""
        if "regressor" in self.networks:
            return self.predict(validation.design), validation.responses
        if self.config.mode == "cgan":
            noise = self.eval_noise(validation.n_rows)
            pred = self.generate_conditional(None, validation.design, noise=noise)
            return pred, validation.responses
        n = self.config.eval_samples
        rows = self.stats.denormalize(self.generator(self.eval_noise(n)))
        return validation.compare(rows)

    def validation_mse(self, validation):
        return mse(*self.validation_pairs(validation))


def generate(generator, rng, n):
    """n rows of raw (normalized-space) generator output for U(0,1) noise."""
    if n < 1:
        raise ParameterError("n must be positive")
    return generator(rng.uniform(n, generator.input_dim))


def generate_conditional(generator, rng, conditions, draws, noise_dim, noise=None):
    """Generator output at normalized ``conditions`` averaged over ``draws`` noise samples."""
    n, d = conditions.shape
    if generator.input_dim != noise_dim + d:
        raise DimensionError(f"generator takes {generator.input_dim} inputs, noise {noise_dim} + condition {d}")
    if noise is None:
        noise = rng.uniform(draws * n, noise_dim)
    acc = None
    for k in range(draws):
        out = generator(np.hstack([noise[k * n:(k + 1) * n], conditions]))
        acc = out if acc is None else acc + out
    return acc / draws


# ---------------------------------------------------------------- training

def _check_arches(config, n_design, n_response):
    gspec = parse_architecture(config.generator_arch)
    dspec = parse_architecture(config.discriminator_arch)
    if gspec.role != "G" or dspec.role != "D":
        raise ConfigError("generator_arch must be G(...) and discriminator_arch D(...)")
    if gspec.input_dim != config.noise_dim:
        raise ConfigError(f"generator input {gspec.input_dim} != noise_dim {config.noise_dim}")
    if config.mode == "gan":
        g_out, d_in, g_in = n_design + n_response, n_design + n_response, config.noise_dim
    else:
        g_out, d_in, g_in = n_response, n_design + n_response, config.noise_dim + n_design
    if gspec.output_dim != g_out:
        raise ConfigError(f"generator output {gspec.output_dim} != data dimension {g_out}")
    if dspec.input_dim != d_in:
        raise ConfigError(f"discriminator input {dspec.input_dim} != {d_in}")
    if bool(dspec.clusters) != (config.discriminator == "rbfc"):
        raise ConfigError(f"discriminator kind {config.discriminator!r} does not match {dspec.text!r}")
    return gspec, dspec, g_in


def build_gan_networks(config, n_design, n_response, rng):
    gspec, dspec, g_in = _check_arches(config, n_design, n_response)
    gen = build_network(gspec, "generator", rng, input_dim=g_in)
    disc = build_network(dspec, "discriminator", rng, config.discriminator,
                         freeze_lambdas=config.freeze_lambdas)
    return {"generator": gen, "discriminator": disc}


def _checked_validation(model, validation, epoch):
    try:
        val = model.validation_mse(validation)
    except NonFiniteError as exc:
        raise DivergenceError(f"validation failed at epoch {epoch}: {exc}") from None
    if not np.isfinite(val):
        raise DivergenceError(f"non-finite validation error at epoch {epoch}")
    return val


def _batches(perm, size):
    for start in range(0, perm.size, size):
        yield perm[start:start + size]


def train(config, train_set, validation, stats=None, ranges=None, callback=None):
    """Alternating D/G training; returns ``(GanModel, TrainingTrace)``.

    ``validation`` is a held-out :class:`Dataset` for ``mode="cgan"`` or an
    evaluator with a ``compare(rows) -> (predicted, actual)`` method (such
    as :class:`BurgersEvaluator`) for ``mode="gan"``.
    """
    if train_set.n_rows < 1:
        raise ParameterError("training set is empty")
    if stats is None:
        stats = NormStats.from_dataset(train_set, ranges)
    if config.mode == "gan" and config.eval_samples == 0:
        config = replace(config, eval_samples=train_set.n_rows)
    n_design, n_resp = train_set.n_design, len(train_set.response_columns)
    root = SeededRng(config.seed)
    nets = build_gan_networks(config, n_design, n_resp, root.child(_INIT))
    model = GanModel(config, nets, stats, train_set.design_columns, train_set.response_columns,
                     train_set.schema)
    gen, disc = nets["generator"], nets["discriminator"]
    shuffle_rng, noise_rng = root.child(_SHUFFLE), root.child(_NOISE)
    opt_d, opt_g = Adam(config.learning_rate), Adam(config.learning_rate)
    real_all = stats.normalize(train_set.data)
    eps = config.clamp_eps
    trace = TrainingTrace()
    n = train_set.n_rows

    def step(idx):
        real = real_all[idx]
        m = idx.size
        cond = real[:, :n_design] if config.mode == "cgan" else None
        for _ in range(config.d_steps):
            z = noise_rng.uniform(m, config.noise_dim)
            fake = gen(z if cond is None else np.hstack([z, cond]))
            if cond is not None:
                fake = np.hstack([cond, fake])
            # real and fake rows share one forward pass
            raw, cache = disc.forward(np.vstack([real, fake]))
            ld, gr, gf = d_loss_raw(raw[:m], raw[m:], eps)
            _, grads = disc.backward(cache, np.vstack([gr, gf]))
            opt_d.step(disc.named_params(), grads)
            disc.post_update()
        z = noise_rng.uniform(m, config.noise_dim)
        g_out, g_cache = gen.forward(z if cond is None else np.hstack([z, cond]))
        d_in = g_out if cond is None else np.hstack([cond, g_out])
        raw, cache = disc.forward(d_in)
        lg, gf = g_loss_raw(raw, eps)
        dx, _ = disc.backward(cache, gf)
        if cond is not None:
            dx = dx[:, n_design:]
        _, ggrads = gen.backward(g_cache, dx)
        opt_g.step(gen.named_params(), ggrads)
        return ld, lg

    for epoch in range(config.epochs):
        t_start = time.perf_counter()
        ld_sum = lg_sum = 0.0
        n_batches = 0
        for b, idx in enumerate(_batches(shuffle_rng.permutation(n), config.batch_size)):
            try:
                ld, lg = step(idx)
            except NonFiniteError as exc:
                raise DivergenceError(f"training diverged at epoch {epoch}, batch {b}: {exc}") from None
            ld_sum += ld
            lg_sum += lg
            n_batches += 1
        val = _checked_validation(model, validation, epoch)
        trace.append(epoch, ld_sum / n_batches, lg_sum / n_batches, val,
                     (time.perf_counter() - t_start) * 1e3)
        if callback is not None:
            callback(epoch, trace)
    return model, trace


def train_regressor(config, train_set, validation, stats=None):
    """Supervised FCN baseline trained on mean squared row error."""
    if train_set.n_rows < 1:
        raise ParameterError("training set is empty")
    if stats is None:
        stats = NormStats.from_dataset(train_set)
    spec = parse_architecture(config.regressor_arch)
    n_design, n_resp = train_set.n_design, len(train_set.response_columns)
    if spec.role != "F" or spec.input_dim != n_design or spec.output_dim != n_resp:
        raise ConfigError(f"regressor_arch must be F({n_design},...,{n_resp}), got {config.regressor_arch!r}")
    root = SeededRng(config.seed)
    net = build_network(spec, "regressor", root.child(_INIT))
    model = GanModel(config, {"regressor": net}, stats, train_set.design_columns,
                     train_set.response_columns, train_set.schema)
    shuffle_rng = root.child(_SHUFFLE)
    opt = Adam(config.learning_rate)
    data = stats.normalize(train_set.data)
    x_all, y_all = data[:, :n_design], data[:, n_design:]
    trace = TrainingTrace()
    n = train_set.n_rows
    for epoch in range(config.epochs):
        t_start = time.perf_counter()
        loss_sum, n_batches = 0.0, 0
        for b, idx in enumerate(_batches(shuffle_rng.permutation(n), config.batch_size)):
            pred, cache = net.forward(x_all[idx])
            diff = pred - y_all[idx]
            loss = float(np.mean(np.sum(diff * diff, axis=1)))
            if not np.isfinite(loss):
                raise DivergenceError(f"non-finite regression loss at epoch {epoch}, batch {b}")
            _, grads = net.backward(cache, 2.0 * diff / idx.size)
            try:
                opt.step(net.named_params(), grads)
            except NonFiniteError as exc:
                raise DivergenceError(f"training diverged at epoch {epoch}, batch {b}: {exc}") from None
            loss_sum += loss
            n_batches += 1
        val = _checked_validation(model, validation, epoch)
        trace.append(epoch, loss_sum / n_batches, float("nan"), val, (time.perf_counter() - t_start) * 1e3)
    return model, trace


def make_burgers_evaluator(dataset, family=None):
    """Evaluator for a Burgers' dataset clipped to the dataset's design box."""
    family = family or dataset.metadata.get("family", "hump")
    bounds = {c: (float(dataset.column(c).min()), float(dataset.column(c).max())) for c in ("t", "x", "v")}
    return BurgersEvaluator(family, bounds)


def is_dataset(obj):
    return isinstance(obj, Dataset)
