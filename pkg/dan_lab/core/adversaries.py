"""
Generator and adversary networks with their losses.

The pointwise discriminator judges one point at a time. The distributional
adversaries first collapse a whole sample into a deep mean encoding (the
average of a learned per-point feature map) and then judge that vector:
the sample classifier says real vs generated, the two-sample discriminator
says whether two samples come from the same distribution.
"""

from ..errors import DimensionError, EmptyInputError, ContractError
from . import tensor as T
from .nn import init_mlp, ParamStore

# classifier heads never emit exactly 0 or 1
HEAD_CLAMP = 1e-7

LOSS_FORMS = ("crossentropy", "verbatim")


def _clamped(p):
    return T.clamp(p, HEAD_CLAMP, 1.0 - HEAD_CLAMP)


def _check_batch(x, width, who):
    x = T.as_tensor(x)
    if x.data.ndim != 2:
        raise DimensionError(f"{who}: expected a [B×{width}] batch, got shape {x.shape}")
    if x.shape[0] == 0:
        raise EmptyInputError(f"{who}: empty sample")
    if x.shape[1] != width:
        raise DimensionError(f"{who}: sample shape {x.shape} does not match input width {width}")
    return x


class GeneratorNet:
    """Maps [B×m] noise to [B×n] points."""

    def __init__(self, net):
        self.net = net

    @property
    def noise_dim(self):
        return self.net.in_dim

    @property
    def data_dim(self):
        return self.net.out_dim

    def parameters(self):
        return self.net.parameters()

    def __call__(self, z):
        return self.net(z)


class PointwiseDiscriminator:
    """Maps each point to the probability that it is real."""

    def __init__(self, net):
        if net.layers[-1][1] != "sigmoid":
            raise ContractError("pointwise discriminator needs a sigmoid output")
        self.net = net

    def parameters(self):
        return self.net.parameters()

    def __call__(self, x):
        x = _check_batch(x, self.net.in_dim, "pointwise discriminator")
        return _clamped(self.net(x))


class DeepMeanEncoder:
    """Per-point feature map phi followed by an average over the sample."""

    def __init__(self, phi):
        self.phi = phi

    @property
    def in_dim(self):
        return self.phi.in_dim

    @property
    def d_enc(self):
        return self.phi.out_dim

    def parameters(self):
        return self.phi.parameters()

    def __call__(self, sample):
        return encode(self, sample)


def encode(e, sample):
    """Deep mean encoding (1/B) sum_i phi(x_i) of a [B×n] sample, as [1×d_enc]."""
    sample = _check_batch(sample, e.in_dim, "deep mean encoder")
    return T.mean_over_batch(e.phi(sample))


class SampleClassifier:
    """psi_S applied to the deep mean encoding: real sample vs generated sample."""

    def __init__(self, encoder, head):
        if head.in_dim != encoder.d_enc:
            raise DimensionError(f"head width {head.in_dim} does not match encoding width {encoder.d_enc}")
        self.encoder = encoder
        self.head = head

    def parameters(self):
        store = ParamStore()
        store.merge("phi", self.encoder.parameters())
        store.merge("psi", self.head.parameters())
        return store

    def predict_encoding(self, eta):
        return _clamped(self.head(eta))

    def predict(self, sample):
        return self.predict_encoding(encode(self.encoder, sample))


class TwoSampleDiscriminator:
    """psi_2S applied to |eta(a) - eta(b)|: same distribution vs different."""

    def __init__(self, encoder, head):
        if head.in_dim != encoder.d_enc:
            raise DimensionError(f"head width {head.in_dim} does not match encoding width {encoder.d_enc}")
        self.encoder = encoder
        self.head = head

    def parameters(self):
        store = ParamStore()
        store.merge("phi", self.encoder.parameters())
        store.merge("psi", self.head.parameters())
        return store

    def predict(self, a, b):
        return two_sample_predict(self, a, b)


def sample_classifier_loss(m, real, fake):
    """log psi_S(eta(real)) + log(1 - psi_S(eta(fake))); the adversary ascends this."""
    p_real = m.predict(real)
    p_fake = m.predict(fake)
    return T.reduce_sum(T.add(T.log(p_real), T.log(T.sub(1.0, p_fake))))


def two_sample_predict(m, a, b):
    """Confidence in (0, 1) that samples a and b share a distribution, as [1×1]."""
    eta_a = encode(m.encoder, a)
    eta_b = encode(m.encoder, b)
    return _clamped(m.head(T.absolute(T.sub(eta_a, eta_b))))


def two_sample_loss(m, a, b, same, form="crossentropy"):
    """
    Log-likelihood of the pair label under the two-sample discriminator.

    same=True gives log p. same=False gives log(1 - p) for the cross-entropy
    form, or the literal 1 - log p for form="verbatim".
    """
    if form not in LOSS_FORMS:
        raise ContractError(f"unknown loss form '{form}'")
    p = two_sample_predict(m, a, b)
    if same:
        term = T.log(p)
    elif form == "crossentropy":
        term = T.log(T.sub(1.0, p))
    else:
        term = T.sub(1.0, T.log(p))
    return T.reduce_sum(term)


def pointwise_loss(d, real, fake):
    """(1/B) sum_i [log D(x_i) + log(1 - D(fake_i))]; the adversary ascends this."""
    real = T.as_tensor(real)
    fake = T.as_tensor(fake)
    if real.shape[0] != fake.shape[0]:
        raise DimensionError(f"real batch {real.shape} and fake batch {fake.shape} differ in size")
    per_point = T.add(T.log(d(real)), T.log(T.sub(1.0, d(fake))))
    return T.reduce_sum(T.mean_over_batch(per_point))


def build_generator(dims, out_act="none", seed=0):
    return GeneratorNet(init_mlp(dims, hidden_act="relu", out_act=out_act, seed=seed, name="generator"))


def build_discriminator(dims, seed=0):
    return PointwiseDiscriminator(init_mlp(dims, hidden_act="relu", out_act="sigmoid", seed=seed, name="discriminator"))


def build_encoder(phi_dims, seed=0):
    # relu after every trunk layer, the mean is taken on the activated features
    return DeepMeanEncoder(init_mlp(phi_dims, hidden_act="relu", out_act="relu", seed=seed, name="phi"))


def build_sample_classifier(phi_dims, head_dims, seed=0):
    encoder = build_encoder(phi_dims, seed=seed)
    head = init_mlp(head_dims, hidden_act="relu", out_act="sigmoid", seed=seed + 1, name="psi_s")
    return SampleClassifier(encoder, head)


def build_two_sample(phi_dims, head_dims, seed=0):
    encoder = build_encoder(phi_dims, seed=seed)
    head = init_mlp(head_dims, hidden_act="relu", out_act="sigmoid", seed=seed + 1, name="psi_2s")
    return TwoSampleDiscriminator(encoder, head)
