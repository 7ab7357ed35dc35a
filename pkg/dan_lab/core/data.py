"""Synthetic distributions: Gaussian mixtures and the latent noise source."""

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from ..errors import EmptyInputError, ValidationError, DimensionError
from .tensor import Tensor

WEIGHT_TOLERANCE = 1e-12


@dataclass(frozen=True)
class MixtureSpec:
    """
    Isotropic Gaussian mixture.

    means[j] is the mean of component j, variances[j] its per-coordinate
    variance and weights[j] its mixing weight.
    """

    means: tuple
    variances: tuple
    weights: tuple

    def __post_init__(self):
        object.__setattr__(self, "means", tuple(tuple(float(c) for c in m) for m in self.means))
        object.__setattr__(self, "variances", tuple(float(v) for v in self.variances))
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))

        problems = []
        k = len(self.means)
        if k == 0:
            problems.append("mixture needs at least one component")
        if len(self.variances) != k or len(self.weights) != k:
            problems.append(
                f"got {k} means, {len(self.variances)} variances and {len(self.weights)} weights"
            )
        if k and len({len(m) for m in self.means}) != 1:
            problems.append("all component means must have the same dimension")
        if k and len(self.means[0]) == 0:
            problems.append("mixture dimension must be at least 1")
        if any(not v > 0 for v in self.variances):
            problems.append("all variances must be positive")
        if any(not w > 0 for w in self.weights):
            problems.append("all weights must be positive")
        if self.weights and abs(sum(self.weights) - 1.0) > WEIGHT_TOLERANCE:
            problems.append(f"weights sum to {sum(self.weights)!r}, expected 1")
        if problems:
            raise ValidationError(problems)

    @property
    def dim(self):
        return len(self.means[0])

    @property
    def n_components(self):
        return len(self.means)

    def mean_array(self):
        return np.array(self.means, dtype=np.float64)

    def variance_array(self):
        return np.array(self.variances, dtype=np.float64)

    def weight_array(self):
        return np.array(self.weights, dtype=np.float64)

    def to_dict(self):
        return {
            "means": [list(m) for m in self.means],
            "variances": list(self.variances),
            "weights": list(self.weights),
        }

    @classmethod
    def from_dict(cls, d):
        return cls(means=d["means"], variances=d["variances"], weights=d["weights"])


@dataclass(frozen=True)
class NoiseSpec:
    """Uniform latent noise on [-1, 1]^dim."""

    dim: int = 256

    def __post_init__(self):
        if int(self.dim) < 1:
            raise ValidationError(f"noise dimension must be at least 1, got {self.dim}")
        object.__setattr__(self, "dim", int(self.dim))

    def to_dict(self):
        return {"dim": self.dim, "distribution": "uniform"}

    @classmethod
    def from_dict(cls, d):
        if d.get("distribution", "uniform") != "uniform":
            raise ValidationError(f"noise.distribution must be 'uniform', got {d['distribution']!r}")
        return cls(dim=d["dim"])


def ring_mixture(k=8, radius=2.0, variance=0.01):
    """
    K equal-weight 2-D Gaussians with means equally spaced on a circle.

    Component j sits at angle 2*pi*j/K, so component 0 is at (radius, 0).
    """
    problems = []
    if int(k) < 1:
        problems.append(f"K must be at least 1, got {k}")
    if radius < 0:
        problems.append(f"radius must be non-negative, got {radius}")
    if not variance > 0:
        problems.append(f"variance must be positive, got {variance}")
    if problems:
        raise ValidationError(problems)

    k = int(k)
    angles = 2.0 * np.pi * np.arange(k) / k
    means = np.stack([radius * np.cos(angles), radius * np.sin(angles)], axis=1)
    # exact zeros where cos/sin should vanish, so symmetric modes compare equal
    means[np.abs(means) < 1e-12 * max(radius, 1.0)] = 0.0
    return MixtureSpec(means=means.tolist(), variances=[variance] * k, weights=[1.0 / k] * k)


def sample_mixture(spec, batch_size, rng):
    """
    Draw points from a mixture.

    Args:
        spec: MixtureSpec
        batch_size: Number of points (at least 1)
        rng: numpy Generator

    Returns:
        tuple: (points Tensor [B×n], labels int array [B]); labels are for
        evaluation only
    """
    if batch_size < 1:
        raise EmptyInputError(f"batch size must be at least 1, got {batch_size}")
    labels = rng.choice(spec.n_components, size=batch_size, p=spec.weight_array())
    scale = np.sqrt(spec.variance_array()[labels])[:, None]
    points = spec.mean_array()[labels] + scale * rng.standard_normal((batch_size, spec.dim))
    return Tensor(points), labels


def sample_noise(spec, batch_size, rng):
    """I.i.d. uniform noise on [-1, 1]^m as a [B×m] tensor."""
    if batch_size < 1:
        raise EmptyInputError(f"batch size must be at least 1, got {batch_size}")
    return Tensor(rng.uniform(-1.0, 1.0, size=(batch_size, spec.dim)))


def component_log_densities(means, variances, x):
    """
    log N(x; mean_j, var_j I) for each point and component.

    Args:
        means: [K×n] array
        variances: [K] array
        x: [N×n] array

    Returns:
        [N×K] array
    """
    means = np.asarray(means, dtype=np.float64)
    variances = np.asarray(variances, dtype=np.float64)
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    if x.shape[1] != means.shape[1]:
        raise DimensionError(f"points have dimension {x.shape[1]}, mixture has {means.shape[1]}")
    n = means.shape[1]
    sq = ((x[:, None, :] - means[None, :, :]) ** 2).sum(axis=2)
    return -0.5 * sq / variances[None, :] - 0.5 * n * np.log(2.0 * np.pi * variances[None, :])


def unnormalized_log_density(means, variances, weights, x):
    """log of sum_j w_j N(x; mean_j, var_j I); weights need not sum to 1."""
    log_w = np.log(np.asarray(weights, dtype=np.float64))
    return logsumexp(component_log_densities(means, variances, x) + log_w[None, :], axis=1)


def log_density(spec, x):
    """Mixture log-density at each row of x."""
    return unnormalized_log_density(spec.mean_array(), spec.variance_array(), spec.weight_array(), x)


def density(spec, x):
    """Exact mixture density at a single point."""
    x = np.asarray(x, dtype=np.float64).reshape(1, -1)
    return float(np.exp(log_density(spec, x)[0]))
