"""
Gradient weighting study for pointwise vs sample-level adversaries.

For fixed real and generated 1-D densities the limiting discriminator is
D*(x) = p_x / (p_x + p_g). Pointwise training weights each generated
point's gradient by D*'(x) / D*(x), which vanishes where the generator
misses a mode. A sample classifier instead multiplies every point's
gradient by one shared factor computed from the whole sample.
"""

from dataclasses import dataclass

import numpy as np
from scipy.special import expit, logsumexp

from ..errors import DimensionError, ValidationError, ContractError
from . import tensor as T
from .adversaries import PointwiseDiscriminator, SampleClassifier, encode
from .data import component_log_densities

DENSITY_FLOOR = 1e-300


@dataclass
class WeightingCurve:
    grid: np.ndarray
    p_x: np.ndarray
    p_g: np.ndarray
    d_star: np.ndarray
    d_star_prime: np.ndarray
    weight: np.ndarray
    flagged: np.ndarray

    def rows(self):
        for i in range(len(self.grid)):
            yield (self.grid[i], self.p_x[i], self.p_g[i], self.d_star[i], self.d_star_prime[i], self.weight[i])


CURVE_COLUMNS = ["x", "p_x", "p_g", "d_star", "d_star_prime", "weight"]


def _require_1d(spec, who):
    if spec.dim != 1:
        raise ValidationError(f"{who} must be a 1-D mixture, got dimension {spec.dim}")


def _log_density_and_score(means, variances, weights, x):
    """log p(x) and d/dx log p(x) of an (unnormalized) 1-D mixture on a grid."""
    means = np.asarray(means, dtype=np.float64).reshape(-1, 1)
    variances = np.asarray(variances, dtype=np.float64)
    log_w = np.log(np.asarray(weights, dtype=np.float64))
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    joint = component_log_densities(means, variances, x[:, None]) + log_w[None, :]
    log_p = logsumexp(joint, axis=1)
    resp = np.exp(joint - log_p[:, None])
    score = (resp * (-(x[:, None] - means[:, 0][None, :]) / variances[None, :])).sum(axis=1)
    return log_p, score


def d_star_from_densities(p_x, p_g):
    """D* = p_x / (p_x + p_g), 1/2 where both densities are negligible."""
    p_x = np.asarray(p_x, dtype=np.float64)
    p_g = np.asarray(p_g, dtype=np.float64)
    total = p_x + p_g
    flagged = (p_x < DENSITY_FLOOR) & (p_g < DENSITY_FLOOR)
    with np.errstate(invalid="ignore", divide="ignore"):
        d = np.where(flagged, 0.5, p_x / np.where(flagged, 1.0, total))
    return d, flagged


def optimal_discriminator(px, pg, x):
    """
    Limiting discriminator D*(x) for 1-D mixtures.

    Returns:
        tuple: (value in [0, 1], flagged) where flagged means both densities
        fell below DENSITY_FLOOR and the value was set to 1/2
    """
    _require_1d(px, "P_x")
    _require_1d(pg, "P_G")
    grid = np.array([float(x)])
    log_px, _ = _log_density_and_score(px.means, px.variances, px.weights, grid)
    log_pg, _ = _log_density_and_score(pg.means, pg.variances, pg.weights, grid)
    d, flagged = d_star_from_densities(np.exp(log_px), np.exp(log_pg))
    if not flagged[0]:
        # log-odds keeps precision when one density underflows
        d = expit(log_px - log_pg)
    return float(d[0]), bool(flagged[0])


def weighting_curve(px, pg, grid):
    """
    D*, its analytic derivative and the weight D*'/D* on a sorted 1-D grid.

    Uses d/dx log D* = d/dx log p_x - d/dx log(p_x + p_g), evaluated from
    component responsibilities so nothing overflows far from the modes.
    """
    _require_1d(px, "P_x")
    _require_1d(pg, "P_G")
    grid = np.asarray(grid, dtype=np.float64).reshape(-1)
    if np.any(np.diff(grid) < 0):
        raise ValidationError("grid must be sorted ascending")

    log_px, score_x = _log_density_and_score(px.means, px.variances, px.weights, grid)
    log_pg, _ = _log_density_and_score(pg.means, pg.variances, pg.weights, grid)
    both_means = list(px.means) + list(pg.means)
    both_vars = list(px.variances) + list(pg.variances)
    both_weights = list(px.weights) + list(pg.weights)
    _, score_sum = _log_density_and_score(both_means, both_vars, both_weights, grid)

    p_x = np.exp(log_px)
    p_g = np.exp(log_pg)
    _, flagged = d_star_from_densities(p_x, p_g)
    d_star = np.where(flagged, 0.5, expit(log_px - log_pg))
    weight = np.where(flagged, 0.0, score_x - score_sum)
    d_star_prime = weight * d_star
    return WeightingCurve(grid, p_x, p_g, d_star, d_star_prime, weight, flagged)


def region_ratio(curve, px, pg, radius_sigmas=3.0):
    """
    max |weight| near the missed mode over max |weight| on the covered mode's approach.

    The covered mode is the P_x component nearest to P_G's heaviest
    component, the missed mode the P_x component farthest from it. The
    approach region runs from the covered mean to the edge of the missed
    mode's neighborhood.

    Returns:
        float (NaN when the approach region carries no weight)
    """
    g_center = pg.means[int(np.argmax(pg.weights))][0]
    centers = np.array([m[0] for m in px.means])
    covered = centers[np.argmin(np.abs(centers - g_center))]
    missed_idx = int(np.argmax(np.abs(centers - g_center)))
    missed = centers[missed_idx]
    sigma = np.sqrt(px.variances[missed_idx])
    near_missed = np.abs(curve.grid - missed) <= radius_sigmas * sigma
    lo, hi = sorted((covered, missed - np.sign(missed - covered) * radius_sigmas * sigma))
    approach = (curve.grid >= lo) & (curve.grid <= hi)
    if not near_missed.any() or not approach.any():
        return float("nan")
    denom = np.max(np.abs(curve.weight[approach]))
    if denom == 0:
        return float("nan")
    return float(np.max(np.abs(curve.weight[near_missed])) / denom)


@dataclass
class GradientDecomposition:
    """
    Per-point pieces of a generator gradient and their reassembly.

    point_weights: [B×n] per-point weights (D'/D for pointwise, zeros
    otherwise); shared_factor: [1×d_enc] for the sample classifier, None for
    pointwise; contributions: [B×P] per-point gradient wrt generator
    parameters; total: their sum; autodiff: the same gradient from one
    backward pass.
    """

    mode: str
    point_weights: np.ndarray
    shared_factor: np.ndarray
    contributions: np.ndarray
    total: np.ndarray
    autodiff: np.ndarray


def _generator_grad(generator, z_row, upstream):
    """Gradient wrt generator parameters of <upstream, G(z_row)>."""
    params = generator.parameters()
    params.zero_grad()
    T.backward(generator(z_row), grad=upstream)
    grad = params.flat_grad()
    params.zero_grad()
    return grad


def batch_gradient_decomposition(generator, adversary, z, mode):
    """
    Split the generator's gradient into per-point terms.

    pointwise: loss (1/B) sum_i log D(G(z_i)); each point's contribution is
    (1/B) (D'/D)(G(z_i)) dG(z_i)/dtheta and depends on that point only.
    sample_classifier: loss log psi_S(eta(G(Z))); every contribution shares
    the factor (1/psi_S) d psi_S / d eta at the batch encoding, times
    (1/B) dphi(G(z_i))/dx dG(z_i)/dtheta.
    """
    z = T.as_tensor(z)
    if z.data.ndim != 2 or z.shape[1] != generator.noise_dim:
        raise DimensionError(f"noise batch shape {z.shape} does not match generator input {generator.noise_dim}")
    b = z.shape[0]
    params = generator.parameters()
    x = generator(z).detach()
    rows = [T.Tensor(z.data[i:i + 1]) for i in range(b)]

    if mode == "pointwise":
        if not isinstance(adversary, PointwiseDiscriminator):
            raise ContractError("pointwise mode needs a PointwiseDiscriminator")
        x_leaf = T.Tensor(x.data, requires_grad=True)
        T.backward(T.reduce_sum(T.log(adversary(x_leaf))), inputs=[x_leaf])
        weights = x_leaf.grad.copy()
        shared = None
        contributions = np.stack([_generator_grad(generator, rows[i], weights[i:i + 1] / b) for i in range(b)])
        params.zero_grad()
        loss = T.reduce_sum(T.mean_over_batch(T.log(adversary(generator(z)))))
    elif mode == "sample_classifier":
        if not isinstance(adversary, SampleClassifier):
            raise ContractError("sample_classifier mode needs a SampleClassifier")
        eta = encode(adversary.encoder, x).detach()
        eta_leaf = T.Tensor(eta.data, requires_grad=True)
        T.backward(T.reduce_sum(T.log(adversary.predict_encoding(eta_leaf))), inputs=[eta_leaf])
        shared = eta_leaf.grad.copy()
        weights = np.zeros_like(x.data)
        contributions = []
        for i in range(b):
            x_i = T.Tensor(x.data[i:i + 1], requires_grad=True)
            T.backward(adversary.encoder.phi(x_i), grad=shared / b, inputs=[x_i])
            contributions.append(_generator_grad(generator, rows[i], x_i.grad))
        contributions = np.stack(contributions)
        params.zero_grad()
        loss = T.reduce_sum(T.log(adversary.predict(generator(z))))
    else:
        raise ValidationError(f"unknown decomposition mode {mode!r}")

    T.backward(loss)
    autodiff = params.flat_grad()
    params.zero_grad()
    adversary.parameters().zero_grad()
    return GradientDecomposition(
        mode=mode,
        point_weights=weights,
        shared_factor=shared,
        contributions=contributions,
        total=contributions.sum(axis=0),
        autodiff=autodiff,
    )
