"""Mode-recovery metrics and the MMD diagnostic."""

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import cdist, pdist
from scipy.stats import entropy as shannon_entropy

from ..config import DEFAULT_CAPTURE_SIGMAS, DEFAULT_MIN_FRAC
from ..errors import DimensionError, EmptyInputError, ValidationError

UNASSIGNED = -1

# rows of the first sample per kernel block in mmd2_rbf
MMD_BLOCK_ROWS = 512

REPORT_COLUMNS = [
    "run_id", "seed", "iteration", "modes_captured", "entropy", "tv", "hq_fraction", "mmd2",
]


@dataclass
class EvalReport:
    """Mode coverage and quality of one set of generated points."""

    n_samples: int
    modes_captured: int
    histogram: np.ndarray
    entropy: float
    tv_to_target: float
    hq_fraction: float
    mmd2: float = float("nan")
    empty_assignment: bool = False
    meta: dict = field(default_factory=dict)

    def as_row(self, run_id="", seed="", iteration=""):
        return {
            "run_id": run_id,
            "seed": seed,
            "iteration": iteration,
            "modes_captured": self.modes_captured,
            "entropy": self.entropy,
            "tv": self.tv_to_target,
            "hq_fraction": self.hq_fraction,
            "mmd2": self.mmd2,
        }


def _points_array(points):
    data = getattr(points, "data", points)
    return np.atleast_2d(np.asarray(data, dtype=np.float64))


def assign_modes(points, spec, capture_radius_sigmas=DEFAULT_CAPTURE_SIGMAS):
    """
    Assign each point to its nearest component mean.

    A point counts only when it lies within capture_radius_sigmas standard
    deviations of that mean; otherwise it is UNASSIGNED. Ties go to the
    lowest component index.

    Returns:
        int array [N] of component indices or UNASSIGNED
    """
    x = _points_array(points)
    if x.shape[0] == 0:
        raise EmptyInputError("no points to assign")
    if x.shape[1] != spec.dim:
        raise DimensionError(f"points have dimension {x.shape[1]}, mixture has {spec.dim}")

    dist = cdist(x, spec.mean_array())
    nearest = np.argmin(dist, axis=1)
    radius = capture_radius_sigmas * np.sqrt(spec.variance_array())[nearest]
    within = dist[np.arange(len(x)), nearest] <= radius
    return np.where(within, nearest, UNASSIGNED)


def frequency_entropy(freqs):
    """Shannon entropy in nats, with 0 log 0 = 0."""
    freqs = np.asarray(freqs, dtype=np.float64)
    if freqs.sum() <= 0:
        return 0.0
    return float(shannon_entropy(freqs))


def total_variation(freqs, target):
    return float(0.5 * np.abs(np.asarray(freqs) - np.asarray(target)).sum())


def evaluate(points, spec, target_weights=None, capture_radius_sigmas=DEFAULT_CAPTURE_SIGMAS,
             capture_min_frac=DEFAULT_MIN_FRAC, reference=None, bandwidth=None):
    """
    Build an EvalReport for generated points.

    Args:
        points: [N×n] generated points
        spec: MixtureSpec whose component means define the modes
        target_weights: Target frequencies (default: the mixture weights)
        capture_radius_sigmas: Capture radius in component standard deviations
        capture_min_frac: Share of assigned points a mode needs to count as captured
        reference: Optional real sample; when given, mmd2 is filled in
        bandwidth: Kernel bandwidth for mmd2 (default: median heuristic on reference)

    Returns:
        EvalReport
    """
    x = _points_array(points)
    n = x.shape[0]
    if n < 1:
        raise EmptyInputError("evaluate needs at least one point")
    target = spec.weight_array() if target_weights is None else np.asarray(target_weights, dtype=np.float64)
    if target.shape != (spec.n_components,):
        raise DimensionError(f"target weights have shape {target.shape}, mixture has {spec.n_components} components")

    labels = assign_modes(x, spec, capture_radius_sigmas)
    assigned = labels[labels != UNASSIGNED]
    histogram = np.bincount(assigned, minlength=spec.n_components)
    n_assigned = int(histogram.sum())

    if n_assigned == 0:
        freqs = np.zeros(spec.n_components)
        modes = 0
    else:
        freqs = histogram / n_assigned
        modes = int(np.sum(freqs >= capture_min_frac))

    mmd2 = float("nan")
    if reference is not None:
        ref = _points_array(reference)
        bw = bandwidth if bandwidth is not None else median_bandwidth(ref)
        mmd2 = mmd2_rbf(x, ref, bw)

    return EvalReport(
        n_samples=n,
        modes_captured=modes,
        histogram=histogram,
        entropy=frequency_entropy(freqs),
        tv_to_target=total_variation(freqs, target),
        hq_fraction=n_assigned / n,
        mmd2=mmd2,
        empty_assignment=n_assigned == 0,
    )


def mmd2_rbf(a, b, bandwidth):
    """
    Biased (V-statistic) squared MMD with a Gaussian kernel.

    mean k(a, a) + mean k(b, b) - 2 mean k(a, b), where
    k(u, v) = exp(-|u - v|^2 / (2 bandwidth^2)); clamped at 0.
    """
    if not bandwidth > 0:
        raise ValidationError(f"bandwidth must be positive, got {bandwidth}")
    a = _points_array(a)
    b = _points_array(b)
    if a.shape[0] == 0 or b.shape[0] == 0:
        raise EmptyInputError("mmd2 needs two non-empty samples")
    if a.shape[1] != b.shape[1]:
        raise DimensionError(f"samples have shapes {a.shape} and {b.shape}")

    scale = 2.0 * bandwidth ** 2
    k_aa = _kernel_mean(a, a, scale)
    k_bb = _kernel_mean(b, b, scale)
    k_ab = _kernel_mean(a, b, scale)
    return max(k_aa + k_bb - 2.0 * k_ab, 0.0)


def _kernel_mean(a, b, scale):
    """Mean Gaussian kernel value over all (a, b) pairs, one row block at a time."""
    total = 0.0
    for start in range(0, a.shape[0], MMD_BLOCK_ROWS):
        block = cdist(a[start:start + MMD_BLOCK_ROWS], b, "sqeuclidean")
        total += float(np.exp(-block / scale).sum())
    return total / (a.shape[0] * b.shape[0])


def median_bandwidth(sample):
    """Median pairwise distance of a sample (falls back to 1 for degenerate samples)."""
    x = _points_array(sample)
    if x.shape[0] < 2:
        return 1.0
    med = float(np.median(pdist(x)))
    return med if med > 0 else 1.0


def summarize(rows, metrics=("modes_captured", "entropy", "tv", "hq_fraction", "mmd2")):
    """
    Median, min and max of each metric over rows (dicts), ignoring NaN.

    Returns:
        dict: metric -> (median, min, max), NaNs when no row has a value
    """
    out = {}
    for metric in metrics:
        values = np.array([float(r[metric]) for r in rows if r.get(metric) not in (None, "")], dtype=np.float64)
        values = values[~np.isnan(values)]
        if len(values) == 0:
            out[metric] = (float("nan"),) * 3
        else:
            out[metric] = (float(np.median(values)), float(values.min()), float(values.max()))
    return out
