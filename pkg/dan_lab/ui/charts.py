"""Simple chart rendering using Unicode characters."""

import numpy as np


# Sparkline characters, lowest to highest
SPARK_CHARS = " ▁▂▃▄▅▆▇█"


def resample_data(data, target_width):
    """
    Fit a series to target_width points.

    Long series (loss traces run to tens of thousands of iterations) are
    averaged over equal buckets, NaN ignored; short ones are left-padded with NaN.
    """
    data = np.asarray(data, dtype=float)
    if len(data) <= target_width:
        return np.concatenate([np.full(target_width - len(data), np.nan), data])

    out = np.full(target_width, np.nan)
    for i, bucket in enumerate(np.array_split(data, target_width)):
        finite = bucket[~np.isnan(bucket)]
        if finite.size:
            out[i] = finite.mean()
    return out


def sparkline(data, width=50):
    """
    Render a whole series as a sparkline of exactly width characters.

    Args:
        data: Array of numeric values (NaN for gaps)
        width: Output width in characters

    Returns:
        str: Sparkline, blank cells where a bucket has no value
    """
    data = resample_data(data, width)
    valid = ~np.isnan(data)
    if not np.any(valid):
        return "─" * width

    lo = np.min(data[valid])
    hi = np.max(data[valid])
    if hi == lo:
        levels = np.where(valid, 4, 0)
    else:
        scaled = np.where(valid, (data - lo) / (hi - lo) * 7 + 1, 0)
        levels = np.clip(scaled.astype(int), 0, 8)
    return "".join(SPARK_CHARS[n] for n in levels)


def modes_color(captured, total):
    """Get rich color for a modes-captured count."""
    if captured is None:
        return "dim"
    if captured >= total:
        return "green"
    elif captured >= total * 0.75:
        return "yellow"
    elif captured > 1:
        return "dark_orange"
    else:
        return "red"


def format_duration(seconds):
    """Format seconds as human-readable duration."""
    if seconds < 60:
        return f"{int(seconds)}s"
    elif seconds < 3600:
        return f"{int(seconds / 60)}m{int(seconds % 60):02d}s"
    else:
        return f"{int(seconds / 3600)}h{int(seconds % 3600 / 60):02d}m"
