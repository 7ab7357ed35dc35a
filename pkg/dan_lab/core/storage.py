"""Run directories, parameter checkpoints and CSV outputs."""

import csv
import os
import struct
from collections import OrderedDict
from datetime import datetime
from pathlib import Path

import numpy as np

from .. import config
from ..errors import CheckpointError

CHECKPOINT_MAGIC = b"DANLABCK"
CHECKPOINT_VERSION = 1


def output_root(override=None):
    """Output root: explicit override, then $DAN_LAB_OUT, then the default."""
    if override:
        return Path(override)
    env = os.environ.get(config.OUTPUT_ENV_VAR)
    if env:
        return Path(env)
    return Path(config.DEFAULT_OUTPUT_ROOT)


def ensure_dir(path):
    """Create a directory (and parents) if it doesn't exist."""
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    return path


def make_run_dir(root, name, seed):
    """Create a fresh run directory named after profile, seed and start time."""
    stamp = datetime.now().strftime("%Y%m%d-%H%M%S")
    base = ensure_dir(root) / f"{name}-seed{seed}-{stamp}"
    run_dir = base
    n = 1
    while run_dir.exists():
        run_dir = base.with_name(f"{base.name}-{n}")
        n += 1
    return ensure_dir(run_dir)


def snapshot_path(run_dir, iteration):
    return Path(run_dir) / "snapshots" / f"generator-{iteration:07d}.ckpt"


def list_snapshots(run_dir):
    """Snapshot files of a run, as (iteration, path) sorted by iteration."""
    snap_dir = Path(run_dir) / "snapshots"
    if not snap_dir.exists():
        return []
    found = []
    for path in snap_dir.glob("generator-*.ckpt"):
        try:
            found.append((int(path.stem.split("-")[-1]), path))
        except ValueError:
            continue
    return sorted(found)


def save_checkpoint(path, arrays, seed, name):
    """
    Write named parameters to a versioned binary checkpoint.

    Layout (little-endian): magic, format version (u32), creation seed (u64),
    network name, parameter count (u32), then per parameter its name, number
    of axes (u32), extents (u64 each) and float64 values in row-major order.
    Strings are a u32 byte length followed by UTF-8 bytes.
    """
    path = Path(path)
    ensure_dir(path.parent)

    def text(s):
        raw = s.encode("utf-8")
        return struct.pack("<I", len(raw)) + raw

    parts = [CHECKPOINT_MAGIC, struct.pack("<IQ", CHECKPOINT_VERSION, int(seed) & 0xFFFFFFFFFFFFFFFF), text(name)]
    parts.append(struct.pack("<I", len(arrays)))
    for pname, values in arrays.items():
        values = np.ascontiguousarray(values, dtype="<f8")
        parts.append(text(pname))
        parts.append(struct.pack("<I", values.ndim))
        parts.append(struct.pack(f"<{values.ndim}Q", *values.shape))
        parts.append(values.tobytes(order="C"))
    path.write_bytes(b"".join(parts))
    return path


def load_checkpoint(path):
    """
    Read a checkpoint written by save_checkpoint.

    Returns:
        tuple: (header dict with version/seed/name, OrderedDict name -> array)
    """
    try:
        raw = Path(path).read_bytes()
    except OSError as e:
        raise CheckpointError(f"cannot read checkpoint {path}: {e}") from e

    pos = 0

    def take(n):
        nonlocal pos
        if pos + n > len(raw):
            raise CheckpointError(f"checkpoint {path} is truncated")
        chunk = raw[pos:pos + n]
        pos += n
        return chunk

    def text():
        (n,) = struct.unpack("<I", take(4))
        return take(n).decode("utf-8")

    if take(len(CHECKPOINT_MAGIC)) != CHECKPOINT_MAGIC:
        raise CheckpointError(f"{path} is not a dan-lab checkpoint")
    version, seed = struct.unpack("<IQ", take(12))
    if version != CHECKPOINT_VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    header = {"version": version, "seed": seed, "name": text()}
    (count,) = struct.unpack("<I", take(4))
    arrays = OrderedDict()
    for _ in range(count):
        pname = text()
        (ndim,) = struct.unpack("<I", take(4))
        shape = struct.unpack(f"<{ndim}Q", take(8 * ndim))
        n_values = int(np.prod(shape)) if ndim else 1
        arrays[pname] = np.frombuffer(take(8 * n_values), dtype="<f8").reshape(shape).astype(np.float64)
    if pos != len(raw):
        raise CheckpointError(f"checkpoint {path} has trailing bytes")
    return header, arrays


def _cell(value):
    if value is None:
        return ""
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_csv(path, columns, rows):
    """
    Write rows (dicts or sequences) as UTF-8 CSV with LF line endings.

    None becomes an empty cell; floats are written with full precision.
    """
    path = Path(path)
    ensure_dir(path.parent)
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            if isinstance(row, dict):
                row = [row.get(c) for c in columns]
            writer.writerow([_cell(v) for v in row])
    return path


def read_csv(path):
    """Read a CSV written by write_csv into a list of dicts (string cells)."""
    with open(path, "r", encoding="utf-8", newline="") as f:
        return list(csv.DictReader(f))


TRACE_COLUMNS = ["iteration", "loss_d", "loss_m", "loss_g"]


def write_trace(path, trace):
    """Loss trace CSV: one row per iteration, empty loss_m when not updated."""
    rows = [(r.iteration, r.loss_d, r.loss_m, r.loss_g) for r in trace.records]
    return write_csv(path, TRACE_COLUMNS, rows)
