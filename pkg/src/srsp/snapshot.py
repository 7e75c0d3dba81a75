"""Binary field snapshots with a one-line JSON header.

Layout::

    {"format": "srsp-snapshot", "version": 1, "dim": ..., ...}\\n
    <K * N^n complex values, interleaved re/im float64 little-endian, row-major>
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .spectral import Grid
from .state import MixedState

FORMAT = "srsp-snapshot"
VERSION = 1
DTYPE = "<c16"


class SnapshotError(ValueError):
    pass


def write_snapshot(state: MixedState, path, time: float = 0.0, config_digest: str = "") -> None:
    grid = state.grid
    payload = np.ascontiguousarray(state.psi, dtype=DTYPE).tobytes()
    header = {
        "format": FORMAT,
        "version": VERSION,
        "dim": grid.dim,
        "points": grid.points,
        "box_length": grid.box_length,
        "K": state.K,
        "weights": state.weights.tolist(),
        "time": float(time),
        "config_digest": config_digest,
        "dtype": DTYPE,
        "payload_bytes": len(payload),
    }
    with open(path, "wb") as fh:
        fh.write(json.dumps(header).encode("utf-8") + b"\n")
        fh.write(payload)


def read_snapshot_with_header(path) -> tuple[dict, MixedState]:
    raw = Path(path).read_bytes()
    end = raw.find(b"\n")
    if end < 0:
        raise SnapshotError(f"{path}: missing header line")
    try:
        header = json.loads(raw[:end])
    except json.JSONDecodeError as exc:
        raise SnapshotError(f"{path}: bad header: {exc}") from None
    if header.get("format") != FORMAT:
        raise SnapshotError(f"{path}: not a {FORMAT} file")
    if header.get("version") != VERSION:
        raise SnapshotError(f"{path}: version {header.get('version')} unsupported (expected {VERSION})")
    grid = Grid(header["dim"], header["points"], header["box_length"])
    K = header["K"]
    payload = raw[end + 1:]
    expected = K * grid.size * 16
    if len(payload) != expected or header.get("payload_bytes", expected) != expected:
        raise SnapshotError(f"{path}: payload has {len(payload)} bytes, header implies {expected}")
    psi = np.frombuffer(payload, dtype=DTYPE).reshape((K,) + grid.shape).astype(complex)
    return header, MixedState(grid, np.array(header["weights"], dtype=float), psi)


def read_snapshot(path) -> MixedState:
    return read_snapshot_with_header(path)[1]
