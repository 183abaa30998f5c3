"""State snapshots and CSV output with schema and checksum headers.

State snapshot layout (``.npz``)
--------------------------------
``meta``
    JSON string: ``format="hypwave-state"``, ``version``, the plan descriptor
    (n, r_max, n_r, lambda_max, n_lambda), ``plan_checksum``, ``time`` and a
    SHA-256 ``checksum`` over the raw bytes of both coefficient arrays.
``u_hat``, ``ut_hat``
    float64 spectral coefficients of u and its time derivative.

CSV layout
----------
Comment lines starting with ``#`` carry ``key: value`` metadata, always
including ``schema_version`` and ``run_checksum``. The ``generated`` line is
the only one that varies between identical runs. Floats are written with 17
significant digits so the body round-trips exactly.
"""

from __future__ import annotations

import csv
import datetime as _dt
import hashlib
import json
from pathlib import Path

import numpy as np

from .evolve import StatePair
from .transform import TransformPlan

STATE_FORMAT_VERSION = 1
CSV_SCHEMA_VERSION = 1


class SnapshotError(ValueError):
    pass


def _array_digest(*arrays: np.ndarray) -> str:
    h = hashlib.sha256()
    for a in arrays:
        h.update(np.ascontiguousarray(a, dtype=np.float64).tobytes())
    return h.hexdigest()


def save_state(state: StatePair, path, extra: dict | None = None) -> Path:
    """Write a snapshot; ``extra`` entries (e.g. ``run_checksum``) are stored in ``meta``."""
    path = Path(path)
    meta = {**(extra or {}), "format": "hypwave-state", "version": STATE_FORMAT_VERSION,
            **state.plan.descriptor(),
            "plan_checksum": state.plan.checksum(), "time": state.time,
            "checksum": _array_digest(state.u_hat, state.ut_hat)}
    with open(path, "wb") as fh:
        np.savez(fh, meta=np.array(json.dumps(meta, sort_keys=True)), u_hat=state.u_hat,
                 ut_hat=state.ut_hat)
    return path


def read_state_meta(path) -> dict:
    with np.load(Path(path), allow_pickle=False) as data:
        return json.loads(str(data["meta"]))


def load_state(path, plan: TransformPlan) -> StatePair:
    """Load a snapshot onto ``plan``; grids and checksum must match."""
    with np.load(Path(path), allow_pickle=False) as data:
        meta = json.loads(str(data["meta"]))
        u_hat = np.array(data["u_hat"], dtype=np.float64)
        ut_hat = np.array(data["ut_hat"], dtype=np.float64)
    if meta.get("format") != "hypwave-state" or meta.get("version") != STATE_FORMAT_VERSION:
        raise SnapshotError("unrecognised state snapshot format")
    want = plan.descriptor()
    got = {k: meta.get(k) for k in want}
    if got != want:
        raise SnapshotError(f"snapshot grid {got} does not match plan grid {want}")
    if _array_digest(u_hat, ut_hat) != meta["checksum"]:
        raise SnapshotError("state snapshot checksum mismatch")
    return StatePair(plan, u_hat, ut_hat, float(meta["time"]))


def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def write_csv(path, columns, rows, meta: dict) -> Path:
    """Write rows under a ``#``-comment header; ``meta`` must hold ``run_checksum``."""
    if "run_checksum" not in meta:
        raise ValueError("meta must include run_checksum")
    path = Path(path)
    stamp = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
    with open(path, "w", newline="") as fh:
        fh.write(f"# schema_version: {CSV_SCHEMA_VERSION}\n")
        for key in sorted(meta):
            fh.write(f"# {key}: {meta[key]}\n")
        fh.write(f"# generated: {stamp}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(x) for x in row])
    return path


def read_csv(path) -> tuple[dict, list[str], list[list[str]]]:
    """Return ``(meta, columns, rows)``; values are left as strings."""
    meta, lines = {}, []
    with open(path, newline="") as fh:
        for line in fh:
            if line.startswith("#"):
                key, _, value = line[1:].partition(":")
                meta[key.strip()] = value.strip()
            else:
                lines.append(line)
    reader = csv.reader(lines)
    columns = next(reader)
    return meta, columns, list(reader)


def csv_body(path) -> str:
    """File content minus the ``generated`` timestamp line."""
    with open(path) as fh:
        return "".join(line for line in fh if not line.startswith("# generated:"))
