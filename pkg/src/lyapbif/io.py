"""Serialization of fields, mass fields, point clouds and reports (CSV, 16-bit PGM, JSON)."""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .lyapunov import ScalarField
from .potential import MassField

PGM_MAX = 65535


def _jsonable(x):
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, (complex, np.complexfloating)):
        return [float(x.real), float(x.imag)]
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, (set, tuple)):
        return list(x)
    raise TypeError(f"not JSON serializable: {type(x).__name__}")


def dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, default=_jsonable) + "\n"


def write_json(path, obj) -> None:
    Path(path).write_text(dumps(obj))


def _fmt(v: float) -> str:
    return "%.17g" % v


def write_csv(path, lams: np.ndarray, values: np.ndarray, header: str) -> None:
    lines = [header]
    for z, v in zip(lams.ravel(), values.ravel()):
        lines.append(f"{_fmt(z.real)},{_fmt(z.imag)},{_fmt(v)}")
    Path(path).write_text("\n".join(lines) + "\n")


def write_pgm(path, values: np.ndarray, lo: float, hi: float) -> None:
    """16-bit binary PGM with the top row at the largest imaginary part; non-finite values map to 0."""
    v = np.asarray(values, float)[::-1]
    span = hi - lo
    with np.errstate(invalid="ignore"):
        s = (v - lo) / span if span > 0 else np.zeros_like(v)
    s = np.where(np.isfinite(s), np.clip(s, 0.0, 1.0), 0.0)
    px = np.rint(s * PGM_MAX).astype(">u2")
    ny, nx = px.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{nx} {ny}\n{PGM_MAX}\n".encode("ascii"))
        fh.write(px.tobytes())


def read_pgm(path) -> np.ndarray:
    """Inverse of :func:`write_pgm` (rows returned in grid order, bottom row first)."""
    data = Path(path).read_bytes()
    parts = data.split(b"\n", 3)
    nx, ny = (int(x) for x in parts[1].split())
    px = np.frombuffer(parts[3], dtype=">u2").reshape(ny, nx)
    return px[::-1].astype(np.int64)


def _finite_range(v: np.ndarray):
    f = v[np.isfinite(v)]
    if f.size == 0:
        return 0.0, 0.0
    return float(f.min()), float(f.max())


def write_field(prefix, f: ScalarField) -> dict:
    """``prefix.csv`` (re, im, value), ``prefix.pgm`` and the ``prefix.json`` sidecar."""
    prefix = Path(prefix)
    lo, hi = _finite_range(f.values)
    write_csv(prefix.with_suffix(".csv"), f.grid.lams(), f.values, "re,im,value")
    write_pgm(prefix.with_suffix(".pgm"), f.values, lo, hi)
    side = {"grid": f.grid.to_dict(), "min": lo, "max": hi, "sentinels": int(np.sum(f.mask)),
            "metadata": f.metadata}
    write_json(prefix.with_suffix(".json"), side)
    return side


def write_mass(prefix, mf: MassField) -> dict:
    """``prefix.csv`` (cell centre, mass), ``prefix.pgm`` of the nonnegative part, ``prefix.json`` summary."""
    prefix = Path(prefix)
    write_csv(prefix.with_suffix(".csv"), mf.grid.lams()[1:-1, 1:-1], mf.cells, "re,im,mass")
    pos = np.clip(mf.full(), 0.0, None)
    hi = float(pos.max())
    write_pgm(prefix.with_suffix(".pgm"), pos, 0.0, hi)
    summary = {**mf.summary(), "pgm_max": hi, "grid": mf.grid.to_dict(), "metadata": mf.metadata}
    write_json(prefix.with_suffix(".json"), summary)
    return summary


def write_mask(prefix, grid, mask: np.ndarray, meta: dict) -> dict:
    prefix = Path(prefix)
    write_pgm(prefix.with_suffix(".pgm"), mask.astype(float), 0.0, 1.0)
    js, is_ = np.nonzero(mask)
    lams = grid.lams()[js, is_]
    lines = ["row,col,re,im"] + [f"{j},{i},{_fmt(z.real)},{_fmt(z.imag)}" for j, i, z in zip(js, is_, lams)]
    prefix.with_suffix(".csv").write_text("\n".join(lines) + "\n")
    side = {"grid": grid.to_dict(), "flagged": int(mask.sum()), "metadata": meta}
    write_json(prefix.with_suffix(".json"), side)
    return side


def finite_or_none(x: float):
    return x if math.isfinite(x) else None
