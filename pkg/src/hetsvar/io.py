"""Binary posterior artifacts.

Layout of a file::

    bytes 0-7   header length L, unsigned 64-bit little-endian
    bytes 8..   L bytes of UTF-8 JSON (sorted keys, compact separators)
    then        float64 little-endian blocks, back to back, row-major

The header lists every block with its name, shape and byte offset from the
start of the data section.  The posterior file holds a ``draws`` block with
one record per kept draw (its ``record`` entry documents the fields and
their offsets within a record) plus the regression data ``Yt`` and ``X``.
The moments file holds ``omega_mean`` and ``omega_var``.  Writing is
deterministic, so write -> read -> write reproduces the same bytes.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .model import PosteriorSample

__all__ = [
    "ArtifactError",
    "write_blocks",
    "read_blocks",
    "record_layout",
    "write_posterior",
    "read_posterior",
    "write_moments",
    "read_moments",
    "to_jsonable",
]

_MAGIC = "hetsvar-posterior"
_VERSION = 1


class ArtifactError(ValueError):
    """A file does not follow the artifact layout."""


def to_jsonable(obj):
    """Convert numpy scalars and arrays inside ``obj`` to plain Python values."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


def _dumps(header) -> bytes:
    return json.dumps(to_jsonable(header), sort_keys=True, separators=(",", ":")).encode("utf-8")


def write_blocks(path, header: dict, blocks: dict) -> None:
    """Write named float64 arrays after a JSON header; block order is sorted by name."""
    header = dict(header)
    entries = []
    payload = []
    offset = 0
    for name in sorted(blocks):
        arr = np.ascontiguousarray(blocks[name], dtype="<f8")
        entries.append({"name": name, "shape": list(arr.shape), "offset": offset})
        payload.append(arr.tobytes())
        offset += arr.nbytes
    header["blocks"] = entries
    raw = _dumps(header)
    with open(path, "wb") as fh:
        fh.write(struct.pack("<Q", len(raw)))
        fh.write(raw)
        for chunk in payload:
            fh.write(chunk)


def read_blocks(path):
    """Inverse of :func:`write_blocks`; returns ``(header, {name: array})``."""
    data = Path(path).read_bytes()
    if len(data) < 8:
        raise ArtifactError(f"{path}: file too short")
    (n,) = struct.unpack("<Q", data[:8])
    try:
        header = json.loads(data[8:8 + n].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ArtifactError(f"{path}: unreadable header") from exc
    base = 8 + n
    out = {}
    for entry in header.get("blocks", []):
        shape = tuple(entry["shape"])
        count = int(np.prod(shape)) if shape else 1
        start = base + entry["offset"]
        if start + 8 * count > len(data):
            raise ArtifactError(f"{path}: block {entry['name']} is truncated")
        out[entry["name"]] = np.frombuffer(data, dtype="<f8", count=count, offset=start).reshape(shape).copy()
    return header, out


def record_layout(N: int, K: int, T: int, store_h: bool) -> list:
    """Fields of one draw record: name, shape and offset in float64 units."""
    fields = [
        ("B0", [N, N]), ("A", [N, K]),
        ("omega", [N]), ("rho", [N]), ("sigma2_omega", [N]),
        ("gamma_0", [N]), ("s_0", [N]), ("s_gamma0", []),
        ("gamma_A", [N]), ("s_A", [N]), ("s_gammaA", []),
    ]
    if store_h:
        fields += [("h", [N, T]), ("s", [N, T])]
    out = []
    offset = 0
    for name, shape in fields:
        out.append({"name": name, "shape": shape, "offset": offset})
        offset += int(np.prod(shape)) if shape else 1
    return out


def write_posterior(path, sample: PosteriorSample, Yt, X, info: dict) -> None:
    """Write the draws and regression data.  ``info`` lands in the header (priors, configs, names)."""
    n, N = len(sample), sample.N
    K = sample.A.shape[2]
    T = Yt.shape[0]
    store_h = sample.h is not None
    layout = record_layout(N, K, T, store_h)
    width = sum(int(np.prod(f["shape"])) if f["shape"] else 1 for f in layout)
    rec = np.empty((n, width))
    for f in layout:
        size = int(np.prod(f["shape"])) if f["shape"] else 1
        rec[:, f["offset"]:f["offset"] + size] = np.asarray(getattr(sample, f["name"]), dtype=float).reshape(n, size)
    header = {
        "format": _MAGIC,
        "version": _VERSION,
        "kind": "draws",
        "dims": {"n_draws": n, "N": N, "K": K, "T": T},
        "record": layout,
        "meta": sample.meta,
        "info": info,
    }
    write_blocks(path, header, {"draws": rec, "Yt": Yt, "X": X})


def _check(header, kind, path):
    if header.get("format") != _MAGIC or header.get("kind") != kind:
        raise ArtifactError(f"{path}: not a {kind} artifact")


def read_posterior(path, moments_path=None):
    """Read a posterior file; returns ``(sample, Yt, X, header)``.

    Without a moments file the stored omega moments are filled with NaN
    means and unit variances.
    """
    header, blocks = read_blocks(path)
    _check(header, "draws", path)
    dims = header["dims"]
    n = dims["n_draws"]
    rec = blocks["draws"]
    kw = {}
    for f in header["record"]:
        shape = tuple(f["shape"])
        size = int(np.prod(shape)) if shape else 1
        kw[f["name"]] = rec[:, f["offset"]:f["offset"] + size].reshape((n,) + shape).copy()
    if "s" in kw:
        kw["s"] = kw["s"].astype(np.int8)
    if moments_path is not None:
        mean, var = read_moments(moments_path)
    else:
        mean, var = np.full((n, dims["N"]), np.nan), np.ones((n, dims["N"]))
    sample = PosteriorSample(omega_mean=mean, omega_var=var, meta=header.get("meta", {}), **kw)
    return sample, blocks["Yt"], blocks["X"], header


def write_moments(path, sample: PosteriorSample, info: dict = None) -> None:
    header = {"format": _MAGIC, "version": _VERSION, "kind": "moments", "info": info or {}}
    write_blocks(path, header, {"omega_mean": sample.omega_mean, "omega_var": sample.omega_var})


def read_moments(path):
    header, blocks = read_blocks(path)
    _check(header, "moments", path)
    return blocks["omega_mean"], blocks["omega_var"]
