"""Deterministic serialization: JSON reports, frame-field dumps, CSV samples, OBJ meshes.

Floats are written with 17 significant digits so identical runs give
byte-identical files; non-finite floats become null.  Complex numbers are
written as {"re": ..., "im": ...}.
"""
import csv
import json
import math
from pathlib import Path

import numpy as np

from .errors import ParseError
from .flows import FrameField

DUMP_FORMAT = "loopflat-frames"
DUMP_VERSION = 1


def _fmt_float(x):
    x = float(x)
    if not math.isfinite(x):
        return "null"
    s = format(x, ".17g")
    if "e" not in s and "." not in s and "n" not in s:
        s += ".0"
    return s


def _encode(obj, indent, level):
    pad = " " * (indent * (level + 1)) if indent else ""
    end = " " * (indent * level) if indent else ""
    nl = "\n" if indent else ""
    sep = "," + nl if indent else ","
    if obj is None or isinstance(obj, (bool, np.bool_)):
        return "null" if obj is None else ("true" if obj else "false")
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt_float(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return _encode({"re": obj.real, "im": obj.imag}, indent, level)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        return _encode(obj.tolist(), indent, level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [pad + json.dumps(str(k)) + ": " + _encode(obj[k], indent, level + 1)
                 for k in sorted(obj, key=str)]
        return "{" + nl + sep.join(items) + nl + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(isinstance(v, (int, float, bool, np.number)) or v is None for v in obj):
            return "[" + ", ".join(_encode(v, 0, 0) for v in obj) + "]"
        items = [pad + _encode(v, indent, level + 1) for v in obj]
        return "[" + nl + sep.join(items) + nl + end + "]"
    if hasattr(obj, "to_dict"):
        return _encode(obj.to_dict(), indent, level)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj, indent=2):
    """Deterministic JSON text (sorted keys, 17 significant digits)."""
    return _encode(obj, indent, 0) + "\n"


def write_json(path, obj):
    Path(path).write_text(dumps(obj))


def read_json(path):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    if not text.strip():
        raise ParseError(f"{path} is empty")
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: {exc}") from exc


# ---------------------------------------------------------------------------
# frame dumps


def frame_dump(field, case="", tolerances=None, extra=None):
    """Self-describing dictionary for a frame field (row-major payloads)."""
    F = field.frames
    cplx = np.iscomplexobj(F)
    payload = {"re": np.where(field.mask[(...,) + (None,) * 3], F.real, 0.0).ravel()}
    if cplx:
        payload["im"] = np.where(field.mask[(...,) + (None,) * 3], F.imag, 0.0).ravel()
    out = {
        "format": DUMP_FORMAT,
        "version": DUMP_VERSION,
        "case": case or field.case,
        "axes": [np.asarray(a) for a in field.axes],
        "lambdas": np.asarray(field.lambdas),
        "shape": list(F.shape),
        "dtype": "complex" if cplx else "real",
        "base_index": list(field.base_index),
        "mask": field.mask.astype(int).ravel(),
        "frames": payload,
        "tolerances": tolerances or {},
    }
    if extra:
        out["extra"] = extra
    return out


def write_frame_dump(path, field, case="", tolerances=None, extra=None):
    write_json(path, frame_dump(field, case, tolerances, extra))


def _require(d, key, kind=None):
    if key not in d:
        raise ParseError(f"frame dump lacks {key!r}")
    v = d[key]
    if kind is not None and not isinstance(v, kind):
        raise ParseError(f"frame dump field {key!r} has the wrong type")
    return v


def parse_frame_dump(d):
    """FrameField (without exact derivative data) and metadata from a dump dictionary."""
    if not isinstance(d, dict) or not d:
        raise ParseError("empty frame dump")
    if d.get("format") != DUMP_FORMAT:
        raise ParseError("not a loopflat frame dump")
    if d.get("version") != DUMP_VERSION:
        raise ParseError(f"unsupported dump version {d.get('version')!r}")
    try:
        axes = [np.asarray(a, dtype=float) for a in _require(d, "axes", list)]
        lambdas = np.asarray(_require(d, "lambdas", list), dtype=float)
        shape = tuple(int(s) for s in _require(d, "shape", list))
        frames = _require(d, "frames", dict)
        re = np.asarray(_require(frames, "re", list), dtype=float)
        F = re.reshape(shape)
        if d.get("dtype") == "complex":
            F = F + 1j * np.asarray(_require(frames, "im", list), dtype=float).reshape(shape)
        mask = np.asarray(_require(d, "mask", list), dtype=bool).reshape(shape[:-3])
        base = tuple(int(i) for i in _require(d, "base_index", list))
    except (ValueError, TypeError) as exc:
        raise ParseError(f"malformed frame dump: {exc}") from exc
    if F.size == 0 or not mask.any():
        raise ParseError("frame dump holds no usable grid points")
    if len(axes) != len(shape) - 3 or tuple(len(a) for a in axes) != shape[:-3]:
        raise ParseError("axes do not match the payload shape")
    if len(lambdas) != shape[-3]:
        raise ParseError("lambda set does not match the payload shape")
    F = F.copy()
    F[~mask] = np.nan
    field = FrameField(axes, lambdas, F, mask, base, None, d.get("case", ""), {})
    return field, {"case": d.get("case", ""), "tolerances": d.get("tolerances", {}),
                   "extra": d.get("extra", {})}


def read_frame_dump(path):
    return parse_frame_dump(read_json(path))


# ---------------------------------------------------------------------------
# samples and meshes


def write_samples_csv(path, axes, mask, samples_by_lambda):
    """One row per unmasked grid point: indices, coordinates, then per-lambda points.

    ``samples_by_lambda`` maps lambda -> array grid_shape + (D,).
    """
    shape = tuple(len(a) for a in axes)
    r = len(axes)
    lams = sorted(samples_by_lambda)
    header = [f"i{j}" for j in range(r)] + [f"x{j}" for j in range(r)]
    for lam in lams:
        D = samples_by_lambda[lam].shape[-1]
        header += [f"lam{_fmt_float(lam)}_p{j}" for j in range(D)]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for idx in np.ndindex(*shape):
            if not mask[idx]:
                continue
            row = [str(i) for i in idx] + [_fmt_float(axes[j][i]) for j, i in enumerate(idx)]
            for lam in lams:
                row += [_fmt_float(v) for v in samples_by_lambda[lam][idx]]
            w.writerow(row)


def projection_to_r3(points):
    """Orthonormal 3 x D projection onto the top principal directions of the
    samples, with signs fixed so the largest entry of each row is positive."""
    X = points - points.mean(axis=0)
    _, _, Vt = np.linalg.svd(X, full_matrices=False)
    P = np.zeros((3, points.shape[1]))
    k = min(3, Vt.shape[0])
    P[:k] = Vt[:k]
    for i in range(k):
        j = np.argmax(np.abs(P[i]))
        if P[i, j] < 0:
            P[i] = -P[i]
    return P


def write_obj(path, points, mask, comment=""):
    """Triangulated grid mesh of a 2-dimensional sample array grid + (D,)."""
    if points.ndim != 3:
        raise ValueError("OBJ export needs a 2-dimensional grid")
    n0, n1, D = points.shape
    flat = points[mask]
    P = projection_to_r3(flat)
    index = -np.ones((n0, n1), dtype=int)
    lines = []
    if comment:
        lines += [f"# {c}" for c in comment.splitlines()]
    lines.append(f"# orthogonal projection R^{D} -> R^3 (rows), applied to the raw samples:")
    for row in P:
        lines.append("# " + " ".join(_fmt_float(v) for v in row))
    count = 0
    for i in range(n0):
        for j in range(n1):
            if mask[i, j]:
                v = P @ points[i, j]
                lines.append("v " + " ".join(_fmt_float(c) for c in v))
                count += 1
                index[i, j] = count
    for i in range(n0 - 1):
        for j in range(n1 - 1):
            a, b, c, d = index[i, j], index[i + 1, j], index[i + 1, j + 1], index[i, j + 1]
            if min(a, b, c, d) > 0:
                lines.append(f"f {a} {b} {c}")
                lines.append(f"f {a} {c} {d}")
    Path(path).write_text("\n".join(lines) + "\n")
    return P
