"""File formats: raw fields with JSON sidecars, 16-bit PGM, CSV tables."""
import csv
import json
from pathlib import Path

import numpy as np

from .errors import ShapeError
from .fields import GridSpec, ScalarField, VectorField


def write_json(path, obj):
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n")


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def write_field(path, f, kind="scalar"):
    """Little-endian float64, row-major, plus ``<path>.json`` sidecar.

    Vector fields are written as the stacked component arrays.
    """
    path = Path(path)
    if isinstance(f, VectorField):
        data, kind = f.stack(), "vector"
    else:
        data = np.real(f.values)
    path.write_bytes(np.ascontiguousarray(data, dtype="<f8").tobytes())
    meta = dict(f.grid.to_dict(), kind=kind)
    write_json(str(path) + ".json", meta)
    return path


def read_field(path):
    path = Path(path)
    meta = json.loads(Path(str(path) + ".json").read_text())
    grid = GridSpec(meta["dim"], meta["n_per_axis"], meta["extent"])
    data = np.frombuffer(path.read_bytes(), dtype="<f8")
    if meta["kind"] == "vector":
        data = data.reshape((grid.dim,) + grid.shape)
        return VectorField(grid, tuple(data))
    return ScalarField(grid, data.reshape(grid.shape).copy())


def write_pgm(path, image, vmin=None, vmax=None):
    """16-bit binary PGM of a 2-D array with a fixed [vmin, vmax] window.

    Row 0 of the image is ``image[:, -1]`` so that x2 points up.
    """
    a = np.asarray(image, dtype=float)
    if a.ndim != 2:
        raise ShapeError("PGM export needs a 2-D array")
    vmin = float(np.nanmin(a)) if vmin is None else float(vmin)
    vmax = float(np.nanmax(a)) if vmax is None else float(vmax)
    span = vmax - vmin if vmax > vmin else 1.0
    scaled = np.clip((np.nan_to_num(a, nan=vmin) - vmin) / span, 0.0, 1.0)
    pix = np.rint(scaled * 65535).astype(">u2")
    pix = pix.T[::-1]
    header = f"P5\n{pix.shape[1]} {pix.shape[0]}\n65535\n".encode()
    Path(path).write_bytes(header + pix.tobytes())
    return {"vmin": vmin, "vmax": vmax, "width": pix.shape[1], "height": pix.shape[0]}


def read_pgm(path):
    raw = Path(path).read_bytes()
    tokens, pos = [], 0
    while len(tokens) < 4:
        while raw[pos:pos + 1].isspace():
            pos += 1
        start = pos
        while not raw[pos:pos + 1].isspace():
            pos += 1
        tokens.append(raw[start:pos])
    pos += 1
    if tokens[0] != b"P5":
        raise ValueError("not a binary PGM")
    w, h, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    dtype = ">u2" if maxval > 255 else "u1"
    return np.frombuffer(raw[pos:], dtype=dtype, count=w * h).reshape(h, w)


def write_csv_matrix(path, header, rows, row_labels=None, label_name="row"):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        head = list(header)
        if row_labels is not None:
            head = [label_name] + head
        w.writerow(head)
        for i, row in enumerate(np.atleast_2d(rows)):
            vals = [repr(float(v)) for v in row]
            w.writerow(([repr(float(row_labels[i]))] if row_labels is not None else []) + vals)


def read_csv_matrix(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array([[float(v) for v in r] for r in rows[1:]])


def write_sinogram(path, sino):
    """CSV with an offsets header row, one row per angle, plus sidecar."""
    write_csv_matrix(path, [repr(float(s)) for s in sino.lines.offsets], sino.values)
    write_json(str(path) + ".json", {
        "angles": sino.lines.angles.tolist(),
        "offsets": sino.lines.offsets.tolist(),
        "grid": sino.lines.grid.to_dict(),
    })


def write_slice_csv(path, coords, values, names=("x", "value")):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(list(names))
        for c, v in zip(coords, values):
            w.writerow([repr(float(c)), repr(float(v))])
