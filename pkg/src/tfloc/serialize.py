"""Deterministic file output: CSV, schema-validated JSON, portable graymaps.

Float serialization is pinned (scientific notation, 12 significant digits,
lowercase e, no locale) so identical configs produce byte-identical files.
All writes go through a temp file + rename.
"""

from __future__ import annotations

import json
import math
import os
import tempfile

import jsonschema
import numpy as np

from .domain import DiskShape, DomainMask, RectShape, StarShape
from .errors import ConfigError, ContractError
from .gabor import PlaneField, PlaneGrid

__all__ = [
    "fmt_float",
    "write_csv",
    "write_json",
    "write_mask_pgm",
    "write_field_pgm",
    "read_mask_pgm",
    "SCHEMAS",
]


def fmt_float(x: float) -> str:
    """12 significant digits, scientific, lowercase e."""
    if not math.isfinite(x):
        raise ContractError(f"non-finite value {x!r} in serialized output")
    return f"{x:.11e}"


def _atomic_write_bytes(path: str, data: bytes) -> None:
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tfloc-tmp-")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _cell(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return fmt_float(float(v))
    return str(v)


def write_csv(path: str, header: list[str], rows: list[list]) -> None:
    """RFC-4180 style: comma separated, CRLF line endings, header row."""
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_cell(v) for v in row))
    _atomic_write_bytes(path, ("\r\n".join(lines) + "\r\n").encode("ascii"))


def _mark_floats(obj):
    if isinstance(obj, bool):
        return obj
    if isinstance(obj, (float, np.floating)):
        return "\x00" + fmt_float(float(obj)) + "\x00"
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, dict):
        return {str(k): _mark_floats(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_mark_floats(v) for v in obj]
    return obj


def write_json(path: str, obj: dict, schema: dict | None = None) -> None:
    """Schema-validate, then dump with pinned float formatting, sorted keys."""
    if schema is not None:
        jsonschema.validate(obj, schema)
    text = json.dumps(_mark_floats(obj), indent=2, sort_keys=True)
    # json.dumps escapes the NUL sentinels to backslash-u0000 sequences
    text = text.replace('"\\u0000', "").replace('\\u0000"', "")
    _atomic_write_bytes(path, (text + "\n").encode("ascii"))


# ---------------------------------------------------------------------------
# portable graymaps (rows run from xi_max down, columns from x0 up)
# ---------------------------------------------------------------------------

def _grid_dict(grid: PlaneGrid) -> dict:
    return {
        "nx": grid.nx, "nxi": grid.nxi,
        "dx": grid.dx, "dxi": grid.dxi,
        "x0": grid.x0, "xi0": grid.xi0,
    }


def _grid_from_dict(d: dict) -> PlaneGrid:
    return PlaneGrid(
        nx=int(d["nx"]), nxi=int(d["nxi"]),
        dx=float(d["dx"]), dxi=float(d["dxi"]),
        x0=float(d["x0"]), xi0=float(d["xi0"]),
    )


def _shape_dict(shape) -> dict | None:
    if shape is None:
        return None
    if isinstance(shape, DiskShape):
        return {"kind": "disk", "center": list(shape.center), "radius": shape.radius}
    if isinstance(shape, RectShape):
        return {"kind": "rectangle", "center": list(shape.center),
                "wx": shape.wx, "wxi": shape.wxi}
    if isinstance(shape, StarShape):
        return {"kind": "star", "points": shape.points, "r_in": shape.r_in,
                "r_out": shape.r_out, "center": list(shape.center)}
    raise ContractError(f"unknown shape {shape!r}")


def _shape_from_dict(d: dict | None):
    if d is None:
        return None
    kind = d.get("kind")
    if kind == "disk":
        return DiskShape(center=tuple(d["center"]), radius=float(d["radius"]))
    if kind == "rectangle":
        return RectShape(center=tuple(d["center"]), wx=float(d["wx"]), wxi=float(d["wxi"]))
    if kind == "star":
        return StarShape(points=int(d["points"]), r_in=float(d["r_in"]),
                         r_out=float(d["r_out"]), center=tuple(d["center"]))
    raise ConfigError(f"unknown shape kind {kind!r} in sidecar")


def _pgm_bytes(img: np.ndarray, maxval: int, binary: bool) -> bytes:
    h, w = img.shape
    if binary:
        head = f"P5\n{w} {h}\n{maxval}\n".encode("ascii")
        if maxval > 255:
            body = img.astype(">u2").tobytes()
        else:
            body = img.astype(np.uint8).tobytes()
        return head + body
    head = f"P2\n{w} {h}\n{maxval}\n"
    lines = "\n".join(" ".join(str(int(v)) for v in row) for row in img)
    return (head + lines + "\n").encode("ascii")


def _image_from_values(values: np.ndarray) -> np.ndarray:
    # (nx, nxi) field -> image rows: top row is the largest xi
    return values.T[::-1, :]


def write_mask_pgm(path: str, mask: DomainMask, binary: bool = True) -> None:
    """0 = outside, 255 = inside, plus a JSON sidecar with the geometry."""
    img = np.where(_image_from_values(mask.indicator), 255, 0)
    _atomic_write_bytes(path, _pgm_bytes(img, 255, binary))
    sidecar = {
        "type": "mask",
        "grid": _grid_dict(mask.grid),
        "orientation": "row0=xi_max",
        "shape": _shape_dict(mask.shape),
    }
    write_json(path + ".json", sidecar, SCHEMAS["sidecar"])


def write_field_pgm(path: str, field: PlaneField, binary: bool = True) -> None:
    """16-bit graymap: value 0 -> 0, value 1 -> 65535, clamped; scaling in
    the sidecar."""
    vals = np.clip(np.real(field.values), 0.0, 1.0)
    img = np.rint(_image_from_values(vals) * 65535).astype(int)
    _atomic_write_bytes(path, _pgm_bytes(img, 65535, binary))
    sidecar = {
        "type": "field",
        "grid": _grid_dict(field.grid),
        "orientation": "row0=xi_max",
        "shape": None,
        "scale": {"value_at_0": 0, "value_at_maxval": 1.0, "maxval": 65535, "clamped": True},
    }
    write_json(path + ".json", sidecar, SCHEMAS["sidecar"])


def _read_pgm(path: str) -> tuple[np.ndarray, int]:
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:2] not in (b"P2", b"P5"):
        raise ConfigError(f"{path} is not a P2/P5 graymap")
    binary = data[:2] == b"P5"
    # header tokens: magic, width, height, maxval (comments stripped)
    tokens: list[bytes] = []
    pos = 2
    while len(tokens) < 3:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos : pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        tokens.append(data[start:pos])
    w, h, maxval = int(tokens[0]), int(tokens[1]), int(tokens[2])
    pos += 1  # single whitespace after maxval
    if binary:
        dtype = ">u2" if maxval > 255 else np.uint8
        img = np.frombuffer(data, dtype=dtype, offset=pos, count=w * h).reshape(h, w)
    else:
        img = np.array(data[pos:].split(), dtype=int).reshape(h, w)
    return img.astype(int), maxval


def read_mask_pgm(path: str, required_margin: float | None = None) -> DomainMask:
    """Import a mask graymap; the geometry sidecar `<path>.json` is required."""
    sidecar_path = path + ".json"
    if not os.path.exists(sidecar_path):
        raise ConfigError(f"mask import needs the geometry sidecar {sidecar_path}")
    with open(sidecar_path) as fh:
        sidecar = json.load(fh)
    jsonschema.validate(sidecar, SCHEMAS["sidecar"])
    grid = _grid_from_dict(sidecar["grid"])
    img, maxval = _read_pgm(path)
    if img.shape != (grid.nxi, grid.nx):
        raise ConfigError(
            f"graymap {img.shape} does not match sidecar grid {(grid.nxi, grid.nx)}"
        )
    indicator = (img[::-1, :].T) > maxval // 2
    kwargs = {} if required_margin is None else {"required_margin": required_margin}
    return DomainMask(
        grid=grid, indicator=indicator, shape=_shape_from_dict(sidecar.get("shape")),
        **kwargs,
    )


# ---------------------------------------------------------------------------
# schemas
# ---------------------------------------------------------------------------

_NUM = {"type": "number"}
_INT = {"type": "integer"}
_NUM_MAP = {"type": "object", "additionalProperties": _NUM}

SCHEMAS: dict[str, dict] = {
    "sidecar": {
        "type": "object",
        "required": ["type", "grid", "orientation"],
        "properties": {
            "type": {"enum": ["mask", "field"]},
            "grid": {
                "type": "object",
                "required": ["nx", "nxi", "dx", "dxi", "x0", "xi0"],
                "properties": {
                    "nx": _INT, "nxi": _INT,
                    "dx": _NUM, "dxi": _NUM, "x0": _NUM, "xi0": _NUM,
                },
                "additionalProperties": False,
            },
            "orientation": {"const": "row0=xi_max"},
            "shape": {"type": ["object", "null"]},
            "scale": {"type": "object"},
        },
        "additionalProperties": False,
    },
    "spectrum_report": {
        "type": "object",
        "required": [
            "measure", "a_omega", "trace1", "trace2", "rhs2", "counts",
            "e_omega", "gap_at_cut", "assembly_tail", "basis_dependent",
        ],
        "properties": {
            "measure": _NUM, "a_omega": _INT,
            "trace1": _NUM, "trace2": _NUM, "rhs2": _NUM,
            "trace1_defect": _NUM, "trace2_defect": _NUM,
            "counts": _NUM_MAP,
            "e_omega": _NUM, "gap_at_cut": _NUM, "assembly_tail": _NUM,
            "basis_dependent": {"type": "boolean"},
            "isometry_defect": _NUM,
            "perimeter": _NUM, "mstar": _NUM,
        },
        "additionalProperties": False,
    },
    "errors_report": {
        "type": "object",
        "required": [
            "l1_raw", "l1_normalized", "lp", "level_measures", "e_omega",
            "bound_thm13", "eqc_ratio", "bound_prop34", "recovery_symdiff",
            "gap_at_cut",
        ],
        "properties": {
            "l1_raw": _NUM, "l1_normalized": _NUM,
            "l1_vs_mollified": _NUM, "thm13_lhs": _NUM,
            "lp": _NUM_MAP, "level_measures": _NUM_MAP,
            "e_omega": _NUM,
            "bound_thm13": _NUM, "bound_cor51": _NUM,
            "eqc_ratio": _NUM, "bound_prop34": _NUM,
            "recovery_symdiff": _NUM, "recovery_ratio": _NUM,
            "gap_at_cut": _NUM,
            "basis_dependent": {"type": "boolean"},
            "wl2_constants": _NUM_MAP,
            "wl2_applicable": {"type": "boolean"},
            "measure": _NUM, "perimeter": _NUM, "mstar": _NUM, "a_omega": _INT,
        },
        "additionalProperties": False,
    },
    "recovery_report": {
        "type": "object",
        "required": ["symdiff", "perimeter", "mstar", "ratio"],
        "properties": {
            "symdiff": _NUM, "perimeter": _NUM, "mstar": _NUM, "ratio": _NUM,
            "measure": _NUM, "recovered_measure": _NUM,
        },
        "additionalProperties": False,
    },
    "oracle_summary": {
        "type": "object",
        "required": ["max_eigenvalue_error", "rho_sup_error", "min_hermite_overlap", "passed"],
        "properties": {
            "max_eigenvalue_error": _NUM,
            "rho_sup_error": _NUM,
            "min_hermite_overlap": _NUM,
            "eigenvalue_tol": _NUM,
            "field_tol": _NUM,
            "overlap_tol": _NUM,
            "compared_modes": _INT,
            "passed": {"type": "boolean"},
        },
        "additionalProperties": False,
    },
}
