"""Field dump format and small CSV/JSON output helpers.

Binary field layout (little endian): 48-byte header of magic ``AXIF``,
version u32, nr u32, nz u32, then r_min/r_max/z_min/z_max as f64, followed
by nr*nz float64 cell values in row-major (r-major) order.
"""

import csv
import json
import struct
import time

import numpy as np

MAGIC = b"AXIF"
VERSION = 1
_HEADER = struct.Struct("<4sIII4d")

assert _HEADER.size == 48


def write_field(path, grid, values):
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, grid.nr, grid.nz, grid.r_min, grid.r_max, grid.z_min, grid.z_max))
        fh.write(np.ascontiguousarray(values, dtype="<f8").tobytes())


def read_field(path):
    """Returns (header dict, values array)."""
    with open(path, "rb") as fh:
        magic, version, nr, nz, r_min, r_max, z_min, z_max = _HEADER.unpack(fh.read(_HEADER.size))
        if magic != MAGIC:
            raise ValueError(f"not a field dump: bad magic {magic!r}")
        if version != VERSION:
            raise ValueError(f"unsupported field dump version {version}")
        data = np.frombuffer(fh.read(8 * nr * nz), dtype="<f8").reshape(nr, nz).copy()
    header = {"nr": nr, "nz": nz, "r_min": r_min, "r_max": r_max, "z_min": z_min, "z_max": z_max}
    return header, data


def write_csv(path, header_row, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header_row)
        writer.writerows(rows)


def write_manifest(path, config, metrics, wall_time=None):
    import vrlab

    payload = {
        "config": config,
        "versions": {"vrlab": vrlab.__version__, "numpy": np.__version__, "compiled_kernels": vrlab.COMPILED},
        "wall_time_s": wall_time if wall_time is not None else time.time(),
        "metrics": metrics,
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, default=float)
    return payload
