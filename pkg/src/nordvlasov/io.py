"""Binary snapshots and CSV writers.

Snapshot layout: b"NV2D", u32 version, one u32 per axis (2 for fields, 4 for
distribution slices), then row-major little-endian float64 data.  The header
does not store the rank, so the reader picks the rank whose header and payload
sizes add up to the file length.
"""
import csv
import struct

import numpy as np

MAGIC = b"NV2D"
VERSION = 1

DIAGNOSTIC_COLUMNS = (
    "t", "total_energy", "energy_residual", "P_t", "barP_t",
    "sup_f", "conformal_drift", "mass", "clipped_mass",
)

PROBE_COLUMNS = (
    "t", "x1", "x2", "phi_grid", "phi_retarded",
    "dphi_t_rep", "dphi_x1_rep", "dphi_x2_rep",
    "dphi_t_fd", "dphi_x1_fd", "dphi_x2_fd", "status",
)


def write_snapshot(path, array):
    a = np.ascontiguousarray(array, dtype="<f8")
    if a.ndim not in (2, 4):
        raise ValueError(f"snapshots hold 2D or 4D arrays, got ndim={a.ndim}")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", VERSION))
        fh.write(struct.pack(f"<{a.ndim}I", *a.shape))
        fh.write(a.tobytes(order="C"))


def read_snapshot(path):
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[:4] != MAGIC:
        raise ValueError(f"{path}: bad magic {raw[:4]!r}")
    (version,) = struct.unpack_from("<I", raw, 4)
    if version != VERSION:
        raise ValueError(f"{path}: unsupported version {version}")
    for rank in (2, 4):
        if len(raw) < 8 + 4 * rank:
            continue
        dims = struct.unpack_from(f"<{rank}I", raw, 8)
        start = 8 + 4 * rank
        if len(raw) - start == 8 * int(np.prod(dims, dtype=np.int64)):
            return np.frombuffer(raw, dtype="<f8", offset=start).reshape(dims).copy()
    raise ValueError(f"{path}: size {len(raw)} matches no 2D or 4D header")


class CsvLog:
    """Append-only CSV with a fixed header; rows are flushed as they arrive."""

    def __init__(self, path, columns):
        self.columns = tuple(columns)
        self._fh = open(path, "w", newline="")
        self._w = csv.writer(self._fh)
        self._w.writerow(self.columns)

    def write(self, row):
        if isinstance(row, dict):
            row = [row[c] for c in self.columns]
        if len(row) != len(self.columns):
            raise ValueError(f"row has {len(row)} fields, header has {len(self.columns)}")
        self._w.writerow([_fmt(v) for v in row])
        self._fh.flush()

    def close(self):
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


def read_csv(path):
    """Columns of a numeric CSV as a dict of float arrays (non-numeric kept as str)."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    out = {}
    for j, name in enumerate(header):
        col = [r[j] for r in body]
        try:
            out[name] = np.array([float(c) for c in col])
        except ValueError:
            out[name] = np.array(col)
    return out
