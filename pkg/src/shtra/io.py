"""File formats: TNS1 tensors, binary PPM images, chain directories, CSV logs.

TNS1 layout: an ASCII header ``TNS1 <N> <I1> ... <IN>\\n`` followed by
``prod(I)`` little-endian float64 values in column-major order.
"""

import os

import numpy as np

from .metrics import CSV_FIELDS, MetricReport
from .solver import HISTORY_FIELDS, HistoryRecord
from .tr import TRChain

TNS_MAGIC = "TNS1"
CHAIN_MAGIC = "TRCHAIN1"


def save_tensor(path, a):
    a = np.asarray(a, dtype=np.float64)
    header = " ".join([TNS_MAGIC, str(a.ndim)] + [str(d) for d in a.shape]) + "\n"
    with open(path, "wb") as fh:
        fh.write(header.encode("ascii"))
        fh.write(a.ravel(order="F").astype("<f8").tobytes())


def load_tensor(path):
    with open(path, "rb") as fh:
        header = fh.readline().decode("ascii").split()
        payload = fh.read()
    if not header or header[0] != TNS_MAGIC:
        raise ValueError(f"{path}: not a TNS1 file")
    order = int(header[1])
    dims = tuple(int(d) for d in header[2:])
    if len(dims) != order or min(dims, default=0) < 1:
        raise ValueError(f"{path}: malformed TNS1 header {header}")
    count = int(np.prod(dims))
    if len(payload) != 8 * count:
        raise ValueError(f"{path}: expected {8 * count} data bytes, found {len(payload)}")
    return np.frombuffer(payload, dtype="<f8").astype(np.float64).reshape(dims, order="F")


def save_mask(path, mask):
    save_tensor(path, mask.observed.astype(np.float64))


def load_mask_array(path):
    data = load_tensor(path)
    if not np.all((data == 0.0) | (data == 1.0)):
        raise ValueError(f"{path}: mask values must be 0.0 or 1.0")
    return data == 1.0


def _ppm_tokens(buf, count):
    tokens, pos = [], 0
    while len(tokens) < count:
        while pos < len(buf) and chr(buf[pos]).isspace():
            pos += 1
        if pos < len(buf) and buf[pos : pos + 1] == b"#":
            while pos < len(buf) and buf[pos : pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < len(buf) and not chr(buf[pos]).isspace():
            pos += 1
        if start == pos:
            raise ValueError("truncated PPM header")
        tokens.append(buf[start:pos].decode("ascii"))
    # exactly one whitespace byte separates the header from the raster
    return tokens, pos + 1


def load_image(path):
    """Binary PPM (P6, maxval 255) as an ``H x W x 3`` float tensor in 0..255."""
    with open(path, "rb") as fh:
        buf = fh.read()
    tokens, offset = _ppm_tokens(buf, 4)
    if tokens[0] != "P6":
        raise ValueError(f"{path}: not a binary PPM (magic {tokens[0]!r})")
    try:
        width, height, maxval = (int(t) for t in tokens[1:])
    except ValueError as exc:
        raise ValueError(f"{path}: malformed PPM header") from exc
    if maxval != 255:
        raise ValueError(f"{path}: unsupported maxval {maxval}")
    raster = np.frombuffer(buf, dtype=np.uint8, count=width * height * 3, offset=offset)
    return raster.reshape(height, width, 3).astype(np.float64)


def to_uint8(t):
    """Clamp to 0..255 and round half up."""
    return np.clip(np.floor(np.asarray(t, dtype=np.float64) + 0.5), 0, 255).astype(np.uint8)


def save_image(t, path):
    t = np.asarray(t)
    if t.ndim != 3 or t.shape[2] != 3:
        raise ValueError(f"PPM output needs an H x W x 3 tensor, got {t.shape}")
    height, width, _ = t.shape
    with open(path, "wb") as fh:
        fh.write(f"P6\n{width} {height}\n255\n".encode("ascii"))
        fh.write(np.ascontiguousarray(to_uint8(t)).tobytes())


def load_any(path):
    """Images for ``.ppm``, TNS1 for everything else."""
    if str(path).lower().endswith(".ppm"):
        return load_image(path)
    return load_tensor(path)


def save_chain(directory, chain):
    os.makedirs(directory, exist_ok=True)
    lines = [
        CHAIN_MAGIC,
        str(len(chain)),
        " ".join(map(str, chain.dims)),
        " ".join(map(str, chain.ranks)),
    ]
    with open(os.path.join(directory, "manifest.txt"), "w") as fh:
        fh.write("\n".join(lines) + "\n")
    for n, core in enumerate(chain.cores, start=1):
        save_tensor(os.path.join(directory, f"core_{n}.tns"), core)


def load_chain(directory):
    with open(os.path.join(directory, "manifest.txt")) as fh:
        lines = fh.read().split("\n")
    if lines[0] != CHAIN_MAGIC:
        raise ValueError(f"{directory}: not a chain directory")
    size = int(lines[1])
    cores = tuple(load_tensor(os.path.join(directory, f"core_{n}.tns")) for n in range(1, size + 1))
    chain = TRChain(cores)
    dims = tuple(int(v) for v in lines[2].split())
    ranks = tuple(int(v) for v in lines[3].split())
    if chain.dims != dims or chain.ranks != ranks:
        raise ValueError(f"{directory}: manifest disagrees with stored cores")
    return chain


def write_history_csv(path, history):
    with open(path, "w") as fh:
        fh.write(",".join(HISTORY_FIELDS) + "\n")
        for rec in history:
            fh.write(rec.csv_row() + "\n")


def read_history_csv(path):
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        if tuple(header) != HISTORY_FIELDS:
            raise ValueError(f"{path}: unexpected history header {header}")
        return [HistoryRecord.from_csv_row(line) for line in fh if line.strip()]


def write_metrics_csv(path, report):
    with open(path, "w") as fh:
        fh.write(",".join(CSV_FIELDS) + "\n" + report.csv_row() + "\n")


def read_metrics_csv(path):
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        if tuple(header) != CSV_FIELDS:
            raise ValueError(f"{path}: unexpected metrics header {header}")
        return MetricReport.from_csv_row(fh.readline())
