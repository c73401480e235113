"""Binary PGM (P5) images."""
from __future__ import annotations

from pathlib import Path

import numpy as np

from .errors import InvalidShape


def to_uint8(img, vmin: float | None = None, vmax: float | None = None) -> np.ndarray:
    """Linear map of ``[vmin, vmax]`` (default: data range) onto ``0..255``."""
    a = np.real(np.asarray(img, dtype=complex if np.iscomplexobj(img) else float))
    lo = float(a.min()) if vmin is None else vmin
    hi = float(a.max()) if vmax is None else vmax
    if hi <= lo:
        return np.zeros(a.shape, dtype=np.uint8)
    scaled = np.clip((a - lo) / (hi - lo), 0.0, 1.0)
    return np.round(scaled * 255).astype(np.uint8)


def write_pgm(path, img, vmin: float | None = None, vmax: float | None = None) -> None:
    a = np.asarray(img)
    if a.ndim != 2:
        raise InvalidShape(f"PGM images are 2D, got shape {a.shape}")
    data = a if a.dtype == np.uint8 else to_uint8(a, vmin, vmax)
    h, w = data.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(np.ascontiguousarray(data).tobytes())


def _tokens(raw: bytes, count: int):
    """First ``count`` whitespace-separated header tokens and the data offset."""
    out, pos = [], 0
    while len(out) < count:
        while raw[pos:pos + 1].isspace():
            pos += 1
        if raw[pos:pos + 1] == b"#":
            pos = raw.index(b"\n", pos) + 1
            continue
        start = pos
        while not raw[pos:pos + 1].isspace():
            pos += 1
        out.append(raw[start:pos].decode("ascii"))
    return out, pos + 1


def read_pgm(path) -> np.ndarray:
    """Read a P5 image as ``uint8`` (or ``uint16`` for ``maxval > 255``)."""
    raw = Path(path).read_bytes()
    (magic, w, h, maxval), offset = _tokens(raw, 4)
    if magic != "P5":
        raise InvalidShape(f"not a binary PGM file: {path}")
    w, h, maxval = int(w), int(h), int(maxval)
    dtype = np.uint8 if maxval < 256 else np.dtype(">u2")
    data = np.frombuffer(raw, dtype=dtype, count=w * h, offset=offset)
    return data.reshape(h, w).astype(np.uint8 if maxval < 256 else np.uint16)


def load_image(path) -> np.ndarray:
    """PGM file as floats in ``[0, 1]``."""
    a = read_pgm(path)
    return a.astype(float) / (255.0 if a.dtype == np.uint8 else 65535.0)


def save_mask(path, mask) -> None:
    """Sampling mask as PGM with 255 marking sampled frequencies."""
    write_pgm(path, np.asarray(mask, dtype=bool).astype(np.uint8) * 255)


def load_mask(path) -> np.ndarray:
    return read_pgm(path) > 127
