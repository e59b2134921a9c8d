"""Binary PGM (P5, 8-bit) reading and writing.

Masks use 0 = background, 255 = region.  Float images in [0, 1] are
quantized to 8 bits on write.  Comment lines may be injected into the header
(run provenance); readers skip them per the format.
"""

from __future__ import annotations

import numpy as np

__all__ = ["read_pgm", "write_pgm", "write_mask", "read_mask"]


def read_pgm(path) -> np.ndarray:
    """Read a P5 file into a float array scaled to [0, 1]."""
    with open(path, "rb") as fh:
        data = fh.read()
    if not data.startswith(b"P5"):
        raise ValueError(f"{path}: not a binary PGM (P5) file")
    # header tokens: magic, width, height, maxval; '#' starts a comment line
    tokens: list[bytes] = []
    pos = 2
    while len(tokens) < 3:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos : pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise ValueError(f"{path}: truncated PGM header")
        tokens.append(data[start:pos])
    pos += 1  # single whitespace after maxval
    width, height, maxval = (int(t) for t in tokens)
    if maxval != 255:
        raise ValueError(f"{path}: only 8-bit PGM supported, maxval {maxval}")
    raw = np.frombuffer(data, dtype=np.uint8, count=width * height, offset=pos)
    if raw.size != width * height:
        raise ValueError(f"{path}: pixel data truncated")
    return raw.reshape(height, width).astype(float) / 255.0


def write_pgm(path, values: np.ndarray, comments: list[str] | None = None) -> None:
    """Write a float array in [0, 1] as P5, rounding to 8 bits."""
    values = np.asarray(values, float)
    if values.ndim != 2:
        raise ValueError("PGM output must be 2-D")
    quantized = np.clip(np.rint(values * 255.0), 0, 255).astype(np.uint8)
    height, width = values.shape
    with open(path, "wb") as fh:
        fh.write(b"P5\n")
        for line in comments or []:
            fh.write(b"# " + line.encode() + b"\n")
        fh.write(f"{width} {height}\n255\n".encode())
        fh.write(quantized.tobytes())


def write_mask(path, mask: np.ndarray, comments: list[str] | None = None) -> None:
    write_pgm(path, np.asarray(mask, bool).astype(float), comments)


def read_mask(path) -> np.ndarray:
    return read_pgm(path) >= 0.5
