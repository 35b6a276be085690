"""PGM codec and DPG-preserving 14-bit to 8-bit scaling.

Frames are stored as read-only ``(height, width)`` numpy arrays; pixel
``(x, y)`` lives at ``data[y, x]`` which is row-major index ``y * width + x``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEFAULT_DPG = 0.01
MAXVAL_14BIT = 16383

_WHITESPACE = b" \t\r\n\v\f"


class PGMError(ValueError):
    """Malformed PGM input. ``offset`` is the byte position of the problem."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte {offset})")
        self.offset = offset


def _frozen(data, dtype) -> np.ndarray:
    arr = np.array(data, dtype=dtype, copy=True)
    if arr.ndim != 2:
        raise ValueError(f"frame data must be 2-D, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class RawFrame:
    """Raw sensor frame of unsigned 16-bit graylevels (nominally 14-bit)."""

    data: np.ndarray
    dpg: float = DEFAULT_DPG

    def __post_init__(self):
        arr = np.asarray(self.data)
        if arr.size and (arr.min() < 0 or arr.max() > 65535):
            raise ValueError("raw samples must fit in 16 bits")
        object.__setattr__(self, "data", _frozen(arr, np.uint16))

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]

    def __eq__(self, other):
        if not isinstance(other, RawFrame):
            return NotImplemented
        return self.dpg == other.dpg and np.array_equal(self.data, other.data)


@dataclass(frozen=True, eq=False)
class GrayFrame:
    """8-bit frame. ``dpg`` is known only when produced by :func:`scale_dpg`."""

    data: np.ndarray
    dpg: float | None = None

    def __post_init__(self):
        arr = np.asarray(self.data)
        if arr.size and (arr.min() < 0 or arr.max() > 255):
            raise ValueError("gray samples must lie in [0, 255]")
        object.__setattr__(self, "data", _frozen(arr, np.uint8))

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]

    def __eq__(self, other):
        if not isinstance(other, GrayFrame):
            return NotImplemented
        return np.array_equal(self.data, other.data)


@dataclass(frozen=True)
class ScaleConfig:
    factor: float = 0.5
    offset: float = 127.0

    def __post_init__(self):
        if not self.factor > 0:
            raise ValueError("scale factor must be positive")
        if not 0 <= self.offset <= 255:
            raise ValueError("offset must lie in [0, 255]")


class _HeaderReader:
    def __init__(self, buf: bytes):
        self.buf = buf
        self.pos = 0

    def skip_space(self):
        buf = self.buf
        while self.pos < len(buf):
            c = buf[self.pos : self.pos + 1]
            if c == b"#":
                nl = buf.find(b"\n", self.pos)
                self.pos = len(buf) if nl < 0 else nl + 1
            elif c in _WHITESPACE:
                self.pos += 1
            else:
                break

    def integer(self, what: str) -> int:
        self.skip_space()
        start = self.pos
        while self.pos < len(self.buf) and self.buf[self.pos : self.pos + 1].isdigit():
            self.pos += 1
        if start == self.pos:
            raise PGMError(f"expected {what}", start)
        return int(self.buf[start : self.pos])


def read_pgm(buf: bytes) -> RawFrame | GrayFrame:
    """Parse a P2 or P5 PGM.

    Returns a :class:`GrayFrame` when maxval <= 255 and a :class:`RawFrame`
    otherwise. Multi-byte P5 samples are big-endian.
    """
    buf = bytes(buf)
    magic = buf[:2]
    if magic not in (b"P2", b"P5"):
        raise PGMError(f"bad magic {magic!r}, expected P2 or P5", 0)
    rd = _HeaderReader(buf)
    rd.pos = 2
    if rd.pos < len(buf) and buf[rd.pos : rd.pos + 1] not in _WHITESPACE + b"#":
        raise PGMError("missing whitespace after magic", rd.pos)
    rd.skip_space()
    dims_at = rd.pos
    width = rd.integer("width")
    height = rd.integer("height")
    rd.skip_space()
    maxval_at = rd.pos
    maxval = rd.integer("maxval")
    if width < 1 or height < 1:
        raise PGMError(f"invalid dimensions {width}x{height}", dims_at)
    if not 1 <= maxval <= 65535:
        raise PGMError(f"maxval {maxval} outside [1, 65535]", maxval_at)
    n = width * height

    if magic == b"P5":
        if rd.pos >= len(buf) or buf[rd.pos : rd.pos + 1] not in _WHITESPACE:
            raise PGMError("expected single whitespace before raster", rd.pos)
        start = rd.pos + 1
        itemsize = 1 if maxval < 256 else 2
        need = n * itemsize
        if len(buf) - start < need:
            raise PGMError(
                f"truncated raster: need {need} bytes, have {len(buf) - start}",
                len(buf),
            )
        dtype = np.uint8 if itemsize == 1 else np.dtype(">u2")
        samples = np.frombuffer(buf, dtype=dtype, count=n, offset=start)
        if samples.max() > maxval:
            bad = int(np.argmax(samples > maxval))
            raise PGMError(f"sample exceeds maxval {maxval}", start + bad * itemsize)
    else:
        values = []
        for i in range(n):
            rd.skip_space()
            if rd.pos >= len(buf):
                raise PGMError(f"truncated raster: got {i} of {n} samples", rd.pos)
            at = rd.pos
            v = rd.integer("sample")
            if v > maxval:
                raise PGMError(f"sample exceeds maxval {maxval}", at)
            values.append(v)
        samples = np.array(values, dtype=np.int64)

    data = samples.reshape(height, width)
    if maxval <= 255:
        return GrayFrame(data)
    return RawFrame(data)


def write_pgm(frame: RawFrame | GrayFrame) -> bytes:
    """Emit a binary P5 PGM (maxval 255 for gray, 16383 for raw).

    Raw frames holding samples above 16383 are written with maxval 65535.
    """
    if frame.width == 0 or frame.height == 0:
        raise ValueError("cannot write a zero-dimension frame")
    if isinstance(frame, GrayFrame):
        maxval, payload = 255, frame.data.astype(np.uint8).tobytes()
    elif isinstance(frame, RawFrame):
        maxval = MAXVAL_14BIT if int(frame.data.max()) <= MAXVAL_14BIT else 65535
        payload = frame.data.astype(">u2").tobytes()
    else:
        raise TypeError(f"unsupported frame type {type(frame).__name__}")
    header = f"P5\n{frame.width} {frame.height}\n{maxval}\n".encode("ascii")
    return header + payload


def load_pgm(path) -> RawFrame | GrayFrame:
    with open(path, "rb") as fh:
        return read_pgm(fh.read())


def save_pgm(path, frame: RawFrame | GrayFrame) -> None:
    with open(path, "wb") as fh:
        fh.write(write_pgm(frame))


def lower_median(values: np.ndarray) -> int | float:
    """Median; for even counts the lower of the two middle values."""
    flat = np.asarray(values).ravel()
    if flat.size == 0:
        raise ValueError("median of an empty array")
    k = (flat.size - 1) // 2
    return np.partition(flat, k)[k]


def round_half_away(x: np.ndarray) -> np.ndarray:
    return np.sign(x) * np.floor(np.abs(x) + 0.5)


def scale_dpg(frame: RawFrame, cfg: ScaleConfig = ScaleConfig()) -> GrayFrame:
    """Map raw graylevels to 8 bits with a fixed factor around the median.

    Because the factor never depends on the frame contents, every output of a
    sequence shares the same degrees-per-graylevel, ``frame.dpg / factor``.
    """
    if frame.data.size == 0:
        raise ValueError("cannot scale an empty frame")
    raw = frame.data.astype(np.float64)
    med = float(lower_median(frame.data))
    out = round_half_away((raw - med) * cfg.factor + cfg.offset)
    out = np.clip(out, 0, 255)
    return GrayFrame(out.astype(np.uint8), dpg=frame.dpg / cfg.factor)


def temperature_range(frame: RawFrame) -> float:
    """Temperature span in degrees Celsius covered by the frame."""
    if frame.data.size == 0:
        raise ValueError("empty frame")
    span = int(frame.data.max()) - int(frame.data.min())
    return span * frame.dpg
