"""Raw planar YUV 4:2:0 I/O and seeded synthetic sequence generation.

Frames are luma + two quarter-size chroma planes of 8-bit samples.  All
analysis operates on luma only; chroma is carried for format fidelity.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


@dataclass(frozen=True)
class Frame:
    width: int
    height: int
    luma: np.ndarray
    chroma_u: np.ndarray
    chroma_v: np.ndarray

    def __post_init__(self):
        _check_dims(self.width, self.height)
        if self.luma.shape != (self.height, self.width):
            raise ValueError("luma plane shape mismatch")
        cs = (self.height // 2, self.width // 2)
        if self.chroma_u.shape != cs or self.chroma_v.shape != cs:
            raise ValueError("chroma plane shape mismatch")


@dataclass(frozen=True)
class SequenceSpec:
    """Parameters of a synthetic test sequence."""
    width: int = 176
    height: int = 144
    frame_count: int = 32
    seed: int = 1
    motion_amplitude: int = 3
    texture_scale: float = 24.0
    noise_sigma: float = 2.0

    def __post_init__(self):
        _check_dims(self.width, self.height)
        if self.frame_count < 2:
            raise ValueError("frame_count must be >= 2")
        if self.motion_amplitude < 0 or self.texture_scale < 0 or self.noise_sigma < 0:
            raise ValueError("spec parameters must be nonnegative")


def _check_dims(width: int, height: int) -> None:
    if width <= 0 or height <= 0 or width % 16 or height % 16:
        raise ValueError(
            f"frame dimensions must be positive multiples of 16, got {width}x{height}")


def _frame_bytes(width: int, height: int) -> int:
    return width * height * 3 // 2


def read_yuv420(path: str | Path, width: int, height: int) -> list[Frame]:
    """Read a headerless frame-sequential I420 file."""
    _check_dims(width, height)
    data = Path(path).read_bytes()
    fsize = _frame_bytes(width, height)
    if len(data) % fsize:
        raise ValueError(
            f"file size {len(data)} is not a whole number of {width}x{height} frames")
    frames = []
    ysize = width * height
    csize = ysize // 4
    for i in range(len(data) // fsize):
        buf = np.frombuffer(data, dtype=np.uint8, count=fsize, offset=i * fsize)
        frames.append(Frame(
            width, height,
            buf[:ysize].reshape(height, width).copy(),
            buf[ysize:ysize + csize].reshape(height // 2, width // 2).copy(),
            buf[ysize + csize:].reshape(height // 2, width // 2).copy()))
    return frames


def write_yuv420(frames: list[Frame], path: str | Path) -> None:
    """Write frames as headerless frame-sequential I420 (round-trips with
    read_yuv420 bit-exactly)."""
    if frames:
        w, h = frames[0].width, frames[0].height
        for f in frames:
            if f.width != w or f.height != h:
                raise ValueError("frames have mixed dimensions")
    with open(path, "wb") as fh:
        for f in frames:
            fh.write(f.luma.tobytes())
            fh.write(f.chroma_u.tobytes())
            fh.write(f.chroma_v.tobytes())


def _smooth_field(rng: np.random.Generator, h: int, w: int) -> np.ndarray:
    """Unit-variance band-limited random field, wrap-around friendly."""
    base = rng.standard_normal((h, w))
    # separable 7-tap circular box blur keeps the field smooth but textured
    k = 7
    sm = base
    for axis in (0, 1):
        sm = sum(np.roll(sm, s, axis=axis) for s in range(-(k // 2), k // 2 + 1)) / k
    return sm / max(sm.std(), 1e-9)


def _random_rect(rng: np.random.Generator, h: int, w: int,
                 lo: int, hi: int) -> tuple[slice, slice]:
    """Random axis-aligned rectangle with sides in [lo, hi), clamped to the
    frame."""
    rw = min(int(rng.integers(lo, hi)), w)
    rh = min(int(rng.integers(lo, hi)), h)
    rx = int(rng.integers(0, w - rw + 1))
    ry = int(rng.integers(0, h - rh + 1))
    return slice(ry, ry + rh), slice(rx, rx + rw)


def synth_sequence(spec: SequenceSpec) -> list[Frame]:
    """Deterministic synthetic sequence of diagonal shear bands.

    The frame is partitioned into diagonal bands of 16x16 tiles.  All bands
    slide along the shared diagonal axis over a wrapped texture, adjacent
    bands in opposite directions (+amp and -amp).  Motion parallel to the
    band boundary gives nearly every block an exact translational match in
    the previous frame, while the alternation keeps the motion field (and
    everything derived from it) varied at block scale.

    The texture mixes three seed-drawn populations so sequences span a wide
    range of coding difficulty, like natural footage does:

    * a quiet low-contrast base covering the whole frame,
    * high-contrast "detail" patches carrying sensor noise, whose coverage
      and the base contrast both grow with a per-sequence activity level,
    * a few flat mid-gray regions with neither texture nor noise.

    The diagonal orientation, band alternation phase, activity level and all
    patch layouts are drawn from the seed."""
    rng = np.random.default_rng(spec.seed)
    h, w, amp = spec.height, spec.width, spec.motion_amplitude
    tile = 16

    sign = 1 if rng.integers(2) else -1       # main vs anti diagonal
    phase = int(rng.integers(2))              # which band moves +amp
    sigma = spec.noise_sigma * rng.uniform(0.8, 1.25)
    activity = max(0.0, rng.uniform(-0.35, 1.0))

    base = (0.6 + 1.8 * activity * rng.uniform(0.4, 1.0)) * _smooth_field(rng, h, w)
    detail = (spec.texture_scale * rng.uniform(0.6, 1.4)) * _smooth_field(rng, h, w)
    detail_mask = np.zeros((h, w))
    while detail_mask.mean() < 0.65 * activity ** 2:
        detail_mask[_random_rect(rng, h, w, 32, 81)] = 1.0
    tex = 128.0 + base * (1.0 - detail_mask) + detail * detail_mask
    noise_mask = detail_mask.copy()
    for _ in range(int(rng.integers(2, 5))):
        sl = _random_rect(rng, h, w, 32, 65)
        tex[sl] = 128.0
        noise_mask[sl] = 0.0

    py, px = np.mgrid[0:h, 0:w]
    band = (px // tile - py // tile) if sign == 1 else (px // tile + py // tile)
    speed = np.where((band + phase) % 2 == 0, amp, -amp)
    vx = speed
    vy = sign * speed

    frames = []
    for t in range(spec.frame_count):
        plane = tex[(py + t * vy) % h, (px + t * vx) % w]
        if sigma > 0:
            warped_mask = noise_mask[(py + t * vy) % h, (px + t * vx) % w]
            plane = plane + sigma * warped_mask * rng.standard_normal((h, w))
        luma = np.clip(np.round(plane), 0, 255).astype(np.uint8)
        chroma = np.full((h // 2, w // 2), 128, dtype=np.uint8)
        frames.append(Frame(w, h, luma, chroma.copy(), chroma.copy()))
    return frames
