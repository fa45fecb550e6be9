"""Distortion, rate and Lagrangian cost primitives shared by the encoder,
the embedding simulator and the feature extractor.

All block arithmetic is done on 16x16 luma macroblocks.  Candidate predicted
blocks whose sample coordinates fall outside the reference frame are read
with coordinates clamped to the frame rectangle, so every integer motion
vector is evaluable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

MB_SIZE = 16

# 4x4 Hadamard (entries +-1), used for SATD.
_HADAMARD4 = np.array(
    [[1, 1, 1, 1],
     [1, 1, -1, -1],
     [1, -1, -1, 1],
     [1, -1, 1, -1]], dtype=np.int64)

# Orthonormal 4x4 DCT-II matrix, used for residual coding.
_DCT4 = np.zeros((4, 4))
for _k in range(4):
    _a = math.sqrt(0.25) if _k == 0 else math.sqrt(0.5)
    for _n in range(4):
        _DCT4[_k, _n] = _a * math.cos(math.pi * (2 * _n + 1) * _k / 8.0)
del _k, _n, _a


@dataclass(frozen=True)
class MotionVector:
    """Integer 2-vector in pixel units; also used for PMVs and MVDs."""
    h: int
    v: int

    def __post_init__(self):
        if abs(self.h) > 1 << 15 or abs(self.v) > 1 << 15:
            raise ValueError(f"motion vector component out of range: {self}")

    def __add__(self, other: "MotionVector") -> "MotionVector":
        return MotionVector(self.h + other.h, self.v + other.v)

    def __sub__(self, other: "MotionVector") -> "MotionVector":
        return MotionVector(self.h - other.h, self.v - other.v)

    def as_tuple(self) -> tuple[int, int]:
        return (self.h, self.v)


@dataclass(frozen=True)
class LagrangeMultiplier:
    qp: int
    lam: float


def lambda_of_qp(qp: int) -> LagrangeMultiplier:
    """Lagrangian multiplier sqrt(0.85 * 2^((qp-12)/3)) for qp in [0, 51]."""
    if not 0 <= qp <= 51:
        raise ValueError(f"qp out of range [0, 51]: {qp}")
    return LagrangeMultiplier(qp, math.sqrt(0.85 * 2.0 ** ((qp - 12) / 3.0)))


def qstep_of_qp(qp: int) -> float:
    """Quantization step 0.625 * 2^(qp/6) (continuous approximation)."""
    if not 0 <= qp <= 51:
        raise ValueError(f"qp out of range [0, 51]: {qp}")
    return 0.625 * 2.0 ** (qp / 6.0)


def exp_golomb_se_bits(k: int) -> int:
    """Bit length of the signed exp-Golomb codeword for k."""
    k = int(k)
    if abs(k) >= 1 << 15:
        raise ValueError(f"mvd component out of range: {k}")
    c = 2 * abs(k) - (1 if k > 0 else 0)
    return 2 * ((c + 1).bit_length() - 1) + 1


def exp_golomb_se_bits_array(k: np.ndarray) -> np.ndarray:
    """Vectorized exp_golomb_se_bits over an integer array."""
    k = np.asarray(k, dtype=np.int64)
    c = 2 * np.abs(k) - (k > 0)
    # floor(log2(c+1)) via frexp: c+1 = m * 2^e with 0.5 <= m < 1
    _, e = np.frexp((c + 1).astype(np.float64))
    return (2 * (e - 1) + 1).astype(np.int64)


def mvd_rate_bits(mvd: MotionVector) -> int:
    return exp_golomb_se_bits(mvd.h) + exp_golomb_se_bits(mvd.v)


def rd_cost(distortion: int, mvd: MotionVector, lm: LagrangeMultiplier) -> float:
    """Lagrangian cost: distortion + lambda * rate(mvd)."""
    return float(distortion) + lm.lam * mvd_rate_bits(mvd)


def block_at(luma: np.ndarray, x0: int, y0: int, size: int = MB_SIZE) -> np.ndarray:
    """Read a size x size block at (x0, y0) with coordinates clamped to the
    frame rectangle (replicates border samples for out-of-frame positions)."""
    h, w = luma.shape
    if 0 <= x0 and x0 + size <= w and 0 <= y0 and y0 + size <= h:
        return luma[y0:y0 + size, x0:x0 + size]
    ys = np.clip(np.arange(y0, y0 + size), 0, h - 1)
    xs = np.clip(np.arange(x0, x0 + size), 0, w - 1)
    return luma[np.ix_(ys, xs)]


def sad(a: np.ndarray, b: np.ndarray) -> int:
    """Sum of absolute differences between two equally sized blocks."""
    if a.shape != b.shape:
        raise ValueError("block shapes differ")
    return int(np.abs(a.astype(np.int64) - b.astype(np.int64)).sum())


def _tile_4x4(residual: np.ndarray) -> np.ndarray:
    """(16,16) residual -> (16,4,4) stack of its 4x4 tiles."""
    n = residual.shape[0] // 4
    return (residual.reshape(n, 4, n, 4)
            .transpose(0, 2, 1, 3)
            .reshape(n * n, 4, 4))


def _untile_4x4(tiles: np.ndarray, size: int) -> np.ndarray:
    n = size // 4
    return (tiles.reshape(n, n, 4, 4)
            .transpose(0, 2, 1, 3)
            .reshape(size, size))


def satd(a: np.ndarray, b: np.ndarray) -> int:
    """Sum of absolute 4x4-Hadamard-transformed differences, halved
    (conventional normalization).  Integer division is exact enough for
    ranking: a nonzero residual always yields a nonzero SATD."""
    if a.shape != b.shape:
        raise ValueError("block shapes differ")
    r = a.astype(np.int64) - b.astype(np.int64)
    tiles = _tile_4x4(r)
    coeff = np.einsum("ab,tbc,dc->tad", _HADAMARD4, tiles, _HADAMARD4)
    return int(np.abs(coeff).sum()) // 2


def satd_batch(residuals: np.ndarray) -> np.ndarray:
    """SATD for a stack of (n,16,16) integer residuals."""
    n = residuals.shape[0]
    tiles = (residuals.reshape(n, 4, 4, 4, 4)
             .transpose(0, 1, 3, 2, 4)
             .reshape(n * 16, 4, 4))
    coeff = np.einsum("ab,tbc,dc->tad", _HADAMARD4, tiles, _HADAMARD4)
    sums = np.abs(coeff).sum(axis=(1, 2)).reshape(n, 16).sum(axis=1)
    return sums // 2


def sad_batch(residuals: np.ndarray) -> np.ndarray:
    """SAD for a stack of (n,16,16) integer residuals."""
    return np.abs(residuals).sum(axis=(1, 2))


def quantize_reconstruct(current: np.ndarray, predicted: np.ndarray, qp: int) -> np.ndarray:
    """Transform-code the residual (orthonormal 4x4 DCT, uniform mid-tread
    quantization at Qstep(qp)) and return the clamped 8-bit reconstruction."""
    qstep = qstep_of_qp(qp)
    r = current.astype(np.float64) - predicted.astype(np.float64)
    tiles = _tile_4x4(r)
    coeff = np.einsum("ab,tbc,dc->tad", _DCT4, tiles, _DCT4)
    deq = np.round(coeff / qstep) * qstep
    rec_r = np.einsum("ba,tbc,cd->tad", _DCT4, deq, _DCT4)
    rec = predicted.astype(np.float64) + _untile_4x4(rec_r, current.shape[0])
    return np.clip(np.round(rec), 0, 255).astype(np.uint8)
