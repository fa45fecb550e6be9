"""Simulated +-1 motion-vector embedding with full decoder-state re-derivation.

A seeded, exact-size random subset of MVs receives a +-1 change on one
component.  PMVs, MVDs, residual coding and the reconstruction chain are
then re-derived frame by frame so that all decoder-visible state reflects
the modified MV field.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from . import codec
from .codec import MB_SIZE, MotionVector
from .motion import (BlockCodingRecord, FrameCodingRecord, _neighbor_mvs,
                     median_pmv)
from .video_io import Frame

COMPONENT_MODES = ("horizontal-or-vertical", "horizontal-only", "vertical-only")


@dataclass(frozen=True)
class EmbedConfig:
    change_rate: float
    seed: int = 0
    component_mode: str = "horizontal-or-vertical"

    def __post_init__(self):
        if not 0.0 <= self.change_rate <= 1.0:
            raise ValueError("change_rate must be in [0, 1]")
        if self.component_mode not in COMPONENT_MODES:
            raise ValueError(f"unknown component mode {self.component_mode!r}")


class CaseLabel(enum.Enum):
    """2x2 classification of a block by PMV/MV change under embedding."""
    CASE1 = 1  # neither changed
    CASE2 = 2  # MV only
    CASE3 = 3  # PMV only
    CASE4 = 4  # both


def _pick_changes(n_blocks: int, cfg: EmbedConfig) -> dict[int, tuple[int, int]]:
    """Choose an exact round(p*N)-sized subset of flat block indices and a
    +-1 delta for one component of each."""
    rng = np.random.default_rng(cfg.seed)
    n_changes = int(round(cfg.change_rate * n_blocks))
    chosen = rng.choice(n_blocks, size=n_changes, replace=False)
    signs = rng.integers(0, 2, size=n_changes) * 2 - 1
    if cfg.component_mode == "horizontal-only":
        comps = np.zeros(n_changes, dtype=np.int64)
    elif cfg.component_mode == "vertical-only":
        comps = np.ones(n_changes, dtype=np.int64)
    else:
        comps = rng.integers(0, 2, size=n_changes)
    out = {}
    for flat, comp, sign in zip(chosen, comps, signs):
        delta = (int(sign), 0) if comp == 0 else (0, int(sign))
        out[int(flat)] = delta
    return out


def embed(encoded: list[FrameCodingRecord], original_frames: list[Frame],
          cfg: EmbedConfig, qp: int) -> list[FrameCodingRecord]:
    """Apply +-1 embedding to the MV field and re-derive all decoder-visible
    state (PMVs, MVDs, residuals, reconstruction chain, change flags)."""
    if len(original_frames) != len(encoded) + 1:
        raise ValueError("original_frames must cover intra frame plus all coded frames")
    lm = codec.lambda_of_qp(qp)
    n_blocks = sum(len(fr.records) for fr in encoded)
    changes = _pick_changes(n_blocks, cfg)

    out: list[FrameCodingRecord] = []
    reference = original_frames[0]
    flat_base = 0
    for fr in encoded:
        current = original_frames[fr.frame_index]
        mb_cols, mb_rows = fr.mb_cols, fr.mb_rows
        new_mvs: list[MotionVector] = []
        new_records: list[BlockCodingRecord] = []
        recon = np.empty_like(current.luma)

        for row in range(mb_rows):
            for col in range(mb_cols):
                bi = row * mb_cols + col
                old = fr.records[bi]
                delta = changes.get(flat_base + bi)
                mv = old.mv if delta is None else old.mv + MotionVector(*delta)
                pmv = median_pmv(*_neighbor_mvs(new_mvs, col, row, mb_cols))
                mvd = mv - pmv
                x0, y0 = col * MB_SIZE, row * MB_SIZE
                cur = current.luma[y0:y0 + MB_SIZE, x0:x0 + MB_SIZE]
                pred = codec.block_at(reference.luma, x0 + mv.h, y0 + mv.v)
                d_sad = codec.sad(cur, pred)
                d_satd = codec.satd(cur, pred)
                recon[y0:y0 + MB_SIZE, x0:x0 + MB_SIZE] = \
                    codec.quantize_reconstruct(cur, pred, qp)
                new_mvs.append(mv)
                new_records.append(BlockCodingRecord(
                    block_index=bi, mv=mv, pmv=pmv, mvd=mvd,
                    sad=d_sad, satd=d_satd,
                    rd_cost=codec.rd_cost(d_sad, mvd, lm),
                    mv_changed=delta is not None,
                    pmv_changed=pmv != old.pmv))

        recon_frame = Frame(current.width, current.height, recon,
                            current.chroma_u.copy(), current.chroma_v.copy())
        out.append(FrameCodingRecord(fr.frame_index, mb_cols, mb_rows,
                                     new_records, recon_frame))
        reference = recon_frame
        flat_base += len(fr.records)
    return out


def classify_case(cover_record: BlockCodingRecord,
                  stego_record: BlockCodingRecord) -> CaseLabel:
    if cover_record.block_index != stego_record.block_index:
        raise ValueError("records refer to different blocks")
    mv_ch = cover_record.mv != stego_record.mv
    pmv_ch = cover_record.pmv != stego_record.pmv
    if mv_ch and pmv_ch:
        return CaseLabel.CASE4
    if pmv_ch:
        return CaseLabel.CASE3
    if mv_ch:
        return CaseLabel.CASE2
    return CaseLabel.CASE1


def _paired_records(cover: list[FrameCodingRecord], stego: list[FrameCodingRecord]):
    if len(cover) != len(stego):
        raise ValueError("cover/stego sequences differ in length")
    for cf, sf in zip(cover, stego):
        if len(cf.records) != len(sf.records):
            raise ValueError("cover/stego frames differ in block count")
        yield from zip(cf.records, sf.records)


def mv_change_rate(cover: list[FrameCodingRecord], stego: list[FrameCodingRecord]) -> float:
    pairs = list(_paired_records(cover, stego))
    return sum(c.mv != s.mv for c, s in pairs) / len(pairs)


def pmv_change_rate(cover: list[FrameCodingRecord], stego: list[FrameCodingRecord]) -> float:
    pairs = list(_paired_records(cover, stego))
    return sum(c.pmv != s.pmv for c, s in pairs) / len(pairs)


def bitrate_change_rate(cover: list[FrameCodingRecord], stego: list[FrameCodingRecord]) -> float:
    """Fraction of blocks whose MVD bit length differs between cover and stego."""
    pairs = list(_paired_records(cover, stego))
    return sum(codec.mvd_rate_bits(c.mvd) != codec.mvd_rate_bits(s.mvd)
               for c, s in pairs) / len(pairs)
