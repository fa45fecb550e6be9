"""Exploratory measurements: change-rate curves, four-case tables and
local-optimality heatmaps over a cover/stego corpus."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import codec, embed as embed_mod, features
from .embed import CaseLabel, EmbedConfig, classify_case
from .motion import FrameCodingRecord
from .video_io import Frame


@dataclass(frozen=True)
class SweepRow:
    p: float
    mv_rate: float
    pmv_rate: float
    bitrate_rate: float


@dataclass(frozen=True)
class FourCaseReport:
    """Occurrence frequencies and conditional local-optimality frequencies
    of the four PMV/MV change cases, at one change rate and qp."""
    occurrence: dict[CaseLabel, float]
    optimality: dict[CaseLabel, float]
    qp: int


def change_rate_sweep(corpus: list[tuple[list[FrameCodingRecord], list[Frame]]],
                      rates: list[float], qp: int, seed: int) -> list[SweepRow]:
    """Measure realized MV/PMV/bit-rate change rates per target rate p.
    Each corpus entry is (cover records, original frames)."""
    if not corpus:
        raise ValueError("empty corpus")
    rows = []
    for p in rates:
        mv_n = pmv_n = br_n = total = 0
        for k, (cover, frames) in enumerate(corpus):
            stego = embed_mod.embed(cover, frames,
                                    EmbedConfig(p, seed=seed + k), qp)
            pairs = list(embed_mod._paired_records(cover, stego))
            total += len(pairs)
            mv_n += sum(c.mv != s.mv for c, s in pairs)
            pmv_n += sum(c.pmv != s.pmv for c, s in pairs)
            br_n += sum(codec.mvd_rate_bits(c.mvd) != codec.mvd_rate_bits(s.mvd)
                        for c, s in pairs)
        rows.append(SweepRow(p, mv_n / total, pmv_n / total, br_n / total))
    return rows


def _decoder_row_optimal(stego_records: list[FrameCodingRecord],
                         intra_frame: Frame, qp: int) -> list[bool]:
    """Per block: is the decoded MV cost-minimal over its 3x3 neighborhood
    at the decoder-visible (post-embedding) PMV?"""
    lam = codec.lambda_of_qp(qp).lam
    out = []
    reference = intra_frame
    for fr in stego_records:
        luma = fr.reconstructed.luma
        for r in fr.records:
            col = r.block_index % fr.mb_cols
            row = r.block_index // fr.mb_cols
            x0, y0 = col * codec.MB_SIZE, row * codec.MB_SIZE
            cur = luma[y0:y0 + codec.MB_SIZE, x0:x0 + codec.MB_SIZE]
            d_sad, _ = features._candidate_distortions(
                cur, reference.luma, x0, y0, r.mv, features.GRID_OFFSETS)
            rate = features._rate_matrix(r.mvd, lam, features.GRID_OFFSETS)
            costs = d_sad + rate[4, :]  # decoder-visible PMV row (i = 5)
            out.append(bool(costs[4] == costs.min()))
        reference = fr.reconstructed
    return out


def four_case_report(cover: list[FrameCodingRecord],
                     stego: list[FrameCodingRecord],
                     intra_frame: Frame, qp: int) -> FourCaseReport:
    """Case occurrence frequencies and, per case, the frequency that the
    decoded MV is conventionally locally optimal at the decoder."""
    labels = [classify_case(c, s)
              for c, s in embed_mod._paired_records(cover, stego)]
    optimal = _decoder_row_optimal(stego, intra_frame, qp)
    occurrence, optimality = {}, {}
    n = len(labels)
    for case in CaseLabel:
        idx = [i for i, lab in enumerate(labels) if lab is case]
        occurrence[case] = len(idx) / n
        optimality[case] = (sum(optimal[i] for i in idx) / len(idx)) if idx else 0.0
    return FourCaseReport(occurrence, optimality, qp)


def four_case_report_corpus(pairs: list[tuple[list[FrameCodingRecord],
                                              list[FrameCodingRecord], Frame]],
                            qp: int) -> FourCaseReport:
    """Pooled four-case report over (cover, stego, intra frame) triples."""
    occ = {c: 0.0 for c in CaseLabel}
    opt_n = {c: 0.0 for c in CaseLabel}
    cnt = {c: 0 for c in CaseLabel}
    total = 0
    for cover, stego, intra in pairs:
        labels = [classify_case(c, s)
                  for c, s in embed_mod._paired_records(cover, stego)]
        optimal = _decoder_row_optimal(stego, intra, qp)
        total += len(labels)
        for lab, o in zip(labels, optimal):
            cnt[lab] += 1
            opt_n[lab] += o
    for c in CaseLabel:
        occ[c] = cnt[c] / total
        opt_n[c] = opt_n[c] / cnt[c] if cnt[c] else 0.0
    return FourCaseReport(occ, opt_n, qp)


def optimality_heatmaps(raw: features.RawFeatures, direction: str) -> np.ndarray:
    """Raw probability features reshaped to 9 conditioned 3x3 grids:
    direction 'MV' -> per PMV candidate i, Pr over MV candidates j (SAD);
    direction 'PMV' -> per MV candidate j, Pr over PMV candidates i."""
    if direction == "MV":
        return raw.f1(0).reshape(9, 3, 3)
    if direction == "PMV":
        return raw.f3().reshape(9, 3, 3)
    raise ValueError("direction must be 'MV' or 'PMV'")


def write_sweep_csv(path, rows: list[SweepRow], header_lines=None) -> None:
    with open(path, "w") as fh:
        for line in header_lines or []:
            fh.write(f"# {line}\n")
        fh.write("p,mv_rate,pmv_rate,bitrate_rate\n")
        for r in rows:
            fh.write(f"{r.p!r},{r.mv_rate!r},{r.pmv_rate!r},{r.bitrate_rate!r}\n")


def write_four_case_csv(path, reports: list[tuple[float, FourCaseReport]],
                        header_lines=None) -> None:
    with open(path, "w") as fh:
        for line in header_lines or []:
            fh.write(f"# {line}\n")
        fh.write("p,case,occurrence,optimality\n")
        for p, rep in reports:
            for case in CaseLabel:
                fh.write(f"{p!r},{case.value},"
                         f"{rep.occurrence[case]!r},{rep.optimality[case]!r}\n")


def write_heatmap_csv(path, grids: np.ndarray, direction: str,
                      header_lines=None) -> None:
    with open(path, "w") as fh:
        for line in header_lines or []:
            fh.write(f"# {line}\n")
        fh.write("conditioning_index,cell_index,value\n")
        for cond in range(9):
            flat = grids[cond].reshape(9)
            for cell in range(9):
                fh.write(f"{cond + 1},{cell + 1},{flat[cell]!r}\n")
