"""Block-matching motion estimation with median MV prediction.

The encoder processes 16x16 macroblocks in raster order.  Each block gets a
PMV from already-decided neighbor MVs, a motion search (exhaustive, diamond
or hexagon) minimizing the Lagrangian cost anchored at the PMV, and a
transform-coded reconstruction that becomes part of the next frame's
reference.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import codec
from .codec import MB_SIZE, MotionVector
from .video_io import Frame

ALGORITHMS = ("ESA", "DIA", "HEX")


@dataclass(frozen=True)
class SearchConfig:
    algorithm: str = "HEX"
    range: int = 16
    qp: int = 15
    distortion_kind_for_me: str = "SAD"

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown search algorithm {self.algorithm!r}")
        if self.range < 1:
            raise ValueError("search range must be >= 1")
        if not 0 <= self.qp <= 51:
            raise ValueError("qp out of range")
        if self.distortion_kind_for_me not in ("SAD", "SATD"):
            raise ValueError("distortion kind must be SAD or SATD")


@dataclass
class BlockCodingRecord:
    block_index: int
    mv: MotionVector
    pmv: MotionVector
    mvd: MotionVector
    sad: int
    satd: int
    rd_cost: float
    mv_changed: bool = False
    pmv_changed: bool = False

    def __post_init__(self):
        if self.mvd != self.mv - self.pmv:
            raise ValueError("mvd must equal mv - pmv")


@dataclass
class FrameCodingRecord:
    frame_index: int
    mb_cols: int
    mb_rows: int
    records: list[BlockCodingRecord]
    reconstructed: Frame

    def __post_init__(self):
        if len(self.records) != self.mb_cols * self.mb_rows:
            raise ValueError("record count does not match macroblock grid")


def median_pmv(vA: MotionVector | None,
               vB: MotionVector | None,
               vC: MotionVector | None) -> MotionVector:
    """Componentwise median of left/top/top-right neighbor MVs with H.264
    availability substitution: none available -> (0,0); only the left
    neighbor -> its MV; otherwise absent entries count as (0,0)."""
    if vA is None and vB is None and vC is None:
        return MotionVector(0, 0)
    if vA is not None and vB is None and vC is None:
        return vA
    zero = MotionVector(0, 0)
    a, b, c = vA or zero, vB or zero, vC or zero
    med = lambda x, y, z: sorted((x, y, z))[1]
    return MotionVector(med(a.h, b.h, c.h), med(a.v, b.v, c.v))


def _clamp_mv_into_frame(mv: MotionVector, x0: int, y0: int, frame_w: int, frame_h: int) -> MotionVector:
    """Clamp a window center so its indicated block lies inside the frame."""
    return MotionVector(
        min(max(mv.h, -x0), frame_w - MB_SIZE - x0),
        min(max(mv.v, -y0), frame_h - MB_SIZE - y0))


class _CandidateEvaluator:
    """Cost bookkeeping for one block's motion search.  Ties are broken
    toward fewer MVD bits, then first-visited order."""

    def __init__(self, current: np.ndarray, ref_luma: np.ndarray,
                 x0: int, y0: int, pmv: MotionVector, cfg: SearchConfig):
        self.current = current.astype(np.int64)
        self.ref = ref_luma
        self.x0, self.y0 = x0, y0
        self.pmv = pmv
        self.lm = codec.lambda_of_qp(cfg.qp)
        self.use_satd = cfg.distortion_kind_for_me == "SATD"
        self.seen: dict[tuple[int, int], tuple] = {}
        self.best: tuple[float, int, int] | None = None  # (cost, bits, order)
        self.best_mv: MotionVector | None = None
        self.best_dist = 0

    def distortion(self, mv: MotionVector) -> int:
        blk = codec.block_at(self.ref, self.x0 + mv.h, self.y0 + mv.v)
        if self.use_satd:
            return codec.satd(self.current, blk)
        return int(np.abs(self.current - blk).sum())

    def visit(self, mv: MotionVector) -> None:
        self.rank_of(mv)

    def rank_of(self, mv: MotionVector) -> tuple:
        """(cost, bits, visit order) rank paired with the MV, cached per
        candidate; updates the running best."""
        key = mv.as_tuple()
        if key in self.seen:
            return self.seen[key]
        d = self.distortion(mv)
        bits = codec.mvd_rate_bits(mv - self.pmv)
        cost = d + self.lm.lam * bits
        rank = (cost, bits, len(self.seen))
        self.seen[key] = (rank, mv)
        if self.best is None or rank < self.best:
            self.best = rank
            self.best_mv = mv
            self.best_dist = d
        return self.seen[key]


def search(current: np.ndarray, reference: Frame, pmv: MotionVector,
           cfg: SearchConfig, x0: int, y0: int) -> tuple[MotionVector, int, float]:
    """Find the MV minimizing distortion + lambda * rate(mv - pmv) over the
    visited positions.  ESA scans the full +-range window centered on the
    pmv (window center clamped into the frame); DIA/HEX run the standard
    refinement patterns from the better of the clamped pmv and (0,0)."""
    ev = _CandidateEvaluator(current, reference.luma, x0, y0, pmv, cfg)
    w, h, r = reference.width, reference.height, cfg.range
    center = _clamp_mv_into_frame(pmv, x0, y0, w, h)

    if cfg.algorithm == "ESA":
        for dv in range(-r, r + 1):
            for dh in range(-r, r + 1):
                ev.visit(MotionVector(center.h + dh, center.v + dv))
    else:
        lo_h, hi_h = center.h - r, center.h + r
        lo_v, hi_v = center.v - r, center.v + r
        in_window = lambda m: lo_h <= m.h <= hi_h and lo_v <= m.v <= hi_v

        starts = [center]
        origin = MotionVector(0, 0)
        if in_window(origin) and origin != center:
            starts.append(origin)

        if cfg.algorithm == "DIA":
            patterns = [[(-1, 0), (1, 0), (0, -1), (0, 1)]]
        else:  # HEX: radius-2 hexagon, then square refinement
            patterns = [[(-2, 0), (2, 0), (-1, -2), (1, -2), (-1, 2), (1, 2)],
                        [(-1, -1), (0, -1), (1, -1), (-1, 0),
                         (1, 0), (-1, 1), (0, 1), (1, 1)]]

        # independent descent from each start; the evaluator keeps the
        # overall winner
        for start in starts:
            here = ev.rank_of(start)
            for pattern in patterns:
                improved = True
                while improved:
                    improved = False
                    base_mv = here[1]
                    for dh, dv in pattern:
                        cand = MotionVector(base_mv.h + dh, base_mv.v + dv)
                        if not in_window(cand):
                            continue
                        rank = ev.rank_of(cand)
                        if rank < here:
                            here = rank
                            improved = True

    return ev.best_mv, ev.best_dist, ev.best[0]


def _neighbor_mvs(mvs: list[MotionVector], col: int, row: int, mb_cols: int
                  ) -> tuple[MotionVector | None, MotionVector | None, MotionVector | None]:
    """Left, top, top-right neighbor MVs; absent top-right falls back to
    top-left when available."""
    idx = lambda c, rr: mvs[rr * mb_cols + c]
    vA = idx(col - 1, row) if col > 0 else None
    vB = idx(col, row - 1) if row > 0 else None
    if row > 0 and col + 1 < mb_cols:
        vC = idx(col + 1, row - 1)
    elif row > 0 and col > 0:
        vC = idx(col - 1, row - 1)  # top-left substitution
    else:
        vC = None
    return vA, vB, vC


def encode_frame(current: Frame, reference: Frame, cfg: SearchConfig,
                 frame_index: int = 0) -> FrameCodingRecord:
    """Motion-compensate one inter frame against a reconstructed reference."""
    if (current.width, current.height) != (reference.width, reference.height):
        raise ValueError("frame dimensions differ")
    w, h = current.width, current.height
    mb_cols, mb_rows = w // MB_SIZE, h // MB_SIZE
    lm = codec.lambda_of_qp(cfg.qp)

    mvs: list[MotionVector] = []
    records: list[BlockCodingRecord] = []
    recon = np.empty((h, w), dtype=np.uint8)

    for row in range(mb_rows):
        for col in range(mb_cols):
            x0, y0 = col * MB_SIZE, row * MB_SIZE
            pmv = median_pmv(*_neighbor_mvs(mvs, col, row, mb_cols))
            cur = current.luma[y0:y0 + MB_SIZE, x0:x0 + MB_SIZE]
            mv, _, _ = search(cur, reference, pmv, cfg, x0, y0)
            pred = codec.block_at(reference.luma, x0 + mv.h, y0 + mv.v)
            d_sad = codec.sad(cur, pred)
            d_satd = codec.satd(cur, pred)
            mvd = mv - pmv
            d_me = d_satd if cfg.distortion_kind_for_me == "SATD" else d_sad
            cost = codec.rd_cost(d_me, mvd, lm)
            recon[y0:y0 + MB_SIZE, x0:x0 + MB_SIZE] = \
                codec.quantize_reconstruct(cur, pred, cfg.qp)
            mvs.append(mv)
            records.append(BlockCodingRecord(
                block_index=row * mb_cols + col, mv=mv, pmv=pmv, mvd=mvd,
                sad=d_sad, satd=d_satd, rd_cost=cost))

    recon_frame = Frame(w, h, recon, current.chroma_u.copy(), current.chroma_v.copy())
    return FrameCodingRecord(frame_index, mb_cols, mb_rows, records, recon_frame)


def encode_sequence(frames: list[Frame], cfg: SearchConfig) -> list[FrameCodingRecord]:
    """Encode frames 1..n-1 against the chain of reconstructions.  Frame 0
    acts as a losslessly reconstructed intra frame and produces no records."""
    if len(frames) < 2:
        raise ValueError("need at least two frames")
    out = []
    reference = frames[0]
    for i in range(1, len(frames)):
        rec = encode_frame(frames[i], reference, cfg, frame_index=i)
        out.append(rec)
        reference = rec.reconstructed
    return out


# --- sidecar serialization (stands in for a bitstream) ---

def write_records(records: list[FrameCodingRecord], path, header_lines: list[str] | None = None) -> None:
    """Text sidecar: one line per block with frame, index, mv, pmv, mvd,
    distortions, cost and change flags."""
    with open(path, "w") as fh:
        for line in header_lines or []:
            fh.write(f"# {line}\n")
        fh.write("# frame block mv_h mv_v pmv_h pmv_v mvd_h mvd_v sad satd rd_cost mv_changed pmv_changed\n")
        for fr in records:
            fh.write(f"@frame {fr.frame_index} {fr.mb_cols} {fr.mb_rows}\n")
            for r in fr.records:
                fh.write(
                    f"{fr.frame_index} {r.block_index} "
                    f"{r.mv.h} {r.mv.v} {r.pmv.h} {r.pmv.v} {r.mvd.h} {r.mvd.v} "
                    f"{r.sad} {r.satd} {r.rd_cost!r} "
                    f"{int(r.mv_changed)} {int(r.pmv_changed)}\n")


def read_records(path, recon_frames: list[Frame] | None = None) -> list[FrameCodingRecord]:
    """Parse a sidecar file; reconstructed frames, when given, must follow
    the same frame order (frames 1..n-1 of the reconstruction chain)."""
    frames: list[FrameCodingRecord] = []
    cur: list[BlockCodingRecord] = []
    meta = None

    def flush():
        nonlocal cur, meta
        if meta is None:
            return
        fi, cols, rows = meta
        recon = None
        if recon_frames is not None:
            recon = recon_frames[len(frames)]
        else:
            recon = Frame(cols * MB_SIZE, rows * MB_SIZE,
                          np.zeros((rows * MB_SIZE, cols * MB_SIZE), dtype=np.uint8),
                          np.zeros((rows * 8, cols * 8), dtype=np.uint8),
                          np.zeros((rows * 8, cols * 8), dtype=np.uint8))
        frames.append(FrameCodingRecord(fi, cols, rows, cur, recon))
        cur, meta = [], None

    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if line.startswith("@frame"):
                flush()
                _, fi, cols, rows = line.split()
                meta = (int(fi), int(cols), int(rows))
                continue
            parts = line.split()
            if len(parts) != 13:
                raise ValueError(f"malformed record line: {line!r}")
            (_, bi, mh, mvv, ph, pv, dh, dv, s, st, cost, mc, pc) = parts
            cur.append(BlockCodingRecord(
                block_index=int(bi),
                mv=MotionVector(int(mh), int(mvv)),
                pmv=MotionVector(int(ph), int(pv)),
                mvd=MotionVector(int(dh), int(dv)),
                sad=int(s), satd=int(st), rd_cost=float(cost),
                mv_changed=bool(int(mc)), pmv_changed=bool(int(pc))))
    flush()
    if not frames:
        raise ValueError(f"no coding records found in {path}")
    return frames
