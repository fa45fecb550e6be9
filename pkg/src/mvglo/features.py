"""Decoder-side extraction of generalized local-optimality features.

For every coded block, a 9x9 cost matrix is formed over the 3x3 candidate
grids around the decoded MV (columns) and decoded PMV (rows).  Distortions
depend on the MV candidate only, so 9 SAD/SATD values and 81 rate terms
suffice per matrix.  Per-sequence features aggregate row-minimum events
(MV direction), column-minimum events (PMV direction), and exponentially
magnified cost gaps, plus reconstructed baseline slices.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import codec
from .codec import MB_SIZE, MotionVector
from .motion import FrameCodingRecord
from .video_io import Frame

# 3x3 candidate grid: index j in 1..9 (row-major), offset table below.
# members[5] is the center; members[4] is center + (-1, 0).
GRID_OFFSETS = np.array([((j - 1) % 3 - 1, (j - 1) // 3 - 1) for j in range(1, 10)],
                        dtype=np.int64)

CORNERS = (1, 3, 7, 9)
EDGES = (2, 4, 6, 8)
CENTER = (5,)

VARIANT_DIMS = {
    "glo-mv-324": 324,
    "glo-pmv-162": 162,
    "glo-mv-36": 36,
    "glo-pmv-28": 28,
    "glo-64": 64,
    "npe-36": 36,
    "aoso-18": 18,
}

# The 8 symmetries of the 3x3 grid as permutations of 1..9 (identity,
# rotations, reflections), acting on grid indices.
def _dihedral_perms() -> list[np.ndarray]:
    coords = {j: ((j - 1) % 3 - 1, (j - 1) // 3 - 1) for j in range(1, 10)}
    inv = {v: k for k, v in coords.items()}
    maps = [
        lambda x, y: (x, y),
        lambda x, y: (-y, x),
        lambda x, y: (-x, -y),
        lambda x, y: (y, -x),
        lambda x, y: (-x, y),
        lambda x, y: (x, -y),
        lambda x, y: (y, x),
        lambda x, y: (-y, -x),
    ]
    perms = []
    for m in maps:
        perms.append(np.array([inv[m(*coords[j])] for j in range(1, 10)],
                              dtype=np.int64))
    return perms

DIHEDRAL_PERMS = _dihedral_perms()  # each maps index j -> transformed index


def candidate_grid(center: MotionVector, perm: np.ndarray | None = None) -> list[MotionVector]:
    """The 3x3 integer neighborhood of center, indexed 1..9 row-major.
    An optional permutation relabels which offset each index receives."""
    offsets = GRID_OFFSETS if perm is None else GRID_OFFSETS[np.asarray(perm) - 1]
    return [MotionVector(center.h + int(dx), center.v + int(dy)) for dx, dy in offsets]


@dataclass
class CostMatrix:
    """9x9 rate-distortion costs; rows = PMV candidate i, cols = MV candidate j."""
    j_sad: np.ndarray
    j_satd: np.ndarray


def _rate_matrix(mvd: MotionVector, lam: float, offsets: np.ndarray) -> np.ndarray:
    """lambda * bits(V^j - P^i) for all 81 combinations; depends on the
    decoded MVD only."""
    dh = mvd.h + offsets[None, :, 0] - offsets[:, None, 0]
    dv = mvd.v + offsets[None, :, 1] - offsets[:, None, 1]
    bits = codec.exp_golomb_se_bits_array(dh) + codec.exp_golomb_se_bits_array(dv)
    return lam * bits


def _candidate_distortions(cur: np.ndarray, ref_luma: np.ndarray,
                           x0: int, y0: int, mv: MotionVector,
                           offsets: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """SAD and SATD of the current block against the 9 candidate predicted
    blocks (computed once per column; rows reuse them)."""
    stack = np.empty((9, MB_SIZE, MB_SIZE), dtype=np.int64)
    for j in range(9):
        stack[j] = codec.block_at(ref_luma,
                                  x0 + mv.h + int(offsets[j, 0]),
                                  y0 + mv.v + int(offsets[j, 1]))
    resid = cur.astype(np.int64)[None, :, :] - stack
    return codec.sad_batch(resid), codec.satd_batch(resid)


def cost_matrix(current_recon_block: np.ndarray, reference_recon: Frame,
                mv: MotionVector, pmv: MotionVector, qp: int,
                x0: int, y0: int, perm: np.ndarray | None = None) -> CostMatrix:
    """Decoder-side 9x9 cost matrices for one block (SAD and SATD based)."""
    offsets = GRID_OFFSETS if perm is None else GRID_OFFSETS[np.asarray(perm) - 1]
    lam = codec.lambda_of_qp(qp).lam
    d_sad, d_satd = _candidate_distortions(
        current_recon_block, reference_recon.luma, x0, y0, mv, offsets)
    rate = _rate_matrix(mv - pmv, lam, offsets)
    return CostMatrix(j_sad=d_sad[None, :] + rate, j_satd=d_satd[None, :] + rate)


@dataclass
class RawFeatures:
    """Per-sequence aggregation state and resulting raw feature blocks.

    f1/f2 arrays are indexed [i-1, j-1]; f3/f4 arrays likewise (flattening
    to the published k-orderings happens in the vector builders)."""
    n_blocks: int = 0
    f1_count: np.ndarray = field(default_factory=lambda: np.zeros((2, 9, 9)))
    f2_sum: np.ndarray = field(default_factory=lambda: np.zeros((2, 9, 9)))
    f3_count: np.ndarray = field(default_factory=lambda: np.zeros((9, 9)))
    f4_sum: np.ndarray = field(default_factory=lambda: np.zeros((9, 9)))
    aoso_count: np.ndarray = field(default_factory=lambda: np.zeros(9))
    aoso_sum: np.ndarray = field(default_factory=lambda: np.zeros(9))
    row_ties: int = 0
    col_ties: int = 0
    f2_skipped: int = 0
    f4_skipped: int = 0

    def add_block(self, cm: CostMatrix, d_sad: np.ndarray) -> None:
        self.n_blocks += 1
        for d_idx, J in enumerate((cm.j_sad, cm.j_satd)):
            row_min = J.min(axis=1)
            winners = J == row_min[:, None]
            self.f1_count[d_idx] += winners
            self.row_ties += int((winners.sum(axis=1) > 1).sum())
            ref = J[:, 4]
            if np.all(ref > 0):
                # winning costs never exceed the reference cell, so the
                # masked exponent stays in [0, 1]
                gap = np.where(winners, np.abs(ref[:, None] - J) / ref[:, None], 0.0)
                self.f2_sum[d_idx] += np.exp(gap) * winners
            else:
                self.f2_skipped += 1
        J = cm.j_sad
        col_min = J.min(axis=0)
        cwin = J == col_min[None, :]
        self.f3_count += cwin
        self.col_ties += int((cwin.sum(axis=0) > 1).sum())
        ref = J[4, :]
        if np.all(ref > 0):
            gap = np.where(cwin, np.abs(ref[None, :] - J) / ref[None, :], 0.0)
            self.f4_sum += np.exp(gap) * cwin
        else:
            self.f4_skipped += 1
        # rate-free baseline slice (AoSO analog): distortion only
        dwin = d_sad == d_sad.min()
        self.aoso_count += dwin
        if d_sad[4] > 0:
            self.aoso_sum += np.exp(np.where(dwin, np.abs(d_sad[4] - d_sad) / d_sad[4], 0.0)) * dwin

    # --- normalized raw blocks ---

    def _require_nonempty(self):
        if self.n_blocks == 0:
            raise ValueError("no blocks accumulated")

    def f1(self, d_idx: int) -> np.ndarray:
        """81-vector, k = 9*(i-1)+j."""
        self._require_nonempty()
        return (self.f1_count[d_idx] / self.n_blocks).reshape(81)

    def f2(self, d_idx: int) -> np.ndarray:
        self._require_nonempty()
        z = self.f2_sum[d_idx].sum()
        if z == 0:
            return np.zeros(81)
        return (self.f2_sum[d_idx] / z).reshape(81)

    def f3(self) -> np.ndarray:
        """81-vector, k = 9*(j-1)+i."""
        self._require_nonempty()
        return (self.f3_count / self.n_blocks).T.reshape(81)

    def f4(self) -> np.ndarray:
        self._require_nonempty()
        z = self.f4_sum.sum()
        if z == 0:
            return np.zeros(81)
        return (self.f4_sum / z).T.reshape(81)

    def aoso(self) -> np.ndarray:
        self._require_nonempty()
        z = self.aoso_sum.sum()
        expo = self.aoso_sum / z if z > 0 else np.zeros(9)
        return np.concatenate([self.aoso_count / self.n_blocks, expo])


def accumulate_sequence(records: list[FrameCodingRecord], intra_frame: Frame,
                        qp: int, perm: np.ndarray | None = None) -> RawFeatures:
    """Aggregate cost-matrix events over every inter-coded block of a
    sequence, using decoder-visible reconstructions only."""
    offsets = GRID_OFFSETS if perm is None else GRID_OFFSETS[np.asarray(perm) - 1]
    lam = codec.lambda_of_qp(qp).lam
    raw = RawFeatures()
    reference = intra_frame
    for fr in records:
        luma = fr.reconstructed.luma
        for r in fr.records:
            col = r.block_index % fr.mb_cols
            row = r.block_index // fr.mb_cols
            x0, y0 = col * MB_SIZE, row * MB_SIZE
            cur = luma[y0:y0 + MB_SIZE, x0:x0 + MB_SIZE]
            d_sad, d_satd = _candidate_distortions(
                cur, reference.luma, x0, y0, r.mv, offsets)
            rate = _rate_matrix(r.mvd, lam, offsets)
            cm = CostMatrix(j_sad=d_sad[None, :] + rate,
                            j_satd=d_satd[None, :] + rate)
            raw.add_block(cm, d_sad.astype(np.float64))
        reference = fr.reconstructed
    return raw


# --- symmetrization ---

def _mv_groups() -> list[tuple[tuple[int, ...], tuple[int, ...]]]:
    gi = (CORNERS, EDGES, CENTER)
    gj = (CENTER, EDGES, CORNERS)
    return [(I, J) for I in gi for J in gj]

_MV_GROUPS = _mv_groups()

# GLO-PMV pooling subsets: (j, i) index pairs per pooled cell, derived by
# mapping the published per-corner/per-edge subset pattern through the grid
# symmetry that sends the reference candidate onto each group member.
_PMV_GROUPS: list[list[tuple[int, int]]] = [
    [(1, 1), (3, 3), (7, 7), (9, 9)],
    [(1, 2), (1, 4), (3, 2), (3, 6), (7, 4), (7, 8), (9, 6), (9, 8)],
    [(1, 5), (3, 5), (7, 5), (9, 5)],
    [(1, 3), (1, 7), (9, 3), (9, 7), (3, 1), (3, 9), (7, 1), (7, 9)],
    [(1, 6), (1, 8), (3, 4), (3, 8), (7, 2), (7, 6), (9, 2), (9, 4)],
    [(1, 9), (3, 7), (7, 3), (9, 1)],
    [(2, 2), (4, 4), (6, 6), (8, 8)],
    [(2, 1), (2, 3), (2, 5), (4, 1), (4, 5), (4, 7), (6, 3), (6, 5), (6, 9),
     (8, 5), (8, 7), (8, 9)],
    [(2, 4), (2, 6), (8, 4), (8, 6), (4, 2), (4, 8), (6, 2), (6, 8)],
    [(2, 8), (4, 6), (6, 4), (8, 2)],
    [(2, 7), (2, 9), (4, 3), (4, 9), (6, 1), (6, 7), (8, 1), (8, 3)],
    [(5, 5)],
    [(5, 2), (5, 4), (5, 6), (5, 8)],
    [(5, 1), (5, 3), (5, 7), (5, 9)],
]


def symmetrize_glo_mv(raw_blocks: dict[str, np.ndarray]) -> np.ndarray:
    """Pool the four raw 81-vectors (f1/f2 x SAD/SATD) into 36 values using
    the corners/edges/center grouping of both candidate grids.  Probability
    type cells average over pooled PMV indices; exponential type cells sum
    (the global normalizer already applies)."""
    out = []
    for name in ("f1_sad", "f1_satd", "f2_sad", "f2_satd"):
        v = raw_blocks[name].reshape(9, 9)  # [i-1, j-1]
        prob = name.startswith("f1")
        for I, J in _MV_GROUPS:
            cell = sum(v[i - 1, j - 1] for i in I for j in J)
            out.append(cell / len(I) if prob else cell)
    return np.array(out)


def symmetrize_glo_pmv(raw_blocks: dict[str, np.ndarray]) -> np.ndarray:
    """Pool the two raw 81-vectors (f3, f4) into 28 values using the
    direction-relative PMV subsets (6 per corner MV group, 5 per edge group,
    3 for the center MV)."""
    out = []
    for name in ("f3", "f4"):
        v = raw_blocks[name].reshape(9, 9).T  # back to [i-1, j-1] layout
        prob = name == "f3"
        for group in _PMV_GROUPS:
            cell = sum(v[i - 1, j - 1] for j, i in group)
            if prob:
                cell /= len({j for j, _ in group})
            out.append(cell)
    return np.array(out)


def raw_blocks(raw: RawFeatures) -> dict[str, np.ndarray]:
    return {
        "f1_sad": raw.f1(0), "f1_satd": raw.f1(1),
        "f2_sad": raw.f2(0), "f2_satd": raw.f2(1),
        "f3": raw.f3(), "f4": raw.f4(),
    }


@dataclass(frozen=True)
class FeatureVector:
    variant: str
    values: np.ndarray

    def __post_init__(self):
        if self.variant not in VARIANT_DIMS:
            raise ValueError(f"unknown variant {self.variant!r}")
        if len(self.values) != VARIANT_DIMS[self.variant]:
            raise ValueError(
                f"{self.variant} expects {VARIANT_DIMS[self.variant]} values, "
                f"got {len(self.values)}")


def _npe36(blocks: dict[str, np.ndarray]) -> np.ndarray:
    """i=5 row slice of the four raw GLO-MV blocks (static-PMV baseline)."""
    sel = [9 * 4 + j for j in range(9)]  # k = 9*(i-1)+j with i=5
    return np.concatenate([blocks[n][sel]
                           for n in ("f1_sad", "f1_satd", "f2_sad", "f2_satd")])


def feature_vector(raw: RawFeatures, variant: str) -> FeatureVector:
    blocks = raw_blocks(raw)
    if variant == "glo-mv-324":
        values = np.concatenate([blocks[n] for n in
                                 ("f1_sad", "f1_satd", "f2_sad", "f2_satd")])
    elif variant == "glo-pmv-162":
        values = np.concatenate([blocks["f3"], blocks["f4"]])
    elif variant == "glo-mv-36":
        values = symmetrize_glo_mv(blocks)
    elif variant == "glo-pmv-28":
        values = symmetrize_glo_pmv(blocks)
    elif variant == "glo-64":
        values = np.concatenate([symmetrize_glo_mv(blocks),
                                 symmetrize_glo_pmv(blocks)])
    elif variant == "npe-36":
        values = _npe36(blocks)
    elif variant == "aoso-18":
        values = raw.aoso()
    else:
        raise ValueError(f"unknown variant {variant!r}")
    return FeatureVector(variant, values)


def extract(records: list[FrameCodingRecord], intra_frame: Frame, qp: int,
            variant: str) -> FeatureVector:
    """Per-sequence feature vector of the requested variant."""
    if not records:
        raise ValueError("empty record sequence")
    return feature_vector(accumulate_sequence(records, intra_frame, qp), variant)


# --- CSV interchange ---

def write_features_csv(path, variant: str,
                       rows: list[tuple[str, int, np.ndarray]],
                       header_lines: list[str] | None = None) -> None:
    """One row per sequence: seq_id, label, then the feature coordinates."""
    dim = VARIANT_DIMS[variant]
    with open(path, "w") as fh:
        for line in header_lines or []:
            fh.write(f"# {line}\n")
        cols = ",".join(f"v{i+1}" for i in range(dim))
        fh.write(f"seq_id,label,variant,{cols}\n")
        for seq_id, label, values in rows:
            vals = ",".join(repr(float(x)) for x in values)
            fh.write(f"{seq_id},{label},{variant},{vals}\n")


def read_features_csv(path) -> tuple[str, list[str], np.ndarray, np.ndarray]:
    """Returns (variant, seq_ids, labels, feature matrix)."""
    seq_ids, labels, rows = [], [], []
    variant = None
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#") or line.startswith("seq_id,"):
                continue
            parts = line.split(",")
            seq_ids.append(parts[0])
            labels.append(int(parts[1]))
            if variant is None:
                variant = parts[2]
            elif variant != parts[2]:
                raise ValueError("mixed variants in one feature file")
            rows.append([float(x) for x in parts[3:]])
    if variant is None:
        raise ValueError(f"no feature rows in {path}")
    return variant, seq_ids, np.array(labels), np.array(rows)
