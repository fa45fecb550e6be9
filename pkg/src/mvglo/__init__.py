"""Desk-scale laboratory for motion-vector-domain video steganalysis."""

from .codec import (LagrangeMultiplier, MotionVector, exp_golomb_se_bits,
                    lambda_of_qp, mvd_rate_bits, quantize_reconstruct, rd_cost,
                    sad, satd)
from .embed import CaseLabel, EmbedConfig, bitrate_change_rate, classify_case
from .features import (CostMatrix, FeatureVector, candidate_grid, cost_matrix,
                       symmetrize_glo_mv, symmetrize_glo_pmv)
from .motion import (BlockCodingRecord, FrameCodingRecord, SearchConfig,
                     encode_frame, encode_sequence, median_pmv, search)
from .video_io import Frame, SequenceSpec, read_yuv420, synth_sequence, write_yuv420

__version__ = "0.1.0"
