"""End-to-end experiment orchestration shared by the CLI and the tests:
synthesize -> encode -> embed -> extract -> stats -> train/eval."""

from __future__ import annotations

import hashlib
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import classify, embed as embed_mod, features, motion, stats, video_io
from .embed import EmbedConfig
from .motion import SearchConfig
from .video_io import Frame, SequenceSpec

VERSION = "0.1.0"


@dataclass(frozen=True)
class PipelineConfig:
    n_sequences: int = 60
    width: int = 176
    height: int = 144
    frame_count: int = 32
    seed: int = 1
    qps: tuple[int, ...] = (15, 25)
    rates: tuple[float, ...] = (0.1, 0.4)
    variants: tuple[str, ...] = ("aoso-18", "npe-36", "glo-64")
    search: str = "HEX"
    range: int = 16
    n_splits: int = 20
    workers: int = 1

    def digest(self) -> str:
        blob = json.dumps(asdict(self), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def header_lines(cfg_digest: str, seed: int) -> list[str]:
    return [f"mvglo {VERSION}", f"config {cfg_digest}", f"seed {seed}"]


def corpus_specs(cfg: PipelineConfig) -> list[SequenceSpec]:
    return [SequenceSpec(width=cfg.width, height=cfg.height,
                         frame_count=cfg.frame_count, seed=cfg.seed + i)
            for i in range(cfg.n_sequences)]


@dataclass
class EncodedSequence:
    seq_id: str
    frames: list[Frame]
    records: list[motion.FrameCodingRecord]
    qp: int

    @property
    def intra_frame(self) -> Frame:
        return self.frames[0]


def encode_one(spec: SequenceSpec, qp: int, search: str, rng: int,
               seq_id: str | None = None) -> EncodedSequence:
    frames = video_io.synth_sequence(spec)
    cfg = SearchConfig(algorithm=search, range=rng, qp=qp)
    records = motion.encode_sequence(frames, cfg)
    return EncodedSequence(seq_id or f"seq{spec.seed:04d}", frames, records, qp)


def _encode_job(args) -> EncodedSequence:
    return encode_one(*args)


def encode_corpus(cfg: PipelineConfig, qp: int) -> list[EncodedSequence]:
    jobs = [(spec, qp, cfg.search, cfg.range, f"seq{i:04d}")
            for i, spec in enumerate(corpus_specs(cfg))]
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            return list(pool.map(_encode_job, jobs))
    return [_encode_job(j) for j in jobs]


def embed_corpus(corpus: list[EncodedSequence], rate: float, qp: int,
                 seed: int) -> list[list[motion.FrameCodingRecord]]:
    """Stego records per sequence; the per-sequence embed seed is derived
    deterministically from the base seed and the sequence position."""
    return [embed_mod.embed(seq.records, seq.frames,
                            EmbedConfig(rate, seed=seed * 100003 + k), qp)
            for k, seq in enumerate(corpus)]


def extract_matrix(corpus: list[EncodedSequence],
                   record_sets: list[list[motion.FrameCodingRecord]],
                   qp: int) -> list[features.RawFeatures]:
    return [features.accumulate_sequence(recs, seq.intra_frame, qp)
            for seq, recs in zip(corpus, record_sets)]


def features_of(raws: list[features.RawFeatures], variant: str) -> np.ndarray:
    return np.vstack([features.feature_vector(r, variant).values for r in raws])


def run_pipeline(cfg: PipelineConfig, out_dir: str | Path) -> Path:
    """Full experiment: writes stats CSVs, feature CSVs, an eval report and
    a replay manifest into out_dir.  A FAILED marker is left behind when any
    stage throws."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    marker = out / "FAILED"
    try:
        _run_pipeline_inner(cfg, out)
    except BaseException:
        marker.write_text("pipeline did not complete\n")
        raise
    if marker.exists():
        marker.unlink()
    return out


def _run_pipeline_inner(cfg: PipelineConfig, out: Path) -> None:
    digest = cfg.digest()
    hdr = lambda: header_lines(digest, cfg.seed)
    (out / "manifest.json").write_text(
        json.dumps({"version": VERSION, "config": asdict(cfg),
                    "digest": digest}, indent=2, sort_keys=True) + "\n")

    report_rows = []
    for qp in cfg.qps:
        corpus = encode_corpus(cfg, qp)
        cover_raws = extract_matrix(corpus, [s.records for s in corpus], qp)

        sweep = stats.change_rate_sweep(
            [(s.records, s.frames) for s in corpus],
            sorted(set(cfg.rates)), qp, cfg.seed)
        stats.write_sweep_csv(out / f"stats_change_rates_qp{qp}.csv", sweep, hdr())

        for rate in cfg.rates:
            stego_sets = embed_corpus(corpus, rate, qp, cfg.seed)
            rep = stats.four_case_report_corpus(
                [(s.records, st, s.intra_frame)
                 for s, st in zip(corpus, stego_sets)], qp)
            stats.write_four_case_csv(
                out / f"stats_four_case_qp{qp}_p{rate}.csv", [(rate, rep)], hdr())

            stego_raws = extract_matrix(corpus, stego_sets, qp)
            for direction, tag in (("MV", "mv"), ("PMV", "pmv")):
                pooled = _pool_heatmaps(stego_raws, direction)
                stats.write_heatmap_csv(
                    out / f"stats_heatmap_{tag}_qp{qp}_p{rate}.csv",
                    pooled, direction, hdr())

            for variant in cfg.variants:
                rows = ([(s.seq_id, 0, features.feature_vector(r, variant).values)
                         for s, r in zip(corpus, cover_raws)] +
                        [(s.seq_id, 1, features.feature_vector(r, variant).values)
                         for s, r in zip(corpus, stego_raws)])
                features.write_features_csv(
                    out / f"features_{variant}_qp{qp}_p{rate}.csv",
                    variant, rows, hdr())
                paired = classify.PairedCorpus(
                    [s.seq_id for s in corpus],
                    features_of(cover_raws, variant),
                    features_of(stego_raws, variant))
                mean_acc, std_acc = classify.run_experiment(
                    paired, n_splits=cfg.n_splits, base_seed=cfg.seed)
                report_rows.append((variant, qp, rate, mean_acc, std_acc))

    with open(out / "report.csv", "w") as fh:
        for line in hdr():
            fh.write(f"# {line}\n")
        fh.write("variant,qp,rate,mean_acc,std_acc,n_splits\n")
        for variant, qp, rate, mean_acc, std_acc in report_rows:
            fh.write(f"{variant},{qp},{rate!r},{mean_acc!r},{std_acc!r},{cfg.n_splits}\n")


def _pool_heatmaps(raws: list[features.RawFeatures], direction: str) -> np.ndarray:
    """Corpus-level heatmaps: block-count-weighted mean of per-sequence
    probability grids (equals pooled extraction over all blocks)."""
    weights = np.array([r.n_blocks for r in raws], dtype=np.float64)
    grids = np.stack([stats.optimality_heatmaps(r, direction) for r in raws])
    return np.einsum("s,sabc->abc", weights / weights.sum(), grids)
