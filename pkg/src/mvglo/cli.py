"""Batch command-line front-end.

Subcommands: synth, encode, embed, extract, stats, train, eval, pipeline.
Every output file starts with header comment rows carrying the tool
version, a config hash and the seeds, so runs are replayable and diffable.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from . import classify, embed as embed_mod, features, motion, pipeline, stats, video_io
from .embed import EmbedConfig
from .motion import SearchConfig
from .pipeline import VERSION
from .video_io import SequenceSpec


def _args_digest(ns: argparse.Namespace) -> str:
    blob = json.dumps({k: v for k, v in sorted(vars(ns).items())
                       if k != "func"}, default=str).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def _hdr(ns: argparse.Namespace, seed: int) -> list[str]:
    return pipeline.header_lines(_args_digest(ns), seed)


def _guarded_outputs(paths: list[Path]):
    """Context that leaves a FAILED marker next to the first output when the
    command dies before all outputs are written."""
    class _Guard:
        def __enter__(self):
            return self

        def __exit__(self, exc_type, exc, tb):
            if exc_type is not None and paths:
                paths[0].with_suffix(paths[0].suffix + ".FAILED").write_text(
                    "command did not complete\n")
            return False
    return _Guard()


def cmd_synth(ns) -> None:
    spec = SequenceSpec(width=ns.width, height=ns.height,
                        frame_count=ns.frames, seed=ns.seed,
                        motion_amplitude=ns.amplitude,
                        texture_scale=ns.texture, noise_sigma=ns.noise)
    out = Path(ns.out)
    with _guarded_outputs([out]):
        video_io.write_yuv420(video_io.synth_sequence(spec), out)


def cmd_encode(ns) -> None:
    frames = video_io.read_yuv420(ns.yuv, ns.width, ns.height)
    cfg = SearchConfig(algorithm=ns.search.upper(), range=ns.range, qp=ns.qp)
    out_rec = Path(ns.out_records)
    out_recon = Path(ns.out_recon)
    with _guarded_outputs([out_rec, out_recon]):
        records = motion.encode_sequence(frames, cfg)
        motion.write_records(records, out_rec, _hdr(ns, 0))
        video_io.write_yuv420([frames[0]] + [r.reconstructed for r in records],
                              out_recon)


def cmd_embed(ns) -> None:
    frames = video_io.read_yuv420(ns.yuv, ns.width, ns.height)
    cover = motion.read_records(ns.records)
    out_rec = Path(ns.out_records)
    out_recon = Path(ns.out_recon)
    with _guarded_outputs([out_rec, out_recon]):
        stego = embed_mod.embed(cover, frames,
                                EmbedConfig(ns.rate, seed=ns.seed), ns.qp)
        motion.write_records(stego, out_rec, _hdr(ns, ns.seed))
        video_io.write_yuv420([frames[0]] + [r.reconstructed for r in stego],
                              out_recon)


def _load_decoded(records_path, recon_path, width, height):
    recon = video_io.read_yuv420(recon_path, width, height)
    records = motion.read_records(records_path, recon_frames=recon[1:])
    return records, recon[0]


def cmd_extract(ns) -> None:
    records, intra = _load_decoded(ns.records, ns.recon, ns.width, ns.height)
    out = Path(ns.out)
    with _guarded_outputs([out]):
        fv = features.extract(records, intra, ns.qp, ns.variant)
        features.write_features_csv(out, ns.variant,
                                    [(ns.seq_id, ns.label, fv.values)],
                                    _hdr(ns, 0))


def cmd_stats(ns) -> None:
    cover = motion.read_records(ns.cover_records)
    stego, intra = _load_decoded(ns.stego_records, ns.stego_recon,
                                 ns.width, ns.height)
    out_dir = Path(ns.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    four_case = out_dir / f"stats_four_case_qp{ns.qp}_p{ns.rate}.csv"
    with _guarded_outputs([four_case]):
        rep = stats.four_case_report(cover, stego, intra, ns.qp)
        stats.write_four_case_csv(four_case, [(ns.rate, rep)], _hdr(ns, 0))
        raw = features.accumulate_sequence(stego, intra, ns.qp)
        for direction, tag in (("MV", "mv"), ("PMV", "pmv")):
            stats.write_heatmap_csv(
                out_dir / f"stats_heatmap_{tag}_qp{ns.qp}_p{ns.rate}.csv",
                stats.optimality_heatmaps(raw, direction), direction,
                _hdr(ns, 0))


def _paired_from_csv(path) -> classify.PairedCorpus:
    variant, seq_ids, labels, mat = features.read_features_csv(path)
    cover_rows, stego_rows, ids = {}, {}, []
    for sid, lab, row in zip(seq_ids, labels, mat):
        (cover_rows if lab == 0 else stego_rows)[sid] = row
    ids = sorted(set(cover_rows) & set(stego_rows))
    if len(ids) < len(cover_rows) or len(ids) < len(stego_rows):
        raise ValueError("cover/stego rows are not fully paired by seq_id")
    return classify.PairedCorpus(
        ids,
        np.vstack([cover_rows[i] for i in ids]),
        np.vstack([stego_rows[i] for i in ids]))


def cmd_train(ns) -> None:
    variant, _, labels, mat = features.read_features_csv(ns.features)
    out = Path(ns.out)
    with _guarded_outputs([out]):
        model = classify.train(mat, labels, ns.reg)
        out.write_text(json.dumps({
            "variant": variant,
            "weights": model.weights.tolist(),
            "bias": model.bias,
            "regularization": model.regularization,
            "mean": model.mean.tolist(),
            "scale": model.scale.tolist()}, indent=2) + "\n")


def cmd_eval(ns) -> None:
    paired = _paired_from_csv(ns.features)
    out = Path(ns.out)
    with _guarded_outputs([out]):
        mean_acc, std_acc = classify.run_experiment(
            paired, n_splits=ns.splits, base_seed=ns.seed, regularization=ns.reg)
        with open(out, "w") as fh:
            for line in _hdr(ns, ns.seed):
                fh.write(f"# {line}\n")
            fh.write("variant,qp,rate,mean_acc,std_acc,n_splits\n")
            fh.write(f"{ns.variant},{ns.qp},{ns.rate!r},"
                     f"{mean_acc!r},{std_acc!r},{ns.splits}\n")


def cmd_pipeline(ns) -> None:
    cfg = pipeline.PipelineConfig(
        n_sequences=ns.sequences, width=ns.width, height=ns.height,
        frame_count=ns.frames, seed=ns.seed,
        qps=tuple(ns.qp), rates=tuple(ns.rate),
        variants=tuple(ns.variant), search=ns.search.upper(),
        range=ns.range, n_splits=ns.splits, workers=ns.workers)
    pipeline.run_pipeline(cfg, ns.out_dir)


def _add_dims(p):
    p.add_argument("--width", type=int, default=176)
    p.add_argument("--height", type=int, default=144)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mvglo",
                                 description="Motion-vector steganalysis laboratory")
    ap.add_argument("--version", action="version", version=f"mvglo {VERSION}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic YUV sequence")
    _add_dims(p)
    p.add_argument("--frames", type=int, default=32)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--amplitude", type=int, default=3)
    p.add_argument("--texture", type=float, default=24.0)
    p.add_argument("--noise", type=float, default=2.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("encode", help="motion-compensate a YUV sequence")
    p.add_argument("yuv")
    _add_dims(p)
    p.add_argument("--qp", type=int, default=15)
    p.add_argument("--search", choices=["esa", "dia", "hex"], default="hex")
    p.add_argument("--range", type=int, default=16)
    p.add_argument("--out-records", required=True)
    p.add_argument("--out-recon", required=True)
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("embed", help="simulate +-1 MV embedding")
    p.add_argument("records")
    p.add_argument("--yuv", required=True)
    _add_dims(p)
    p.add_argument("--rate", type=float, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--qp", type=int, default=15)
    p.add_argument("--out-records", required=True)
    p.add_argument("--out-recon", required=True)
    p.set_defaults(func=cmd_embed)

    p = sub.add_parser("extract", help="extract steganalytic features")
    p.add_argument("records")
    p.add_argument("--recon", required=True)
    _add_dims(p)
    p.add_argument("--qp", type=int, default=15)
    p.add_argument("--variant", choices=sorted(features.VARIANT_DIMS), default="glo-64")
    p.add_argument("--seq-id", default="seq0000")
    p.add_argument("--label", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("stats", help="four-case and heatmap statistics")
    p.add_argument("--cover-records", required=True)
    p.add_argument("--stego-records", required=True)
    p.add_argument("--stego-recon", required=True)
    _add_dims(p)
    p.add_argument("--qp", type=int, default=15)
    p.add_argument("--rate", type=float, default=0.0)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("train", help="train a linear detector on features")
    p.add_argument("features")
    p.add_argument("--reg", type=float, default=1e-3)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="balanced accuracy over random splits")
    p.add_argument("features")
    p.add_argument("--splits", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--reg", type=float, default=1e-3)
    p.add_argument("--variant", default="glo-64")
    p.add_argument("--qp", type=int, default=15)
    p.add_argument("--rate", type=float, default=0.0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("pipeline", help="full synthetic-corpus experiment")
    p.add_argument("--sequences", type=int, default=60)
    _add_dims(p)
    p.add_argument("--frames", type=int, default=32)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--qp", type=int, nargs="+", default=[15, 25])
    p.add_argument("--rate", type=float, nargs="+", default=[0.1, 0.4])
    p.add_argument("--variant", nargs="+",
                   choices=sorted(features.VARIANT_DIMS),
                   default=["aoso-18", "npe-36", "glo-64"])
    p.add_argument("--search", choices=["esa", "dia", "hex"], default="hex")
    p.add_argument("--range", type=int, default=16)
    p.add_argument("--splits", type=int, default=20)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_pipeline)
    return ap


def main(argv: list[str] | None = None) -> int:
    ns = build_parser().parse_args(argv)
    try:
        ns.func(ns)
    except (ValueError, OSError) as exc:
        print(f"mvglo: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
