import numpy as np
import pytest

from mvglo import cli, features, motion, video_io


def run(argv):
    return cli.main(argv)


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    """A small clip taken through synth -> encode -> embed via the CLI."""
    d = tmp_path_factory.mktemp("cliwork")
    dims = ["--width", "64", "--height", "48"]
    assert run(["synth", *dims, "--frames", "5", "--seed", "3",
                "--out", str(d / "clip.yuv")]) == 0
    assert run(["encode", str(d / "clip.yuv"), *dims, "--qp", "15",
                "--search", "hex",
                "--out-records", str(d / "cover.rec"),
                "--out-recon", str(d / "cover.yuv")]) == 0
    assert run(["embed", str(d / "cover.rec"), "--yuv", str(d / "clip.yuv"),
                *dims, "--rate", "0.4", "--seed", "5",
                "--out-records", str(d / "stego.rec"),
                "--out-recon", str(d / "stego.yuv")]) == 0
    return d


def test_synth_output_readable(workdir):
    frames = video_io.read_yuv420(workdir / "clip.yuv", 64, 48)
    assert len(frames) == 5


def test_encode_records_have_headers(workdir):
    text = (workdir / "cover.rec").read_text()
    assert text.startswith("# mvglo ")
    assert "# config " in text and "# seed " in text
    records = motion.read_records(workdir / "cover.rec")
    assert len(records) == 4


def test_embed_changes_recorded(workdir):
    cover = motion.read_records(workdir / "cover.rec")
    stego = motion.read_records(workdir / "stego.rec")
    n = sum(len(fr.records) for fr in cover)
    changed = sum(r.mv_changed for fr in stego for r in fr.records)
    assert changed == round(0.4 * n)
    assert not any(r.mv_changed for fr in cover for r in fr.records)


def test_extract_writes_feature_row(workdir):
    out = workdir / "fv.csv"
    assert run(["extract", str(workdir / "stego.rec"),
                "--recon", str(workdir / "stego.yuv"),
                "--width", "64", "--height", "48",
                "--variant", "glo-64", "--seq-id", "seqA", "--label", "1",
                "--out", str(out)]) == 0
    variant, seq_ids, labels, mat = features.read_features_csv(out)
    assert variant == "glo-64"
    assert seq_ids == ["seqA"] and labels.tolist() == [1]
    assert mat.shape == (1, 64)


def test_extract_empty_records_fails_cleanly(workdir, capsys):
    empty = workdir / "empty.rec"
    empty.write_text("# nothing here\n")
    out = workdir / "should_not_exist.csv"
    assert run(["extract", str(empty),
                "--recon", str(workdir / "stego.yuv"),
                "--width", "64", "--height", "48",
                "--out", str(out)]) == 1
    assert "error" in capsys.readouterr().err
    assert not out.exists()


def test_stats_outputs(workdir):
    out_dir = workdir / "stats"
    assert run(["stats", "--cover-records", str(workdir / "cover.rec"),
                "--stego-records", str(workdir / "stego.rec"),
                "--stego-recon", str(workdir / "stego.yuv"),
                "--width", "64", "--height", "48",
                "--qp", "15", "--rate", "0.4",
                "--out-dir", str(out_dir)]) == 0
    assert (out_dir / "stats_four_case_qp15_p0.4.csv").exists()
    assert (out_dir / "stats_heatmap_mv_qp15_p0.4.csv").exists()
    assert (out_dir / "stats_heatmap_pmv_qp15_p0.4.csv").exists()


@pytest.fixture(scope="module")
def paired_csv(tmp_path_factory):
    rng = np.random.default_rng(0)
    d = tmp_path_factory.mktemp("clicsv")
    rows = []
    for i in range(10):
        rows.append((f"seq{i:04d}", 0, rng.standard_normal(18)))
        rows.append((f"seq{i:04d}", 1, rng.standard_normal(18) + 2.0))
    path = d / "features.csv"
    features.write_features_csv(path, "aoso-18", rows)
    return path


def test_train_writes_model(paired_csv, tmp_path):
    out = tmp_path / "model.json"
    assert run(["train", str(paired_csv), "--out", str(out)]) == 0
    import json
    model = json.loads(out.read_text())
    assert model["variant"] == "aoso-18"
    assert len(model["weights"]) == 18


def test_eval_writes_report(paired_csv, tmp_path):
    out = tmp_path / "eval.csv"
    assert run(["eval", str(paired_csv), "--splits", "4",
                "--variant", "aoso-18", "--out", str(out)]) == 0
    lines = [l for l in out.read_text().splitlines() if not l.startswith("#")]
    assert lines[0] == "variant,qp,rate,mean_acc,std_acc,n_splits"
    acc = float(lines[1].split(",")[3])
    assert 0.5 <= acc <= 1.0


def test_failed_marker_on_error(workdir):
    bad = workdir / "bad.rec"
    bad.write_text("@frame 1 4 3\n1 0 0 0\n")  # malformed record line
    out = workdir / "out.csv"
    assert run(["extract", str(bad),
                "--recon", str(workdir / "stego.yuv"),
                "--width", "64", "--height", "48",
                "--out", str(out)]) == 1


def test_pipeline_subcommand_end_to_end(tmp_path):
    out_dir = tmp_path / "exp"
    assert run(["pipeline", "--sequences", "4",
                "--width", "64", "--height", "48", "--frames", "4",
                "--qp", "15", "--rate", "0.4", "--variant", "aoso-18",
                "--splits", "3", "--out-dir", str(out_dir)]) == 0
    assert (out_dir / "manifest.json").exists()
    assert (out_dir / "report.csv").exists()
    assert (out_dir / "stats_change_rates_qp15.csv").exists()
    assert (out_dir / "features_aoso-18_qp15_p0.4.csv").exists()
    assert not (out_dir / "FAILED").exists()


def test_version_flag():
    with pytest.raises(SystemExit) as exc:
        run(["--version"])
    assert exc.value.code == 0


def test_unknown_command_usage_error():
    with pytest.raises(SystemExit) as exc:
        run(["frobnicate"])
    assert exc.value.code != 0
