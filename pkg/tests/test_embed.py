import numpy as np
import pytest

from mvglo import codec, embed as embed_mod, motion, video_io
from mvglo.codec import MotionVector
from mvglo.embed import CaseLabel, EmbedConfig, classify_case, embed
from mvglo.motion import BlockCodingRecord, SearchConfig
from mvglo.video_io import SequenceSpec


@pytest.fixture(scope="module")
def cover():
    spec = SequenceSpec(width=80, height=64, frame_count=6, seed=31)
    frames = video_io.synth_sequence(spec)
    records = motion.encode_sequence(frames, SearchConfig(algorithm="HEX"))
    return frames, records


def _n_blocks(records):
    return sum(len(fr.records) for fr in records)


def test_embed_config_validation():
    with pytest.raises(ValueError):
        EmbedConfig(-0.1)
    with pytest.raises(ValueError):
        EmbedConfig(1.1)
    with pytest.raises(ValueError):
        EmbedConfig(0.5, component_mode="diagonal")


def test_zero_rate_is_noop(cover):
    frames, records = cover
    stego = embed(records, frames, EmbedConfig(0.0, seed=5), 15)
    for cf, sf in zip(records, stego):
        for c, s in zip(cf.records, sf.records):
            assert c.mv == s.mv and c.pmv == s.pmv and c.mvd == s.mvd
            assert not s.mv_changed and not s.pmv_changed
        assert np.array_equal(cf.reconstructed.luma, sf.reconstructed.luma)


def test_full_rate_changes_every_mv(cover):
    frames, records = cover
    stego = embed(records, frames, EmbedConfig(1.0, seed=5), 15)
    for sf in stego:
        assert all(s.mv_changed for s in sf.records)
    assert embed_mod.mv_change_rate(records, stego) == 1.0


@pytest.mark.parametrize("rate", [0.1, 0.3, 0.5])
def test_exact_realized_change_count(cover, rate):
    frames, records = cover
    stego = embed(records, frames, EmbedConfig(rate, seed=2), 15)
    n = _n_blocks(records)
    changed = sum(s.mv_changed for sf in stego for s in sf.records)
    assert changed == round(rate * n)
    assert embed_mod.mv_change_rate(records, stego) == changed / n


def test_changes_are_plus_minus_one_single_component(cover):
    frames, records = cover
    stego = embed(records, frames, EmbedConfig(0.4, seed=3), 15)
    for cf, sf in zip(records, stego):
        for c, s in zip(cf.records, sf.records):
            d = s.mv - c.mv
            if s.mv_changed:
                assert sorted((abs(d.h), abs(d.v))) == [0, 1]
            else:
                assert d == MotionVector(0, 0)


@pytest.mark.parametrize("mode,comp", [("horizontal-only", "h"),
                                       ("vertical-only", "v")])
def test_component_modes(cover, mode, comp):
    frames, records = cover
    stego = embed(records, frames,
                  EmbedConfig(0.5, seed=4, component_mode=mode), 15)
    for cf, sf in zip(records, stego):
        for c, s in zip(cf.records, sf.records):
            d = s.mv - c.mv
            untouched = d.v if comp == "h" else d.h
            assert untouched == 0


def test_embed_deterministic(cover):
    frames, records = cover
    a = embed(records, frames, EmbedConfig(0.3, seed=7), 15)
    b = embed(records, frames, EmbedConfig(0.3, seed=7), 15)
    for fa, fb in zip(a, b):
        assert fa.records == fb.records
        assert np.array_equal(fa.reconstructed.luma, fb.reconstructed.luma)
    c = embed(records, frames, EmbedConfig(0.3, seed=8), 15)
    assert any(fa.records != fc.records for fa, fc in zip(a, c))


def test_stego_state_rederived_consistently(cover):
    frames, records = cover
    stego = embed(records, frames, EmbedConfig(0.5, seed=9), 15)
    reference = frames[0]
    for sf in stego:
        mvs = []
        current = frames[sf.frame_index]
        for r in sf.records:
            col = r.block_index % sf.mb_cols
            row = r.block_index // sf.mb_cols
            pmv = motion.median_pmv(
                *motion._neighbor_mvs(mvs, col, row, sf.mb_cols))
            assert r.pmv == pmv
            assert r.mvd == r.mv - r.pmv
            x0, y0 = col * 16, row * 16
            cur = current.luma[y0:y0 + 16, x0:x0 + 16]
            pred = codec.block_at(reference.luma, x0 + r.mv.h, y0 + r.mv.v)
            assert r.sad == codec.sad(cur, pred)
            mvs.append(r.mv)
        reference = sf.reconstructed


def test_pmv_change_rate_below_mv_change_rate(cover):
    frames, records = cover
    stego = embed(records, frames, EmbedConfig(0.3, seed=11), 15)
    mv = embed_mod.mv_change_rate(records, stego)
    pmv = embed_mod.pmv_change_rate(records, stego)
    br = embed_mod.bitrate_change_rate(records, stego)
    assert 0 < pmv < mv
    assert 0 <= br <= mv + pmv  # each flip touches one MVD via MV or PMV


def test_frame_count_mismatch(cover):
    frames, records = cover
    with pytest.raises(ValueError):
        embed(records, frames[:-1], EmbedConfig(0.1), 15)


def test_classify_case_matrix():
    def rec(mv, pmv, idx=0):
        return BlockCodingRecord(idx, mv, pmv, mv - pmv, 0, 0, 0.0)

    z = MotionVector(0, 0)
    o = MotionVector(1, 0)
    c = rec(z, z)
    assert classify_case(c, rec(z, z)) is CaseLabel.CASE1
    assert classify_case(c, rec(o, z)) is CaseLabel.CASE2
    assert classify_case(c, rec(z, o)) is CaseLabel.CASE3
    assert classify_case(c, rec(o, o)) is CaseLabel.CASE4
    with pytest.raises(ValueError):
        classify_case(c, rec(z, z, idx=3))


def test_case_frequencies_sum_to_one(cover):
    frames, records = cover
    stego = embed(records, frames, EmbedConfig(0.4, seed=13), 15)
    labels = [classify_case(c, s)
              for c, s in embed_mod._paired_records(records, stego)]
    counts = {lab: labels.count(lab) for lab in CaseLabel}
    assert sum(counts.values()) == _n_blocks(records)
    # untouched blocks exist and changed blocks exist at this rate
    assert counts[CaseLabel.CASE1] > 0
    assert counts[CaseLabel.CASE2] + counts[CaseLabel.CASE4] > 0


def test_case1_shrinks_with_rate(cover):
    frames, records = cover

    def case1_frac(rate):
        stego = embed(records, frames, EmbedConfig(rate, seed=17), 15)
        labels = [classify_case(c, s)
                  for c, s in embed_mod._paired_records(records, stego)]
        return labels.count(CaseLabel.CASE1) / len(labels)

    fracs = [case1_frac(p) for p in (0.1, 0.3, 0.5)]
    assert fracs[0] > fracs[1] > fracs[2]
