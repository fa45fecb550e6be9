"""Shared fixtures.

Small corpora back the unit tests; the full 60-sequence default corpus and
its derived artifacts are session-scoped so the acceptance criteria share
one encoding pass.  Stage wall-times are recorded so the acceptance tests
can assert their runtime budgets.
"""

from __future__ import annotations

import time

import numpy as np
import pytest

from mvglo import classify, embed as embed_mod, features, motion, pipeline, stats, video_io
from mvglo.embed import EmbedConfig
from mvglo.motion import SearchConfig
from mvglo.pipeline import PipelineConfig
from mvglo.video_io import SequenceSpec

# stage name -> seconds, filled by the session fixtures below
STAGE_SECONDS: dict[str, float] = {}


def _timed(name: str, fn):
    t0 = time.perf_counter()
    out = fn()
    STAGE_SECONDS[name] = time.perf_counter() - t0
    return out


@pytest.fixture(scope="session")
def tiny_specs() -> list[SequenceSpec]:
    """Small fast sequences for unit-level behavior."""
    return [SequenceSpec(width=64, height=48, frame_count=6, seed=100 + i)
            for i in range(3)]


@pytest.fixture(scope="session")
def tiny_corpus(tiny_specs):
    """(spec, frames, records) triples encoded with HEX at qp 15."""
    cfg = SearchConfig(algorithm="HEX", qp=15)
    out = []
    for spec in tiny_specs:
        frames = video_io.synth_sequence(spec)
        out.append((spec, frames, motion.encode_sequence(frames, cfg)))
    return out


@pytest.fixture(scope="session")
def tiny_raws(tiny_corpus):
    return [features.accumulate_sequence(recs, frames[0], 15)
            for _, frames, recs in tiny_corpus]


# --- default (acceptance) corpus: 60 sequences, 176x144, 32 frames ---

@pytest.fixture(scope="session")
def acceptance_config() -> PipelineConfig:
    return PipelineConfig(n_sequences=60, qps=(15,),
                          rates=(0.05, 0.1, 0.2, 0.3, 0.4, 0.5))


@pytest.fixture(scope="session")
def acceptance_corpus(acceptance_config):
    return _timed("encode",
                  lambda: pipeline.encode_corpus(acceptance_config, 15))


@pytest.fixture(scope="session")
def cover_raws(acceptance_corpus):
    return _timed("cover_raws", lambda: pipeline.extract_matrix(
        acceptance_corpus, [s.records for s in acceptance_corpus], 15))


def _stego_sets(corpus, rate, seed):
    return pipeline.embed_corpus(corpus, rate, 15, seed)


@pytest.fixture(scope="session")
def stego_sets_p04(acceptance_corpus, acceptance_config):
    return _timed("embed_p04", lambda: _stego_sets(
        acceptance_corpus, 0.4, acceptance_config.seed))


@pytest.fixture(scope="session")
def stego_sets_p05(acceptance_corpus, acceptance_config):
    return _timed("embed_p05", lambda: _stego_sets(
        acceptance_corpus, 0.5, acceptance_config.seed))


@pytest.fixture(scope="session")
def stego_raws_p04(acceptance_corpus, stego_sets_p04):
    return _timed("stego_raws_p04", lambda: pipeline.extract_matrix(
        acceptance_corpus, stego_sets_p04, 15))


@pytest.fixture(scope="session")
def stego_raws_p05(acceptance_corpus, stego_sets_p05):
    return _timed("stego_raws_p05", lambda: pipeline.extract_matrix(
        acceptance_corpus, stego_sets_p05, 15))
