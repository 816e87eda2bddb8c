"""Shared fixtures: small deterministic sequences and one cached encode.

Session scope keeps the expensive pieces (synthesis, training, encoding)
to a single run; every test that needs them must treat them as read-only.
"""

import numpy as np
import pytest

from nbv.core import Frame, SequenceConfig, make_frame
from nbv.encoder import encode_sequence
from nbv.gnn import TrainConfig
from nbv.tools import synth_sequence


def rand_frame(width: int, height: int, seed: int = 0) -> Frame:
    rng = np.random.default_rng(seed)
    return make_frame(
        rng.integers(0, 256, (height, width), dtype=np.uint8),
        rng.integers(0, 256, (height // 2, width // 2), dtype=np.uint8),
        rng.integers(0, 256, (height // 2, width // 2), dtype=np.uint8),
    )


def fast_train(steps: int = 150) -> TrainConfig:
    # bit exactness never depends on training quality, only on determinism
    return TrainConfig(steps=steps)


@pytest.fixture(scope="session")
def pan_frames() -> list[Frame]:
    return synth_sequence("pan", 96, 64, 8, velocity=(4, 0), seed=7)


@pytest.fixture(scope="session")
def static_frames() -> list[Frame]:
    return synth_sequence("static", 96, 64, 6, seed=3)


@pytest.fixture(scope="session")
def pan_config() -> SequenceConfig:
    return SequenceConfig(
        width=96, height=64, frame_count=8, qp=20,
        gnn_interval=4, gnn_enabled=True, gnn_arch=(3, 16, 1536),
    )


@pytest.fixture(scope="session")
def pan_encode(pan_frames, pan_config):
    """(stream bytes, EncodeReport) for the shared panning fixture."""
    stream, report = encode_sequence(pan_frames, pan_config,
                                     train_cfg=fast_train())
    return stream, report
