import os
import sys
import time

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from crackpot import dataeval, synthetic  # noqa: E402
from crackpot.neuralnet import NetworkConfig  # noqa: E402

# toy schedule: batch 64, beta1 0.9, 20 epochs, lr raised to 1e-3 for the small set
TOY = dict(lr=1e-3, batch_size=64, epochs=20, beta1=0.9, seed=0)
TRAIN_SEED, HELDOUT_SEED, FRAME_SEED = 0, 99, 5


def labeled(patches, labels):
    return [dataeval.LabeledPatch(p, y) for p, y in zip(patches, labels)]


@pytest.fixture(scope="session")
def toy_model():
    """Full architecture trained on 100 crack + 100 clean synthetic patches."""
    cfg = NetworkConfig()
    train_set = labeled(*synthetic.patch_set(np.random.default_rng(TRAIN_SEED), 100, 100))
    start = time.perf_counter()
    result = dataeval.train(train_set, cfg, **TOY)
    seconds = time.perf_counter() - start
    return {"params": result.params, "cfg": cfg, "log": result.log, "train_set": train_set, "seconds": seconds}


@pytest.fixture(scope="session")
def heldout_set():
    return labeled(*synthetic.patch_set(np.random.default_rng(HELDOUT_SEED), 25, 25))
