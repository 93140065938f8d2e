import hashlib
import json
import os
from pathlib import Path

import pytest

ARTIFACTS = Path(__file__).parent / "_artifacts"


@pytest.fixture(scope="session")
def artifacts_dir():
    ARTIFACTS.mkdir(exist_ok=True)
    return ARTIFACTS


def cached_checkpoint(name, config, builder):
    """Train-once cache: checkpoints keyed by a config hash.

    builder() -> (model, metadata); retraining happens only when the config
    changes. Returns (model, metadata).
    """
    from evokernel.nn import load_checkpoint, save_checkpoint

    ARTIFACTS.mkdir(exist_ok=True)
    tag = hashlib.sha256(json.dumps(config, sort_keys=True).encode()).hexdigest()[:12]
    path = ARTIFACTS / f"{name}_{tag}.ckpt"
    if path.exists():
        return load_checkpoint(path)
    model, meta = builder()
    meta = dict(meta)
    meta["config"] = config
    save_checkpoint(model, path, meta)
    return model, meta
