"""Order-independent seed derivation.

Every random draw in a run is keyed by the master seed plus a tuple such as
``(fold, level, model_id, purpose)``.  Results therefore do not depend on the
order in which parallel work happens to execute.
"""

import zlib

import numpy as np


def _key_to_int(key) -> int:
    if isinstance(key, (bool, np.bool_)):
        return int(key)
    if isinstance(key, (int, np.integer)):
        if key < 0:
            raise ValueError(f"seed keys must be non-negative, got {key}")
        return int(key)
    return zlib.crc32(str(key).encode("utf-8"))


def derive_seed(base, *keys) -> int:
    """Return a 32-bit seed determined by ``base`` and ``keys``."""
    entropy = [_key_to_int(base)] + [_key_to_int(k) for k in keys]
    return int(np.random.SeedSequence(entropy).generate_state(1)[0])
