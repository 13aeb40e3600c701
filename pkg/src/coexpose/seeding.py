"""Counter-based random streams.

Every stochastic component draws from a Philox generator keyed by
(master seed, stream index).  Stream i's output never depends on how many
other streams were opened or in which order, which is what makes parallel
RC-set generation and Monte-Carlo trials reproducible bit-for-bit.
"""

import numpy as np

_MASK64 = (1 << 64) - 1


def stream_rng(master_seed: int, stream: int) -> np.random.Generator:
    key = ((int(master_seed) & _MASK64) << 64) | (int(stream) & _MASK64)
    return np.random.Generator(np.random.Philox(key=key))


def derive_seed(master_seed: int, label: str) -> int:
    """A 63-bit seed for a named purpose, disjoint from the master stream."""
    import hashlib

    digest = hashlib.blake2b(
        f"{int(master_seed)}:{label}".encode(), digest_size=8
    ).digest()
    return int.from_bytes(digest, "big") >> 1
