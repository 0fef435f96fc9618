"""Reproducible random streams for sampler chains.

Each chain owns a ``numpy.random.Philox`` generator (a counter-based 64-bit
generator) seeded through ``SeedSequence(seed, spawn_key=(chain,))``, so chains are
independent and any one can be regenerated from ``(seed, chain)`` alone.  Uniforms
are ``(next_uint64 >> 11) * 2**-53``.  The full generator state (counter, key and
buffered words) is JSON-serializable, which gives bit-exact checkpoint/resume.
"""

from __future__ import annotations

from typing import Any

import numpy as np


class RngStream:
    def __init__(self, seed: int, chain: int = 0) -> None:
        if seed < 0 or seed >= 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        self.seed = int(seed)
        self.chain = int(chain)
        ss = np.random.SeedSequence(self.seed, spawn_key=(self.chain,))
        self.generator = np.random.Generator(np.random.Philox(ss))

    def uniform(self) -> float:
        """A uniform double in [0, 1) with 53 random mantissa bits."""
        return float(self.generator.random())

    def get_state(self) -> dict[str, Any]:
        st = self.generator.bit_generator.state
        inner = st["state"]
        return {
            "bit_generator": st["bit_generator"],
            "counter": [int(v) for v in inner["counter"]],
            "key": [int(v) for v in inner["key"]],
            "buffer": [int(v) for v in st["buffer"]],
            "buffer_pos": int(st["buffer_pos"]),
            "has_uint32": int(st["has_uint32"]),
            "uinteger": int(st["uinteger"]),
            "seed": self.seed,
            "chain": self.chain,
        }

    def set_state(self, state: dict[str, Any]) -> None:
        if state.get("bit_generator") != "Philox":
            raise ValueError(f"unsupported generator state {state.get('bit_generator')!r}")
        self.generator.bit_generator.state = {
            "bit_generator": "Philox",
            "state": {
                "counter": np.array(state["counter"], dtype=np.uint64),
                "key": np.array(state["key"], dtype=np.uint64),
            },
            "buffer": np.array(state["buffer"], dtype=np.uint64),
            "buffer_pos": int(state["buffer_pos"]),
            "has_uint32": int(state["has_uint32"]),
            "uinteger": int(state["uinteger"]),
        }
        self.seed = int(state.get("seed", self.seed))
        self.chain = int(state.get("chain", self.chain))

    @classmethod
    def from_state(cls, state: dict[str, Any]) -> RngStream:
        stream = cls(int(state.get("seed", 0)), int(state.get("chain", 0)))
        stream.set_state(state)
        return stream
