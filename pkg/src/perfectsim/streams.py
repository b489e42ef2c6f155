"""Counter-based per-(seed, time, role) random substreams.

Coupling-from-the-past replays time steps: whenever a step is re-examined it
must see the identical randomness.  Stateful generators make that discipline
error-prone under lazy backward extension, so every (seed, time, role) triple
gets its own Philox stream, derived purely from the triple.  The 128-bit
Philox key is packed as (seed | time:56 bits | role:8 bits), which keeps
distinct triples on exactly disjoint streams.
"""

from __future__ import annotations

import numpy as np

MASK64 = (1 << 64) - 1
_TIME_MASK = (1 << 56) - 1

# substream roles, one per slot of the per-step randomness layout
ROLE_EQUILIBRIUM = 0   # time-0 stationary draw of the dominating walk
ROLE_REVERSED = 1      # backward extension generating this time
ROLE_REGEN = 2         # regeneration (coalescence) uniform
ROLE_TICKET = 3        # monotone-coupling ticket uniform
ROLE_CONDITIONAL = 4   # conditional state draw stream


def substream(seed: int, time: int, role: int) -> np.random.Generator:
    """Fresh generator for (seed, time, role); a pure function of the triple."""
    if not 0 <= role < 256:
        raise ValueError(f"role out of range: {role}")
    if abs(time) >= 1 << 55:
        raise ValueError(f"time out of range: {time}")
    key = np.array(
        [seed & MASK64, (((time & _TIME_MASK) << 8) | role) & MASK64],
        dtype=np.uint64,
    )
    bitgen = np.random.Philox(counter=np.zeros(4, dtype=np.uint64), key=key)
    return np.random.Generator(bitgen)


def uniform_open(rng: np.random.Generator) -> float:
    """Uniform draw strictly inside (0, 1)."""
    u = rng.random()
    while u <= 0.0:
        u = rng.random()
    return u


def step_uniform(seed: int, time: int, role: int) -> float:
    """One open-interval uniform from the (seed, time, role) substream."""
    return uniform_open(substream(seed, time, role))


class StreamKit:
    """Reusable scratch generator over the same keyed-Philox streams.

    Constructing a Philox bit generator draws OS entropy forbookkeeping, so
    hot loops instead re-key one scratch instance by assigning its state.
    ``at(time, role)`` returns a generator positioned at the start of exactly
    the stream ``substream(seed, time, role)`` produces; the view is only
    valid until the next ``at`` call, so callers must not hold it across
    steps."""

    def __init__(self, seed: int):
        self.seed = seed
        self._bg = np.random.Philox(counter=np.zeros(4, np.uint64), key=np.zeros(2, np.uint64))
        self.gen = np.random.Generator(self._bg)

    def at(self, time: int, role: int) -> np.random.Generator:
        if not 0 <= role < 256:
            raise ValueError(f"role out of range: {role}")
        if abs(time) >= 1 << 55:
            raise ValueError(f"time out of range: {time}")
        st = self._bg.state
        st["state"]["counter"][:] = 0
        st["state"]["key"][0] = self.seed & MASK64
        st["state"]["key"][1] = (((time & _TIME_MASK) << 8) | role) & MASK64
        st["buffer_pos"] = 4
        st["has_uint32"] = 0
        st["uinteger"] = 0
        self._bg.state = st
        return self.gen

    def uniform(self, time: int, role: int) -> float:
        return uniform_open(self.at(time, role))
