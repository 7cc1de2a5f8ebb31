"""Experience storage.

Transitions carry both the network-facing extended observations and the raw
goal observations they were built from, so replay relabeling can rebuild
goals, rewards, and goal-derived observation slots without touching the
recorded dynamics. The buffer itself stores everything columnar in
preallocated float64 arrays (grown by doubling up to capacity, then FIFO
ring eviction) so batch sampling is a fancy-index gather.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Optional

import numpy as np

from ..core import GoalObservation


@dataclass(frozen=True)
class Transition:
    s_e: np.ndarray
    action: np.ndarray
    reward: float
    s_e_next: np.ndarray
    terminated: bool
    episode_tag: int
    step_index: int
    obs: GoalObservation
    next_obs: GoalObservation
    reward_extras: np.ndarray


class ReplayBuffer:
    """Ring buffer over transition columns with FIFO eviction."""

    def __init__(self, capacity: int = 1_000_000, min_fill: int = 1000):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = int(capacity)
        self.min_fill = int(min_fill)
        self._size = 0
        self._next = 0  # physical write index once allocated
        self._alloc = 0
        self._cols: Dict[str, np.ndarray] = {}

    def __len__(self) -> int:
        return self._size

    @property
    def ready(self) -> bool:
        return self._size >= self.min_fill

    def _ensure_allocated(self, tr: Transition, needed: int) -> None:
        if not self._cols:
            self._alloc = min(self.capacity, max(1024, needed))
            # Vector columns stay 2-D even when one entry wide; scalar columns
            # (reward, flags, bookkeeping) are flat.
            vector = {"s_e": tr.s_e.size, "action": tr.action.size,
                      "s_e_next": tr.s_e_next.size}
            for name, width in vector.items():
                self._cols[name] = np.empty((self._alloc, width))
            for name in ("reward", "terminated", "episode_tag", "step_index"):
                self._cols[name] = np.empty(self._alloc)
            return
        if needed <= self._alloc or self._alloc >= self.capacity:
            return
        new_alloc = min(self.capacity, max(self._alloc * 2, needed))
        for name, col in self._cols.items():
            shape = (new_alloc,) + col.shape[1:]
            grown = np.empty(shape)
            grown[:self._size] = col[:self._size]
            self._cols[name] = grown
        self._alloc = new_alloc

    def push(self, tr: Transition) -> None:
        self._ensure_allocated(tr, self._size + 1)
        idx = self._next
        self._cols["s_e"][idx] = tr.s_e
        self._cols["action"][idx] = tr.action
        self._cols["reward"][idx] = tr.reward
        self._cols["s_e_next"][idx] = tr.s_e_next
        self._cols["terminated"][idx] = 1.0 if tr.terminated else 0.0
        self._cols["episode_tag"][idx] = tr.episode_tag
        self._cols["step_index"][idx] = tr.step_index
        self._next = (idx + 1) % self._alloc if self._alloc == self.capacity else idx + 1
        self._size = min(self._size + 1, self.capacity)

    def extend(self, transitions) -> None:
        for tr in transitions:
            self.push(tr)

    def _physical(self, logical: np.ndarray) -> np.ndarray:
        """Map oldest-first logical indices to physical row indices."""
        if self._size < self._alloc:
            return logical
        start = self._next % self._alloc
        return (start + logical) % self._alloc

    def sample(self, batch_size: int, rng: np.random.Generator) -> Dict[str, np.ndarray]:
        if self._size == 0:
            raise ValueError("cannot sample from an empty buffer")
        logical = rng.integers(0, self._size, size=batch_size)
        rows = self._physical(logical)
        return {name: col[rows] for name, col in self._cols.items()}

    def column(self, name: str) -> np.ndarray:
        """Column contents in FIFO (oldest-first) order."""
        rows = self._physical(np.arange(self._size))
        return self._cols[name][rows]
