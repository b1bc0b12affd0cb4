"""Growable Fenwick tree for weighted sampling with O(log n) updates."""
from typing import List

import numpy as np


class FenwickSampler:
    """
    Holds non-negative weights w[0..n-1]; supports append, point update,
    total and draw-proportional-to-weight, each in O(log n).
    """

    def __init__(self):
        self._tree: List[float] = [0.0]  # 1-based
        self._weights: List[float] = []

    def __len__(self) -> int:
        return len(self._weights)

    @property
    def total(self) -> float:
        return self._prefix(len(self._weights))

    def weight(self, index: int) -> float:
        return self._weights[index]

    def _prefix(self, i: int) -> float:
        s = 0.0
        tree = self._tree
        while i > 0:
            s += tree[i]
            i &= i - 1
        return s

    def append(self, weight: float) -> int:
        if weight < 0:
            raise ValueError("weights must be non-negative")
        self._weights.append(weight)
        i = len(self._weights)
        low = i - (i & -i)
        # node i covers (low, i]; the first i-1 entries are already in place
        self._tree.append(weight + self._prefix(i - 1) - self._prefix(low))
        return i - 1

    def update(self, index: int, weight: float) -> None:
        if weight < 0:
            raise ValueError("weights must be non-negative")
        delta = weight - self._weights[index]
        if delta == 0.0:
            return
        self._weights[index] = weight
        i = index + 1
        n = len(self._weights)
        tree = self._tree
        while i <= n:
            tree[i] += delta
            i += i & -i

    def find(self, target: float) -> int:
        """Smallest index whose inclusive prefix sum exceeds target."""
        n = len(self._weights)
        pos = 0
        step = 1 << (n.bit_length() - 1) if n else 0
        tree = self._tree
        while step:
            nxt = pos + step
            if nxt <= n and tree[nxt] <= target:
                pos = nxt
                target -= tree[nxt]
            step >>= 1
        # floating drift can push past the end; clamp and skip zero-weight tails
        pos = min(pos, n - 1)
        while pos > 0 and self._weights[pos] == 0.0:
            pos -= 1
        return pos

    def sample(self, rng: np.random.Generator) -> int:
        total = self.total
        if not total > 0:
            raise ValueError("cannot sample from an all-zero sampler")
        return self.find(rng.random() * total)
