"""Ring-buffer replay memory with column storage.

Columns (one array per field) keep sampling a pure fancy-index, which is
much cheaper than gathering python objects at every train step. Storage is
allocated lazily from the first transition, so the same class handles
discrete (int action) and continuous (vector action) agents.
"""

import numpy as np

from lanerl.agents.common import Transition


class ReplayBuffer:
    def __init__(self, capacity=100_000):
        if capacity <= 0:
            raise ValueError("capacity must be positive")
        self.capacity = capacity
        self._size = 0
        self._pos = 0
        self._s = None
        self._a = None
        self._r = None
        self._s_next = None
        self._done = None

    def __len__(self):
        return self._size

    def _allocate(self, s, a):
        obs_dim = len(s)
        self._s = np.empty((self.capacity, obs_dim))
        self._s_next = np.empty((self.capacity, obs_dim))
        a_arr = np.asarray(a)
        if a_arr.ndim == 0:
            self._a = np.empty(
                self.capacity, dtype=np.int64 if a_arr.dtype.kind in "iu" else np.float64
            )
        else:
            self._a = np.empty((self.capacity, a_arr.size))
        self._r = np.empty(self.capacity)
        self._done = np.empty(self.capacity, dtype=bool)

    def add(self, s, a, r, s_next, done):
        if self._s is None:
            self._allocate(s, a)
        i = self._pos
        self._s[i] = s
        self._a[i] = a
        self._r[i] = r
        self._s_next[i] = s_next
        self._done[i] = done
        self._pos = (i + 1) % self.capacity
        self._size = min(self._size + 1, self.capacity)

    def add_transition(self, tr):
        self.add(tr.s, tr.a, tr.r, tr.s_next, tr.done)

    def sample(self, batch_size, rng):
        """Uniform with replacement over current contents."""
        if self._size == 0:
            raise ValueError("cannot sample from an empty buffer")
        idx = rng.integers(0, self._size, size=batch_size)
        return (
            self._s[idx],
            self._a[idx],
            self._r[idx],
            self._s_next[idx],
            self._done[idx],
        )

    def latest(self):
        """The most recently added transition, as arrays of batch size 1."""
        if self._size == 0:
            return None
        i = (self._pos - 1) % self.capacity
        sl = slice(i, i + 1)
        return (self._s[sl], self._a[sl], self._r[sl], self._s_next[sl], self._done[sl])

    def contents(self):
        """All stored transitions, oldest first (test helper)."""
        out = []
        start = self._pos - self._size
        for k in range(self._size):
            i = (start + k) % self.capacity
            out.append(
                Transition(
                    s=self._s[i].copy(),
                    a=self._a[i].copy() if self._a.ndim > 1 else self._a[i],
                    r=float(self._r[i]),
                    s_next=self._s_next[i].copy(),
                    done=bool(self._done[i]),
                )
            )
        return out
