"""Deterministic numeric foundation: centering, seeded RNG, finite differences."""

import math

import numpy as np

from . import kernels
from .errors import ArgumentError, NumericError

MASK64 = 0xFFFFFFFFFFFFFFFF

_JUMP = (0x180EC6D33CFD0ABA, 0xD5A61266F0C9392C, 0xA9582618E03FC9AA, 0x39ABDC4529B1661C)


def as_matrix(M, name="matrix"):
    """Return ``M`` as a C-contiguous float64 2-D array."""
    arr = np.ascontiguousarray(M, dtype=np.float64)
    if arr.ndim != 2:
        raise ArgumentError(f"{name} must be 2-D, got shape {arr.shape}")
    return arr


def center_columns(M):
    """Subtract each column's batch mean.

    Returns ``(centered, means)``. Each centered column sums to zero up to
    rounding.
    """
    M = as_matrix(M)
    if M.shape[0] < 1:
        raise ArgumentError("center_columns needs at least one row")
    means = M.mean(axis=0)
    return M - means, means


def center_columns_backward(grad_centered):
    """Pull a gradient w.r.t. the centered matrix back to the raw matrix.

    Centering is the linear map ``I - 11^T/b`` applied per column, which is
    symmetric, so the adjoint is centering again.
    """
    return grad_centered - grad_centered.mean(axis=0)


def finite_diff_gradient(f, x, h=1e-6):
    """Central-difference gradient of scalar ``f`` at flat vector ``x``."""
    if not h > 0:
        raise ArgumentError("step size h must be positive")
    x = np.array(x, dtype=np.float64).ravel()
    grad = np.empty_like(x)
    for i in range(x.size):
        orig = x[i]
        x[i] = orig + h
        fp = f(x)
        x[i] = orig - h
        fm = f(x)
        x[i] = orig
        if not (math.isfinite(fp) and math.isfinite(fm)):
            raise NumericError(f"non-finite function value at coordinate {i}", where=i)
        grad[i] = (fp - fm) / (2.0 * h)
    return grad


def relative_error(analytic, numeric, floor=1e-12):
    """Norm-wise relative error ``max|a - n| / max(max|a|, max|n|, floor)``."""
    a = np.asarray(analytic, dtype=np.float64).ravel()
    n = np.asarray(numeric, dtype=np.float64).ravel()
    scale = max(np.max(np.abs(a), initial=0.0), np.max(np.abs(n), initial=0.0), floor)
    return float(np.max(np.abs(a - n), initial=0.0) / scale)


# --------------------------------------------------------------------------
# RNG: splitmix64 seeding a xoshiro256** stream
# --------------------------------------------------------------------------


def splitmix64(state):
    """One splitmix64 step on an int state; returns ``(new_state, output)``."""
    state = (state + 0x9E3779B97F4A7C15) & MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return state, z ^ (z >> 31)


class Rng:
    """xoshiro256** generator seeded through splitmix64.

    The uint64 stream is bit-identical across platforms and across the numba
    and numpy kernel paths. Doubles are ``(u >> 11) * 2**-53``.
    """

    def __init__(self, seed=0):
        seed = int(seed)
        if not 0 <= seed <= MASK64:
            raise ArgumentError("seed must fit in an unsigned 64-bit integer")
        self.seed = seed
        sm = seed
        words = []
        for _ in range(4):
            sm, out = splitmix64(sm)
            words.append(out)
        self._state = np.array(words, dtype=np.uint64)

    def copy(self):
        other = Rng.__new__(Rng)
        other.seed = self.seed
        other._state = self._state.copy()
        return other

    @property
    def state(self):
        return tuple(int(v) for v in self._state)

    def jump(self):
        """Advance by 2**128 draws in place."""
        s = [0, 0, 0, 0]
        cur = self.copy()
        for word in _JUMP:
            for b in range(64):
                if (word >> b) & 1:
                    st = cur.state
                    s = [a ^ c for a, c in zip(s, st)]
                cur.next_u64(1)
        self._state = np.array(s, dtype=np.uint64)

    def substream(self, index):
        """Independent stream ``index`` (0-based) derived from this generator's seed.

        Stream ``i`` starts ``(i + 1) * 2**128`` draws past the seeded state, so
        substreams never overlap each other or the parent.
        """
        child = Rng(self.seed)
        for _ in range(int(index) + 1):
            child.jump()
        return child

    def next_u64(self, n):
        out = np.empty(int(n), dtype=np.uint64)
        if n:
            kernels.xoshiro_fill(self._state, out)
        return out

    def uniform(self, n):
        """``n`` doubles in [0, 1)."""
        u = self.next_u64(n) >> np.uint64(11)
        return u.astype(np.float64) * (2.0 ** -53)

    def uniform_range(self, n, low, high):
        return low + (high - low) * self.uniform(n)

    def permutation(self, n):
        """Fisher-Yates shuffle of ``range(n)``."""
        perm = np.arange(n)
        u = self.uniform(max(n - 1, 0))
        for k, i in enumerate(range(n - 1, 0, -1)):
            j = int(u[k] * (i + 1))
            perm[i], perm[j] = perm[j], perm[i]
        return perm


def sample_gaussian(rng, n, mean=0.0, stddev=1.0):
    """Box-Muller normals from the uniform stream; consumes ``2*ceil(n/2)`` draws."""
    if stddev < 0:
        raise ArgumentError("stddev must be nonnegative")
    n = int(n)
    pairs = (n + 1) // 2
    u = rng.uniform(2 * pairs)
    u1 = 1.0 - u[0::2]  # (0, 1], keeps log finite
    u2 = u[1::2]
    radius = np.sqrt(-2.0 * np.log(u1))
    theta = 2.0 * np.pi * u2
    z = np.empty(2 * pairs)
    z[0::2] = radius * np.cos(theta)
    z[1::2] = radius * np.sin(theta)
    return mean + stddev * z[:n]
