"""SplitMix64 generator shared by mask sampling and core initialisation.

The generator is pinned (rather than using ``numpy.random``) so that masks
and initial cores are bit-identical across platforms and implementations.
Because the SplitMix64 state advances by a constant increment, the k-th
output only depends on ``seed + k * GAMMA`` and whole blocks can be drawn
with vectorised uint64 arithmetic.
"""

import numpy as np

GAMMA = 0x9E3779B97F4A7C15
MASK64 = (1 << 64) - 1

_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)


def _mix(z):
    with np.errstate(over="ignore"):
        z = (z ^ (z >> np.uint64(30))) * _M1
        z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


class SplitMix64:
    """Stateful SplitMix64 stream.

    Parameters
    ----------
    seed : int
        Any Python integer; it is reduced modulo 2**64.
    """

    def __init__(self, seed):
        self.state = int(seed) & MASK64

    def next_uint64(self):
        self.state = (self.state + GAMMA) & MASK64
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
        return z ^ (z >> 31)

    def uint64_block(self, n):
        """Next ``n`` outputs as a uint64 array (advances the stream)."""
        k = np.arange(1, n + 1, dtype=np.uint64)
        with np.errstate(over="ignore"):
            states = np.uint64(self.state) + k * np.uint64(GAMMA)
        self.state = (self.state + n * GAMMA) & MASK64
        return _mix(states)

    def uniform_block(self, n):
        """Uniform doubles in [0, 1) built from the top 53 bits."""
        return (self.uint64_block(n) >> np.uint64(11)).astype(np.float64) * 2.0**-53

    def normal_block(self, n):
        """Standard normals by Box-Muller, consuming two uniforms per pair.

        Both outputs of each pair are used; an odd trailing draw discards the
        sine branch.
        """
        pairs = (n + 1) // 2
        u = self.uniform_block(2 * pairs).reshape(pairs, 2)
        radius = np.sqrt(-2.0 * np.log(1.0 - u[:, 0]))
        angle = 2.0 * np.pi * u[:, 1]
        out = np.empty((pairs, 2))
        out[:, 0] = radius * np.cos(angle)
        out[:, 1] = radius * np.sin(angle)
        return out.ravel()[:n]
