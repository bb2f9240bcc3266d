"""
Portable Gaussian noise source.

The bit stream is numpy's PCG64 (128-bit LCG state, XSL-RR output) read
through ``random_raw``, which numpy keeps stable across releases. The
transform to normals is done here rather than with ``Generator.normal``,
whose algorithm may change between numpy versions:

    u = (raw >> 11) * 2**-53             uniform in [0, 1)
    u1 = 1 - u_even, u2 = u_odd           u1 in (0, 1]
    z0 = sqrt(-2 ln u1) * cos(2 pi u2)    Box-Muller, both outputs used
    z1 = sqrt(-2 ln u1) * sin(2 pi u2)

so any implementation of PCG64 reproduces the noise bit for bit.
"""
import numpy as np

_INV_2_53 = 1.0 / 9007199254740992.0


class NoiseSource:
    """Seeded standard-normal generator with a documented transform"""

    def __init__(self, seed):
        self.seed = int(seed)
        self._bits = np.random.PCG64(self.seed)

    def uniform(self, size):
        """Uniform doubles in [0, 1) from the top 53 bits of each raw draw"""
        raw = np.asarray(self._bits.random_raw(size), dtype=np.uint64)
        return (raw >> np.uint64(11)).astype(np.float64) * _INV_2_53

    def standard_normal(self, size):
        """``size`` standard-normal draws via Box-Muller"""
        pairs = (int(size) + 1) // 2
        u = self.uniform(2 * pairs).reshape(pairs, 2)
        radius = np.sqrt(-2.0 * np.log(1.0 - u[:, 0]))
        angle = 2.0 * np.pi * u[:, 1]
        z = np.column_stack((radius * np.cos(angle), radius * np.sin(angle))).ravel()
        return z[:size]
