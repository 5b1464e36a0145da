"""Counter-keyed hashing used for reproducible random graphs.

A draw is a pure function of ``(seed, t, agent, slot)``, so any snapshot of a
random sequence can be regenerated without replaying earlier steps and
replicates never share generator state. The same mixing function is
implemented in the compiled kernels; both must stay bit-identical.
"""

import numpy as np

MASK64 = (1 << 64) - 1
GOLDEN = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB
REPLICATE_DOMAIN = 0x5EED5EED

_INV_2_53 = 1.0 / 9007199254740992.0


def mix64(z):
    """splitmix64 finaliser on Python ints."""
    z = (z + GOLDEN) & MASK64
    z = ((z ^ (z >> 30)) * _M1) & MASK64
    z = ((z ^ (z >> 27)) * _M2) & MASK64
    return z ^ (z >> 31)


def derive(key, value):
    return mix64((key & MASK64) ^ mix64(value & MASK64))


def unit_float(h):
    """Map a 64-bit hash to [0, 1) using its top 53 bits."""
    return (h >> 11) * _INV_2_53


def replicate_seed(seed, replicate):
    """Independent per-replicate seed derived from a base seed."""
    return derive(derive(seed, REPLICATE_DOMAIN), replicate)


# numpy versions: uint64 arithmetic wraps modulo 2**64 on arrays.

_U_GOLDEN = np.uint64(GOLDEN)
_U_M1 = np.uint64(_M1)
_U_M2 = np.uint64(_M2)
_U30 = np.uint64(30)
_U27 = np.uint64(27)
_U31 = np.uint64(31)
_U11 = np.uint64(11)


def mix64_np(z):
    with np.errstate(over="ignore"):
        z = np.asarray(z, dtype=np.uint64) + _U_GOLDEN
        z = (z ^ (z >> _U30)) * _U_M1
        z = (z ^ (z >> _U27)) * _U_M2
        return z ^ (z >> _U31)


def derive_np(key, value):
    key = np.asarray(key, dtype=np.uint64)
    return mix64_np(key ^ mix64_np(np.asarray(value, dtype=np.uint64)))


def unit_float_np(h):
    return (np.asarray(h, dtype=np.uint64) >> _U11).astype(np.float64) * _INV_2_53
