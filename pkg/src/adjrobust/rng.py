"""Portable seeded randomness for instance generation.

The generator is SplitMix64: 64-bit state advanced by the golden-gamma
constant, output mixed by the Stafford/Steele finalizer.  It is tiny,
fully specified by integer arithmetic mod 2**64, and therefore gives
bit-identical streams on any platform or language.

Stream splitting rule (used by the instance generators): the matrix
entry with row-major index k draws from its own substream, seeded with
the (k+1)-th output of a base SplitMix64 stream seeded with the user
seed.  Each entry consumes exactly one 64-bit output of its substream,
so entries are independent of generation order and of how many draws
other entries consume.
"""

from __future__ import annotations

import math

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def mix64(z: int) -> int:
    """SplitMix64 output finalizer (Stafford variant 13)."""
    z &= _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


class SplitMix64:
    """The SplitMix64 sequence for a given seed."""

    __slots__ = ("state",)

    def __init__(self, seed: int):
        self.state = seed & _MASK64

    def next_u64(self) -> int:
        self.state = (self.state + _GOLDEN) & _MASK64
        return mix64(self.state)

    def next_float(self) -> float:
        # 53-bit uniform on [0, 1)
        return (self.next_u64() >> 11) * 2.0**-53

    def next_open01(self) -> float:
        # uniform on (0, 1), safe as inverse-CDF input
        return ((self.next_u64() >> 12) + 0.5) * 2.0**-52


def substream(seed: int, index: int) -> SplitMix64:
    """Substream for row-major entry `index` under base seed `seed`."""
    return SplitMix64(mix64((seed + (index + 1) * _GOLDEN) & _MASK64))


# Acklam's rational approximation to the inverse standard normal CDF.
# Relative error below 1.15e-9 over (0, 1); coefficients as published.
_A = (-3.969683028665376e+01, 2.209460984245205e+02, -2.759285104469687e+02,
      1.383577518672690e+02, -3.066479806614716e+01, 2.506628277459239e+00)
_B = (-5.447609879822406e+01, 1.615858368580409e+02, -1.556989798598866e+02,
      6.680131188771972e+01, -1.328068155288572e+01)
_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e+00,
      -2.549732539343734e+00, 4.374664141464968e+00, 2.938163982698783e+00)
_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e+00,
      3.754408661907416e+00)
_P_LOW = 0.02425


def norm_ppf(p: float) -> float:
    """Inverse standard normal CDF for p in (0, 1)."""
    if not 0.0 < p < 1.0:
        raise ValueError(f"norm_ppf requires p in (0, 1), got {p!r}")
    if p < _P_LOW:
        q = math.sqrt(-2.0 * math.log(p))
        return ((((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q
                  + _C[4]) * q + _C[5])
                / ((((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0))
    if p > 1.0 - _P_LOW:
        q = math.sqrt(-2.0 * math.log(1.0 - p))
        return -((((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q
                   + _C[4]) * q + _C[5])
                 / ((((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + 1.0))
    q = p - 0.5
    r = q * q
    return ((((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r
              + _A[4]) * r + _A[5]) * q
            / (((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r
                + _B[4]) * r + 1.0))


def folded_normal(u: float) -> float:
    """|Z| for Z standard normal, via inverse CDF of the uniform draw u."""
    return abs(norm_ppf(u))
