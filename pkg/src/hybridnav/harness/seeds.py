"""
Seed Derivation Module

Per-episode random streams derived from one base seed with the splitmix64
mixing function, so every episode owns an independent, reproducible
stream regardless of which worker runs it.

    derive_seed(base, index) = splitmix64((base + (index + 1) * 0x9E3779B97F4A7C15) mod 2**64)
"""

MASK64 = (1 << 64) - 1
GOLDEN_GAMMA = 0x9E3779B97F4A7C15


def splitmix64(value: int) -> int:
    """
    Finalizer of the splitmix64 generator.

    Example:
        >>> hex(splitmix64(0))
        '0x0'
        >>> splitmix64(1) != splitmix64(2)
        True
    """
    z = value & MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def derive_seed(base: int, index: int) -> int:
    """64-bit seed of stream ``index`` under ``base``."""
    return splitmix64((int(base) + (int(index) + 1) * GOLDEN_GAMMA) & MASK64)
