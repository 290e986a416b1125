"""Seeded 64-bit hashing used for routing decisions."""

MASK = (1 << 64) - 1


def mix64(x: int) -> int:
    """splitmix64 finalizer."""
    x = (x + 0x9E3779B97F4A7C15) & MASK
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK
    return x ^ (x >> 31)


def hash_words(seed: int, *words: int) -> int:
    h = mix64(seed & MASK)
    for w in words:
        h = mix64(h ^ (w & MASK))
    return h


def bucket(seed: int, n: int, *words: int) -> int:
    """Hash ``words`` into ``range(n)``."""
    return hash_words(seed, *words) % n


def text_id(s: str) -> int:
    """Stable 64-bit id of a string (Python's str hash is salted per process)."""
    h = 0xCBF29CE484222325
    for b in s.encode():
        h = ((h ^ b) * 0x100000001B3) & MASK
    return h


def derive_seed(seed: int, *parts) -> int:
    words = [text_id(p) if isinstance(p, str) else int(p) for p in parts]
    return hash_words(seed, *words)
