"""
Seed derivation shared by every stochastic component.

All seeds are derived from a root seed and an integer path, so the value a
component receives does not depend on scheduling or thread count.
"""
import numpy as np


def derive_seed(root: int, *path: int) -> int:
    """
    Derive a child seed from a root seed and an integer path.

    Args:
        root: The parent seed
        path: Integer keys identifying the consumer (fold, group, instance, ...)

    Returns:
        A 32-bit seed
    """
    sequence = np.random.SeedSequence(int(root), spawn_key=tuple(int(p) for p in path))
    return int(sequence.generate_state(1)[0])


def make_rng(seed: int) -> np.random.Generator:
    """Create the generator type used throughout the package."""
    return np.random.default_rng(int(seed))
