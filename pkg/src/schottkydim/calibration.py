"""Point sets of known dimension for calibrating the dimension engine.

All return :class:`~schottkydim.dimension.HeisSample` clouds in ``H^1``.
"""

import numpy as np

from .dimension import HeisSample


def unit_square(m, rng):
    """Uniform points on ``[0,1]^2 x {0}`` (horizontal)."""
    x, y = rng.random((2, m))
    return HeisSample(x + 1j * y, np.zeros(m))


def vertical_segment(m, rng):
    """Uniform points on ``{0} x [0,1]`` (a piece of the centre)."""
    return HeisSample(np.zeros(m, dtype=complex), rng.random(m))


def cantor_line(m, rng, digits=20):
    """Random points of the middle-thirds Cantor set on the real axis.

    Each point has ``digits`` ternary digits drawn from ``{0, 2}``.
    """
    d = 2 * rng.integers(0, 2, size=(m, digits))
    x = d @ (3.0 ** -np.arange(1, digits + 1))
    return HeisSample(x.astype(complex), np.zeros(m))


def product_measure(m, rng):
    """Uniform on ``[0,1]^2 x [0,1]``: horizontal square times a vertical interval."""
    x, y, t = rng.random((3, m))
    return HeisSample(x + 1j * y, t)
