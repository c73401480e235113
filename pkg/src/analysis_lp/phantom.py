"""Analytical Shepp-Logan head phantom (Toft's modified intensities)."""
from __future__ import annotations

import numpy as np

from .errors import InvalidSize

# intensity, semi-axis x, semi-axis y, center x, center y, rotation (degrees)
ELLIPSES = (
    (1.00, 0.6900, 0.9200, 0.00, 0.0000, 0.0),
    (-0.80, 0.6624, 0.8740, 0.00, -0.0184, 0.0),
    (-0.20, 0.1100, 0.3100, 0.22, 0.0000, -18.0),
    (-0.20, 0.1600, 0.4100, -0.22, 0.0000, 18.0),
    (0.10, 0.2100, 0.2500, 0.00, 0.3500, 0.0),
    (0.10, 0.0460, 0.0460, 0.00, 0.1000, 0.0),
    (0.10, 0.0460, 0.0460, 0.00, -0.1000, 0.0),
    (0.10, 0.0460, 0.0230, -0.08, -0.6050, 0.0),
    (0.10, 0.0230, 0.0230, 0.00, -0.6060, 0.0),
    (0.10, 0.0230, 0.0460, 0.06, -0.6050, 0.0),
)


def shepp_logan(side: int) -> np.ndarray:
    """Rasterize the phantom on a ``side x side`` grid of pixel centers.

    The image covers ``[-1, 1]^2`` with row 0 at the top.  Intensities lie
    in ``[0, 1]`` by construction.
    """
    if int(side) != side or side < 32:
        raise InvalidSize(f"side must be an integer >= 32, got {side}")
    side = int(side)
    t = (np.arange(side) + 0.5) * (2.0 / side) - 1.0
    X, Y = np.meshgrid(t, -t)
    img = np.zeros((side, side))
    for value, a, b, x0, y0, phi in ELLIPSES:
        th = np.deg2rad(phi)
        c, s = np.cos(th), np.sin(th)
        u = (X - x0) * c + (Y - y0) * s
        v = -(X - x0) * s + (Y - y0) * c
        img[(u / a) ** 2 + (v / b) ** 2 <= 1.0] += value
    # overlapping sums are exact multiples of 0.1 up to rounding
    return np.clip(np.round(img, 12), 0.0, 1.0)
