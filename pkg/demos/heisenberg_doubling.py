"""Heights along the centre count twice.

On a vertical fibre of the Heisenberg group the Euclidean distance is the
square of the gauge distance, so a vertical segment is 1-dimensional for
one metric and 2-dimensional for the other.  A horizontal square shows the
opposite effect: it is not a horizontal surface and has gauge dimension 3.

    python3 demos/heisenberg_doubling.py
"""

import numpy as np

from schottkydim import calibration as cal
from schottkydim.dimension import box_count
from schottkydim.heisenberg import euclid, gauge_dist

rng = np.random.default_rng(0)

v = rng.normal(size=(5, 1)) + 1j * rng.normal(size=(5, 1))
t, s = rng.normal(size=5), rng.normal(size=5)
print("same fibre:  d_E      d_H^2")
for dE, dH in zip(euclid(v, t, v, s), gauge_dist(v, t, v, s)):
    print(f"          {dE:8.5f} {dH ** 2:8.5f}")

clouds = {
    "vertical segment": cal.vertical_segment(100000, rng),
    "horizontal square": cal.unit_square(100000, rng),
    "Cantor set on a line": cal.cantor_line(3 ** 10, rng),
}
print(f"\n{'set':<22s} {'euclidean':>10s} {'heisenberg':>11s}")
for name, cloud in clouds.items():
    e = box_count(cloud, "euclidean").slope
    h = box_count(cloud, "heisenberg").slope
    print(f"{name:<22s} {e:10.3f} {h:11.3f}")
