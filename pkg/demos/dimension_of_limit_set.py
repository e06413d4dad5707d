"""The three dimensions of a limit set agree with the critical exponent.

For a well-positioned Schottky group the orbit growth rate, the box
dimension of the limit set in the round sphere, and its box dimension for
the Heisenberg gauge should all coincide.  The Patterson-Sullivan measure
should also carry no mass along the centre: its fiber dimension is zero.

    python3 demos/dimension_of_limit_set.py    # about 20 s
"""

from schottkydim.cli import bundled
from schottkydim.dimension import (
    balogh_check,
    box_count,
    chart_frame,
    critical_exponent,
    fiber_transverse_dims,
    ps_sample,
)
from schottkydim.schottky import SchottkyDescriptor, limit_points, orbit_distances

S = SchottkyDescriptor.load(bundled("example_descriptor.json"))

est = critical_exponent(orbit_distances(S, 12))
print(f"critical exponent: counting {est.delta_counting:.4f}, series {est.delta_series:.4f}")

cloud = limit_points(S, 10)
frame = chart_frame(cloud.Z)
dims = {m: box_count(cloud, m, frame=frame, min_decades=3).slope
        for m in ("spherical", "heisenberg", "euclidean")}
for metric, slope in dims.items():
    print(f"box dimension ({metric:<10s}) {slope:.4f}")

band = balogh_check(dims["spherical"], dims["heisenberg"], S.n)
print(f"inside the spherical/gauge band: {band['pass']}")

ft = fiber_transverse_dims(ps_sample(S, 8, est.delta_counting), frame)
print(f"Patterson-Sullivan cloud: fiber {ft.fiber:.3f}, transverse {ft.transverse:.3f}")
