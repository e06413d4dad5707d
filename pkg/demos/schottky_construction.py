"""Build a well-positioned Schottky group and watch the negative control fail.

Generators are powers of loxodromics with random fixed points; domains are
chordal balls around the fixed points.  The construction raises the power
until the ping-pong conditions hold and shrinks the balls until no chain
through two balls comes near a third.  Putting all fixed points on one chain
breaks the last condition, and the verifier names a witness triple.

    python3 demos/schottky_construction.py
"""

from schottkydim.schottky import (
    BuildParams,
    build_good_position,
    limit_points,
    shared_chain_system,
    verify,
    verify_no_triple_chain,
)

params = BuildParams(t0=3.5, min_distance=0.9)
S = build_good_position(k=2, seed=2, params=params)
rec = S.verification
print(f"verified: {S.verified}  power {rec['power']}  radius {rec['radius']:.4f}")
print(f"ping-pong margin {rec['conditions_1_3']['margin']:.4f}, "
      f"chain clearance {rec['condition_4']['margin']:.4f}")

cloud = limit_points(S, 8)
print(f"{len(cloud)} limit points from words of length 8")

bad = shared_chain_system(k=2, seed=2, params=params)
rec = verify(bad)
print(f"\nshared chain: passed={rec['passed']}")
print(f"witness letters {rec['condition_4']['witness']['letters']}")
for resolution in (16, 64, 256):
    r = verify_no_triple_chain(bad, resolution=resolution)
    print(f"  resolution {resolution:4d}: clearance {r.margin:+.4f} passed={r.passed}")
