"""Walkthrough: the selection-law inequality chains and their saturation.

A life-or-death population (every parent either dies childless or produces
the same brood size) sits at the extreme point of the law chains: variance,
entropy, and their selective changes all hit their bounds simultaneously.
Generic processes satisfy the same chains strictly.
"""

import numpy as np

from pricekit import (
    Population,
    TypeSet,
    process,
    second_law,
    selective_acceleration,
    speed_limits,
    standard_reports,
    zeroth_law,
)

# Life-or-death fixture: half the population produces two children each.
lod = process(Population(TypeSet(["a", "b"]), [1, 1]), [[2.0], [0.0]])
print("== life-or-death population (childbearing share 1/2) ==")
for rep in standard_reports(lod):
    links = " >= ".join(f"{v:+.6f}" for v in rep.chain) if rep.direction == "ge" \
        else " <= ".join(f"{v:+.6f}" for v in rep.chain)
    print(f"{rep.name:24s} {links}")
    print(f"{'':24s} saturated links: {rep.saturated}  class: {rep.equilibrium_class}")

print("\nsecond-law value -log 2:", second_law(lod).lhs, "=", -np.log(2))
print("speed-limit stationary exponent:",
      speed_limits(lod).extras["stationary_point"])
print("acceleration value:", selective_acceleration(lod).lhs)

# A generic mixed process: the same chains hold with strict slack.
generic = process(Population(TypeSet(["a", "b"]), [1, 2]), [[1.0, 1.0], [0.5, 0.0]])
print("\n== generic mixed process ==")
z = zeroth_law(generic)
print("variance chain:", [round(v, 6) for v in z.chain])
print("slacks:", [round(s, 6) for s in z.slacks], "->", z.equilibrium_class)
