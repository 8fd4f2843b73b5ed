"""Walkthrough: partition entropies, what they certify, and path entropy.

The redistribution stage of a process carries a partition entropy that
splits exactly into a dispersion part (parents spreading over several
children) and a mixing part (children pooling several parents).  Vanishing
per-parent or per-child conditional entropy of the mass flow certifies an
exact one-sided inverse, which is constructed and verified.
"""

import numpy as np

from pricekit import (
    Population,
    TypeSet,
    generating_profile,
    ks_entropy_curve,
    process,
    reversibility,
    third_law,
)
from pricekit.process import Process

# One parent splitting 30/70 over two children: dispersion only.
split = process(Population(TypeSet(["o"]), [1.0]), [[0.3, 0.7]])
prof = generating_profile(split)
print("splitting process: S_dis =", prof.s_dis, " S_mix =", prof.s_mix)
v = reversibility(split)
print("  undo after the fact (retraction)?", v.left_invertible)
print("  undo in advance (section)?", v.right_invertible)
print("  retraction rows:\n", v.retraction.kernel)

# Two parents pooling into one child: mixing only.
pool = process(Population(TypeSet(["a", "b"]), [0.3, 0.7]), [[1.0], [1.0]])
prof = generating_profile(pool)
print("\npooling process:   S_dis =", prof.s_dis, " S_mix =", prof.s_mix)
v = reversibility(pool)
print("  retraction?", v.left_invertible, " section?", v.right_invertible)

# A weighted permutation is fully reversible; its inverse round-trips the
# population exactly.
perm = process(
    Population(TypeSet(["a", "b", "c"]), [1, 2, 3]),
    np.array([[0, 2.0, 0], [0, 0, 1.0], [0.5, 0, 0]]),
)
v = reversibility(perm)
print("\npermutation-like process invertible?", v.invertible)
print("round trip:", v.inverse.kernel.T @ perm.target.weights, "==", perm.source.weights)

# Selective change of the partition entropies, with fluctuation windows.
generic = process(Population(TypeSet(["a", "b"]), [1, 1]), [[1.0, 1.0], [1.0, 0.0]])
for name, rep in third_law(generic).items():
    print(f"\n{name}: value {rep.lhs:+.6f}  window "
          f"[{rep.extras['lower_bound']:+.6f}, {rep.bounds[0]:+.6f}]"
          f"  width {rep.extras['window_width']:.2e}")

# Iterating an endomorphic kernel: path entropy over growing horizons.
chain = Process(
    Population(TypeSet(["a", "b"]), [1, 1]),
    Population(TypeSet(["a", "b"]), [1, 1]),
    [[0.5, 0.5], [0.5, 0.5]],
)
print("\npath entropies over horizons 1..4:", ks_entropy_curve(chain, 4))
print("(each horizon adds log 2 of fresh uncertainty)")
