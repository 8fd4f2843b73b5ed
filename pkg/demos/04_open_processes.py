"""Walkthrough: open processes with orphaned children.

When the kernel accounts for only part of the child population, the change
identity picks up a third term: a covariance of the trait against the
parented density of the children.  The term can be written against either
the parented or the orphaned share, and a child-side (dual) fitness gives a
third equivalent route.
"""

from pricekit import Observable, open_process, Population, TypeSet, kgs
from pricekit.openproc import dual_fitness_kgs

parents = Population(TypeSet(["a", "b"]), [1.0, 1.0])
kernel = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]

# The third child type appears from outside the accounting.
op = open_process(parents, kernel, orphan_weights=[0.0, 0.0, 1.0])
print("full child population:", op.full_target.weights)
print("parented density:", op.parented_density.values)
print("parented share:", op.parented_share)

x = Observable(parents.types, [1.0, 0.0])
y = Observable(op.full_target.types, [1.0, 0.0, 0.0])
comp = kgs(op, x, y)
print("\nchange:", comp.delta)
print("  selection:   ", comp.selective)
print("  environment: ", comp.environmental)
print("  orphan term: ", comp.orphan_nu, "(orphan-share route)")
print("               ", comp.orphan_pi, "(parented-share route)")
print("  residual:    ", comp.residual)

dual = dual_fitness_kgs(op, x, y)
print("\nchild-side fitness (mass landing on each child):", dual.dual_fitness)
print("its parented mean (must be one):", dual.dual_mean)
print("orphan term via the dual route:", dual.orphan_via_dual)
