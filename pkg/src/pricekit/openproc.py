"""Open processes: child populations with an orphaned component.

The closed stage accounts for the parented children only; orphans enter the
change identity through a covariance against the parented density.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import EPS_REL, EPS_ZERO
from .measure import Observable, Population, covariance, expectation
from .price import PriceDecomposition, price
from .process import Process, fitness, local_average


@dataclass(frozen=True)
class OpenProcess:
    closed: Process            # parents -> parented children
    full_target: Population    # all children, orphans included

    def __init__(self, closed: Process, full_target: Population):
        if closed.target.types != full_target.types:
            raise ValueError("full target must share the child type set")
        gap = closed.target.weights - full_target.weights
        if np.any(gap > EPS_REL * max(full_target.size, 1.0)):
            raise ValueError("parented children exceed the full child population")
        object.__setattr__(self, "closed", closed)
        object.__setattr__(self, "full_target", full_target)

    @property
    def parented_density(self) -> Observable:
        """pi: the parented fraction of each child type (0 on empty types)."""
        full = self.full_target.weights
        dens = np.zeros_like(full)
        live = full > 0
        dens[live] = self.closed.target.weights[live] / full[live]
        return Observable(self.full_target.types, np.clip(dens, 0.0, 1.0))

    @property
    def orphan_density(self) -> Observable:
        return Observable(
            self.full_target.types, 1.0 - self.parented_density.values
        )

    @property
    def parented_share(self) -> float:
        """p'_pi: parented fraction of the whole child population."""
        return self.closed.target.size / self.full_target.size


def open_process(source: Population, kernel, orphan_weights) -> OpenProcess:
    """Build an open process from a kernel image plus an orphan increment."""
    kernel = np.asarray(kernel, dtype=float)
    parented = kernel.T @ source.weights
    orphan = np.asarray(orphan_weights, dtype=float)
    if np.any(orphan < 0):
        raise ValueError("orphan weights must be nonnegative")
    from .measure import TypeSet

    child_types = TypeSet.range(kernel.shape[1], prefix="c")
    closed = Process(source, Population(child_types, parented), kernel, _check=False)
    full = Population(child_types, parented + orphan)
    return OpenProcess(closed, full)


@dataclass(frozen=True)
class KgsComponents:
    selective: float
    environmental: float
    orphan_nu: float           # +(1/p'_pi) cov'(y, nu)
    orphan_pi: float           # -(1/p'_pi) cov'(y, pi); equal to orphan_nu
    delta: float
    parented_share: float

    @property
    def total(self) -> float:
        return self.selective + self.environmental + self.orphan_nu

    @property
    def residual(self) -> float:
        return self.delta - self.total


def kgs(p: OpenProcess, x: Observable, y: Observable) -> KgsComponents:
    """Three-term change identity for an open process.

    The first two terms are the closed-stage selective and environmental
    changes; the third is the orphan correction, stated equivalently
    through the orphan density nu or the parented density pi.
    """
    share = p.parented_share
    if share <= EPS_ZERO:
        raise ValueError("all children are orphans: the orphan term is undefined")
    closed = p.closed
    fd = fitness(closed)
    sel = covariance(closed.source, x, fd.U)
    avg = local_average(closed, y)
    env = expectation(
        closed.source,
        Observable(closed.source.types, (avg.values - x.values) * fd.U.values),
    )
    nu_term = covariance(p.full_target, y, p.orphan_density) / share
    pi_term = -covariance(p.full_target, y, p.parented_density) / share
    delta = expectation(p.full_target, y) - expectation(closed.source, x)
    return KgsComponents(
        selective=sel,
        environmental=env,
        orphan_nu=nu_term,
        orphan_pi=pi_term,
        delta=delta,
        parented_share=share,
    )


def closed_reduction(p: OpenProcess, x: Observable, y: Observable) -> PriceDecomposition:
    """With no orphans the identity is exactly the two-term decomposition."""
    return price(p.closed, x, y)


@dataclass(frozen=True)
class DualFitnessKgs:
    components: KgsComponents
    dual_fitness: np.ndarray       # column-sum mass of parented children
    dual_mean: float               # should be 1: (1/N'_pi) sum of dual fitness
    orphan_via_dual: float         # third term computed from the dual fitness


def dual_fitness_kgs(p: OpenProcess, x: Observable, y: Observable) -> DualFitnessKgs:
    """Re-derive the orphan term from the child-side (dual) fitness.

    The dual fitness of a child type is the parented mass landing on it:
    the kernel column sums against the parent weights.  Its mean over the
    parented population is one by construction, which is verified.
    """
    comp = kgs(p, x, y)
    closed = p.closed
    dual = closed.kernel.T @ closed.source.weights
    n_parented = closed.target.size
    dual_mean = float(dual.sum()) / n_parented
    orphan_via_dual = (
        -float(y.values @ dual) / n_parented
        + expectation(p.full_target, y)
    )
    return DualFitnessKgs(
        components=comp,
        dual_fitness=dual,
        dual_mean=dual_mean,
        orphan_via_dual=orphan_via_dual,
    )
