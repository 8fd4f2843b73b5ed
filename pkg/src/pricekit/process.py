"""Evolutionary processes as kernel matrices between two populations.

A process stores a K x K' nonnegative kernel whose row i gives the child
mass that one unit of parent type i deposits on each child type.  The
defining constraint is the disintegration identity: the child population is
exactly the kernel-weighted image of the parent population.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .config import EPS_REL, EPS_ZERO
from .measure import Observable, Population, TypeSet, expectation


@dataclass(frozen=True)
class Diagnostics:
    """Per-child-type disintegration residuals."""

    residuals: np.ndarray = field(repr=False)
    max_residual: float
    passed: bool

    def failing_types(self, types: TypeSet, tol: float = EPS_REL):
        return [c for c, r in zip(types.labels, self.residuals) if r > tol]


def _relative_residuals(predicted: np.ndarray, stated: np.ndarray) -> np.ndarray:
    scale = np.maximum(np.maximum(np.abs(predicted), np.abs(stated)), EPS_ZERO)
    res = np.abs(predicted - stated) / scale
    res[(predicted == 0) & (stated == 0)] = 0.0
    return res


@dataclass(frozen=True)
class Process:
    source: Population
    target: Population
    kernel: np.ndarray = field(repr=False)

    def __init__(self, source, target, kernel, _check: bool = True):
        k = np.array(kernel, dtype=float)
        if k.ndim != 2 or k.shape != (len(source.types), len(target.types)):
            raise ValueError(
                f"kernel must be {len(source.types)}x{len(target.types)}, got {k.shape}"
            )
        if np.any(k < 0):
            raise ValueError("kernel entries must be nonnegative")
        k.setflags(write=False)
        object.__setattr__(self, "source", source)
        object.__setattr__(self, "target", target)
        object.__setattr__(self, "kernel", k)
        if _check:
            diag = validate(self)
            if not diag.passed:
                raise ValueError(
                    f"disintegration violated, max relative residual {diag.max_residual:.3e}"
                )

    @property
    def fitness_values(self) -> np.ndarray:
        return self.kernel.sum(axis=1)


def process(source: Population, kernel, target: Population | None = None) -> Process:
    """Build a process; when no target is given, derive it from the kernel."""
    k = np.asarray(kernel, dtype=float)
    if target is None:
        weights = k.T @ source.weights
        target = Population(TypeSet.range(k.shape[1], prefix="c"), weights)
    return Process(source, target, k)


def validate(p: Process) -> Diagnostics:
    """Report how well the kernel image of the source matches the target."""
    predicted = p.kernel.T @ p.source.weights
    residuals = _relative_residuals(predicted, p.target.weights)
    mx = float(residuals.max()) if len(residuals) else 0.0
    return Diagnostics(residuals=residuals, max_residual=mx, passed=mx <= EPS_REL)


@dataclass(frozen=True)
class FitnessData:
    W: Observable
    wbar: float
    U: Observable
    p_star: float


def fitness(p: Process) -> FitnessData:
    """Total fitness (row sums), the ratio of population sizes, and U = W/Wbar."""
    w_values = p.fitness_values
    wbar = p.target.size / p.source.size
    u_values = w_values / wbar
    W = Observable(p.source.types, w_values)
    U = Observable(p.source.types, u_values)
    mean_u = expectation(p.source, U)
    if abs(mean_u - 1.0) > 1e-6:
        raise AssertionError(f"relative fitness has mean {mean_u}, expected 1")
    alive = (u_values > EPS_ZERO) & (p.source.weights > 0)
    p_star = float(p.source.weights[alive].sum()) / p.source.size
    return FitnessData(W=W, wbar=wbar, U=U, p_star=p_star)


def support_mask(p: Process) -> np.ndarray:
    """Childbearing rows, decided on the scale-free relative fitness."""
    w = p.fitness_values
    wbar = p.target.size / p.source.size
    return w / wbar > EPS_ZERO


def local_average(p: Process, y: Observable) -> Observable:
    """Fitness-normalized average of a child observable over each parent's brood.

    Rows with no children get the value 0; every use multiplies by U = 0
    there, so the choice never reaches an average.
    """
    if y.types != p.target.types:
        raise ValueError("observable must live on the target type set")
    w = p.fitness_values
    raw = p.kernel @ y.values
    out = np.zeros_like(raw)
    live = support_mask(p)
    out[live] = raw[live] / w[live]
    return Observable(p.source.types, out)


def local_change(p: Process, x: Observable, y: Observable) -> Observable:
    """Pointwise gap between the brood average of y and the parent value x."""
    if x.types != p.source.types:
        raise ValueError("x must live on the source type set")
    avg = local_average(p, y)
    return Observable(p.source.types, avg.values - x.values)


def _populations_match(a: Population, b: Population) -> bool:
    if a.types != b.types:
        return False
    scale = max(a.size, b.size, 1.0)
    return bool(np.all(np.abs(a.weights - b.weights) <= EPS_REL * scale))


def check_composable(p: Process, q: Process) -> None:
    """Raise unless the intermediate populations agree within tolerance."""
    if p.target.types != q.source.types:
        raise ValueError("processes are not composable")
    if not _populations_match(p.target, q.source):
        raise ValueError("intermediate populations differ beyond tolerance")


def compose(p: Process, q: Process) -> Process:
    """Run p, then q.  The kernel of the composite is the matrix product."""
    check_composable(p, q)
    return Process(p.source, q.target, p.kernel @ q.kernel, _check=False)


@dataclass(frozen=True)
class Factorization:
    """Selective scaling followed by a row-stochastic redistribution.

    Childless parent types carry zero intermediate mass; they are dropped
    from the redistribution stage (kept, they would break row-stochasticity)
    and listed in ``dropped_types``.
    """

    selective: Process
    environmental: Process
    fitness_diagonal: np.ndarray
    dropped_types: tuple[str, ...]


def price_factorize(p: Process) -> Factorization:
    w = p.fitness_values
    support = support_mask(p)
    if not support.any():
        raise ValueError("process has no childbearing types to factor")
    labels = np.asarray(p.source.types.labels)
    mid_types = TypeSet(labels[support])
    mid_pop = Population(mid_types, (w * p.source.weights)[support])

    k = len(p.source.types)
    sel_kernel = np.zeros((k, int(support.sum())))
    sel_kernel[np.nonzero(support)[0], np.arange(int(support.sum()))] = w[support]
    selective = Process(p.source, mid_pop, sel_kernel, _check=False)

    env_kernel = p.kernel[support] / w[support, None]
    environmental = Process(mid_pop, p.target, env_kernel, _check=False)

    return Factorization(
        selective=selective,
        environmental=environmental,
        fitness_diagonal=w.copy(),
        dropped_types=tuple(labels[~support]),
    )


class Purity(enum.Enum):
    PURELY_SELECTIVE = "purely_selective"
    PURELY_ENVIRONMENTAL = "purely_environmental"
    MIXED = "mixed"


def classify_purity(p: Process) -> Purity:
    """Constant relative fitness means a Markov chain; a diagonal kernel on a
    shared type set means a pure density scaling; anything else is mixed."""
    u = fitness(p).U.values
    carried = p.source.weights > 0
    if np.all(np.abs(u[carried] - 1.0) <= EPS_REL):
        return Purity.PURELY_ENVIRONMENTAL
    if p.source.types == p.target.types:
        off_diag = p.kernel - np.diag(np.diag(p.kernel))
        if np.all(np.abs(off_diag) <= EPS_ZERO * max(1.0, float(p.kernel.max()))):
            return Purity.PURELY_SELECTIVE
    return Purity.MIXED
