"""Entropy functionals of a process and the structure they certify.

Selective entropy is the (negated) relative entropy of relative fitness;
it is zero exactly for constant-fitness processes.  Environmental entropy
is the one-step partition entropy of the redistribution stage; for finite
discrete processes the singleton joint partition realizes it, and it splits
exactly into a dispersion part (one parent feeding many children) and a
mixing part.  Vanishing of per-parent / per-child conditional entropies of
the mass flow certifies one-sided invertibility of the redistribution stage.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .config import EPS_REL, EPS_SAT, EPS_ZERO
from .laws import LawReport, equilibrium_class
from .measure import Population, TypeSet, variance, xlogx
from .process import (
    Process,
    check_composable,
    fitness,
    price_factorize,
    support_mask,
)


# ---------------------------------------------------------------------------
# Partitions


@dataclass(frozen=True)
class Partition:
    """Disjoint nonempty blocks of labels covering a type set."""

    types: TypeSet
    blocks: tuple[tuple[str, ...], ...]

    def __init__(self, types: TypeSet, blocks):
        blocks = tuple(tuple(str(c) for c in block) for block in blocks)
        seen: list[str] = []
        for block in blocks:
            if not block:
                raise ValueError("partition blocks must be nonempty")
            seen.extend(block)
        if sorted(seen) != sorted(types.labels):
            raise ValueError("blocks must cover the type set disjointly")
        object.__setattr__(self, "types", types)
        object.__setattr__(self, "blocks", blocks)

    @staticmethod
    def singletons(types: TypeSet) -> "Partition":
        return Partition(types, tuple((c,) for c in types.labels))

    def indices(self) -> list[np.ndarray]:
        idx = {c: k for k, c in enumerate(self.types.labels)}
        return [np.array([idx[c] for c in block], dtype=int) for block in self.blocks]


# ---------------------------------------------------------------------------
# Selective entropy


def selective_entropy(p: Process) -> float:
    """Mean of -U log U; nonpositive, zero only for constant fitness."""
    u = fitness(p).U.values
    prob = p.source.weights / p.source.size
    return float(prob @ (-xlogx(u)))


def gibbs_report(p: Process) -> LawReport:
    """-log(1 + var(U)) <= S_NS <= log p_* <= 0."""
    fd = fitness(p)
    s = selective_entropy(p)
    var_u = variance(p.source, fd.U)
    lower = float(-np.log1p(var_u))
    return LawReport(
        name="gibbs",
        lhs=s,
        bounds=(float(np.log(fd.p_star)), 0.0),
        direction="le",
        equilibrium_class=equilibrium_class(p),
        extras={"lower_bound": lower, "lower_slack": s - lower, "var_u": var_u},
    )


def local_selective_entropy(p: Process, block_a, block_b,
                            renormalized: bool = False) -> float:
    """Cell share of selective entropy.

    The default form E[-U_{A,B} log U] sums to the selective entropy over
    any joint partition, but an individual cell can be positive wherever
    U < 1 (the full-space cell is the nonpositive total).  With
    ``renormalized=True`` the cell fitness is rescaled to unit mean before
    the entropy is taken, which is nonpositive for every cell but gives up
    additivity.
    """
    fd = fitness(p)
    idx = {c: k for k, c in enumerate(p.source.types.labels)}
    jdx = {c: k for k, c in enumerate(p.target.types.labels)}
    rows = np.array([idx[c] for c in block_a], dtype=int)
    cols = np.array([jdx[c] for c in block_b], dtype=int)
    w_ab = p.kernel[np.ix_(rows, cols)].sum(axis=1)
    mu = p.source.weights[rows]
    if renormalized:
        mean_cell = float(w_ab @ mu) / p.source.size
        if mean_cell / fd.wbar <= EPS_ZERO:
            return 0.0
        u_hat = np.zeros(len(p.source.weights))
        u_hat[rows] = w_ab / mean_cell
        return float((p.source.weights @ (-xlogx(u_hat))) / p.source.size)
    u = fd.U.values[rows]
    pos = u > EPS_ZERO
    contrib = -(w_ab[pos] / fd.wbar) * np.log(u[pos]) * mu[pos]
    return float(contrib.sum()) / p.source.size


# ---------------------------------------------------------------------------
# Environmental profile


@dataclass(frozen=True)
class CellStats:
    u_bar: float
    s_ec: float
    s_dis: float
    s_mix: float
    p_tilde: float
    phi: float
    lam: float
    gamma: float
    mean_d2: float           # E[U D^2 1_cell], the intermediate mean of D^2
    cov_ec: float            # cov(-U_cell log u_bar, U)
    cov_dis: float           # cov(-U_cell log D, U)
    cov_mix: float           # cov(U_cell log(D / u_bar), U)


@dataclass(frozen=True)
class EntropyProfile:
    s_ns: float
    s_ec: float
    s_dis: float
    s_mix: float
    per_cell: dict = field(repr=False)

    @property
    def s_tot(self) -> float:
        return self.s_ns + self.s_ec


def _profile_from_cells(s_ns: float, per_cell: dict) -> EntropyProfile:
    cells = per_cell.values()
    return EntropyProfile(
        s_ns=s_ns,
        s_ec=float(sum(c.s_ec for c in cells)),
        s_dis=float(sum(c.s_dis for c in cells)),
        s_mix=float(sum(c.s_mix for c in cells)),
        per_cell=per_cell,
    )


def _cell_stats(p: Process, rows: np.ndarray, cols: np.ndarray, fd) -> CellStats:
    mu = p.source.weights
    n = p.source.size
    n_child = n * fd.wbar
    w_row = fd.W.values
    u = fd.U.values

    w_ab = np.zeros(len(mu))
    w_ab[rows] = p.kernel[np.ix_(rows, cols)].sum(axis=1)
    flow = w_ab * mu
    u_bar = float(flow.sum()) / n_child

    # Support decisions run on normalized mass shares so they are scale-free.
    support = (flow / n_child > EPS_ZERO) & (w_row / fd.wbar > EPS_ZERO)
    d = np.zeros(len(mu))
    d[support] = w_ab[support] / w_row[support]

    u_cell = w_ab / fd.wbar
    prob = mu / n

    s_ec = float(-xlogx(u_bar)) if u_bar > 0 else 0.0
    log_d = np.zeros(len(mu))
    log_d[support] = np.log(d[support])
    s_dis = float(prob @ (-u_cell * log_d))
    if u_bar > 0:
        log_m = np.where(support, log_d - np.log(u_bar), 0.0)
        s_mix = float(prob @ (u_cell * log_m))
    else:
        s_mix = 0.0

    p_tilde = float((w_row * mu)[support].sum()) / n_child
    if p_tilde > 0:
        tilde_w = (w_row * mu)[support] / (p_tilde * n_child)
        phi = float(tilde_w @ u[support])
        lam = float(tilde_w @ (u[support] * d[support]))
        gamma = float(tilde_w @ (u[support] * d[support] ** 2))
    else:
        phi = lam = gamma = 0.0
    mean_d2 = float(prob[support] @ (u[support] * d[support] ** 2))

    centered = u - 1.0
    log_ubar = np.log(u_bar) if u_bar > 0 else 0.0
    cov_ec = float(prob @ ((-u_cell * log_ubar) * centered))
    cov_dis = float(prob @ ((-u_cell * log_d) * centered))
    cov_mix = cov_ec - cov_dis
    return CellStats(
        u_bar=u_bar, s_ec=s_ec, s_dis=s_dis, s_mix=s_mix,
        p_tilde=p_tilde, phi=phi, lam=lam, gamma=gamma, mean_d2=mean_d2,
        cov_ec=cov_ec, cov_dis=cov_dis, cov_mix=cov_mix,
    )


def environmental_profile(p: Process, part_a: Partition, part_b: Partition) -> EntropyProfile:
    """Per-cell and total environmental, dispersion, and mixing entropies."""
    if part_a.types != p.source.types or part_b.types != p.target.types:
        raise ValueError("partitions must match the process type sets")
    fd = fitness(p)
    per_cell = {}
    for block_a, rows in zip(part_a.blocks, part_a.indices()):
        for block_b, cols in zip(part_b.blocks, part_b.indices()):
            per_cell[(block_a, block_b)] = _cell_stats(p, rows, cols, fd)
    return _profile_from_cells(selective_entropy(p), per_cell)


def generating_profile(p: Process) -> EntropyProfile:
    """Profile at the singleton joint partition, which realizes the
    partition suprema for finite discrete processes."""
    return environmental_profile(
        p, Partition.singletons(p.source.types), Partition.singletons(p.target.types)
    )


def total_entropy(p: Process) -> float:
    return generating_profile(p).s_tot


# ---------------------------------------------------------------------------
# Environmental equilibrium


def environmental_equilibrium(p: Process, part_a: Partition | None = None,
                              part_b: Partition | None = None):
    """True when the dispersion coefficient is constant on every cell support.

    At singleton partitions each cell support is a single parent, so finite
    discrete processes always pass; block partitions can fail.
    Returns (flag, witnesses) where witnesses lists the offending cells.
    """
    if part_a is None:
        part_a = Partition.singletons(p.source.types)
    if part_b is None:
        part_b = Partition.singletons(p.target.types)
    fd = fitness(p)
    mu = p.source.weights
    w_row = fd.W.values
    n_child = p.target.size
    witnesses = []
    for block_a, rows in zip(part_a.blocks, part_a.indices()):
        for block_b, cols in zip(part_b.blocks, part_b.indices()):
            w_ab = p.kernel[np.ix_(rows, cols)].sum(axis=1)
            support = (w_ab * mu[rows] / n_child > EPS_ZERO) \
                & (w_row[rows] / fd.wbar > EPS_ZERO)
            if not support.any():
                continue
            d = w_ab[support] / w_row[rows][support]
            if d.max() - d.min() > EPS_SAT * max(1.0, d.max()):
                witnesses.append(
                    {"cell": (block_a, block_b), "d_min": float(d.min()),
                     "d_max": float(d.max())}
                )
    return len(witnesses) == 0, witnesses


# ---------------------------------------------------------------------------
# Strong bounds on dispersion and mixing entropies


def bounds_reports_from_cells(cells, s_dis: float, s_mix: float, s_ec: float,
                              eq: str) -> tuple[LawReport, LawReport]:
    """Chains 0 <= lower <= S <= upper <= S_EC for dispersion and mixing."""
    l_dis = u_dis = l_mix = u_mix = 0.0
    for c in cells:
        if c.u_bar <= 0 or c.p_tilde <= 0:
            continue
        if c.mean_d2 > 0:
            l_dis += c.u_bar * np.log(c.u_bar / c.mean_d2)
            u_mix += c.u_bar * np.log(c.mean_d2 / c.u_bar**2)
        u_dis += c.u_bar * np.log(c.p_tilde / c.u_bar)
        l_mix += c.u_bar * np.log(1.0 / c.p_tilde)

    dis = LawReport(
        name="dispersion_bounds",
        lhs=s_ec,
        bounds=(float(u_dis), s_dis, float(l_dis), 0.0),
        direction="ge",
        equilibrium_class=eq,
        extras={"s_dis": s_dis, "s_ec": s_ec},
    )
    mix = LawReport(
        name="mixing_bounds",
        lhs=s_ec,
        bounds=(float(u_mix), s_mix, float(l_mix), 0.0),
        direction="ge",
        equilibrium_class=eq,
        extras={"s_mix": s_mix, "s_ec": s_ec},
    )
    return dis, mix


def dispersion_mixing_bounds(p: Process, part_a: Partition | None = None,
                             part_b: Partition | None = None) -> tuple[LawReport, LawReport]:
    """Four-link chains pinning S_dis and S_mix between per-cell moment bounds
    and the environmental entropy."""
    if part_a is None:
        part_a = Partition.singletons(p.source.types)
    if part_b is None:
        part_b = Partition.singletons(p.target.types)
    prof = environmental_profile(p, part_a, part_b)
    return bounds_reports_from_cells(
        prof.per_cell.values(), prof.s_dis, prof.s_mix, prof.s_ec,
        equilibrium_class(p),
    )


# ---------------------------------------------------------------------------
# Third law: selective change of the environmental entropies


def third_law_from_cells(cells, eq: str, tag: str = "") -> dict[str, LawReport]:
    lhs_ec = lhs_dis = lhs_mix = 0.0
    lo_dis = hi_dis = lo_mix = hi_mix = 0.0
    skipped = 0
    for c in cells:
        lhs_ec += c.cov_ec
        lhs_dis += c.cov_dis
        lhs_mix += c.cov_mix
        if c.u_bar <= 0 or c.p_tilde <= 0:
            continue
        if min(c.phi, c.lam, c.gamma, c.mean_d2) <= 0:
            # Noncommuting cell coefficients can leave the log domain; the
            # windows are only derived where they are positive.
            skipped += 1
            continue
        core = c.p_tilde * c.lam
        lo_dis += core * np.log(c.lam / c.gamma) - c.u_bar * np.log(c.p_tilde / c.u_bar)
        hi_dis += core * np.log(c.phi / c.lam) - c.u_bar * np.log(c.u_bar / c.mean_d2)
        lo_mix += (core * np.log(c.lam / (c.phi * c.u_bar))
                   - c.u_bar * np.log(c.mean_d2 / c.u_bar**2))
        hi_mix += (core * np.log(c.gamma / (c.lam * c.u_bar))
                   - c.u_bar * np.log(1.0 / c.p_tilde))

    if abs(lhs_ec - (lhs_dis + lhs_mix)) > EPS_REL * max(1.0, abs(lhs_ec)):
        raise AssertionError("selective changes of the entropy split disagree")

    def window(name, lhs, lo, hi):
        return LawReport(
            name=name + tag,
            lhs=float(lhs),
            bounds=(float(hi),),
            direction="le",
            equilibrium_class=eq,
            extras={
                "lower_bound": float(lo),
                "lower_slack": float(lhs - lo),
                "window_width": float(hi - lo),
                "cells_outside_log_domain": skipped,
            },
        )

    return {
        "ns_s_ec": window("third_law_ec", lhs_ec, lo_dis + lo_mix, hi_dis + hi_mix),
        "ns_s_dis": window("third_law_dis", lhs_dis, lo_dis, hi_dis),
        "ns_s_mix": window("third_law_mix", lhs_mix, lo_mix, hi_mix),
    }


def third_law(p: Process, part_a: Partition | None = None,
              part_b: Partition | None = None) -> dict[str, LawReport]:
    """Selective changes of S_EC, S_dis, S_mix with their fluctuation windows.

    Each lhs is a sum of covariances of cell observables with relative
    fitness; the windows are per-cell moment bounds that collapse onto the
    lhs whenever the dispersion coefficient is constant per cell (always,
    at singleton partitions of a finite discrete process).
    """
    if part_a is None:
        part_a = Partition.singletons(p.source.types)
    if part_b is None:
        part_b = Partition.singletons(p.target.types)
    prof = environmental_profile(p, part_a, part_b)
    return third_law_from_cells(prof.per_cell.values(), equilibrium_class(p))


# ---------------------------------------------------------------------------
# Intergenerational environmental change of environmental entropy


@dataclass(frozen=True)
class IntergenerationalChange:
    price_route: float       # Delta(S_EC, S_EC') minus the selective change
    formula_route: float     # reweighted cross-partition divergence sum
    s_ec: float
    s_ec_next: float
    ns_s_ec: float


def intergenerational_ec_change(p: Process, q: Process) -> IntergenerationalChange:
    """Environmental change of environmental entropy across a composable pair.

    The price route is definitional: the total change of the per-cell
    entropy observables minus the selective change.  The reweighted
    divergence sum (whose weights are normalized by the second fitness
    moment) is reported alongside; the two differ by exactly
    (1/E[U^2] - 1) E[U X] and so coincide when the first stage has
    constant relative fitness.
    """
    check_composable(p, q)
    prof = generating_profile(p)
    prof_next = generating_profile(q)

    fd = fitness(p)
    u = fd.U.values
    prob = p.source.weights / p.source.size

    # Source observable X(i) = sum over cells of -U_cell(i) log u_bar_cell;
    # its mean is S_EC.
    k, k_child = p.kernel.shape
    u_bar_matrix = p.kernel * p.source.weights[:, None] / p.target.size
    x = np.zeros(k)
    for i in range(k):
        for j in range(k_child):
            ub = u_bar_matrix[i, j]
            if ub > EPS_ZERO:
                x[i] += -(p.kernel[i, j] / fd.wbar) * np.log(ub)
    ns = float(prob @ (x * (u - 1.0)))
    delta = prof_next.s_ec - prof.s_ec
    price_route = delta - ns

    m2 = float(prob @ u**2)
    next_cells = [c.u_bar for c in prof_next.per_cell.values() if c.u_bar > EPS_ZERO]
    formula = 0.0
    for i in range(k):
        for j in range(k_child):
            ub = u_bar_matrix[i, j]
            if ub <= EPS_ZERO:
                continue
            alpha = float(prob[i] * u[i] * p.kernel[i, j] / fd.wbar) / m2
            for ub_next in next_cells:
                formula += -alpha * ub_next * np.log(ub_next / ub)

    return IntergenerationalChange(
        price_route=float(price_route),
        formula_route=float(formula),
        s_ec=prof.s_ec,
        s_ec_next=prof_next.s_ec,
        ns_s_ec=ns,
    )


# ---------------------------------------------------------------------------
# Reversibility of the redistribution stage


@dataclass(frozen=True)
class ReversibilityVerdict:
    left_invertible: bool
    right_invertible: bool
    invertible: bool
    retraction: Process | None
    section: Process | None
    inverse: Process | None
    dollo_childbearing: bool
    dollo_full: bool
    dis_obstruction: float
    mix_obstruction: float


def _flow_matrix(p: Process) -> np.ndarray:
    """Normalized parent-child mass flow; entries sum to one."""
    flow = p.kernel * p.source.weights[:, None] / p.target.size
    flow[flow <= EPS_ZERO] = 0.0
    return flow


def reversibility(p: Process) -> ReversibilityVerdict:
    """Decide one-sided invertibility of the redistribution stage.

    A retraction (undo after) exists iff no child pools mass from two
    parents: the parent-given-child conditional entropy of the flow is
    zero.  A section (undo before) exists iff no parent splits mass over
    two children: the child-given-parent conditional entropy (the
    dispersion entropy) is zero.  Constructed inverses are verified by
    composition.
    """
    flow = _flow_matrix(p)
    rowm = flow.sum(axis=1)
    colm = flow.sum(axis=0)
    pos = flow > 0
    ii, jj = np.nonzero(pos)
    dis_obstruction = float(np.sum(flow[pos] * np.log(rowm[ii] / flow[pos])))
    mix_obstruction = float(np.sum(flow[pos] * np.log(colm[jj] / flow[pos])))

    left = mix_obstruction <= EPS_SAT
    right = dis_obstruction <= EPS_SAT
    invertible = left and right

    factors = price_factorize(p)
    mid = factors.environmental.source
    env_kernel = factors.environmental.kernel
    support_rows = np.nonzero(support_mask(p))[0]
    n_mid = len(mid.types)
    k_child = len(p.target.types)

    retraction = None
    section = None
    inverse = None
    if left:
        r = np.zeros((k_child, n_mid))
        for j in range(k_child):
            parents = np.nonzero(flow[:, j] > 0)[0]
            if len(parents):
                best = parents[np.argmax(flow[parents, j])]
                r[j, np.searchsorted(support_rows, best)] = 1.0
            else:
                r[j, 0] = 1.0  # zero-mass child; row choice carries no mass
        retraction = Process(p.target, mid, r, _check=False)
        composite = env_kernel @ r
        live = mid.weights > 0
        gap = composite[live][:, live] - np.eye(n_mid)[live][:, live]
        if np.max(np.abs(gap)) > 1e-10:
            raise AssertionError("retraction fails to undo the redistribution stage")
    if right:
        s = np.zeros((k_child, n_mid))
        for local_i, i in enumerate(support_rows):
            children = np.nonzero(flow[i] > 0)[0]
            if len(children) == 1:
                j = children[0]
                s[j, local_i] = mid.weights[local_i] / p.target.weights[j]
        section = Process(p.target, mid, s, _check=False)
        composite = s @ env_kernel
        live_child = p.target.weights > 0
        eye = np.eye(k_child)
        gap = composite[live_child][:, live_child] - eye[live_child][:, live_child]
        if np.max(np.abs(gap)) > 1e-10:
            raise AssertionError("section fails to undo the redistribution stage")
    if invertible:
        w_support = p.fitness_values[support_rows]
        inv_kernel = retraction.kernel / w_support[None, :]
        restricted = Population(mid.types, p.source.weights[support_rows])
        inverse = Process(p.target, restricted, inv_kernel, _check=False)

    p_star = fitness(p).p_star
    return ReversibilityVerdict(
        left_invertible=left,
        right_invertible=right,
        invertible=invertible,
        retraction=retraction,
        section=section,
        inverse=inverse,
        dollo_childbearing=invertible,
        dollo_full=invertible and abs(p_star - 1.0) <= EPS_ZERO,
        dis_obstruction=dis_obstruction,
        mix_obstruction=mix_obstruction,
    )


# ---------------------------------------------------------------------------
# Finite-horizon path entropy


def ks_entropy_curve(p: Process, t_max: int) -> list[float]:
    """Path entropies S_1..S_T of the iterated process at singleton cells.

    The entropy of the T-step path mass distribution is accumulated with
    the chain rule over forward marginals and backward reachability masses,
    so no path tensor is materialized.
    """
    if p.source.types != p.target.types:
        raise ValueError("iterated entropy needs an endomorphic process")
    if not 1 <= t_max <= 6:
        raise ValueError("horizon T must be between 1 and 6")
    w = p.kernel
    k = w.shape[0]
    out = []
    for horizon in range(1, t_max + 1):
        back = [np.ones(k)]
        for _ in range(horizon):
            back.append(w @ back[-1])
        back.reverse()  # back[t] = mass reachable in (horizon - t) further steps
        n_final = float(p.source.weights @ back[0])
        if n_final <= EPS_ZERO * p.source.size:
            raise ValueError(f"population dies out before horizon {horizon}")
        forward = p.source.weights.copy()
        marginal = forward * back[0] / n_final
        h = float(np.sum(-xlogx(marginal)))
        for t in range(horizon):
            cond = w * back[t + 1][None, :]
            rows = back[t] > 0
            cond[rows] = cond[rows] / back[t][rows, None]
            cond[~rows] = 0.0
            row_entropy = np.sum(-xlogx(cond), axis=1)
            h += float(marginal @ row_entropy)
            forward = w.T @ forward
            marginal = forward * back[t + 1] / n_final
        out.append(h)
    return out


def ks_entropy(p: Process, t: int) -> float:
    return ks_entropy_curve(p, t)[-1]
