"""Synthetic measure on a ball via a noisy lattice and an LP projection.

A delta-spaced lattice covers the l2 ball of radius R in d' coordinates.
Per-cell counts are perturbed with integer Laplace noise at scale 1/eps,
giving a signed measure nu.  The closest probability measure to nu under
the bounded-Lipschitz distance is found by linear programming and rounded
to a synthetic point multiset at the cell anchors.

The LP is min over (mu >= 0, sum mu = 1, flows gamma >= 0, slacks p, q >= 0)
of sum rho_ij gamma_ij + sum (p_i + q_i) subject to, at every anchor i,
sum_j (gamma_ij - gamma_ji) + p_i - q_i = nu_i - mu_i, where rho is the l2
anchor distance.  Small instances are solved literally by the in-house dense
simplex; larger ones by an equivalent reduced flow formulation through
HiGHS, exploiting that transport over distances >= 2 is dominated by paying
both unit slacks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.optimize import linprog

from .errors import (
    InvalidBudgetError,
    InvalidParameterError,
    InvalidRegimeError,
    LatticeTooLargeError,
    SizeOverflowError,
    SolverError,
)
from .noise import NoiseScale, SeededGenerator, sample_integer_laplace
from .simplex import solve_dense_lp

__all__ = [
    "Lattice",
    "SignedLatticeMeasure",
    "ProbabilityLatticeMeasure",
    "lattice_delta",
    "build_lattice",
    "cell_counts",
    "perturb_to_signed_measure",
    "project_to_probability",
    "measure_to_points",
    "run_psmm",
]

DEFAULT_ANCHOR_CAP = 5_000_000
DEFAULT_SIMPLEX_MAX = 90
DEFAULT_ARC_CAP = 6_000_000


@dataclass(frozen=True)
class Lattice:
    """Cells [a, a + delta) anchored on delta Z^d' covering the radius-R ball.

    ``int_coords`` (m x d', lexicographically sorted) are the anchor
    coordinates in units of delta; ``anchors`` converts to coordinate units.
    """

    delta: float
    radius: float
    d_prime: int
    int_coords: np.ndarray

    @property
    def anchors(self) -> np.ndarray:
        return self.int_coords * self.delta

    @property
    def size(self) -> int:
        return self.int_coords.shape[0]


@dataclass(frozen=True)
class SignedLatticeMeasure:
    """Noisy per-cell weights; entries may be negative, mass may differ from 1."""

    weights: np.ndarray

    @property
    def total_mass(self) -> float:
        return float(self.weights.sum())


@dataclass(frozen=True)
class ProbabilityLatticeMeasure:
    """Nonnegative per-anchor weights summing to one."""

    weights: np.ndarray


def lattice_delta(d: int, d_prime: int, epsilon: float, n: int, *, mode: str = "alg5", radius: float = None) -> float:
    """Lattice cell side: sqrt(d/d') (eps n)^(-1/d'), or, in 'proof' mode,
    (R / sqrt(d')) (eps n)^(-1/d')."""
    if not epsilon > 0:
        raise InvalidBudgetError(f"epsilon must be positive, got {epsilon}")
    en = epsilon * n
    if not en > 1.0:
        raise InvalidRegimeError(f"the mechanism requires eps * n > 1, got {en}")
    if mode == "alg5":
        return float(np.sqrt(d / d_prime) * en ** (-1.0 / d_prime))
    if mode == "proof":
        if radius is None or not radius > 0:
            raise InvalidParameterError("'proof' delta mode needs the positive ball radius")
        return float(radius / np.sqrt(d_prime) * en ** (-1.0 / d_prime))
    raise InvalidParameterError(f"unknown delta mode {mode!r} (use 'alg5' or 'proof')")


def build_lattice(radius: float, delta: float, d_prime: int, *, cap: int = DEFAULT_ANCHOR_CAP) -> Lattice:
    """All anchors a in delta Z^d' with ||a||_2 <= R + delta sqrt(d').

    The extension beyond R guarantees that the floor-anchor of every point
    of the radius-R ball is listed.
    """
    if not radius > 0:
        raise InvalidParameterError(f"radius must be positive, got {radius}")
    if not 0 < delta <= 2 * radius:
        raise InvalidParameterError(f"delta must be in (0, 2R], got {delta}")
    d_prime = int(d_prime)
    bound = radius + delta * np.sqrt(d_prime)
    k_max = int(np.floor(bound / delta))
    side = 2 * k_max + 1
    if side ** d_prime > 8 * cap:
        raise LatticeTooLargeError(
            f"lattice grid would enumerate {side ** d_prime} candidate anchors "
            f"(cap {cap}); increase delta"
        )
    axes = [np.arange(-k_max, k_max + 1, dtype=np.int64)] * d_prime
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d_prime)
    norms = np.linalg.norm(grid * delta, axis=1)
    anchors = grid[norms <= bound]
    if anchors.shape[0] > cap:
        raise LatticeTooLargeError(
            f"lattice has {anchors.shape[0]} anchors (cap {cap}); increase delta"
        )
    return Lattice(delta=float(delta), radius=float(radius), d_prime=d_prime, int_coords=anchors)


def _linear_keys(lattice: Lattice, int_coords: np.ndarray) -> np.ndarray:
    k_max = int(np.abs(lattice.int_coords).max(initial=0))
    side = 2 * k_max + 1
    shifted = int_coords + k_max
    if (shifted < 0).any() or (shifted >= side).any():
        raise AssertionError("lattice coverage violated: cell index outside the anchor grid")
    keys = np.zeros(int_coords.shape[0], dtype=np.int64)
    for axis in range(lattice.d_prime):
        keys = keys * side + shifted[:, axis]
    return keys


def cell_counts(coords: np.ndarray, lattice: Lattice) -> np.ndarray:
    """Count points per cell via the componentwise floor anchor.

    Every point must land in a listed cell; a miss is a coverage bug and is
    reported as an assertion failure, not a user error.
    """
    coords = np.asarray(coords, dtype=np.float64)
    if coords.ndim != 2 or coords.shape[0] != lattice.d_prime:
        raise InvalidParameterError(f"coords must be {lattice.d_prime} x n, got {coords.shape}")
    cells = np.floor(coords.T / lattice.delta).astype(np.int64)
    anchor_keys = _linear_keys(lattice, lattice.int_coords)
    order = np.argsort(anchor_keys)
    sorted_keys = anchor_keys[order]
    point_keys = _linear_keys(lattice, cells)
    pos = np.searchsorted(sorted_keys, point_keys)
    pos = np.minimum(pos, sorted_keys.size - 1)
    if not (sorted_keys[pos] == point_keys).all():
        raise AssertionError("lattice coverage violated: point cell has no listed anchor")
    counts = np.zeros(lattice.size, dtype=np.int64)
    np.add.at(counts, order[pos], 1)
    return counts


def perturb_to_signed_measure(
    counts: np.ndarray,
    epsilon: float,
    n: int,
    gen: SeededGenerator,
    *,
    zero_noise: bool = False,
) -> SignedLatticeMeasure:
    """Weights (count + integer Laplace(1/eps)) / n per anchor."""
    if not epsilon > 0:
        raise InvalidBudgetError(f"epsilon must be positive, got {epsilon}")
    counts = np.asarray(counts, dtype=np.int64)
    if zero_noise:
        noisy = counts.astype(np.float64)
    else:
        lam = np.atleast_1d(
            sample_integer_laplace(NoiseScale(1.0 / epsilon), gen.split("cells"), size=counts.shape[0])
        )
        noisy = (counts + lam).astype(np.float64)
    return SignedLatticeMeasure(weights=noisy / n)


def _bl_projection_lp_dense(nu: np.ndarray, rho: np.ndarray):
    """Literal LP over (mu, gamma, p, q) solved by the dense simplex."""
    m = nu.shape[0]
    n_gamma = m * m
    n_vars = m + n_gamma + 2 * m
    cost = np.zeros(n_vars)
    cost[m : m + n_gamma] = rho.ravel()
    cost[m + n_gamma :] = 1.0
    a_eq = np.zeros((m + 1, n_vars))
    for i in range(m):
        a_eq[i, i] = 1.0                                   # mu_i
        a_eq[i, m + i * m : m + (i + 1) * m] += 1.0        # outflow gamma_i*
        a_eq[i, m + i : m + n_gamma : m] -= 1.0            # inflow gamma_*i
        a_eq[i, m + n_gamma + i] = 1.0                     # p_i
        a_eq[i, m + n_gamma + m + i] = -1.0                # q_i
    a_eq[m, :m] = 1.0
    b_eq = np.concatenate([nu, [1.0]])
    x, objective = solve_dense_lp(cost, a_eq, b_eq)
    return x[:m], objective


def _enumerate_offsets(delta: float, d_prime: int, cutoff: float = 2.0, grid_cap: int = 40_000_000):
    """Integer lattice offsets with 0 < ||o|| * delta <= cutoff, nearest first.

    Transport between anchors only ever pays off below ground distance 2
    (one destruction plus one creation costs exactly 2), so candidate arcs
    are source/hole pairs differing by one of these offsets.
    """
    k = int(math.floor(cutoff / delta))
    side = 2 * k + 1
    if side ** d_prime > grid_cap:
        raise SizeOverflowError(
            f"transport neighborhood needs {side ** d_prime} candidate offsets; "
            "increase the lattice delta"
        )
    axes = [np.arange(-k, k + 1, dtype=np.int64)] * d_prime
    grid = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d_prime)
    norms = np.linalg.norm(grid, axis=1) * delta
    keep = (norms <= cutoff) & (norms > 0)
    grid, norms = grid[keep], norms[keep]
    order = np.argsort(norms, kind="stable")
    return grid[order], norms[order]


class _OffsetMatcher:
    """Vectorized lookup of (source, hole) pairs differing by a lattice offset."""

    def __init__(self, src_int, hole_int, span):
        self.src_int = src_int
        self.base = 2 * span + 3
        self.shift = span + 1
        if self.base ** src_int.shape[1] >= 2**62:
            raise SizeOverflowError(
                "lattice coordinate keys would overflow; increase the lattice delta"
            )
        hole_keys = self._keys(hole_int)
        self.order = np.argsort(hole_keys)
        self.sorted_keys = hole_keys[self.order]

    def _keys(self, int_coords):
        keys = np.zeros(int_coords.shape[0], dtype=np.int64)
        for axis in range(int_coords.shape[1]):
            keys = keys * self.base + (int_coords[:, axis] + self.shift)
        return keys

    def pairs(self, offset):
        cand = self._keys(self.src_int + offset)
        pos = np.searchsorted(self.sorted_keys, cand)
        pos = np.minimum(pos, self.sorted_keys.size - 1)
        ok = self.sorted_keys[pos] == cand
        return np.nonzero(ok)[0], self.order[pos[ok]]


def _solve_reduced_lp(arc_src, arc_hole, arc_cost, supply, demand):
    """HiGHS solve of the reduced projection LP on the current arc set."""
    ns, nh = supply.size, demand.size
    n_arcs = arc_src.size
    n_vars = n_arcs + ns + nh + 1  # [arcs, destroy, create, extra-mass]
    cost = np.concatenate([arc_cost, np.ones(ns + nh + 1)])

    a_ub = b_ub = None
    if ns:
        rows = np.concatenate([arc_src, np.arange(ns)])
        cols = np.concatenate([np.arange(n_arcs), n_arcs + np.arange(ns)])
        a_ub = sparse.coo_matrix(
            (np.ones(rows.size), (rows, cols)), shape=(ns, n_vars)
        ).tocsr()
        b_ub = supply

    rows = np.concatenate([arc_hole, np.arange(nh), np.full(n_arcs + ns, nh), [nh]])
    cols = np.concatenate(
        [np.arange(n_arcs), n_arcs + ns + np.arange(nh), np.arange(n_arcs + ns), [n_vars - 1]]
    )
    vals = np.concatenate([np.ones(n_arcs + nh), -np.ones(n_arcs + ns), [1.0]])
    a_eq = sparse.coo_matrix((vals, (rows, cols)), shape=(nh + 1, n_vars)).tocsr()
    b_eq = np.concatenate([demand, [1.0 - supply.sum()]])

    res = linprog(cost, A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=b_eq, bounds=(0, None), method="highs")
    if res.status != 0:
        raise SolverError(f"bounded-Lipschitz projection failed (status {res.status}): {res.message}")
    return res


def _bl_projection_lp_flow(
    nu: np.ndarray,
    lattice: Lattice,
    *,
    arc_cap: int,
    init_arc_budget: int = 500_000,
    max_rounds: int = 40,
):
    """Exact reduced formulation for large instances, via HiGHS.

    Positive-weight anchors are sources that may keep, destroy, or ship
    mass; negative-weight anchors are holes that must be filled by shipped
    or created mass; transport arcs longer than 2 are dominated and dropped.
    Arcs start from the nearest lattice offsets and are generated lazily:
    after each solve, every excluded offset is scanned for negative reduced
    cost (rho_ij - y_i - z_j + w < 0 with y, z, w the row duals), so the
    returned solution carries a full optimality certificate.  Mass created
    beyond the holes is spread over the kept mass, which realizes one of
    the LP's optimal solutions.
    """
    m = nu.shape[0]
    src = np.nonzero(nu > 0)[0]
    hole = np.nonzero(nu < 0)[0]
    ns, nh = src.size, hole.size
    supply = nu[src]
    demand = -nu[hole]

    arc_src = np.empty(0, dtype=np.int64)
    arc_hole = np.empty(0, dtype=np.int64)
    arc_cost = np.empty(0)
    offsets = norms = None
    scan_from = 0
    if ns and nh:
        offsets, norms = _enumerate_offsets(lattice.delta, lattice.d_prime)
        span = int(np.abs(lattice.int_coords).max(initial=0)) + int(
            np.abs(offsets).max(initial=0)
        )
        matcher = _OffsetMatcher(lattice.int_coords[src], lattice.int_coords[hole], span)
        chunks_i, chunks_j, chunks_c = [], [], []
        total = 0
        scan_from = offsets.shape[0]
        for t in range(offsets.shape[0]):
            si, hj = matcher.pairs(offsets[t])
            if total and total + si.size > init_arc_budget:
                scan_from = t
                break
            chunks_i.append(si)
            chunks_j.append(hj)
            chunks_c.append(np.full(si.size, norms[t]))
            total += si.size
        if chunks_i:
            arc_src = np.concatenate(chunks_i)
            arc_hole = np.concatenate(chunks_j)
            arc_cost = np.concatenate(chunks_c)

    res = None
    for _ in range(max_rounds):
        res = _solve_reduced_lp(arc_src, arc_hole, arc_cost, supply, demand)
        if not (ns and nh) or scan_from >= offsets.shape[0]:
            break
        y = res.ineqlin.marginals
        zw = res.eqlin.marginals
        z, w = zw[:nh], zw[nh]
        new_i, new_j, new_c = [], [], []
        for t in range(scan_from, offsets.shape[0]):
            si, hj = matcher.pairs(offsets[t])
            if not si.size:
                continue
            violated = norms[t] - y[si] - z[hj] + w < -1e-9
            if violated.any():
                new_i.append(si[violated])
                new_j.append(hj[violated])
                new_c.append(np.full(int(violated.sum()), norms[t]))
        if not new_i:
            break  # dual-feasible on every excluded arc: certified optimal
        arc_src = np.concatenate([arc_src, *new_i])
        arc_hole = np.concatenate([arc_hole, *new_j])
        arc_cost = np.concatenate([arc_cost, *new_c])
        if arc_src.size > arc_cap:
            raise SizeOverflowError(
                f"bounded-Lipschitz projection needs {arc_src.size} transport arcs "
                f"(cap {arc_cap}); increase the lattice delta"
            )
    else:
        raise SolverError(f"arc generation did not converge within {max_rounds} rounds")

    n_arcs = arc_src.size
    shipped = np.zeros(ns)
    np.add.at(shipped, arc_src, res.x[:n_arcs])
    destroyed = res.x[n_arcs : n_arcs + ns]
    g = res.x[-1]
    keep = np.maximum(supply - shipped - destroyed, 0.0)
    mu = np.zeros(m)
    if keep.sum() > 0:
        mu[src] = keep * (1.0 + g / keep.sum())
    else:
        mu[:] = 1.0 / m
    return mu, float(res.fun)


def project_to_probability(
    nu: SignedLatticeMeasure,
    lattice: Lattice,
    *,
    method: str = "auto",
    simplex_max: int = DEFAULT_SIMPLEX_MAX,
    arc_cap: int = DEFAULT_ARC_CAP,
) -> tuple[ProbabilityLatticeMeasure, float]:
    """Closest probability measure to nu in bounded-Lipschitz distance.

    Returns the minimizer together with the optimal objective value.  The
    distance uses the l2 metric between anchors, with test functions capped
    at 1 in sup norm, so the objective is always at least |sum(nu) - 1|.
    """
    weights = np.asarray(nu.weights, dtype=np.float64)
    m = lattice.size
    if weights.shape != (m,):
        raise InvalidParameterError(f"measure has {weights.shape} weights for {m} anchors")
    if m < 1:
        raise InvalidParameterError("lattice must have at least one anchor")
    if method not in ("auto", "simplex", "flow"):
        raise InvalidParameterError(f"unknown LP method {method!r}")
    if method == "simplex" or (method == "auto" and m <= simplex_max):
        anchors = lattice.anchors
        rho = np.sqrt(((anchors[:, None, :] - anchors[None, :, :]) ** 2).sum(axis=2))
        mu, objective = _bl_projection_lp_dense(weights, rho)
    else:
        mu, objective = _bl_projection_lp_flow(weights, lattice, arc_cap=arc_cap)
    mu = np.maximum(mu, 0.0)
    mu /= mu.sum()
    return ProbabilityLatticeMeasure(weights=mu), objective


def measure_to_points(mu: ProbabilityLatticeMeasure, lattice: Lattice, m_target: int) -> np.ndarray:
    """Deterministic largest-remainder rounding of mu to anchor copies.

    Cell counts are floor(m_target * mu_i) plus one for the largest
    remainders (ties broken toward the lower anchor index); each anchor is
    emitted count times.  Returns a d' x m_target matrix.
    """
    if int(m_target) < 1:
        raise InvalidParameterError(f"m_target must be >= 1, got {m_target}")
    m_target = int(m_target)
    w = np.maximum(np.asarray(mu.weights, dtype=np.float64), 0.0)
    scaled = m_target * (w / w.sum())
    counts = np.floor(scaled).astype(np.int64)
    remaining = m_target - int(counts.sum())
    if remaining > 0:
        fractions = scaled - counts
        order = np.lexsort((np.arange(w.size), -fractions))
        counts[order[:remaining]] += 1
    return np.repeat(lattice.anchors, counts, axis=0).T


def run_psmm(
    coords: np.ndarray,
    radius: float,
    epsilon: float,
    n: int,
    d_ambient: int,
    gen: SeededGenerator,
    *,
    zero_noise: bool = False,
    delta_mode: str = "alg5",
    delta_scale: float = 1.0,
    m_target: int = None,
    lp_method: str = "auto",
    anchor_cap: int = DEFAULT_ANCHOR_CAP,
) -> tuple[np.ndarray, dict]:
    """Full subroutine: lattice, noisy counts, LP projection, rounding."""
    d_prime = int(np.asarray(coords).shape[0])
    if not delta_scale > 0:
        raise InvalidParameterError(f"delta_scale must be positive, got {delta_scale}")
    delta = lattice_delta(d_ambient, d_prime, epsilon, n, mode=delta_mode, radius=radius) * delta_scale
    delta = min(delta, 2.0 * radius)
    lattice = build_lattice(radius, delta, d_prime, cap=anchor_cap)
    counts = cell_counts(coords, lattice)
    nu = perturb_to_signed_measure(counts, epsilon, n, gen, zero_noise=zero_noise)
    mu, objective = project_to_probability(nu, lattice, method=lp_method)
    size = int(m_target) if m_target is not None else int(n)
    points = measure_to_points(mu, lattice, size)
    info = {
        "delta": delta,
        "delta_mode": delta_mode,
        "delta_scale": delta_scale,
        "anchors": lattice.size,
        "signed_total_mass": nu.total_mass,
        "projection_objective": objective,
        "synthetic_size": points.shape[1],
    }
    return points, info
