"""Exact Wasserstein distances between empirical measures, plus diagnostics.

Distances are computed as exact integral min-cost flows on the complete
bipartite support graph: rational weights are scaled to a common integer
denominator and the transportation problem is solved to a basic (vertex)
optimum, which is integral for integral marginals.  Node potentials of the
flow give the dual Lipschitz certificate, so optimality is checkable.

For instances too large for the exact solver there is a separate,
explicitly approximate subsample estimator.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy import sparse
from scipy.optimize import linear_sum_assignment, linprog

from .errors import InvalidParameterError, SizeOverflowError, SolverError
from .noise import SeededGenerator

__all__ = [
    "EmpiricalMeasure",
    "TransportResult",
    "ProjectionReport",
    "ground_distances",
    "wasserstein1",
    "wasserstein2",
    "wasserstein1_sampled",
    "wasserstein1_bruteforce",
    "projection_diagnostics",
]

DEFAULT_MAX_CELLS = 4_000_000


@dataclass(frozen=True)
class EmpiricalMeasure:
    """Weighted point measure: support is d x k, weights are exact rationals.

    Weights default to the uniform 1/k and must be nonnegative rationals
    summing to exactly 1.
    """

    support: np.ndarray
    weights: tuple = None

    def __post_init__(self):
        pts = np.ascontiguousarray(np.asarray(self.support, dtype=np.float64))
        if pts.ndim == 1:
            pts = pts[None, :]
        if pts.ndim != 2 or pts.shape[1] < 1:
            raise InvalidParameterError(f"support must be a nonempty d x k matrix, got {pts.shape}")
        k = pts.shape[1]
        if self.weights is None:
            w = tuple([Fraction(1, k)] * k)
        else:
            w = tuple(Fraction(x) for x in self.weights)
            if len(w) != k:
                raise InvalidParameterError("weights length must match support size")
            if any(x < 0 for x in w):
                raise InvalidParameterError("weights must be nonnegative")
            if sum(w) != 1:
                raise InvalidParameterError("weights must sum to exactly 1")
        object.__setattr__(self, "support", pts)
        object.__setattr__(self, "weights", w)

    @classmethod
    def from_points(cls, points) -> "EmpiricalMeasure":
        return cls(support=np.asarray(points, dtype=np.float64))

    @property
    def size(self) -> int:
        return self.support.shape[1]


@dataclass(frozen=True)
class TransportResult:
    """Optimal transport value with its integral plan and dual potentials."""

    value: float
    plan: np.ndarray          # k_p x k_q, in probability-mass units
    plan_units: np.ndarray    # same plan in scaled integer units
    mass_scale: int           # common denominator the weights were scaled by
    potential_p: np.ndarray   # dual potential per P-atom (per unit mass)
    potential_q: np.ndarray   # dual potential per Q-atom
    costs: np.ndarray


def ground_distances(x: np.ndarray, y: np.ndarray, metric: str = "linf") -> np.ndarray:
    """Pairwise ground distances between columns of x (d x k1) and y (d x k2)."""
    diff = x.T[:, None, :] - y.T[None, :, :]
    if metric == "linf":
        return np.abs(diff).max(axis=2)
    if metric == "l2":
        return np.sqrt((diff * diff).sum(axis=2))
    raise InvalidParameterError(f"unknown ground metric {metric!r} (use 'linf' or 'l2')")


def _integer_masses(p: EmpiricalMeasure, q: EmpiricalMeasure):
    """Scale both weight vectors to a common integer denominator."""
    denom = 1
    for w in itertools.chain(p.weights, q.weights):
        denom = denom * w.denominator // math.gcd(denom, w.denominator)
    if denom > 10**15:
        raise SizeOverflowError(
            f"weight denominators scale to {denom}, past the exact-integer range; "
            "use wasserstein1_sampled (approximate)"
        )
    a = np.array([int(w * denom) for w in p.weights], dtype=np.int64)
    b = np.array([int(w * denom) for w in q.weights], dtype=np.int64)
    return a, b, denom


def _solve_transport(costs: np.ndarray, a: np.ndarray, b: np.ndarray):
    """Exact transportation LP: min <c, x> with row sums a and column sums b.

    Returns the flow (a vertex solution, integral for integral marginals)
    and the node potentials (u, v) with u_i + v_j <= c_ij.
    """
    kp, kq = costs.shape
    ncells = kp * kq
    row_i = np.repeat(np.arange(kp), kq)
    col_j = np.tile(np.arange(kp, kp + kq), kp)
    cols = np.arange(ncells)
    a_eq = sparse.coo_matrix(
        (
            np.ones(2 * ncells),
            (np.concatenate([row_i, col_j]), np.concatenate([cols, cols])),
        ),
        shape=(kp + kq, ncells),
    ).tocsr()
    b_eq = np.concatenate([a, b]).astype(np.float64)
    res = linprog(costs.ravel(), A_eq=a_eq, b_eq=b_eq, bounds=(0, None), method="highs")
    if res.status != 0:
        raise SolverError(f"transportation solve failed (status {res.status}): {res.message}")
    flow = res.x.reshape(kp, kq)
    duals = res.eqlin.marginals
    return flow, float(res.fun), duals[:kp], duals[kp:]


def _transport_between(p, q, metric, power, max_cells):
    if p.size * q.size > max_cells:
        raise SizeOverflowError(
            f"exact transport on {p.size} x {q.size} supports exceeds the "
            f"{max_cells}-cell limit; use wasserstein1_sampled (approximate)"
        )
    if p.support.shape[0] != q.support.shape[0]:
        raise InvalidParameterError("measures live in different ambient dimensions")
    costs = ground_distances(p.support, q.support, metric) ** power
    a, b, denom = _integer_masses(p, q)
    flow, total, u, v = _solve_transport(costs, a, b)
    value = total / denom
    return TransportResult(
        value=value,
        plan=flow / denom,
        plan_units=np.rint(flow).astype(np.int64),
        mass_scale=denom,
        potential_p=u,
        potential_q=v,
        costs=costs,
    )


def wasserstein1(p, q, metric: str = "linf", *, max_cells: int = DEFAULT_MAX_CELLS, detailed: bool = False):
    """Exact 1-Wasserstein distance between two empirical measures.

    Unequal support sizes and rational weights are handled by integer mass
    scaling; the result does not depend on the ordering of either support.
    Raises SizeOverflowError when the scaled instance is too large, in which
    case the sampled estimator is the documented fallback.
    """
    p = p if isinstance(p, EmpiricalMeasure) else EmpiricalMeasure.from_points(p)
    q = q if isinstance(q, EmpiricalMeasure) else EmpiricalMeasure.from_points(q)
    result = _transport_between(p, q, metric, power=1, max_cells=max_cells)
    return result if detailed else result.value


def wasserstein2(p, q, metric: str = "l2", *, max_cells: int = DEFAULT_MAX_CELLS, detailed: bool = False):
    """Exact 2-Wasserstein distance (squared-cost flow, square root reported)."""
    p = p if isinstance(p, EmpiricalMeasure) else EmpiricalMeasure.from_points(p)
    q = q if isinstance(q, EmpiricalMeasure) else EmpiricalMeasure.from_points(q)
    result = _transport_between(p, q, metric, power=2, max_cells=max_cells)
    value = math.sqrt(max(result.value, 0.0))
    if not detailed:
        return value
    return TransportResult(
        value=value,
        plan=result.plan,
        plan_units=result.plan_units,
        mass_scale=result.mass_scale,
        potential_p=result.potential_p,
        potential_q=result.potential_q,
        costs=result.costs,
    )


def wasserstein1_bruteforce(p, q, metric: str = "linf") -> float:
    """Permutation-enumeration oracle for equal-size uniform measures.

    Only valid for uniform weights on supports of equal (small) size; used
    to cross-check the flow solver.
    """
    p = p if isinstance(p, EmpiricalMeasure) else EmpiricalMeasure.from_points(p)
    q = q if isinstance(q, EmpiricalMeasure) else EmpiricalMeasure.from_points(q)
    k = p.size
    if q.size != k:
        raise InvalidParameterError("brute-force oracle needs equal support sizes")
    if k > 8:
        raise SizeOverflowError("brute-force oracle limited to supports of size <= 8")
    costs = ground_distances(p.support, q.support, metric)
    best = math.inf
    for perm in itertools.permutations(range(k)):
        best = min(best, costs[np.arange(k), perm].sum())
    return best / k


def wasserstein1_sampled(
    p,
    q,
    gen: SeededGenerator,
    metric: str = "linf",
    *,
    k: int = 1024,
    repeats: int = 2,
) -> float:
    """APPROXIMATE W1 estimate for large instances.

    Draws k atoms i.i.d. from each measure (by weight) and averages the
    exact assignment cost over independent repeats.  Biased upward by the
    finite-sample floor; use only where the exact solver refuses.
    """
    p = p if isinstance(p, EmpiricalMeasure) else EmpiricalMeasure.from_points(p)
    q = q if isinstance(q, EmpiricalMeasure) else EmpiricalMeasure.from_points(q)
    values = []
    for rep in range(repeats):
        sub = gen.split(f"w1-sample-{rep}")
        xs = _draw_atoms(p, k, sub.split("p"))
        ys = _draw_atoms(q, k, sub.split("q"))
        costs = ground_distances(xs, ys, metric)
        # tiny deterministic jitter breaks cost ties, which can otherwise
        # push the assignment solver into its worst case on sup-metric costs
        jitter = sub.split("jitter").random(costs.shape) * 1e-11
        rows, cols = linear_sum_assignment(costs + jitter)
        values.append(costs[rows, cols].mean())
    return float(np.mean(values))


def _draw_atoms(measure: EmpiricalMeasure, k: int, gen: SeededGenerator) -> np.ndarray:
    uniform = all(w == measure.weights[0] for w in measure.weights)
    if uniform and k <= measure.size:
        idx = gen.choice(measure.size, size=k, replace=False)
    else:
        probs = np.array([float(w) for w in measure.weights])
        probs = probs / probs.sum()
        idx = gen.choice(measure.size, size=k, replace=True, p=probs)
    return measure.support[:, idx]


@dataclass(frozen=True)
class ProjectionReport:
    """Per-run stability diagnostics for a noisy-subspace projection.

    ``residual`` is (1/n) ||Z - VV^T Z||_F^2, ``tail`` the summed trailing
    eigenvalues of (1/n) Z Z^T, and ``noise_norm`` the spectral norm of the
    perturbation.  ``stability_ok`` asserts residual <= tail + 2 d' noise_norm
    and ``weyl_ok`` asserts the top-d' eigenvalue shifts are at most
    noise_norm, both up to the stated numerical slack.
    """

    residual: float
    tail: float
    noise_norm: float
    max_eigenvalue_shift: float
    stability_ok: bool
    weyl_ok: bool
    slack: float


def projection_diagnostics(
    z: np.ndarray,
    noise: np.ndarray,
    basis: np.ndarray,
    d_prime: int,
    *,
    slack: float = 1e-9,
) -> ProjectionReport:
    """Check the projection-stability and eigenvalue-shift bounds on one run.

    ``z`` is the (centered) d x n data, ``noise`` the symmetric perturbation
    applied to (1/n) z z^T, and ``basis`` the d x d' projector columns taken
    from the perturbed matrix's top eigenvectors.
    """
    z = np.asarray(z, dtype=np.float64)
    noise = np.asarray(noise, dtype=np.float64)
    basis = np.asarray(basis, dtype=np.float64)
    d, n = z.shape
    d_prime = int(d_prime)
    if basis.shape != (d, d_prime):
        raise InvalidParameterError(f"basis must be {d} x {d_prime}, got {basis.shape}")
    m_z = z @ z.T / n
    m_z = (m_z + m_z.T) / 2.0
    eig_clean = np.sort(np.linalg.eigvalsh(m_z))[::-1]
    eig_noisy = np.sort(np.linalg.eigvalsh(m_z + noise))[::-1]
    noise_norm = float(np.linalg.norm(noise, 2)) if noise.size else 0.0
    residual = float(np.linalg.norm(z - basis @ (basis.T @ z)) ** 2 / n)
    tail = float(eig_clean[d_prime:].sum())
    shift = float(np.abs(eig_clean[:d_prime] - eig_noisy[:d_prime]).max())
    return ProjectionReport(
        residual=residual,
        tail=tail,
        noise_norm=noise_norm,
        max_eigenvalue_shift=shift,
        stability_ok=residual <= tail + 2.0 * d_prime * noise_norm + slack,
        weyl_ok=shift <= noise_norm + slack,
        slack=slack,
    )
