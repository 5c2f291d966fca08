"""Convex hulls of functions through finitely supported decompositions.

``co f(x)`` is the infimum of ``sum_i w_i f(x_i)`` over convex combinations
``x = sum_i w_i x_i`` inside the set.  :func:`co_f_search` attacks that
infimum with a column-generation style loop: propose support atoms, solve
the barycentric LP over them, keep the basic (at most ``N + 1`` atom)
solution and perturb its atoms.  Every reported value is attained by the
decomposition shipped with it, so it is always a certified upper bound.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.optimize import linprog

from .measures import FiniteMeasure, barycenter, caratheodory_reduce
from .spaces import (
    Family,
    SetDescriptor,
    as_vector,
    contains,
    finite_extreme_points,
    lp_norm,
    project_by_scaling,
    sample_extreme_points,
    sample_points,
)

log = logging.getLogger(__name__)

DEFAULT_SEED = 0x5EED


class HullSolverError(RuntimeError):
    """The LP backend failed; no value is reported in that case."""


class MinorantRejected(ValueError):
    """A proposed affine minorant exceeds ``f`` somewhere on the set."""

    def __init__(self, witness, violation):
        self.witness = np.asarray(witness)
        self.violation = float(violation)
        super().__init__(f"affine map exceeds f by {violation:.3g} at a sampled point")


@dataclass
class ObjectiveFunction:
    evaluator: Callable[[np.ndarray], float]
    declared_concave: bool = False
    declared_convex: bool = False
    declared_bounds: Optional[tuple] = None
    name: str = ""

    def __call__(self, y) -> float:
        return float(self.evaluator(as_vector(y)))

    def values(self, pts: np.ndarray) -> np.ndarray:
        return np.array([self.evaluator(p) for p in pts], dtype=float)

    @property
    def heuristic(self) -> bool:
        return not (self.declared_concave or self.declared_convex)


@dataclass
class HullConfig:
    restarts: int = 16
    seed: int = DEFAULT_SEED
    tol: float = 1e-10          # minimal improvement that keeps a restart going
    feas_tol: float = 1e-9
    max_rounds: int = 12
    n_samples: int = 48         # fresh extreme-point proposals per restart
    n_perturb: int = 4          # perturbations per support atom and round
    perturb_scale: float = 0.25
    samples: int = 256          # points used to validate affine minorants


@dataclass
class HullSolution:
    value: float
    decomposition: FiniteMeasure
    iterations: int = 0
    heuristic: bool = True
    exact: bool = False
    lower_bound: Optional[float] = None
    lower_witness: Optional[tuple] = None   # (slope, offset)
    trajectory: list = field(default_factory=list)

    def barycenter_error(self, x) -> float:
        return float(np.max(np.abs(barycenter(self.decomposition) - as_vector(x))))

    def to_json(self) -> dict:
        out = {
            "value": self.value,
            "decomposition": self.decomposition.to_json(),
            "iterations": self.iterations,
            "heuristic": self.heuristic,
            "exact": self.exact,
            "lower_bound": self.lower_bound,
        }
        if self.lower_witness is not None:
            slope, offset = self.lower_witness
            out["lower_witness"] = {"slope": list(map(float, slope)), "offset": float(offset)}
        return out


def co_f_simplex_exact(vertex_values: Sequence[float], barycentric_coords: Sequence[float],
                       tol: float = 1e-12) -> float:
    """Hull value of a concave function on a simplex.

    A point of a simplex has exactly one representation by the vertices, and
    a concave function's hull is attained on the vertices, so the hull is the
    affine interpolation of the vertex values.
    """
    v = np.asarray(vertex_values, dtype=float)
    lam = np.asarray(barycentric_coords, dtype=float)
    if v.shape != lam.shape:
        raise ValueError(f"{lam.size} coordinates for {v.size} vertex values")
    if np.any(lam < -tol) or abs(lam.sum() - 1) > 1e-9:
        raise ValueError("barycentric coordinates must be nonnegative and sum to 1")
    return float(v @ lam)


def simplex_barycentric(desc: SetDescriptor, x) -> np.ndarray:
    """Coordinates of ``x`` w.r.t. the rows of ``finite_extreme_points(desc)``."""
    v = as_vector(x)
    if desc.family is Family.STANDARD_SIMPLEX:
        return v.copy()
    if desc.family in (Family.L1_CONE, Family.DELTA_P):
        return np.concatenate([[1.0 - v.sum()], v])
    raise ValueError(f"{desc.family.value} is not a simplex")


def _solve_barycentric_lp(pool: np.ndarray, fvals: np.ndarray, x: np.ndarray,
                          feas_tol: float):
    """min f.w  s.t.  pool.T w = x, sum w = 1, w >= 0  ->  (atoms, weights) or None."""
    n, d = pool.shape
    A = np.vstack([pool.T, np.ones(n)])
    b = np.concatenate([x, [1.0]])
    res = linprog(fvals, A_eq=A, b_eq=b, bounds=(0, None), method="highs-ds",
                  options={"primal_feasibility_tolerance": feas_tol,
                           "dual_feasibility_tolerance": feas_tol})
    if res.status != 0:
        return None
    w = np.clip(res.x, 0.0, None)
    support = np.flatnonzero(w > 1e-14)
    atoms, w = pool[support], w[support]
    # polish the weights on the chosen support so the barycenter is tight
    lifted = np.vstack([atoms.T, np.ones(len(w))])
    w_ls, *_ = np.linalg.lstsq(lifted, b, rcond=None)
    if np.all(w_ls >= 0) and np.max(np.abs(lifted @ w_ls - b)) <= np.max(np.abs(lifted @ w - b)):
        w = w_ls
    if len(w) > d + 1:
        atoms, w = caratheodory_reduce(atoms, w)
    w = w / w.sum()
    return atoms, w


def _make_solution(atoms, w, f: ObjectiveFunction, fvals=None) -> tuple:
    mu = FiniteMeasure(atoms, w)
    vals = f.values(mu.atoms) if fvals is None else fvals
    return float(mu.weights @ vals), mu


def _base_pool(desc: SetDescriptor, x: np.ndarray) -> np.ndarray:
    """Deterministic proposals: x, its scalings, and the coordinate directions."""
    N = desc.dim
    rows = [x]
    fam = desc.family
    if fam in (Family.LP_CONE, Family.L1_CONE, Family.DELTA_P):
        rows.append(np.zeros(N))
        rows.extend(np.eye(N))
    elif fam is Family.UNIT_BALL:
        rows.extend(np.eye(N))
        rows.extend(-np.eye(N))
        nx = lp_norm(x, 2)
        if nx > 0:
            rows.append(x / nx)
            rows.append(-x / nx)
    elif fam is Family.STANDARD_SIMPLEX:
        rows.extend(np.eye(N))
    elif fam is Family.HILBERT_CUBE:
        a = np.asarray(desc.a)
        rows.append(np.where(x >= 0, a, -a))
        rows.append(np.where(x >= 0, -a, a))
    return np.array(rows)


def co_f_search(desc: SetDescriptor, f: ObjectiveFunction, x, cfg: Optional[HullConfig] = None,
                warm_start: Sequence[FiniteMeasure] = (),
                minorant: Optional[tuple] = None) -> HullSolution:
    """Upper-bound ``co f(x)`` by the best decomposition found.

    Parameters
    ----------
    desc, f, x
        The set, the objective and the query point (which must lie in the set).
    cfg
        Restarts, seed and tolerances; see :class:`HullConfig`.
    warm_start
        Decompositions of ``x`` to seed every restart with (their atoms join
        the candidate pool).
    minorant
        Optional ``(slope, offset)`` of an affine minorant of ``f``; when it
        validates, its value at ``x`` is attached as ``lower_bound``.

    Returns
    -------
    HullSolution
        ``value`` equals ``sum w_i f(x_i)`` over the returned decomposition.
        Concave ``f`` on a set with a finite vertex set is solved exactly.
    """
    cfg = cfg or HullConfig()
    x = as_vector(x)
    if not contains(desc, x, cfg.feas_tol):
        raise ValueError("query point lies outside the set")
    fx = f(x)
    best_val, best_mu = fx, FiniteMeasure.dirac(x)
    iterations = 0
    trajectory = [fx]

    def offer(val, mu):
        nonlocal best_val, best_mu
        # the trivial decomposition wins ties, so convex f keeps delta_x
        if val < best_val - cfg.tol:
            best_val, best_mu = val, mu

    for mu0 in warm_start:
        if np.max(np.abs(barycenter(mu0) - x)) <= 1e-8:
            offer(*_make_solution(mu0.atoms, mu0.weights, f))

    verts = finite_extreme_points(desc)
    exact = False
    if f.declared_convex:
        exact = True
    elif f.declared_concave and verts is not None:
        pool = np.vstack([verts, x[None, :]])
        sol = _solve_barycentric_lp(pool, f.values(pool), x, cfg.feas_tol)
        iterations += 1
        if sol is None:
            raise HullSolverError("barycentric LP over the vertex set failed")
        offer(*_make_solution(*sol, f))
        trajectory.append(best_val)
        exact = True
    else:
        base = _base_pool(desc, x)
        warm = [mu.atoms for mu in warm_start]
        results = []
        for r in range(cfg.restarts):
            val, mu, its, traj = _one_restart(desc, f, x, fx, base, warm, cfg,
                                              np.random.default_rng([cfg.seed, r]))
            iterations += its
            results.append((val, mu.sort_key(), r, mu, traj))
        # deterministic merge: minimum value, then smallest serialization
        results.sort(key=lambda t: (t[0], t[1], t[2]))
        val, _, _, mu, traj = results[0]
        offer(val, mu)
        trajectory.extend(traj)

    sol = HullSolution(value=best_val, decomposition=best_mu, iterations=iterations,
                       heuristic=f.heuristic, exact=exact, trajectory=trajectory)
    if minorant is not None:
        slope, offset = minorant
        sol.lower_bound = affine_minorant_bound(desc, f, x, slope, offset, cfg)
        sol.lower_witness = (np.asarray(slope, dtype=float), float(offset))
    return sol


def _one_restart(desc, f, x, fx, base, warm, cfg, rng):
    N = desc.dim
    fresh = sample_extreme_points(desc, cfg.n_samples, rng)
    pool = np.vstack([base, fresh, *warm]) if warm else np.vstack([base, fresh])
    fvals = f.values(pool)
    val, mu = fx, FiniteMeasure.dirac(x)
    traj = []
    its = 0
    scale = cfg.perturb_scale
    for _ in range(cfg.max_rounds):
        sol = _solve_barycentric_lp(pool, fvals, x, cfg.feas_tol)
        its += 1
        if sol is None:
            raise HullSolverError("barycentric LP failed although x is in the pool")
        new_val, new_mu = _make_solution(*sol, f)
        improved = val - new_val
        if new_val < val:
            val, mu = new_val, new_mu
        traj.append(val)
        if improved < cfg.tol and its > 1:
            break
        # next pool: incumbent support, x, perturbed atoms, a few fresh samples
        support = mu.atoms
        noise = rng.standard_normal((len(support) * cfg.n_perturb, N)) * scale
        moved = np.repeat(support, cfg.n_perturb, axis=0) + noise
        moved = np.array([project_by_scaling(desc, m) for m in moved])
        extra = sample_extreme_points(desc, max(4, cfg.n_samples // 4), rng)
        pool = np.vstack([base, support, moved, extra])
        fvals = f.values(pool)
        scale *= 0.5
    return val, mu, its, traj


def affine_minorant_bound(desc: SetDescriptor, f: ObjectiveFunction, x, slope, offset,
                          cfg: Optional[HullConfig] = None, tol: float = 1e-9) -> float:
    """Lower bound ``<slope, x> + offset`` for ``co f(x)``, after spot-checking.

    The caller claims the affine map stays below ``f``; the claim is checked
    on ``cfg.samples`` random points of the set plus its deterministic
    proposals.  A violation beyond ``tol`` raises :class:`MinorantRejected`.
    """
    cfg = cfg or HullConfig()
    x = as_vector(x)
    slope = as_vector(slope)
    rng = np.random.default_rng([cfg.seed, 7])
    pts = np.vstack([_base_pool(desc, x), sample_points(desc, cfg.samples, rng)])
    verts = finite_extreme_points(desc)
    if verts is not None:
        pts = np.vstack([pts, verts])
    excess = pts @ slope + offset - f.values(pts)
    worst = int(np.argmax(excess))
    if excess[worst] > tol:
        raise MinorantRejected(pts[worst], excess[worst])
    return float(slope @ x + offset)


@dataclass
class LscReport:
    gap: float
    limit_value: float
    tail_values: list
    tail_start: int


def lsc_probe(desc: SetDescriptor, f: ObjectiveFunction, sequence, limit,
              cfg: Optional[HullConfig] = None, tail_fraction: float = 0.5) -> LscReport:
    """Hull value at ``limit`` minus the smallest hull value along the tail.

    A gap clearly above the solver tolerance is numerical evidence that
    ``co f`` is not lower semicontinuous at ``limit``.
    """
    cfg = cfg or HullConfig()
    seq = [as_vector(s) for s in sequence]
    lim = as_vector(limit)
    if not seq:
        raise ValueError("empty sequence")
    dists = np.array([np.linalg.norm(s - lim) for s in seq])
    if np.any(np.diff(dists) > 1e-12):
        raise ValueError("sequence distances to the limit must be non-increasing")
    start = min(len(seq) - 1, int(np.floor(len(seq) * (1 - tail_fraction))))
    tail_vals = [co_f_search(desc, f, s, cfg).value for s in seq[start:]]
    lim_val = co_f_search(desc, f, lim, cfg).value
    return LscReport(gap=lim_val - min(tail_vals), limit_value=lim_val,
                     tail_values=tail_vals, tail_start=start)


# ---------------------------------------------------------------------------
# builtin objectives


def simplex_table_function(desc: SetDescriptor, values, curvature: float = 0.0) -> ObjectiveFunction:
    """Affine interpolation of vertex ``values`` plus a concave bump.

    The bump ``curvature * sum_i l_i (1 - l_i)`` vanishes at the vertices, so
    for ``curvature >= 0`` the function is concave and its hull is the plain
    affine interpolation.
    """
    verts = finite_extreme_points(desc)
    vals = np.asarray(values, dtype=float)
    if verts is None or desc.family is Family.HILBERT_CUBE or len(vals) != len(verts):
        raise ValueError("a value table needs a simplex family and one value per vertex")

    def ev(y):
        lam = simplex_barycentric(desc, y)
        return float(vals @ lam + curvature * np.sum(lam * (1 - lam)))

    return ObjectiveFunction(ev, declared_concave=curvature >= 0, name="table")


def builtin_function(name: str, desc: SetDescriptor) -> ObjectiveFunction:
    p = desc.norm_p
    if name == "one_minus_norm":
        return ObjectiveFunction(lambda y: 1.0 - lp_norm(y, p), declared_concave=True,
                                 name=name)
    if name == "neg_sq_norm":
        return ObjectiveFunction(lambda y: -float(y @ y), declared_concave=True, name=name)
    if name == "sq_norm":
        return ObjectiveFunction(lambda y: float(y @ y), declared_convex=True, name=name)
    if name == "sum":
        return ObjectiveFunction(lambda y: float(np.sum(y)), declared_convex=True, name=name)
    if name == "zero":
        return ObjectiveFunction(lambda y: 0.0, declared_convex=True, name=name)
    if name == "abs_sin":
        # neither convex nor concave; exercises the heuristic path
        return ObjectiveFunction(lambda y: float(abs(np.sin(3 * np.sum(y)))), name=name)
    raise ValueError(f"unknown builtin function {name!r}")


BUILTIN_FUNCTIONS = ("one_minus_norm", "neg_sq_norm", "sq_norm", "sum", "zero", "abs_sin")
