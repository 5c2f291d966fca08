"""Midpoint splitting, ball-measure bounds and extreme-point separators.

The splitter answers: given ``a, b`` in a set and ``z`` close to their
midpoint, find ``x, y`` in the set with ``(x + y)/2 = z`` and ``x, y`` close
to ``a, b``.  On ``Delta_p`` the construction splits a finite head exactly
and spreads the tail of ``z`` between ``x`` and ``y`` with a single
parameter ``tau``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import linprog

from .hull import HullConfig, ObjectiveFunction, co_f_search
from .measures import FiniteMeasure, barycenter
from .spaces import Family, SetDescriptor, as_vector, contains, lp_norm, tail_norm

log = logging.getLogger(__name__)


class SplitRejected(ValueError):
    """Preconditions of the splitter do not hold; ``bound`` names the violated one."""

    def __init__(self, bound: str, message: str):
        self.bound = bound
        super().__init__(message)


@dataclass
class SplitResult:
    x: np.ndarray
    y: np.ndarray
    tau: float
    head_dim: int
    achieved_eps: float
    head_distances: tuple = (0.0, 0.0)
    tail_norms: dict = field(default_factory=dict)
    method: str = "delta_p"

    def to_json(self) -> dict:
        return {
            "x": self.x.tolist(), "y": self.y.tolist(), "tau": self.tau,
            "head_dim": self.head_dim, "achieved_eps": self.achieved_eps,
            "head_distances": list(self.head_distances), "tail_norms": self.tail_norms,
            "method": self.method,
        }


def exact_midpoint_pair(x_hat: np.ndarray, z: np.ndarray):
    """Round ``(x_hat, 2z - x_hat)`` so that ``(x + y)/2 == z`` holds bit for bit.

    Per coordinate, the larger of the pair is kept and the smaller one is
    recomputed as ``2z - larger``; that subtraction is exact (Sterbenz) since
    the larger value lies in ``[z, 2z]``, so ``x + y`` equals ``2z`` exactly.
    Requires ``0 <= x_hat <= 2z``.
    """
    z2 = 2.0 * z
    x = np.clip(x_hat, 0.0, z2)
    y = z2 - x
    small_x = x < z
    x[small_x] = z2[small_x] - y[small_x]
    y[~small_x] = z2[~small_x] - x[~small_x]
    return x, y


def _head_split(a: np.ndarray, b: np.ndarray, z: np.ndarray, sum_cap: float):
    """Split ``2z`` into ``x + y`` near ``(a, b)`` with ``x, y >= 0`` and sums <= cap.

    Start from ``x = a + d``, ``y = b + d`` with ``d = z - (a+b)/2``, clip into
    ``[0, 2z]`` and shift surplus mass from the heavier side to the lighter
    one on coordinates where it moves back toward its target.  Each
    coordinate deviates by at most ``2|d_k|``.
    """
    d = z - 0.5 * (a + b)
    x = np.clip(a + d, 0.0, 2.0 * z)
    y = 2.0 * z - x
    for _ in range(2):
        sx, sy = x.sum(), y.sum()
        if sx > sum_cap:
            room = np.clip(x - a, 0.0, None)
            excess = sx - sum_cap
            if room.sum() < excess:
                room = x.copy()
            x = x - room * (excess / room.sum())
            y = 2.0 * z - x
        elif sy > sum_cap:
            room = np.clip(y - b, 0.0, None)
            excess = sy - sum_cap
            if room.sum() < excess:
                room = y.copy()
            y = y - room * (excess / room.sum())
            x = 2.0 * z - y
    return np.clip(x, 0.0, 2.0 * z)


def _tau_search(sx: float, sy: float, T: float, cap: float = 1.0, tol: float = 1e-12) -> float:
    """Pick ``tau`` with ``sx + (1+tau) T <= cap`` and ``sy + (1-tau) T <= cap``."""
    if T == 0:
        return 0.0
    if sx >= sy:
        if sy + 2 * T <= cap:
            return -1.0
    else:
        if sx + 2 * T <= cap:
            return 1.0
    # bisection on the difference of the two l1 norms (continuous, decreasing in tau)
    lo, hi = -1.0, 1.0
    g = lambda t: (sx + (1 + t) * T) - (sy + (1 - t) * T)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if g(mid) > 0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def delta_p_split(p: float, a, b, z, eps: float, tol: float = 1e-9) -> SplitResult:
    """Split ``z`` into a segment of ``Delta_p`` centred at ``z`` near ``[a, b]``.

    Preconditions: ``a, b, z`` in ``Delta_p`` and ``||z - (a+b)/2||_p < eps/6``.
    The head dimension ``N`` is the smallest one leaving both ``a`` and ``b``
    with tail p-norm below ``eps/6``.
    """
    a, b, z = as_vector(a), as_vector(b), as_vector(z)
    if not (a.size == b.size == z.size):
        raise ValueError("a, b, z must have equal dimension")
    if eps <= 0:
        raise ValueError("eps must be positive")
    desc = SetDescriptor.delta_p(p, z.size)
    for name, v in (("a", a), ("b", b), ("z", z)):
        if not contains(desc, v, tol):
            raise SplitRejected(f"{name} in Delta_p", f"{name} is not in Delta_p")
    c = 0.5 * (a + b)
    dist = lp_norm(z - c, p)
    if dist >= eps / 6:
        raise SplitRejected("||z - c||_p < eps/6",
                            f"||z - c||_p = {dist:.3g} is not below eps/6 = {eps / 6:.3g}")
    if np.array_equal(z, c) or (np.array_equal(a, b) and np.array_equal(a, z)):
        return SplitResult(a.copy(), b.copy(), 0.0, z.size, 0.0, method="exact_midpoint")

    n = z.size
    N = n
    for k in range(n + 1):
        if tail_norm(a, k, p) < eps / 6 and tail_norm(b, k, p) < eps / 6:
            N = k
            break
    x_head = _head_split(a[:N], b[:N], z[:N], 1.0)
    zt = z[N:]
    T = float(zt.sum())
    # sums are taken after exact rounding so tau sees the values actually returned
    xh, yh = exact_midpoint_pair(x_head, z[:N])
    tau = _tau_search(float(xh.sum()), float(yh.sum()), T)
    xt, yt = exact_midpoint_pair((1 + tau) * zt, zt)
    x = np.concatenate([xh, xt])
    y = np.concatenate([yh, yt])
    head = (lp_norm(xh - a[:N], p), lp_norm(yh - b[:N], p))
    achieved = max(lp_norm(x - a, p), lp_norm(y - b, p))
    tails = {"a": tail_norm(a, N, p), "b": tail_norm(b, N, p), "z": tail_norm(z, N, p),
             "x": tail_norm(x, N, p), "y": tail_norm(y, N, p)}
    return SplitResult(x, y, float(tau), N, achieved, head, tails)


def _polyhedral_constraints(desc: SetDescriptor):
    """Rows ``A v <= b`` (and equalities) describing a polyhedral family."""
    N = desc.dim
    fam = desc.family
    if fam in (Family.L1_CONE, Family.DELTA_P):
        return np.ones((1, N)), np.ones(1), None, None, (0, None)
    if fam is Family.STANDARD_SIMPLEX:
        return None, None, np.ones((1, N)), np.ones(1), (0, None)
    if fam is Family.HILBERT_CUBE:
        a = np.asarray(desc.a)
        return None, None, None, None, list(zip(-a, a))
    raise ValueError(f"{fam.value} is not polyhedral")


def lp_split(desc: SetDescriptor, a, b, z) -> SplitResult:
    """Generic splitter on a polyhedral family.

    LP over ``x`` (with ``y = 2z - x``): minimise ``t`` subject to both points
    in the set and ``||x - a||_1 <= t``, ``||y - b||_1 <= t``.
    """
    a, b, z = as_vector(a), as_vector(b), as_vector(z)
    N = desc.dim
    A_set, b_set, E_set, e_set, bnd = _polyhedral_constraints(desc)
    # variables: x (N), u (N) >= |x - a|, v (N) >= |2z - x - b|, t
    nv = 3 * N + 1
    I = np.eye(N)
    Z = np.zeros((N, N))
    zc = np.zeros((N, 1))
    rows = [
        np.hstack([I, -I, Z, zc]), np.hstack([-I, -I, Z, zc]),          # |x - a| <= u
        np.hstack([-I, Z, -I, zc]), np.hstack([I, Z, -I, zc]),          # |2z - x - b| <= v
        np.concatenate([np.zeros(N), np.ones(N), np.zeros(N), [-1.0]])[None, :],
        np.concatenate([np.zeros(2 * N), np.ones(N), [-1.0]])[None, :],
    ]
    rhs = [a, -a, b - 2 * z, 2 * z - b, [0.0], [0.0]]
    if isinstance(bnd, tuple):
        lo = np.zeros(N) if bnd[0] == 0 else np.full(N, -np.inf)
        hi = np.full(N, np.inf)
    else:
        lo = np.array([l for l, _ in bnd])
        hi = np.array([h for _, h in bnd])
    # y = 2z - x must respect the same box
    rows.append(np.hstack([I, Z, Z, zc]))
    rhs.append(2 * z - np.where(np.isfinite(lo), lo, -1e300))
    rows.append(np.hstack([-I, Z, Z, zc]))
    rhs.append(np.where(np.isfinite(hi), hi, 1e300) - 2 * z)
    A_eq = b_eq = None
    if A_set is not None:
        rows.append(np.hstack([A_set, np.zeros((1, 2 * N + 1))]))
        rhs.append(b_set)
        rows.append(np.hstack([-A_set, np.zeros((1, 2 * N + 1))]))   # sum(2z - x) <= 1
        rhs.append(b_set - A_set @ (2 * z))
    if E_set is not None:
        A_eq = np.hstack([E_set, np.zeros((1, 2 * N + 1))])
        b_eq = e_set
    bounds = [(l if np.isfinite(l) else None, h if np.isfinite(h) else None)
              for l, h in zip(lo, hi)] + [(0, None)] * (2 * N + 1)
    c = np.zeros(nv)
    c[-1] = 1.0
    res = linprog(c, A_ub=np.vstack(rows), b_ub=np.concatenate([np.ravel(r) for r in rhs]),
                  A_eq=A_eq, b_eq=b_eq, bounds=bounds, method="highs")
    if res.status != 0:
        raise RuntimeError(f"split LP failed: {res.message}")
    x_hat = res.x[:N]
    if desc.family is Family.HILBERT_CUBE:
        x, y = x_hat, 2 * z - x_hat
    else:
        x, y = exact_midpoint_pair(x_hat, z)
    p = desc.norm_p
    head = (lp_norm(x - a, p), lp_norm(y - b, p))
    return SplitResult(x, y, 0.0, N, max(head), head, method="lp")


@dataclass
class ProbeReport:
    elements: list
    converging: bool

    def to_json(self) -> dict:
        return {"elements": self.elements, "converging": self.converging}


def midpoint_openness_probe(desc: SetDescriptor, a, b, z_seq: Sequence, eps_schedule=None,
                            eps_factor: float = 7.0, eps_floor: float = 1e-12) -> ProbeReport:
    """Split each ``z_k`` of a sequence approaching ``(a+b)/2`` and record the cost.

    ``eps_schedule`` gives the target ``eps_k`` per element; by default
    ``eps_k = eps_factor * ||z_k - c||_p`` (floored), which satisfies the
    ``Delta_p`` splitter's ``eps/6`` precondition.  Failures are recorded,
    never raised.
    """
    a, b = as_vector(a), as_vector(b)
    c = 0.5 * (a + b)
    p = desc.norm_p
    elements = []
    for k, z in enumerate(z_seq):
        z = as_vector(z)
        dist = lp_norm(z - c, p)
        eps = (eps_schedule[k] if eps_schedule is not None
               else max(eps_factor * dist, eps_floor))
        entry = {"k": k, "distance": dist, "eps": eps}
        try:
            if desc.family is Family.DELTA_P:
                res = delta_p_split(desc.p, a, b, z, eps)
            elif desc.is_polyhedral:
                res = lp_split(desc, a, b, z)
            else:
                raise NotImplementedError(f"no splitter for {desc.family.value}")
            ok = (bool(np.array_equal(0.5 * (res.x + res.y), z))
                  and contains(desc, res.x) and contains(desc, res.y)
                  and (res.achieved_eps < eps or res.achieved_eps == 0.0))
            entry.update(achieved_eps=res.achieved_eps, success=ok, method=res.method,
                         head_dim=res.head_dim, tau=res.tau)
        except Exception as exc:  # recorded per element by contract
            entry.update(achieved_eps=None, success=False, error=str(exc))
        elements.append(entry)
    achieved = [e["achieved_eps"] for e in elements]
    converging = (all(e["success"] for e in elements) and bool(achieved)
                  and achieved[-1] <= achieved[0] + 1e-15)
    return ProbeReport(elements, converging)


# ---------------------------------------------------------------------------
# measures on the Hilbert ball


def ball_bound_from_norm(norm: float, delta: float) -> float:
    """``r(delta, z) = (delta^2 - (1 - |z|^2)) / (delta^2 - (1 - |z|)^2)``, evaluated exactly.

    Inputs are read as their shortest decimal representation and the closed
    form is evaluated in rational arithmetic, then rounded once, so e.g.
    ``|z| = 0.9, delta = 0.5`` gives exactly 0.25.
    """
    if not 0 <= norm <= 1:
        raise ValueError(f"need |z| <= 1, got {norm}")
    if delta <= 0 or norm <= 1 - delta:
        raise ValueError(f"need |z| > 1 - delta (|z| = {norm}, delta = {delta})")
    n, d = Fraction(repr(float(norm))), Fraction(repr(float(delta)))
    return float((d * d - (1 - n * n)) / (d * d - (1 - n) ** 2))


def ball_bound(z, delta: float) -> float:
    return ball_bound_from_norm(lp_norm(z, 2), delta)


def ball_tight_measure(z, delta: float, u=None) -> FiniteMeasure:
    """Extremal measure with barycenter ``z``: pole ``z/|z|`` and a symmetric ring pair.

    The ring points sit on the unit sphere at distance exactly ``delta`` from
    ``z``; the pole carries weight ``r(delta, z)``, so the closed
    ``delta``-ball around ``z`` has mass exactly ``r``.  Needs ``dim >= 2``.
    """
    z = as_vector(z)
    n = lp_norm(z, 2)
    if z.size < 2:
        raise ValueError("the ring construction needs dim >= 2")
    r = ball_bound_from_norm(n, delta)
    if r < 0:
        raise ValueError("r(delta, z) < 0: the bound is vacuous and no tight measure exists")
    zbar = z / n
    if u is None:
        u = np.zeros_like(z)
        u[np.argmin(np.abs(zbar))] = 1.0
    u = as_vector(u) - np.dot(u, zbar) * zbar
    u /= np.linalg.norm(u)
    h = (1 + n * n - delta * delta) / (2 * n)
    s = np.sqrt(max(1 - h * h, 0.0))
    ring = [h * zbar + s * u, h * zbar - s * u]
    return FiniteMeasure(np.vstack([zbar, *ring]), [r, (1 - r) / 2, (1 - r) / 2])


def _sample_ball_atoms(dim: int, n: int, rng: np.random.Generator) -> np.ndarray:
    g = rng.standard_normal((n, dim))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    radii = np.where(rng.random(n) < 0.6, 1.0, rng.random(n) ** (1.0 / dim))
    return g * radii[:, None]


def ball_bound_adversary(z, delta: float, dim: Optional[int] = None, trials: int = 100,
                         seed: int = 0x5EED, atoms_per_trial: int = 64) -> float:
    """Largest mass outside the ``delta``-ball around ``z`` found by LP over random atoms.

    Each trial samples atoms in the unit ball (mostly on the sphere), always
    adds ``z`` itself and the extremal pole/ring configuration, and solves
    ``max sum_{|y_j - z| > delta} w_j`` with barycenter ``z``.
    """
    z = as_vector(z)
    dim = z.size if dim is None else dim
    if z.size != dim:
        raise ValueError("z must live in R^dim")
    r = ball_bound(z, delta)   # also validates the preconditions
    fixed = [z]
    if dim >= 2 and r >= 0:
        fixed.extend(ball_tight_measure(z, delta).atoms)
    best = 0.0
    for t in range(trials):
        rng = np.random.default_rng([seed, t])
        atoms = np.vstack([np.array(fixed), _sample_ball_atoms(dim, atoms_per_trial, rng)])
        outside = np.linalg.norm(atoms - z, axis=1) > delta
        A_eq = np.vstack([atoms.T, np.ones(len(atoms))])
        b_eq = np.concatenate([z, [1.0]])
        res = linprog(-outside.astype(float), A_eq=A_eq, b_eq=b_eq, bounds=(0, None),
                      method="highs")
        if res.status != 0:
            log.warning("adversary trial %d skipped: %s", t, res.message)
            continue
        best = max(best, float(-res.fun))
    return best


@dataclass
class ContinuityReport:
    elements: list

    @property
    def all_within(self) -> bool:
        return all(e["within"] for e in self.elements)


def ball_hull_continuity(f: ObjectiveFunction, x_on_sphere, z_seq, lipschitz: float,
                         sup_abs: float, cfg: Optional[HullConfig] = None,
                         tol: float = 1e-9) -> ContinuityReport:
    """Compare ``|co f(z_k) - f(x)|`` with the ball-measure error bound.

    For ``t = |z_k - x|`` the radius is ``delta = t^(1/3)`` (so ``t < delta``
    and ``t = o(delta^2)``, which drives ``r(delta, z_k)`` to 1); with a
    Lipschitz ``f`` the oscillation on a ``2 delta``-ball is at most
    ``eps = 2 L delta`` and the bound is ``eps r + sup|f| (1 - r)``.
    """
    x = as_vector(x_on_sphere)
    if abs(lp_norm(x, 2) - 1) > 1e-12:
        raise ValueError("x must lie on the unit sphere")
    desc = SetDescriptor.unit_ball(x.size)
    fx = f(x)
    out = []
    for k, z in enumerate(z_seq):
        z = as_vector(z)
        t = lp_norm(z - x, 2)
        if t == 0:
            val = co_f_search(desc, f, z, cfg).value
            out.append({"k": k, "distance": 0.0, "delta": 0.0, "r": 1.0, "bound": 0.0,
                        "gap": abs(val - fx), "within": abs(val - fx) <= tol})
            continue
        delta = min(t ** (1.0 / 3.0), 1.0)
        r = ball_bound(z, delta)
        bound = 2 * lipschitz * delta * r + sup_abs * (1 - r)
        val = co_f_search(desc, f, z, cfg).value
        gap = abs(val - fx)
        out.append({"k": k, "distance": t, "delta": delta, "r": r, "bound": bound,
                    "gap": gap, "within": gap <= bound + tol})
    return ContinuityReport(out)


# ---------------------------------------------------------------------------


@dataclass
class SeparatorWitness:
    slope: np.ndarray
    values: tuple          # f(x0), f(x1), f(x2)
    gap: float

    def affine(self, y) -> float:
        return float(np.dot(self.slope, as_vector(y)))

    def __call__(self, y) -> float:
        return -self.affine(y) ** 2

    def to_json(self) -> dict:
        return {"slope": self.slope.tolist(), "values": list(self.values), "gap": self.gap}


def extreme_point_separator(x0, x1, x2, tol: float = 1e-12) -> SeparatorWitness:
    """Concave ``f = -a^2`` with ``a(y) = <y, x1 - x2>`` that is strictly above its
    chord at the midpoint ``x0``, certifying ``x0`` is not extreme.

    The gap ``f(x0) - (f(x1) + f(x2))/2`` equals ``(a(x1) - a(x2))^2 / 4``,
    i.e. ``|x1 - x2|^4 / 4``.
    """
    x0, x1, x2 = as_vector(x0), as_vector(x1), as_vector(x2)
    if np.array_equal(x1, x2):
        raise ValueError("x1 and x2 must differ")
    if np.max(np.abs(x0 - 0.5 * (x1 + x2))) > 1e-9 * max(1.0, np.max(np.abs(x0))):
        raise ValueError("x0 must be the midpoint of x1 and x2")
    slope = x1 - x2
    w = SeparatorWitness(slope, (), 0.0)
    f0, f1, f2 = w(x0), w(x1), w(x2)
    a1, a2 = w.affine(x1), w.affine(x2)
    w.values = (f0, f1, f2)
    w.gap = (a1 - a2) ** 2 / 4
    return w


def delta_p_extreme_measure(x) -> FiniteMeasure:
    """The unique measure on ``{0, e_i}`` with barycenter ``x`` in ``Delta_p``."""
    x = as_vector(x)
    if np.any(x < 0) or x.sum() > 1 + 1e-12:
        raise ValueError("x is not in Delta_p")
    N = x.size
    atoms = np.vstack([np.zeros(N), np.eye(N)])
    w = np.concatenate([[max(1.0 - math.fsum(x), 0.0)], x])
    return FiniteMeasure.from_unnormalized(atoms, w)
