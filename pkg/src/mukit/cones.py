"""Pointed polyhedral cones in R^d and the truncated-cone certificate.

A finitely generated cone ``C = cone(g_1..g_k)`` is pointed iff some axis
``a`` has ``<g_j, a> > 0`` for every generator.  Then the truncations
``C_r = {x in C : <x, a> <= r}`` are compact and ``C_{r/eps}`` captures at
least ``1 - eps`` of every decomposition of a point with ``<x, a> <= r``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.optimize import linprog, nnls

from .measures import FiniteMeasure, mass_outside

LP_OPTIONS = {"primal_feasibility_tolerance": 1e-9, "dual_feasibility_tolerance": 1e-9}


def _normalized(generators) -> np.ndarray:
    G = np.atleast_2d(np.asarray(generators, dtype=float))
    norms = np.linalg.norm(G, axis=1)
    if np.any(norms == 0):
        raise ValueError("generators must be nonzero")
    return G / norms[:, None]


def in_cone(generators, v, tol: float = 1e-8) -> bool:
    """Whether ``v`` is a conic combination of the generators (NNLS residual)."""
    G = np.atleast_2d(np.asarray(generators, dtype=float))
    _, resid = nnls(G.T, np.asarray(v, dtype=float))
    return bool(resid <= tol * max(1.0, np.linalg.norm(v)))


@dataclass
class TruncatedCone:
    """``{x in cone(G) : <x, axis> <= level}``."""

    generators: np.ndarray
    axis: np.ndarray
    level: float

    def contains(self, x, tol: float = 1e-8) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(x @ self.axis <= self.level + tol and in_cone(self.generators, x, tol))


@dataclass
class ConeVerdict:
    verdict: str                        # "pointed" | "contains_line" | "inconclusive"
    axis: Optional[np.ndarray] = None
    direction: Optional[np.ndarray] = None
    generators: Optional[np.ndarray] = None
    message: str = ""

    @property
    def pointed(self) -> Optional[bool]:
        if self.verdict == "inconclusive":
            return None
        return self.verdict == "pointed"

    def truncation(self, level: float) -> TruncatedCone:
        if self.verdict != "pointed":
            raise ValueError("only pointed cones have compact truncations")
        return TruncatedCone(self.generators, self.axis, level)

    def certificate(self, compact_points, eps: float) -> TruncatedCone:
        """``K_eps = C_{r/eps}`` where ``C_r`` already contains ``compact_points``."""
        if not 0 < eps <= 1:
            raise ValueError("eps must lie in (0, 1]")
        pts = np.atleast_2d(np.asarray(compact_points, dtype=float))
        r = max(float(np.max(pts @ self.axis)), 0.0)
        return self.truncation(r / eps)

    def to_json(self) -> dict:
        return {
            "verdict": self.verdict,
            "axis": None if self.axis is None else self.axis.tolist(),
            "direction": None if self.direction is None else self.direction.tolist(),
            "message": self.message,
        }


def pointed_cone_classify(generators) -> ConeVerdict:
    """Find an axis of the cone, or a line inside it.

    Solves ``min ||a||_1  s.t. <g_j/|g_j|, a> >= 1``.  If that is infeasible,
    Gordan's alternative gives ``lam >= 0`` with ``G^T lam = 0``; any generator
    with positive ``lam_j`` then has its negative inside the cone.
    """
    G = np.atleast_2d(np.asarray(generators, dtype=float))
    Gn = _normalized(G)
    k, d = Gn.shape
    # a = u - v with u, v >= 0
    c = np.ones(2 * d)
    A_ub = -np.hstack([Gn, -Gn])
    res = linprog(c, A_ub=A_ub, b_ub=-np.ones(k), bounds=(0, None), method="highs",
                  options=LP_OPTIONS)
    if res.status == 0:
        a = res.x[:d] - res.x[d:]
        if np.min(Gn @ a) > 0:
            return ConeVerdict("pointed", axis=a, generators=G)
        return ConeVerdict("inconclusive", generators=G,
                           message="axis LP returned a non-separating vector")
    if res.status != 2:
        return ConeVerdict("inconclusive", generators=G, message=res.message)

    alt = linprog(np.zeros(k), A_eq=np.vstack([Gn.T, np.ones(k)]),
                  b_eq=np.concatenate([np.zeros(d), [1.0]]), bounds=(0, None),
                  method="highs", options=LP_OPTIONS)
    if alt.status != 0:
        return ConeVerdict("inconclusive", generators=G, message=alt.message)
    j = int(np.argmax(alt.x))
    v = G[j] / np.linalg.norm(G[j])
    if not (in_cone(G, v) and in_cone(G, -v)):
        return ConeVerdict("inconclusive", generators=G,
                           message="line direction failed to reconstruct")
    return ConeVerdict("contains_line", direction=v, generators=G)


def truncated_cone_outside_mass(verdict: ConeVerdict, x, mu: FiniteMeasure, eps: float) -> float:
    """Mass of a decomposition of ``x`` lying outside ``C_{<x,a>/eps}``."""
    K = verdict.certificate(np.asarray(x)[None, :], eps)
    return mass_outside(mu, lambda y: float(y @ K.axis) <= K.level + 1e-12)


@dataclass
class EquivalenceReport:
    in_pointed_cone: bool
    has_extreme_point: bool
    line_free: bool
    polar_has_interior: bool
    polar_radius: float

    @property
    def verdicts(self) -> tuple:
        return (self.in_pointed_cone, self.has_extreme_point, self.line_free,
                self.polar_has_interior)

    @property
    def agree(self) -> bool:
        return len(set(self.verdicts)) == 1

    def to_json(self) -> dict:
        return {
            "in_pointed_cone": self.in_pointed_cone,
            "has_extreme_point": self.has_extreme_point,
            "line_free": self.line_free,
            "polar_has_interior": self.polar_has_interior,
            "polar_radius": self.polar_radius,
            "agree": self.agree,
        }


class InvariantViolation(AssertionError):
    """The four equivalent properties disagreed on one instance."""


def _has_extreme_point(G: np.ndarray, tol: float) -> bool:
    # offset is a vertex of offset + cone(G) unless some nonzero conic combination
    # of the generators vanishes; maximise the total weight of such a combination
    k, d = G.shape
    res = linprog(-np.ones(k), A_eq=G.T, b_eq=np.zeros(d), bounds=(0, 1), method="highs",
                  options=LP_OPTIONS)
    if res.status != 0:
        raise RuntimeError(f"vertex LP failed: {res.message}")
    return bool(-res.fun <= tol)


def _line_free(G: np.ndarray, tol: float) -> bool:
    # the recession cone is cone(G); it holds a line iff some -g_j lies in it
    return not any(in_cone(G, -g, tol) for g in G)


def _polar_radius(G: np.ndarray, offset: np.ndarray) -> float:
    # polar = {y : <y, offset> <= 1, <y, g_j> <= 0}; largest inscribed ball radius
    k, d = G.shape
    rows = np.vstack([offset[None, :], G])
    rhs = np.concatenate([[1.0], np.zeros(k)])
    A_ub = np.hstack([rows, np.linalg.norm(rows, axis=1)[:, None]])
    c = np.zeros(d + 1)
    c[-1] = -1.0
    bounds = [(None, None)] * d + [(0, 1)]
    res = linprog(c, A_ub=A_ub, b_ub=rhs, bounds=bounds, method="highs", options=LP_OPTIONS)
    if res.status != 0:
        raise RuntimeError(f"Chebyshev-ball LP failed: {res.message}")
    return float(res.x[-1])


def polyhedral_equivalence_check(generators, offset=None, tol: float = 1e-7,
                                 strict: bool = True) -> EquivalenceReport:
    """Evaluate the four equivalent properties of ``offset + cone(generators)``.

    Each property is decided by its own computation: axis LP, vertex LP,
    per-generator NNLS on the recession cone, and a Chebyshev ball in the
    polar.  With ``strict`` a disagreement raises :class:`InvariantViolation`.
    """
    G = _normalized(generators)
    d = G.shape[1]
    if d > 10:
        raise ValueError("equivalence check is meant for d <= 10")
    off = np.zeros(d) if offset is None else np.asarray(offset, dtype=float)
    cls = pointed_cone_classify(G)
    if cls.pointed is None:
        raise RuntimeError(f"axis LP inconclusive: {cls.message}")
    radius = _polar_radius(G, off)
    rep = EquivalenceReport(
        in_pointed_cone=cls.pointed,
        has_extreme_point=_has_extreme_point(G, tol),
        line_free=_line_free(G, tol),
        polar_has_interior=radius > tol,
        polar_radius=radius,
    )
    if strict and not rep.agree:
        raise InvariantViolation(f"properties disagree: {rep.verdicts}")
    return rep


def random_cone(rng: np.random.Generator, d: int = 3, k: Optional[int] = None,
                pointed: Optional[bool] = None) -> tuple:
    """Random generator set in R^d, pointed or not (coin flip when unspecified).

    Pointed instances keep every generator at least ``0.05`` above the plane
    orthogonal to a hidden axis; the others get a generator and its negative.
    Returns ``(generators, pointed)``.
    """
    if pointed is None:
        pointed = bool(rng.random() < 0.5)
    k = int(rng.integers(d, d + 4)) if k is None else k
    G = rng.standard_normal((k, d))
    G /= np.linalg.norm(G, axis=1, keepdims=True)
    if pointed:
        axis = rng.standard_normal(d)
        axis /= np.linalg.norm(axis)
        h = G @ axis
        G = G - np.outer(h, axis) + np.outer(np.maximum(np.abs(h), 0.05), axis)
    else:
        G[-1] = -G[0]
    return G, pointed
