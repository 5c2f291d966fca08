"""Finitely supported probability measures and their barycenters."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Sequence

import numpy as np

WEIGHT_SUM_TOL = 1e-12
MERGE_DIST = 1e-10


@dataclass(frozen=True)
class FiniteMeasure:
    """Atoms (rows of ``atoms``) carrying probability ``weights``."""

    atoms: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        atoms = np.array(self.atoms, dtype=float)
        if atoms.ndim == 1:
            atoms = atoms[:, None]
        weights = np.array(self.weights, dtype=float).ravel()
        if atoms.shape[0] == 0:
            raise ValueError("a measure needs at least one atom")
        if atoms.shape[0] != weights.size:
            raise ValueError(f"{atoms.shape[0]} atoms but {weights.size} weights")
        if np.any(weights < 0):
            raise ValueError("weights must be nonnegative")
        if abs(weights.sum() - 1.0) > WEIGHT_SUM_TOL:
            raise ValueError(f"weights sum to {weights.sum()!r}, not 1")
        if not np.all(np.isfinite(atoms)):
            raise ValueError("atoms must be finite")
        atoms.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "weights", weights)

    @classmethod
    def dirac(cls, x) -> "FiniteMeasure":
        return cls(np.asarray(x, dtype=float)[None, :], [1.0])

    @classmethod
    def uniform(cls, atoms) -> "FiniteMeasure":
        atoms = np.asarray(atoms, dtype=float)
        return cls(atoms, np.full(len(atoms), 1.0 / len(atoms)))

    @classmethod
    def from_unnormalized(cls, atoms, weights) -> "FiniteMeasure":
        w = np.asarray(weights, dtype=float)
        return cls(atoms, w / w.sum())

    @property
    def dim(self) -> int:
        return self.atoms.shape[1]

    def __len__(self):
        return self.weights.size

    def integrate(self, f: Callable) -> float:
        return float(sum(w * f(a) for w, a in zip(self.weights, self.atoms)))

    def pruned(self, tol: float = 0.0) -> "FiniteMeasure":
        """Drop atoms with weight <= ``tol`` and renormalise."""
        keep = self.weights > tol
        if not keep.any():
            raise ValueError("pruning would remove every atom")
        return FiniteMeasure.from_unnormalized(self.atoms[keep], self.weights[keep])

    def deduplicated(self, dist: float = MERGE_DIST) -> "FiniteMeasure":
        """Merge atoms closer than ``dist``, summing their weights."""
        atoms, weights = [], []
        for a, w in zip(self.atoms, self.weights):
            for j, b in enumerate(atoms):
                if np.linalg.norm(a - b) < dist:
                    weights[j] += w
                    break
            else:
                atoms.append(a)
                weights.append(w)
        return FiniteMeasure(np.array(atoms), np.array(weights))

    def sort_key(self) -> tuple:
        """Total order used to break ties between equally good measures."""
        order = np.lexsort(self.atoms.T[::-1])
        return tuple(np.concatenate([self.atoms[order].ravel(), self.weights[order]]))

    def to_json(self) -> dict:
        return {"atoms": self.atoms.tolist(), "weights": self.weights.tolist()}

    @classmethod
    def from_json(cls, obj) -> "FiniteMeasure":
        if isinstance(obj, str):
            obj = json.loads(obj)
        return cls(np.array(obj["atoms"], dtype=float), obj["weights"])


def barycenter(mu: FiniteMeasure) -> np.ndarray:
    """Weighted mean of the atoms."""
    if len(mu) == 0:
        raise ValueError("empty measure")
    return mu.weights @ mu.atoms


def mix(mu: FiniteMeasure, nu: FiniteMeasure, lam: float) -> FiniteMeasure:
    """The measure ``lam * mu + (1 - lam) * nu`` (atoms concatenated, not merged)."""
    if not 0 <= lam <= 1:
        raise ValueError(f"mixing weight must lie in [0, 1], got {lam}")
    if mu.dim != nu.dim:
        raise ValueError("measures live in different dimensions")
    atoms = np.vstack([mu.atoms, nu.atoms])
    weights = np.concatenate([lam * mu.weights, (1 - lam) * nu.weights])
    # lam*s1 + (1-lam)*s2 can drift from 1 by an ulp or two
    return FiniteMeasure(atoms, weights / weights.sum())


class ChoquetVerdict(str, Enum):
    DOMINATES = "DominatesOnFamily"
    DOMINATED = "DominatedOnFamily"
    EQUAL = "EqualOnFamily"
    INCOMPARABLE = "IncomparableOnFamily"


@dataclass
class ConvexTestFamily:
    """A finite set of convex test functions; verdicts are relative to it only."""

    functions: Sequence[Callable]
    labels: Sequence[str] = ()

    def __post_init__(self):
        if len(self.functions) == 0:
            raise ValueError("a test family needs at least one function")
        if not self.labels:
            self.labels = [f"f{i}" for i in range(len(self.functions))]


def choquet_compare(mu: FiniteMeasure, nu: FiniteMeasure, fam: ConvexTestFamily,
                    tol: float = 1e-9) -> ChoquetVerdict:
    """Compare ``mu`` and ``nu`` in the Choquet order, restricted to ``fam``.

    Measures with different barycenters are never comparable, so that case
    short-circuits to ``INCOMPARABLE`` before any function is evaluated.
    """
    if mu.dim != nu.dim or np.linalg.norm(barycenter(mu) - barycenter(nu)) > tol:
        return ChoquetVerdict.INCOMPARABLE
    diffs = np.array([mu.integrate(f) - nu.integrate(f) for f in fam.functions])
    ge = bool(np.all(diffs >= -tol))
    le = bool(np.all(diffs <= tol))
    if ge and le:
        return ChoquetVerdict.EQUAL
    if ge:
        return ChoquetVerdict.DOMINATES
    if le:
        return ChoquetVerdict.DOMINATED
    return ChoquetVerdict.INCOMPARABLE


def mass_outside(mu: FiniteMeasure, pred: Callable[[np.ndarray], bool]) -> float:
    """Share of the total weight sitting on atoms at which ``pred`` is false.

    Sums are exact (``fsum``) and taken relative to the total weight, so a
    measure lying entirely outside gets exactly 1.
    """
    out = math.fsum(w for w, a in zip(mu.weights, mu.atoms) if not pred(a))
    return float(min(max(out / math.fsum(mu.weights), 0.0), 1.0))


def caratheodory_reduce(atoms: np.ndarray, weights: np.ndarray, tol: float = 1e-13):
    """Shrink a convex combination to at most ``dim + 1`` atoms, same barycenter.

    Classic elimination: while the lifted atoms ``(x_i, 1)`` are linearly
    dependent, move along a null vector until one weight hits zero.
    """
    atoms = np.asarray(atoms, dtype=float)
    w = np.asarray(weights, dtype=float).copy()
    keep = w > tol
    atoms, w = atoms[keep], w[keep]
    d = atoms.shape[1]
    while len(w) > d + 1:
        lifted = np.vstack([atoms.T, np.ones(len(w))])
        _, _, vt = np.linalg.svd(lifted)
        v = vt[-1]
        if not np.any(v > 0):
            v = -v
        pos = v > 0
        t = np.min(w[pos] / v[pos])
        w = w - t * v
        w[np.argmin(np.where(pos, w, np.inf))] = 0.0
        keep = w > tol
        atoms, w = atoms[keep], w[keep]
    return atoms, w / w.sum()
