"""Finite truncations of sequence spaces and the convex sets built on them.

Every "infinite" sequence is stored at an explicit dimension ``N``; the
tail phenomena the certificates probe live in the last coordinates, so
``N`` is the experiment knob rather than an approximation detail.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Sequence

import numpy as np

DEFAULT_TOL = 1e-9


class Family(str, Enum):
    L1_CONE = "L1ConeBounded"
    LP_CONE = "LpConeBounded"
    DELTA_P = "SimplexDeltaP"
    HILBERT_CUBE = "HilbertCube"
    UNIT_BALL = "UnitBall"
    STANDARD_SIMPLEX = "StandardTruncatedSimplex"


@dataclass(frozen=True)
class Point:
    """A finite real vector tagged with the exponent of its ambient space."""

    coords: np.ndarray
    ambient_p: float = 2.0

    def __post_init__(self):
        c = np.array(self.coords, dtype=float).ravel()
        if c.size == 0:
            raise ValueError("a point needs at least one coordinate")
        if not np.all(np.isfinite(c)):
            raise ValueError("point coordinates must be finite")
        if self.ambient_p < 1:
            raise ValueError(f"ambient exponent must be >= 1, got {self.ambient_p}")
        c.setflags(write=False)
        object.__setattr__(self, "coords", c)

    def __array__(self, dtype=None, copy=None):
        return self.coords if dtype is None else self.coords.astype(dtype)

    def __len__(self):
        return self.coords.size

    @property
    def dim(self) -> int:
        return self.coords.size

    def norm(self, p: Optional[float] = None) -> float:
        return lp_norm(self.coords, self.ambient_p if p is None else p)


def as_vector(x) -> np.ndarray:
    v = np.asarray(x, dtype=float)
    if v.ndim != 1:
        v = v.ravel()
    return v


def lp_norm(x, p: float) -> float:
    """``(sum |x_i|^p)^(1/p)``; ``p = inf`` gives the max norm."""
    if p < 1:
        raise ValueError(f"lp_norm needs p >= 1, got {p}")
    v = np.abs(as_vector(x))
    if v.size == 0:
        return 0.0
    if np.isinf(p):
        return float(v.max())
    if p == 1:
        return float(v.sum())
    if p == 2:
        return float(np.sqrt(np.dot(v, v)))
    # rescale by the max entry so tiny/huge coordinates do not under/overflow
    m = v.max()
    if m == 0:
        return 0.0
    return float(m * np.sum((v / m) ** p) ** (1.0 / p))


def tail_norm(x, start: int, p: float) -> float:
    """p-norm of the coordinates with 0-based index >= ``start``."""
    return lp_norm(as_vector(x)[start:], p)


def canonical_basis(i: int, N: int) -> Point:
    """Unit vector ``e_i`` of ``R^N``; ``i`` is 1-based as in sequence notation."""
    if N < 1 or not 1 <= i <= N:
        raise IndexError(f"basis index {i} out of range 1..{N}")
    c = np.zeros(N)
    c[i - 1] = 1.0
    return Point(c)


@dataclass(frozen=True)
class SetDescriptor:
    """One of the concrete convex sets, truncated to ``dim`` coordinates.

    ``p`` is the ambient exponent (required for the l_p cone and Delta_p);
    ``a`` holds the half-widths of a Hilbert cube.
    """

    family: Family
    dim: int
    p: Optional[float] = None
    a: Optional[tuple] = field(default=None)

    def __post_init__(self):
        fam = Family(self.family)
        object.__setattr__(self, "family", fam)
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        if fam in (Family.LP_CONE, Family.DELTA_P):
            if self.p is None:
                raise ValueError(f"{fam.value} needs an exponent p")
            if self.p <= 1:
                raise ValueError(f"{fam.value} needs p > 1, got {self.p}")
        if fam is Family.HILBERT_CUBE:
            if self.a is None:
                raise ValueError("HilbertCube needs the half-width sequence a")
            a = tuple(float(v) for v in self.a)
            if len(a) != self.dim:
                raise ValueError("len(a) must equal dim")
            if min(a) <= 0:
                raise ValueError("Hilbert cube half-widths must be strictly positive")
            object.__setattr__(self, "a", a)

    @property
    def norm_p(self) -> float:
        """Exponent of the norm the set is measured in."""
        if self.family in (Family.LP_CONE, Family.DELTA_P):
            return float(self.p)
        if self.family is Family.L1_CONE:
            return 1.0
        return 2.0

    @property
    def is_polyhedral(self) -> bool:
        return self.family in (Family.L1_CONE, Family.DELTA_P,
                               Family.STANDARD_SIMPLEX, Family.HILBERT_CUBE)

    def to_json(self) -> dict:
        out = {"family": self.family.value, "dim": self.dim}
        if self.p is not None:
            out["p"] = self.p
        if self.a is not None:
            out["a"] = list(self.a)
        return out

    @classmethod
    def from_json(cls, obj) -> "SetDescriptor":
        if isinstance(obj, str):
            obj = json.loads(obj)
        a = obj.get("a")
        return cls(Family(obj["family"]), int(obj["dim"]), obj.get("p"),
                   tuple(a) if a is not None else None)

    # convenience constructors
    @classmethod
    def l1_cone(cls, dim):
        return cls(Family.L1_CONE, dim)

    @classmethod
    def lp_cone(cls, p, dim):
        return cls(Family.LP_CONE, dim, p)

    @classmethod
    def delta_p(cls, p, dim):
        return cls(Family.DELTA_P, dim, p)

    @classmethod
    def hilbert_cube(cls, a):
        return cls(Family.HILBERT_CUBE, len(a), None, tuple(a))

    @classmethod
    def unit_ball(cls, dim):
        return cls(Family.UNIT_BALL, dim)

    @classmethod
    def standard_simplex(cls, dim):
        return cls(Family.STANDARD_SIMPLEX, dim)


def contains(desc: SetDescriptor, x, tol: float = DEFAULT_TOL) -> bool:
    """Check the family's defining inequalities at ``x``, each to within ``tol``."""
    v = as_vector(x)
    if v.size != desc.dim:
        raise ValueError(f"dimension mismatch: point has {v.size}, set has {desc.dim}")
    fam = desc.family
    if fam in (Family.L1_CONE, Family.DELTA_P):
        return bool(v.min() >= -tol and v.sum() <= 1 + tol)
    if fam is Family.STANDARD_SIMPLEX:
        return bool(v.min() >= -tol and abs(v.sum() - 1) <= tol)
    if fam is Family.LP_CONE:
        return bool(v.min() >= -tol and lp_norm(np.maximum(v, 0), desc.p) <= 1 + tol)
    if fam is Family.HILBERT_CUBE:
        return bool(np.all(np.abs(v) <= np.asarray(desc.a) + tol))
    if fam is Family.UNIT_BALL:
        return bool(lp_norm(v, 2) <= 1 + tol)
    raise ValueError(f"unknown family {fam!r}")


def project_by_scaling(desc: SetDescriptor, y) -> np.ndarray:
    """Pull ``y`` into the set: clip to the sign/box constraints, then shrink.

    The standard simplex is handled by normalisation instead of shrinking,
    because it has no interior in ``R^N``.
    """
    v = as_vector(y).copy()
    fam = desc.family
    if fam in (Family.L1_CONE, Family.DELTA_P):
        v = np.maximum(v, 0.0)
        s = v.sum()
        return v / s if s > 1 else v
    if fam is Family.STANDARD_SIMPLEX:
        v = np.maximum(v, 0.0)
        s = v.sum()
        if s == 0:
            return np.full(desc.dim, 1.0 / desc.dim)
        return v / s
    if fam is Family.LP_CONE:
        v = np.maximum(v, 0.0)
        n = lp_norm(v, desc.p)
        return v / n if n > 1 else v
    if fam is Family.HILBERT_CUBE:
        a = np.asarray(desc.a)
        return np.clip(v, -a, a)
    if fam is Family.UNIT_BALL:
        n = lp_norm(v, 2)
        return v / n if n > 1 else v
    raise ValueError(f"unknown family {fam!r}")


def finite_extreme_points(desc: SetDescriptor, max_points: int = 4096) -> Optional[np.ndarray]:
    """All extreme points as rows, when the set has a small finite vertex set.

    Returns ``None`` for the strictly convex families (l_p cone with p > 1,
    unit ball) and for Hilbert cubes with more than ``max_points`` vertices.
    """
    N = desc.dim
    fam = desc.family
    if fam in (Family.L1_CONE, Family.DELTA_P):
        return np.vstack([np.zeros(N), np.eye(N)])
    if fam is Family.STANDARD_SIMPLEX:
        return np.eye(N)
    if fam is Family.HILBERT_CUBE and 2 ** N <= max_points:
        signs = ((np.arange(2 ** N)[:, None] >> np.arange(N)) & 1) * 2.0 - 1.0
        return signs * np.asarray(desc.a)
    return None


def sample_extreme_points(desc: SetDescriptor, n: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``n`` extreme points of the set (rows)."""
    N = desc.dim
    fam = desc.family
    if fam in (Family.L1_CONE, Family.DELTA_P, Family.STANDARD_SIMPLEX):
        verts = finite_extreme_points(desc)
        return verts[rng.integers(0, len(verts), size=n)]
    if fam is Family.HILBERT_CUBE:
        signs = rng.choice([-1.0, 1.0], size=(n, N))
        return signs * np.asarray(desc.a)
    if fam is Family.LP_CONE:
        # the positive part of the unit l_p sphere (plus the apex 0)
        g = np.abs(rng.standard_normal((n, N)))
        norms = np.array([lp_norm(row, desc.p) for row in g])
        pts = g / norms[:, None]
        pts[rng.random(n) < 1.0 / (N + 1)] = 0.0
        return pts
    if fam is Family.UNIT_BALL:
        g = rng.standard_normal((n, N))
        return g / np.linalg.norm(g, axis=1, keepdims=True)
    raise ValueError(f"unknown family {fam!r}")


def sample_points(desc: SetDescriptor, n: int, rng: np.random.Generator) -> np.ndarray:
    """Draw ``n`` points of the set, mixing extreme points and interior points."""
    n_ext = n // 2
    ext = sample_extreme_points(desc, n_ext, rng)
    # random convex combinations of extreme points, scaled toward 0 at random
    k = max(2, min(desc.dim + 1, 8))
    combos = []
    for _ in range(n - n_ext):
        verts = sample_extreme_points(desc, k, rng)
        w = rng.dirichlet(np.ones(k))
        y = w @ verts
        if desc.family is not Family.STANDARD_SIMPLEX:
            y = y * rng.random()
        combos.append(project_by_scaling(desc, y))
    inner = np.array(combos).reshape(-1, desc.dim)
    return np.vstack([ext.reshape(-1, desc.dim), inner])
