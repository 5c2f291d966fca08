"""Tail-mass certificates and explicit refutations on truncated sequence spaces.

A candidate compact set ``K_eps`` in the truncated model is "finitely many
basis vectors plus a bounded tail functional".  Refutations exhibit a point
whose decomposition puts mass on basis vectors beyond any fixed prefix, so
no such ``K_eps`` can capture ``1 - eps`` of every decomposition.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional

import numpy as np
from scipy.special import zeta

from .measures import FiniteMeasure, barycenter, mass_outside
from .spaces import SetDescriptor, as_vector, contains, lp_norm


class CertificateFamilyError(ValueError):
    """A certificate functional took a negative value on an atom."""


class TruncationTooSmall(ValueError):
    """The construction needs more coordinates than the truncation offers."""

    def __init__(self, required: int, given: int):
        self.required = required
        self.given = given
        super().__init__(f"truncation dimension {given} too small; need at least {required}")


@dataclass
class Witness:
    point: np.ndarray
    decomposition: FiniteMeasure
    excluded_prefix: int
    outside_mass: float
    details: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "point": self.point.tolist(),
            "decomposition": self.decomposition.to_json(),
            "excluded_prefix": self.excluded_prefix,
            "outside_mass": self.outside_mass,
            "details": self.details,
        }


@dataclass
class TailCheck:
    passed: bool
    outside_mass: float
    threshold: float
    witness: Optional[Witness] = None


@dataclass(frozen=True)
class AffineFunctional:
    """``y -> <slope, y> + offset``; the functionals ``sum_i h_i y_i`` have offset 0."""

    slope: np.ndarray
    offset: float = 0.0

    def __call__(self, y) -> float:
        return float(np.dot(self.slope, as_vector(y)) + self.offset)


def increasing_weights(N: int) -> AffineFunctional:
    """``f_h`` with ``h_i = i`` -- increasing and unbounded as ``N`` grows."""
    return AffineFunctional(np.arange(1, N + 1, dtype=float))


def beyond_prefix_basis(prefix_N: int, tol: float = 1e-12):
    """Membership oracle of a candidate ``K_eps`` holding only ``e_1..e_prefix_N``.

    Returns a predicate that is false exactly on basis vectors ``e_i`` with
    ``i > prefix_N`` (1-based).
    """
    def inside(y) -> bool:
        y = as_vector(y)
        nz = np.flatnonzero(np.abs(y) > tol)
        if nz.size == 1 and abs(y[nz[0]] - 1.0) <= tol:
            return nz[0] + 1 <= prefix_N
        return True
    return inside


def tail_certificate_check(fam_member, x, mu: FiniteMeasure, eps: float,
                           tol: float = 1e-12) -> TailCheck:
    """Markov check of a nonnegative affine certificate functional.

    With ``c = f(x)`` and ``K_eps = {y : f(y) <= c / eps}``, affinity gives
    ``E_mu f = c``, hence ``mu(outside K_eps) <= eps``.  A ``Fail`` result
    therefore signals bad input (barycenter mismatch or a non-affine map).
    """
    if not callable(fam_member):
        fam_member = AffineFunctional(as_vector(fam_member))
    if eps <= 0:
        raise ValueError("eps must be positive")
    x = as_vector(x)
    vals = np.array([fam_member(a) for a in mu.atoms])
    if np.any(vals < -tol):
        i = int(np.argmin(vals))
        raise CertificateFamilyError(f"certificate functional is {vals[i]:.3g} < 0 at atom {i}")
    c = fam_member(x)
    threshold = c / eps
    outside = mass_outside(mu, lambda y: fam_member(y) <= threshold * (1 + tol) + tol)
    if outside <= eps + tol:
        return TailCheck(True, outside, threshold)
    w = Witness(x, mu, excluded_prefix=0, outside_mass=outside,
                details={"threshold": threshold, "eps": eps})
    return TailCheck(False, outside, threshold, w)


def block_starts(p: float, count: int) -> np.ndarray:
    """1-based starts ``n_1 = 1 < n_2 < ...`` of blocks of length ``ceil(rho^(1/(p-1)))``."""
    return _block_table(p, count)[0][:count].copy()


def block_lengths(p: float, count: int) -> np.ndarray:
    return _block_table(p, count)[1][:count].copy()


def _block_length(p: float, rho: float) -> int:
    L = math.ceil(rho ** (1.0 / (p - 1.0)) - 1e-12)
    # guard against ceil landing one short because of rounding in the power
    while L ** (1.0 - p) > 1.0 / rho * (1 + 1e-15):
        L += 1
    return max(L, 1)


_BLOCK_TABLES: dict = {}


def _block_table(p: float, count: int) -> tuple:
    """Cached (starts, lengths) covering at least ``count`` blocks; grown by doubling."""
    tab = _BLOCK_TABLES.get(p)
    if tab is None or tab[0].size < count:
        n = max(count, 64 if tab is None else 2 * tab[0].size)
        lengths = np.array([_block_length(p, r) for r in range(1, n + 1)], dtype=np.int64)
        starts = np.concatenate([[1], 1 + np.cumsum(lengths)[:-1]])
        starts.setflags(write=False)
        lengths.setflags(write=False)
        tab = _BLOCK_TABLES[p] = (starts, lengths)
    return tab


def _first_block_after(p: float, r: int, prefix_N: int) -> tuple:
    """``(rho, start, L)`` of the first block with index ``>= r`` starting past ``prefix_N``."""
    count = max(r, 64)
    starts, lengths = _block_table(p, count)
    while starts[-1] <= prefix_N or starts.size < r:
        starts, lengths = _block_table(p, 2 * starts.size)
    rho = max(r, int(np.searchsorted(starts, prefix_N, side="right")) + 1)
    return rho, int(starts[rho - 1]), int(lengths[rho - 1])


@lru_cache(maxsize=8)
def _block_point(p: float, rho: int, dim: int) -> tuple:
    """Point, decomposition and membership data for block ``rho`` (shared across prefixes)."""
    starts, lengths = _block_table(p, rho + 1)
    start, L = int(starts[rho - 1]), int(lengths[rho - 1])
    idx = np.arange(start - 1, start - 1 + L)
    x = np.zeros(dim)
    x[idx] = 1.0 / L
    x.setflags(write=False)
    atoms = np.zeros((L, dim))
    atoms[np.arange(L), idx] = 1.0
    mu = FiniteMeasure(atoms, np.full(L, 1.0 / L))
    power_sum = float(np.sum(x[idx] ** p))
    # membership in K = {y : sum_{i >= n_sigma} y_i^p <= 1/sigma for all sigma}
    tail_from = np.cumsum((x ** p)[::-1])[::-1]
    in_K = all(tail_from[s - 1] <= 1.0 / sigma + 1e-12
               for sigma, s in enumerate(starts[:rho + 1], start=1) if s <= dim)
    in_delta = contains(SetDescriptor.delta_p(p, dim), x)
    bary_err = float(np.max(np.abs(barycenter(mu) - x)))
    return x, mu, idx, power_sum, bool(in_K), in_delta, bary_err, mu.weights.tolist()


def delta_p_refute(p: float, r: int = 1, eps: float = 0.5, prefix_N: int = 0,
                   dim: Optional[int] = None) -> Witness:
    """Point of the compact ``K`` whose basis decomposition escapes any prefix.

    Blocks ``[n_rho, n_rho + L_rho)`` with ``L_rho = ceil(rho^(1/(p-1)))``
    carry the uniform values ``1/L_rho``, so each block sums to 1 and its
    p-th powers sum to at most ``1/rho``.  The first block index ``rho >= r``
    starting after ``prefix_N`` is used; the point supported there is a
    convex combination of basis vectors ``e_i`` with ``i > prefix_N`` only.

    Consecutive prefixes mostly select the same block, so the block data is
    cached and the returned arrays are read-only.
    """
    if p <= 1:
        raise ValueError("Delta_p refutation needs p > 1")
    if r < 1 or prefix_N < 0:
        raise ValueError("need r >= 1 and prefix_N >= 0")
    rho, start, L = _first_block_after(float(p), int(r), int(prefix_N))
    needed = start + L - 1                   # last used coordinate, 1-based
    if dim is None:
        dim = needed
    if dim < needed:
        raise TruncationTooSmall(needed, dim)
    x, mu, idx, power_sum, in_K, in_delta, bary_err, w = _block_point(float(p), rho, int(dim))
    # atoms are the basis vectors e_{idx+1} in increasing order; the candidate
    # set only holds e_1..e_prefix_N
    k = int(np.searchsorted(idx + 1, prefix_N, side="right"))
    outside = math.fsum(w[k:]) / math.fsum(w)
    return Witness(
        point=x, decomposition=mu, excluded_prefix=prefix_N, outside_mass=outside,
        details={
            "p": p, "r": r, "block_index": rho, "block_start": start, "block_length": L,
            "power_sum": power_sum, "power_bound": 1.0 / r, "eps": eps,
            "in_compact_K": in_K, "in_delta_p": in_delta, "barycenter_error": bary_err,
        })


def default_ap_scale(p: float) -> float:
    """A multiplier ``c`` with ``||c (1/i)_i||_p < 1/3`` in the untruncated space."""
    return min(0.2, 0.3 / float(zeta(p)) ** (1.0 / p))


def ap_refute(p: float, prefix_N: int, dim: int, c: Optional[float] = None) -> Witness:
    """Decomposition of ``x = c (1/i)`` putting mass in ``(1/3, 2/3)`` beyond ``prefix_N``.

    The partial sum ``s`` of ``x`` over ``prefix_N+1 .. prefix_N+r`` is pushed
    past 1/3; since each term is below 1/3 it lands below 2/3.  Then
    ``x = (1-s) * (xbar / (1-s)) + sum_i x_i e_i`` where ``xbar`` zeroes that
    block, and ``xbar / (1-s)`` stays in ``A_p`` because ``1/(1-s) < 3``.
    """
    if p <= 1:
        raise ValueError("A_p refutation needs p > 1")
    c = default_ap_scale(p) if c is None else float(c)
    full_norm = c * float(zeta(p)) ** (1.0 / p)
    if full_norm >= 1.0 / 3:
        raise ValueError(f"||x||_p = {full_norm:.4f} must stay below 1/3; lower c")
    if dim <= prefix_N:
        raise TruncationTooSmall(prefix_N + 1, dim)
    x = c / np.arange(1, dim + 1, dtype=float)
    tail = np.cumsum(x[prefix_N:])
    hits = np.flatnonzero(tail > 1.0 / 3)
    if hits.size == 0:
        # the harmonic tail grows like c*log(dim/prefix_N); estimate the need
        need = int(math.ceil((prefix_N + 1) * math.exp(1.0 / (3 * c)))) + 1
        raise TruncationTooSmall(need, dim)
    r = int(hits[0]) + 1
    s = float(tail[r - 1])
    if not 1.0 / 3 < s < 2.0 / 3:
        raise ValueError(f"block mass {s} fell outside (1/3, 2/3)")
    block = np.arange(prefix_N, prefix_N + r)
    xbar = x.copy()
    xbar[block] = 0.0
    rest = xbar / (1 - s)
    atoms = np.zeros((r + 1, dim))
    atoms[0] = rest
    atoms[np.arange(1, r + 1), block] = 1.0
    weights = np.concatenate([[1 - s], x[block]])
    mu = FiniteMeasure(atoms, weights / weights.sum())
    outside = mass_outside(mu, beyond_prefix_basis(prefix_N))
    desc = SetDescriptor.lp_cone(p, dim)
    atoms_ok = all(contains(desc, a) for a in mu.atoms)
    return Witness(
        point=x, decomposition=mu, excluded_prefix=prefix_N, outside_mass=outside,
        details={
            "p": p, "c": c, "r": r, "block_mass": s,
            "norm_x": lp_norm(x, p), "norm_x_untruncated": full_norm,
            "norm_rest_atom": lp_norm(rest, p), "atoms_in_A_p": atoms_ok,
            "barycenter_error": float(np.max(np.abs(barycenter(mu) - x))),
        })


@dataclass
class CubeVerdict:
    verdict: str                      # "compact" | "refuted" | "inconclusive"
    tail_norms: Optional[dict] = None
    blocks: Optional[list] = None     # 1-based inclusive (start, stop)
    block_norms: Optional[list] = None
    witness: Optional[Witness] = None
    a: Optional[np.ndarray] = None

    def block_vector(self, n: int) -> np.ndarray:
        """``b_n = sum_{i in block n} a_i e_i`` as a dense vector."""
        start, stop = self.blocks[n]
        b = np.zeros(len(self.a))
        b[start - 1:stop] = self.a[start - 1:stop]
        return b

    def to_json(self) -> dict:
        return {
            "verdict": self.verdict,
            "tail_norms": self.tail_norms,
            "blocks": self.blocks,
            "block_norms": self.block_norms,
            "witness": self.witness.to_json() if self.witness else None,
        }


def hilbert_cube_classify(a, dim: Optional[int] = None, tol: float = 1e-6,
                          min_blocks: int = 3) -> CubeVerdict:
    """Decide between the summable and divergent cases from finite data.

    Compact when the l2 norm of the second half of ``a`` is below ``tol``.
    Refuted when greedy blocks (shortest consecutive runs with squared sum
    >= 1) can be cut at least ``min_blocks`` times.  Anything else is
    reported as inconclusive rather than guessed.
    """
    a = np.asarray(a, dtype=float)
    if dim is not None:
        a = a[:dim]
    if a.size == 0 or np.any(a <= 0):
        raise ValueError("half-widths must be a nonempty positive sequence")
    n = a.size
    sq = a ** 2
    suffix = np.cumsum(sq[::-1])[::-1]          # suffix[k] = sum_{i >= k} a_i^2
    half_tail = float(np.sqrt(suffix[n // 2])) if n > 1 else float(a[0])
    if half_tail < tol:
        checkpoints = sorted({0, *[2 ** k for k in range(int(math.log2(n)) + 1) if 2 ** k < n]})
        tails = {int(k): float(np.sqrt(suffix[k])) for k in checkpoints}
        return CubeVerdict("compact", tail_norms=tails, a=a)

    blocks, norms = [], []
    start, acc = 0, 0.0
    for i in range(n):
        acc += sq[i]
        if acc >= 1.0:
            blocks.append((start + 1, i + 1))
            norms.append(float(np.sqrt(acc)))
            start, acc = i + 1, 0.0
    if len(blocks) < min_blocks:
        return CubeVerdict("inconclusive", blocks=blocks, block_norms=norms, a=a)

    out = CubeVerdict("refuted", blocks=blocks, block_norms=norms, a=a)
    # the unit vector along the last block and its negative both lie in H_a and
    # average to 0, with all mass beyond the previous blocks
    u = out.block_vector(len(blocks) - 1)
    u /= np.linalg.norm(u)
    mu = FiniteMeasure(np.vstack([u, -u]), [0.5, 0.5])
    prefix = blocks[-1][0] - 1
    cube = SetDescriptor.hilbert_cube(a)
    # a candidate compact set spanned by the earlier coordinates holds none of it
    outside = mass_outside(mu, lambda y: not np.any(np.abs(y[prefix:]) > 0))
    out.witness = Witness(
        point=np.zeros(n), decomposition=mu, excluded_prefix=prefix, outside_mass=outside,
        details={"atoms_in_cube": all(contains(cube, v) for v in mu.atoms),
                 "block_norms_at_least_one": all(b >= 1.0 for b in norms)})
    return out
