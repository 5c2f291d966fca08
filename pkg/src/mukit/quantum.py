"""Density matrices, reduced states and convex-roof upper bounds.

Pure decompositions of a state ``omega = sum_j lam_j |e_j><e_j|`` of rank
``R`` with ``m`` members are exactly the rows of ``V diag(sqrt(lam)) E^T``
for an ``m x R`` isometry ``V``.  The optimiser walks over ``V`` (stored as
the first ``R`` columns of an ``m x m`` unitary) with complex Givens
rotations; each rotation touches only two members of the ensemble.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.linalg import null_space

DEFAULT_SEED = 0x5EED
STATE_TOL = 1e-10
ZERO_WEIGHT = 1e-12


@dataclass(frozen=True)
class DensityMatrix:
    """A state on ``C^dH (x) C^dK``; ``dims = (d, 1)`` for a single system."""

    entries: np.ndarray
    dims: tuple = None

    def __post_init__(self):
        rho = np.array(self.entries, dtype=complex)
        if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
            raise ValueError("a density matrix must be square")
        d = rho.shape[0]
        dims = (d, 1) if self.dims is None else tuple(int(v) for v in self.dims)
        if len(dims) != 2 or dims[0] * dims[1] != d:
            raise ValueError(f"factor dims {dims} do not multiply to {d}")
        if np.max(np.abs(rho - rho.conj().T)) > STATE_TOL:
            raise ValueError("matrix is not Hermitian")
        if abs(np.trace(rho).real - 1) > STATE_TOL:
            raise ValueError(f"trace is {np.trace(rho).real!r}, not 1")
        if np.linalg.eigvalsh(rho).min() < -STATE_TOL:
            raise ValueError("matrix is not positive semidefinite")
        rho = 0.5 * (rho + rho.conj().T)
        rho.setflags(write=False)
        object.__setattr__(self, "entries", rho)
        object.__setattr__(self, "dims", dims)

    @classmethod
    def from_ket(cls, psi, dims=None) -> "DensityMatrix":
        psi = np.asarray(psi, dtype=complex).ravel()
        psi = psi / np.linalg.norm(psi)
        return cls(np.outer(psi, psi.conj()), dims)

    @classmethod
    def mixture(cls, parts: Sequence) -> "DensityMatrix":
        """``sum_i w_i rho_i`` from ``(w_i, rho_i)`` pairs."""
        ws = np.array([w for w, _ in parts], dtype=float)
        if np.any(ws < 0) or abs(ws.sum() - 1) > 1e-12:
            raise ValueError("mixture weights must form a probability vector")
        dims = {r.dims for _, r in parts}
        if len(dims) != 1:
            raise ValueError(f"incompatible dimensions {sorted(dims)}")
        rho = sum(w * r.entries for w, r in parts)
        return cls(rho / np.trace(rho).real, dims.pop())

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @property
    def bipartite(self) -> bool:
        return self.dims[1] > 1

    def eigh(self):
        lam, vecs = np.linalg.eigh(self.entries)
        return np.clip(lam, 0.0, None), vecs

    def rank(self, tol: float = 1e-12) -> int:
        return int(np.sum(self.eigh()[0] > tol))

    def is_pure(self, tol: float = 1e-8) -> bool:
        return bool(self.eigh()[0].max() > 1 - tol)

    def trace_distance(self, other: "DensityMatrix") -> float:
        """Trace norm ``|self - other|_1`` (no factor 1/2)."""
        return float(np.sum(np.abs(np.linalg.eigvalsh(self.entries - other.entries))))

    def to_json(self) -> dict:
        return {"dims": list(self.dims),
                "entries": [[[z.real, z.imag] for z in row] for row in self.entries]}

    @classmethod
    def from_json(cls, obj, dims=None) -> "DensityMatrix":
        """Accepts ``{"entries", "dims"}`` or a bare ``[[[re, im], ...], ...]`` matrix."""
        if isinstance(obj, str):
            obj = json.loads(obj)
        if isinstance(obj, dict):
            dims = obj.get("dims", dims)
            obj = obj["entries"]
        arr = np.asarray(obj, dtype=float)
        if arr.ndim == 3:
            arr = arr[..., 0] + 1j * arr[..., 1]
        return cls(arr, dims)


def partial_trace(omega: DensityMatrix) -> DensityMatrix:
    """Trace out the second factor."""
    if not isinstance(omega, DensityMatrix) or not omega.bipartite:
        raise ValueError("partial trace needs a bipartite state")
    dH, dK = omega.dims
    red = np.einsum("ikjk->ij", omega.entries.reshape(dH, dK, dH, dK))
    return DensityMatrix(red, (dH, 1))


def _spectrum(rho) -> np.ndarray:
    m = rho.entries if isinstance(rho, DensityMatrix) else np.asarray(rho)
    return np.clip(np.linalg.eigvalsh(m), 0.0, None)


def f_alpha_spectrum(lam: np.ndarray, alpha: float):
    """Works row-wise on stacked spectra; returns a float for a single one."""
    out = 2.0 * (1.0 - np.sum(np.asarray(lam) ** alpha, axis=-1))
    return float(out) if np.ndim(out) == 0 else out


def entropy_spectrum(lam: np.ndarray):
    lam = np.asarray(lam, dtype=float)
    logs = np.log2(np.where(lam > 0, lam, 1.0))
    out = np.maximum(-np.sum(lam * logs, axis=-1), 0.0)
    return float(out) if np.ndim(out) == 0 else out


def f_alpha(rho, alpha: float) -> float:
    """``2 (1 - Tr rho^alpha)``."""
    if alpha <= 1:
        raise ValueError(f"alpha must exceed 1, got {alpha}")
    return f_alpha_spectrum(_spectrum(rho), alpha)


def von_neumann_entropy(rho) -> float:
    """``-Tr rho log2 rho`` with ``0 log 0 = 0``."""
    return entropy_spectrum(_spectrum(rho))


@dataclass(frozen=True)
class RoofFunction:
    """A unitarily invariant function, given through the spectrum of its argument."""

    name: str
    spectral: Callable[[np.ndarray], float]

    def __call__(self, rho) -> float:
        return self.spectral(_spectrum(rho))

    @classmethod
    def parse(cls, name: str) -> "RoofFunction":
        """``"alpha:2"``, ``"alpha:1.5"`` or ``"entropy"``."""
        if name == "entropy":
            return ENTROPY
        if name.startswith("alpha:"):
            return alpha_function(float(name.split(":", 1)[1]))
        raise ValueError(f"unknown roof function {name!r}")


def alpha_function(alpha: float) -> RoofFunction:
    if alpha <= 1:
        raise ValueError(f"alpha must exceed 1, got {alpha}")
    return RoofFunction(f"alpha:{alpha:g}", lambda lam: f_alpha_spectrum(lam, alpha))


ENTROPY = RoofFunction("entropy", entropy_spectrum)


@dataclass
class RoofConfig:
    m: Optional[int] = None        # ensemble size; default min(rank^2, 16), at least rank
    restarts: int = 16
    seed: int = DEFAULT_SEED
    tol: float = 1e-13             # smallest accepted improvement
    step: float = math.pi / 4      # initial rotation angle
    decay: float = 0.5
    min_step: float = 1e-6
    sweep_tol: float = 1e-10       # a sweep gaining less than this shrinks the step
    max_sweeps: int = 400


@dataclass
class RoofResult:
    upper_bound: float
    decomposition: list            # (weight, pure DensityMatrix)
    restarts_used: int
    trajectories: list = field(default_factory=list)
    state: Optional[DensityMatrix] = None
    function: str = ""
    isometry: Optional[np.ndarray] = None
    best_restart: int = 0

    @property
    def weights(self) -> np.ndarray:
        return np.array([w for w, _ in self.decomposition])

    def reconstruction_error(self) -> float:
        rec = sum(w * r.entries for w, r in self.decomposition)
        return float(np.max(np.abs(rec - self.state.entries)))

    def recompute(self, f: RoofFunction) -> float:
        return float(sum(w * f(partial_trace(r)) for w, r in self.decomposition))

    def to_json(self) -> dict:
        return {
            "upper_bound": self.upper_bound,
            "function": self.function,
            "restarts_used": self.restarts_used,
            "best_restart": self.best_restart,
            "decomposition": [{"weight": w, "state": r.to_json()} for w, r in self.decomposition],
            "trajectories": self.trajectories,
        }


def _member_values(Phi: np.ndarray, dims, f: RoofFunction) -> np.ndarray:
    """``pi_i f(Tr_K |phi_i><phi_i| / pi_i)`` for the unnormalised rows of ``Phi``."""
    pis = np.einsum("ij,ij->i", Phi.conj(), Phi).real
    s = np.linalg.svd(Phi.reshape(len(Phi), *dims), compute_uv=False)
    safe = np.where(pis > 1e-300, pis, 1.0)
    vals = pis * np.atleast_1d(f.spectral(s * s / safe[:, None]))
    return np.where(pis > 1e-300, vals, 0.0)


def _haar_unitary(m: int, rng: np.random.Generator) -> np.ndarray:
    z = (rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))) / math.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def _complete_unitary(V: np.ndarray, m: int) -> np.ndarray:
    """Pad an isometry with zero rows to ``m`` rows and complete it to a unitary."""
    R = V.shape[1]
    W = np.zeros((m, R), dtype=complex)
    W[:V.shape[0]] = V
    rest = null_space(W.conj().T)
    return np.hstack([W, rest])


def _rotate(V, i, k, c, s, ph):
    return c * V[i] - s * ph * V[k], s * np.conj(ph) * V[i] + c * V[k]


def _local_search(U: np.ndarray, B: np.ndarray, dims, f: RoofFunction, cfg: RoofConfig):
    """Givens-rotation descent on the rows of ``U``; ``B = diag(sqrt(lam)) E^T``.

    For each row pair the four moves (two phases, two signs) are scored in
    one batch and the best is taken if it improves; it is then repeated
    while it keeps improving.
    """
    R = B.shape[0]
    m = U.shape[0]
    V = U[:, :R].copy()
    vals = _member_values(V @ B, dims, f)
    total = float(vals.sum())
    traj = [total]
    step = cfg.step
    moves = [(1.0, 1.0), (1.0, -1.0), (1j, 1.0), (1j, -1.0)]
    sweeps = 0
    while step >= cfg.min_step and sweeps < cfg.max_sweeps:
        sweeps += 1
        start = total
        c, s = math.cos(step), math.sin(step)
        for i in range(m):
            for k in range(i + 1, m):
                rows = []
                for ph, sg in moves:
                    rows.extend(_rotate(V, i, k, c, sg * s, ph))
                cv = _member_values(np.array(rows) @ B, dims, f).reshape(4, 2)
                gains = cv.sum(axis=1) - vals[i] - vals[k]
                best = int(np.argmin(gains))
                if gains[best] >= -cfg.tol:
                    continue
                ph, sg = moves[best]
                ri, rk = rows[2 * best], rows[2 * best + 1]
                vi, vk = cv[best]
                # keep turning the same way, doubling the angle, while it pays off
                ang = step
                while vi + vk < vals[i] + vals[k] - cfg.tol:
                    V[i], V[k] = ri, rk
                    vals[i], vals[k] = vi, vk
                    ang = min(2 * ang, math.pi / 2)
                    ri, rk = _rotate(V, i, k, math.cos(ang), sg * math.sin(ang), ph)
                    vi, vk = _member_values(np.array([ri, rk]) @ B, dims, f)
                total = float(vals.sum())
        traj.append(total)
        if total <= 0.0:        # both roof functions are nonnegative
            break
        if start - total < cfg.sweep_tol:
            step *= cfg.decay
    return V, total, traj


def _decomposition(V: np.ndarray, B: np.ndarray, dims):
    Phi = V @ B
    pis = np.einsum("ij,ij->i", Phi.conj(), Phi).real
    keep = pis >= ZERO_WEIGHT
    ws = pis[keep] / pis[keep].sum()
    members = [DensityMatrix.from_ket(Phi[i], dims) for i in np.flatnonzero(keep)]
    return list(zip(ws.tolist(), members))


def roof_optimize(omega: DensityMatrix, f, cfg: Optional[RoofConfig] = None,
                  warm_start: Optional[RoofResult] = None) -> RoofResult:
    """Upper bound on the convex roof of ``f`` composed with the partial trace.

    ``f`` is a :class:`RoofFunction` or a name string (``"alpha:2"``,
    ``"entropy"``).  Pure states return ``f(Tr_K omega)`` with no search.
    Restart 0 starts from the eigen-ensemble (or from ``warm_start``), the
    others from Haar-random unitaries seeded by ``(seed, restart)``.
    """
    cfg = cfg or RoofConfig()
    if isinstance(f, str):
        f = RoofFunction.parse(f)
    if not omega.bipartite:
        raise ValueError("the roof is defined on bipartite states")
    dims = omega.dims
    lam, E = omega.eigh()
    order = np.argsort(lam)[::-1]
    lam, E = lam[order], E[:, order]
    R = int(np.sum(lam > 1e-12))
    if lam[0] > 1 - 1e-12:
        value = f(partial_trace(omega))
        return RoofResult(value, [(1.0, omega)], 0, [[value]], omega, f.name,
                          np.ones((1, 1), dtype=complex))
    m = cfg.m if cfg.m is not None else max(R, min(R * R, 16))
    if m < R:
        raise ValueError(f"ensemble size m={m} is below the rank {R}; omega cannot be rebuilt")
    lam, E = lam[:R], E[:, :R]
    B = np.sqrt(lam)[:, None] * E.T

    best = None
    trajectories = []
    for r in range(cfg.restarts):
        if r == 0:
            if warm_start is not None and warm_start.isometry is not None:
                if warm_start.isometry.shape[0] > m:
                    raise ValueError("warm start uses a larger ensemble than m")
                U = _complete_unitary(warm_start.isometry, m)
            else:
                U = np.eye(m, dtype=complex)
        else:
            U = _haar_unitary(m, np.random.default_rng([cfg.seed, r]))
        V, val, traj = _local_search(U, B, dims, f, cfg)
        trajectories.append(traj)
        # deterministic merge: smallest value, then lowest restart index
        if best is None or val < best[0]:
            best = (val, r, V)
    _, r_best, V = best
    decomp = _decomposition(V, B, dims)
    res = RoofResult(0.0, decomp, cfg.restarts, trajectories, omega, f.name, V, r_best)
    res.upper_bound = res.recompute(f)
    return res


def roof_convexity_certificate(results: Sequence, f=None) -> RoofResult:
    """Combine decompositions of ``omega_i`` into one of ``sum_i w_i omega_i``.

    The returned bound is ``sum_i w_i upper_bound_i``, an upper bound on the
    roof at the mixture.
    """
    ws = np.array([w for w, _ in results], dtype=float)
    if np.any(ws < 0) or abs(ws.sum() - 1) > 1e-12:
        raise ValueError("certificate weights must form a probability vector")
    dims = {res.state.dims for _, res in results}
    if len(dims) != 1:
        raise ValueError(f"incompatible dimensions {sorted(dims)}")
    state = DensityMatrix.mixture([(w, res.state) for w, res in results])
    decomp = [(w * wi, rho) for w, res in results for wi, rho in res.decomposition if w > 0]
    value = float(sum(w * res.upper_bound for w, res in results))
    names = {res.function for _, res in results}
    return RoofResult(value, decomp, sum(res.restarts_used for _, res in results), [],
                      state, names.pop() if len(names) == 1 else "")


def bell_state(kind: str = "phi+") -> np.ndarray:
    """Two-qubit Bell kets ``phi+``, ``phi-``, ``psi+``, ``psi-``."""
    s = 1 / math.sqrt(2)
    table = {"phi+": [s, 0, 0, s], "phi-": [s, 0, 0, -s],
             "psi+": [0, s, s, 0], "psi-": [0, s, -s, 0]}
    return np.array(table[kind], dtype=complex)


def product_ket(*indices, dims=(2, 2)) -> np.ndarray:
    """Computational basis ket ``|i j>``."""
    v = np.zeros(dims[0] * dims[1], dtype=complex)
    v[indices[0] * dims[1] + indices[1]] = 1.0
    return v
