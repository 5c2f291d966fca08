"""Independent reference computations used to freeze expected values.

Nothing here imports the solvers under test; only plain numpy/scipy.
"""

import itertools
import math

import numpy as np
from scipy.optimize import linprog


def concave_simplex_hull(vertex_values, lam):
    """Hull of a concave function on a simplex: affine interpolation."""
    return float(np.dot(vertex_values, lam))


def grid_hull_upper_bound(f, x, vertices, n_grid=6):
    """LP over a lattice of points of a simplex; an upper bound on co f(x)."""
    k = len(vertices)
    pts = []
    for combo in itertools.product(range(n_grid + 1), repeat=k):
        if sum(combo) == n_grid:
            pts.append(np.asarray(combo, dtype=float) @ vertices / n_grid)
    pts = np.array(pts)
    vals = np.array([f(p) for p in pts])
    A_eq = np.vstack([pts.T, np.ones(len(pts))])
    res = linprog(vals, A_eq=A_eq, b_eq=np.append(x, 1.0), bounds=(0, None), method="highs")
    return float(res.fun)


def ball_ratio(norm, delta):
    return (delta ** 2 - (1 - norm ** 2)) / (delta ** 2 - (1 - norm) ** 2)


def greedy_blocks(a):
    blocks, start, acc = [], 1, 0.0
    for i, v in enumerate(a, start=1):
        acc += v * v
        if acc >= 1:
            blocks.append((start, i))
            start, acc = i + 1, 0.0
    return blocks


def deltap_block(p, r, prefix_N):
    """(start, length) of the first block with index >= r starting past prefix_N."""
    start = 1
    for rho in itertools.count(1):
        L = math.ceil(rho ** (1 / (p - 1)) - 1e-12)
        if rho >= r and start > prefix_N:
            return start, L
        start += L


def cone_pointed_3d(G):
    """Pointedness of cone(G) in R^3 by enumerating candidate facet normals.

    Facet normals of the dual cone are +-(g_i x g_j); the cone is pointed
    iff the sum of the valid ones (nonnegative on all generators) is
    strictly positive on every generator.
    """
    G = np.asarray(G, dtype=float)
    G = G / np.linalg.norm(G, axis=1, keepdims=True)
    normals = []
    for i, j in itertools.combinations(range(len(G)), 2):
        n = np.cross(G[i], G[j])
        if np.linalg.norm(n) < 1e-12:
            continue
        n /= np.linalg.norm(n)
        for s in (1.0, -1.0):
            if np.all(G @ (s * n) >= -1e-10):
                normals.append(s * n)
    if not normals:
        # all generators collinear (or no valid plane): pointed iff no antipodal pair
        return bool(np.all(G @ G[0] > 0)) if np.linalg.matrix_rank(G, 1e-10) == 1 else False
    a = np.sum(normals, axis=0)
    return bool(np.all(G @ a > 1e-9))


def _sample_isometries(rng, batch, m, R, real):
    z = rng.standard_normal((batch, m, R))
    if not real:
        z = z + 1j * rng.standard_normal((batch, m, R))
    q, _ = np.linalg.qr(z)
    return q


def sampled_roof_f2(rho, dims, m, samples, seed, real=None, batch=50_000):
    """Minimum of sum_i pi_i f_2(reduced state) over random size-m decompositions.

    Decompositions are rows of V diag(sqrt(lam)) E^T with V a random m x R
    isometry (real when rho is real, unless told otherwise).
    """
    rho = np.asarray(rho)
    real = bool(np.allclose(rho.imag, 0)) if real is None else real
    lam, E = np.linalg.eigh(rho)
    keep = lam > 1e-12
    lam, E = lam[keep], E[:, keep]
    if real:
        E = E.real
    B = np.sqrt(lam)[:, None] * E.T
    rng = np.random.default_rng(seed)
    best = np.inf
    done = 0
    while done < samples:
        n = min(batch, samples - done)
        V = _sample_isometries(rng, n, m, len(lam), real)
        Phi = V @ B                                   # (n, m, d)
        pis = np.sum(np.abs(Phi) ** 2, axis=-1)
        s = np.linalg.svd(Phi.reshape(n, m, *dims), compute_uv=False)
        # pi * 2 (1 - sum (s^2/pi)^2) = 2 (pi - sum s^4 / pi)
        with np.errstate(divide="ignore", invalid="ignore"):
            vals = np.where(pis > 1e-14, 2 * (pis - np.sum(s ** 4, axis=-1) / pis), 0.0)
        best = min(best, float(vals.sum(axis=1).min()))
        done += n
    return best
