"""Independent reference implementations used to validate the library.

Everything here is deliberately written against the math, not against
the production code paths: a pivot-driven scalar Jacobi eigensolver, a
spherical-quadrature realization of the ball vote as an integral of
rotated stick votes, and a plain double-loop voting pass. The only
shared primitive is np.add.reduceat, whose per-segment reduction is the
pipeline's documented deterministic summation.
"""

from __future__ import annotations

import math

import numpy as np


def jacobi_eigenvalues(matrix: np.ndarray, tol: float = 1e-14) -> np.ndarray:
    """Eigenvalues of a symmetric 3x3 matrix by classical Jacobi rotation.

    Pivots on the largest off-diagonal element until convergence.
    Returns eigenvalues sorted descending.
    """
    a = np.array(matrix, dtype=np.float64)
    scale = max(abs(a).max(), 1e-300)
    for _ in range(200):
        off = [(abs(a[0, 1]), 0, 1), (abs(a[0, 2]), 0, 2), (abs(a[1, 2]), 1, 2)]
        largest, p, q = max(off)
        if largest <= tol * scale:
            break
        if a[p, p] == a[q, q]:
            theta = math.pi / 4.0
        else:
            theta = 0.5 * math.atan2(2.0 * a[p, q], a[q, q] - a[p, p])
        c, s = math.cos(theta), math.sin(theta)
        rot = np.eye(3)
        rot[p, p] = c
        rot[q, q] = c
        rot[p, q] = s
        rot[q, p] = -s
        a = rot.T @ a @ rot
    return np.sort(np.diag(a))[::-1]


def ball_vote_quadrature(receiver, voter, sigma: float,
                         n_azimuth: int = 64, n_polar: int = 64) -> np.ndarray:
    """Ball vote as an angular integral of rotated stick votes.

    A voter of unknown orientation is modeled as a stick tensor swept
    over every direction of the sphere. A stick with normal n casts its
    planar-continuation vote toward the receiver: the surface through
    both points must have its normal perpendicular to the connecting
    line, so the received orientation is the projection of n onto that
    plane. The integral of the projected stick tensors over the sphere,
    weighted by the distance decay, is evaluated with a midpoint product
    rule over azimuth and polar angles.
    """
    receiver = np.asarray(receiver, dtype=np.float64)
    voter = np.asarray(voter, dtype=np.float64)
    delta = receiver - voter
    d = float(np.linalg.norm(delta))
    if d == 0.0:
        raise ValueError("coincident points")
    radial = delta / d
    proj = np.eye(3) - np.outer(radial, radial)

    az = (np.arange(n_azimuth) + 0.5) * (2.0 * np.pi / n_azimuth)
    pol = (np.arange(n_polar) + 0.5) * (np.pi / n_polar)
    azg, polg = np.meshgrid(az, pol, indexing="ij")
    normals = np.stack([
        np.sin(polg) * np.cos(azg),
        np.sin(polg) * np.sin(azg),
        np.cos(polg),
    ], axis=-1).reshape(-1, 3)
    weights = np.sin(polg).reshape(-1)

    projected = normals @ proj
    accum = np.einsum("n,ni,nj->ij", weights, projected, projected)
    accum /= weights.sum()
    return math.exp(-(d * d) / (sigma * sigma)) * accum


def double_loop_vote(points: np.ndarray, sigma: float, cutoff: float,
                     include_self: bool = True) -> np.ndarray:
    """Reference sparse voting: an explicit loop over every receiver.

    For receiver i, every other point j is examined in ascending index
    order; contributions inside the cutoff are reduced with one
    np.add.reduceat call per receiver.
    """
    points = np.asarray(points, dtype=np.float64)
    n = len(points)
    out = np.zeros((n, 6))
    r2 = cutoff * cutoff
    s2 = sigma * sigma
    for i in range(n):
        dx = points[i, 0] - points[:, 0]
        dy = points[i, 1] - points[:, 1]
        dz = points[i, 2] - points[:, 2]
        d2 = dx * dx
        d2 += dy * dy
        d2 += dz * dz
        mask = (d2 > 0.0) & (d2 <= r2)
        d2m = d2[mask]
        w = np.exp(-d2m / s2)
        inv = 1.0 / np.sqrt(d2m)
        ux = dx[mask] * inv
        uy = dy[mask] * inv
        uz = dz[mask] * inv
        contrib = np.empty((len(w), 6))
        contrib[:, 0] = w * (1.0 - ux * ux)
        contrib[:, 1] = -w * ux * uy
        contrib[:, 2] = -w * ux * uz
        contrib[:, 3] = w * (1.0 - uy * uy)
        contrib[:, 4] = -w * uy * uz
        contrib[:, 5] = w * (1.0 - uz * uz)
        if len(w):
            out[i] = np.add.reduceat(contrib, [0], axis=0)[0]
    if include_self:
        out[:, (0, 3, 5)] += 1.0
    return out


def frobenius(matrix: np.ndarray) -> float:
    return float(np.sqrt((np.asarray(matrix) ** 2).sum()))


def random_rotation(rng: np.random.Generator) -> np.ndarray:
    """Uniform-ish random rotation from a QR factorization."""
    q, r = np.linalg.qr(rng.normal(size=(3, 3)))
    q *= np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 2] = -q[:, 2]
    return q
