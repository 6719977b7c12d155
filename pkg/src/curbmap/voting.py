"""Sparse ball voting and per-point tensor decomposition.

Every point starts as a unit ball tensor (the identity) and casts a ball
vote to each neighbor within the cutoff radius. The vote received at
point p from voter q is

    decay(d, sigma) * (I - u u^T),    u = (p - q) / d,  d = |p - q|,

a positive-semidefinite tensor with eigenvalues (decay, decay, 0) whose
null direction is the connecting line. Accumulated tensors are then
eigendecomposed; the spectral gaps l1-l2, l2-l3 and l3 are the stick,
plate and ball saliencies, and the leading eigenvector is the surface
normal estimate.

Determinism contract: every point's neighbor contributions are summed in
ascending neighbor index order with a single fixed reduction primitive
(np.add.reduceat), so results are bit-identical across thread counts and
across the grid-indexed and brute-force execution paths.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import eigen
from .cloud import PointCloud
from .errors import EmptyInputError, ZeroDistanceError
from .neighbors import UniformGridIndex, build_index

# Default cutoff multiplier: decay drops below 1e-3 past sigma*sqrt(ln 1000).
CUTOFF_SIGMAS = math.sqrt(math.log(1000.0))

_CELL_BATCH = 48       # grid cells per parallel task
_BRUTE_CHUNK = 512     # receivers per parallel task on the brute path

SALIENCY_CHANNELS = ("stick", "plate", "ball", "nx", "ny", "nz", "zsal")


@dataclass(frozen=True)
class VotingParams:
    """Knobs of the sparse voting pass.

    sigma: decay scale in meters. cutoff: neighbor truncation radius
    (defaults to sigma * sqrt(ln 1000), beyond which decay <= 1e-3).
    include_self: whether each point keeps its unit ball encoding in the
    accumulated sum.
    """

    sigma: float = 0.3
    cutoff: float | None = None
    include_self: bool = True

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        if self.cutoff is None:
            object.__setattr__(self, "cutoff", self.sigma * CUTOFF_SIGMAS)
        if not self.cutoff > 0:
            raise ValueError(f"cutoff must be positive, got {self.cutoff}")


@dataclass(frozen=True)
class EigenDecomposition3:
    """Sorted eigensystem of one symmetric 3x3 tensor.

    eigenvalues: (3,) descending. eigenvectors: (3, 3), row k is the unit
    eigenvector of eigenvalue k; rows are mutually orthonormal.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


@dataclass(frozen=True)
class SaliencyRecord:
    """Stick/plate/ball weights plus the two meaningful directions."""

    stick: float
    plate: float
    ball: float
    normal: np.ndarray    # leading eigenvector, surface normal estimate
    tangent: np.ndarray   # trailing eigenvector, curve tangent estimate


def decay(d, sigma: float):
    """Gaussian distance attenuation exp(-d^2 / sigma^2)."""
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    d = np.asarray(d, dtype=np.float64)
    out = np.exp(-(d * d) / (sigma * sigma))
    return float(out) if out.ndim == 0 else out


def encode(cloud: PointCloud) -> np.ndarray:
    """Initial tensors: one unit ball (identity) per point, shape (n, 6)."""
    if len(cloud) == 0:
        raise EmptyInputError("cannot encode an empty cloud")
    t6 = np.zeros((len(cloud), 6))
    t6[:, (0, 3, 5)] = 1.0
    return t6


def ball_vote(receiver, voter, sigma: float) -> np.ndarray:
    """Single ball vote as a full 3x3 matrix."""
    receiver = np.asarray(receiver, dtype=np.float64)
    voter = np.asarray(voter, dtype=np.float64)
    delta = receiver - voter
    d2 = float(delta[0] ** 2 + delta[1] ** 2 + delta[2] ** 2)
    if d2 == 0.0:
        raise ZeroDistanceError(f"coincident receiver and voter at {receiver}")
    w = decay(math.sqrt(d2), sigma)
    u = delta / math.sqrt(d2)
    return w * (np.eye(3) - np.outer(u, u))


def _reduce_block(dx, dy, dz, r2: float, s2: float) -> np.ndarray:
    """Votes for a block of receivers against their shared candidate rows.

    dx, dy, dz are (k, m) offset blocks receiver-minus-candidate with
    candidate columns in ascending point index order. Pairs outside the
    cutoff and coincident pairs (d = 0: the receiver itself, or an exact
    duplicate point) contribute nothing. Returns (k, 6) accumulated
    tensors; the per-receiver sum runs over surviving candidates left to
    right via one np.add.reduceat call, which is what makes the result
    independent of how work was split across threads or execution paths.
    """
    d2 = dx * dx
    d2 += dy * dy
    d2 += dz * dz
    mask = (d2 > 0.0) & (d2 <= r2)
    cnt = mask.sum(axis=1)
    flat = mask.ravel()
    d2m = d2.ravel()[flat]
    w = np.exp(-d2m / s2)
    inv = 1.0 / np.sqrt(d2m)
    ux = dx.ravel()[flat] * inv
    uy = dy.ravel()[flat] * inv
    uz = dz.ravel()[flat] * inv
    contrib = np.empty((len(w), 6))
    contrib[:, 0] = w * (1.0 - ux * ux)
    contrib[:, 1] = -w * ux * uy
    contrib[:, 2] = -w * ux * uz
    contrib[:, 3] = w * (1.0 - uy * uy)
    contrib[:, 4] = -w * uy * uz
    contrib[:, 5] = w * (1.0 - uz * uz)
    out = np.zeros((mask.shape[0], 6))
    if len(w):
        offsets = np.zeros(mask.shape[0], dtype=np.int64)
        np.cumsum(cnt[:-1], out=offsets[1:])
        reduced = np.add.reduceat(contrib, np.minimum(offsets, len(w) - 1), axis=0)
        nonzero = cnt > 0
        out[nonzero] = reduced[nonzero]
    return out


def _vote_grid_cells(points, index, slots, r2, s2, cutoff, out):
    for slot in slots:
        recv = index.cell_points(slot)
        cand = index.cell_candidates(slot, cutoff)
        rp = points[recv]
        cp = points[cand]
        dx = rp[:, 0][:, None] - cp[:, 0][None, :]
        dy = rp[:, 1][:, None] - cp[:, 1][None, :]
        dz = rp[:, 2][:, None] - cp[:, 2][None, :]
        out[recv] = _reduce_block(dx, dy, dz, r2, s2)


def _vote_brute_chunk(points, start, stop, r2, s2, out):
    rp = points[start:stop]
    dx = rp[:, 0][:, None] - points[:, 0][None, :]
    dy = rp[:, 1][:, None] - points[:, 1][None, :]
    dz = rp[:, 2][:, None] - points[:, 2][None, :]
    out[start:stop] = _reduce_block(dx, dy, dz, r2, s2)


def sparse_vote(
    cloud: PointCloud,
    index: UniformGridIndex | None,
    params: VotingParams,
    threads: int = 1,
) -> np.ndarray:
    """Accumulate ball votes over the whole cloud. Returns (n, 6) tensors.

    With an index, candidates come from the surrounding cell block; with
    index=None every pair is examined (the brute-force oracle path). Both
    paths produce bit-identical tensors. Work is split into fixed batches
    whose outputs are disjoint, so any thread count yields the same bytes.
    """
    n = len(cloud)
    if n == 0:
        raise EmptyInputError("cannot vote over an empty cloud")
    points = cloud.points
    r2 = params.cutoff * params.cutoff
    s2 = params.sigma * params.sigma
    out = np.zeros((n, 6))

    if index is None:
        tasks = [
            (lambda a=a, b=min(a + _BRUTE_CHUNK, n): _vote_brute_chunk(points, a, b, r2, s2, out))
            for a in range(0, n, _BRUTE_CHUNK)
        ]
    else:
        index.candidate_table(params.cutoff)  # materialize once, shared read-only
        slots = range(index.cell_count)
        tasks = [
            (lambda batch=slots[a:a + _CELL_BATCH]: _vote_grid_cells(
                points, index, batch, r2, s2, params.cutoff, out))
            for a in range(0, index.cell_count, _CELL_BATCH)
        ]
    if threads <= 1:
        for task in tasks:
            task()
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            for _ in pool.map(lambda task: task(), tasks):
                pass
    if params.include_self:
        out[:, (0, 3, 5)] += 1.0
    return out


def decompose(tensor) -> EigenDecomposition3:
    """Eigendecompose one symmetric tensor ((6,) components or 3x3 matrix)."""
    tensor = np.asarray(tensor, dtype=np.float64)
    if tensor.shape == (3, 3):
        tensor = eigen.matrices_to_sym(tensor)
    lam, vecs = eigen.eig3_batch(tensor.reshape(1, 6))
    return EigenDecomposition3(lam[0], vecs[0])


def decompose_batch(t6: np.ndarray):
    """Eigendecompose (n, 6) tensors. Returns (eigenvalues, eigenvectors)."""
    return eigen.eig3_batch(t6)


def saliencies(eigenvalues: np.ndarray):
    """Spectral gaps of descending eigenvalues: (stick, plate, ball)."""
    lam = np.asarray(eigenvalues)
    return lam[..., 0] - lam[..., 1], lam[..., 1] - lam[..., 2], lam[..., 2]


def saliency_record(dec: EigenDecomposition3) -> SaliencyRecord:
    stick, plate, ball = saliencies(dec.eigenvalues)
    return SaliencyRecord(float(stick), float(plate), float(ball),
                          dec.eigenvectors[0], dec.eigenvectors[2])


def saliency_field(
    cloud: PointCloud,
    params: VotingParams,
    index: UniformGridIndex | None = None,
    threads: int = 1,
    use_index: bool = True,
) -> PointCloud:
    """Run encode -> sparse_vote -> decompose and attach saliency channels.

    Adds channels stick, plate, ball, nx, ny, nz (components of the
    leading eigenvector) and zsal = |nz| * stick, the vertical component
    of the stick-weighted normal, which separates ground-like points from
    everything else.
    """
    if len(cloud) == 0:
        raise EmptyInputError("cannot compute saliencies of an empty cloud")
    if index is None and use_index:
        index = build_index(cloud, params.cutoff)
    tensors = sparse_vote(cloud, index if use_index else None, params, threads=threads)
    lam, vecs = decompose_batch(tensors)
    stick, plate, ball = saliencies(lam)
    normals = vecs[:, 0, :]
    return cloud.with_channels(
        stick=stick,
        plate=plate,
        ball=ball,
        nx=normals[:, 0],
        ny=normals[:, 1],
        nz=normals[:, 2],
        zsal=np.abs(normals[:, 2]) * stick,
    )
