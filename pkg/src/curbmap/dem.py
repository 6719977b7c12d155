"""Digital elevation map: per-cell ground height in two refinement stages.

Ground candidates are selected from the voting output (stick-salient
points whose normals are near vertical), binned into a fine height grid
whose cell statistic is the lower median z (robust against canopy
returns that share the ground's normal direction and, unlike the
midpoint median, never invents a height between the ground and an
elevated mode). The fine grid is then aggregated
to a coarse grid for a rough estimate and to a refined grid for the
final one; refined cells that disagree with their coarse cell by more
than the consistency threshold are invalidated and, where enough valid
neighbors exist, filled back in by neighbor interpolation.

The refined grid answers all later ground-height queries. Coarse-cell
medians are only robust while polluted cells are a minority of each
coarse cell, which holds for canopy-like outliers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cloud import PointCloud
from .errors import EmptyInputError

NODATA = -9999.0


@dataclass(frozen=True)
class GroundParams:
    """Ground extraction and DEM construction knobs.

    stick_threshold is a fraction of the per-cloud maximum stick
    saliency; max_angle_deg bounds the angle between the (sign-folded)
    normal and vertical. Grid sizes are in meters; consistency is the
    maximum tolerated deviation of a refined cell from its coarse cell.
    """

    stick_threshold: float = 0.5
    max_angle_deg: float = 15.0
    height_cell: float = 0.5
    refined_cell: float = 1.0
    coarse_cell: float = 10.0
    consistency: float = 0.3
    min_samples: int = 3

    def __post_init__(self):
        for name in ("stick_threshold", "max_angle_deg", "height_cell",
                     "refined_cell", "coarse_cell", "consistency", "min_samples"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if not self.max_angle_deg < 90.0:
            raise ValueError("max_angle_deg must be below 90")


@dataclass
class DemGrid:
    """2D height field: per-cell height estimate, sample count, validity.

    heights[row, col] covers x in [x0 + col*cell, x0 + (col+1)*cell) and
    y likewise with rows. Invalid cells hold NODATA.
    """

    origin: tuple[float, float]
    cell: float
    heights: np.ndarray
    counts: np.ndarray
    valid: np.ndarray

    @property
    def shape(self):
        return self.heights.shape

    def cell_of(self, xy: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """(row, col) indices of query coordinates; may fall outside."""
        xy = np.atleast_2d(xy)
        col = np.floor((xy[:, 0] - self.origin[0]) / self.cell).astype(np.int64)
        row = np.floor((xy[:, 1] - self.origin[1]) / self.cell).astype(np.int64)
        return row, col


def extract_ground_candidates(cloud: PointCloud, params: GroundParams) -> np.ndarray:
    """Indices of stick-salient points with near-vertical normals."""
    stick = cloud.channel("stick")
    nz = cloud.channel("nz")
    for required in ("nx", "ny"):
        cloud.channel(required)
    if len(stick) == 0:
        return np.zeros(0, dtype=np.int64)
    # folding the normal so nz >= 0 makes the angle test |nz| >= cos(theta)
    min_nz = np.cos(np.radians(params.max_angle_deg))
    keep = (stick >= params.stick_threshold * stick.max()) & (np.abs(nz) >= min_nz)
    return np.flatnonzero(keep)


def _bin_cells(xy: np.ndarray, origin, cell: float):
    col = np.floor((xy[:, 0] - origin[0]) / cell).astype(np.int64)
    row = np.floor((xy[:, 1] - origin[1]) / cell).astype(np.int64)
    return row, col


def _lower_median(values: np.ndarray) -> float:
    """The ceil(n/2)-th order statistic.

    Equal to the ordinary median for odd counts. For even counts it
    returns the lower of the two middle samples instead of their
    midpoint: height pollution (canopy, vehicle roofs) is one-sided
    above the ground, and a midpoint between the ground mode and an
    elevated mode would be a fictitious height no sample supports.
    """
    k = (len(values) - 1) // 2
    return float(np.partition(values, k)[k])


def _median_grid(xy, values, weights, origin, cell: float):
    """Per-cell lower median of values; returns (heights, counts, valid).

    weights carries a sample count per value (1 for raw points, the
    subcell population when aggregating a finer grid); counts is its
    per-cell sum. A cell is valid when it holds at least one value.
    """
    row, col = _bin_cells(xy, origin, cell)
    nrows = int(row.max()) + 1
    ncols = int(col.max()) + 1
    heights = np.full((nrows, ncols), NODATA)
    counts = np.zeros((nrows, ncols), dtype=np.int64)
    key = row * ncols + col
    order = np.argsort(key, kind="stable")
    sorted_key = key[order]
    boundaries = np.flatnonzero(np.diff(sorted_key)) + 1
    segments = np.split(order, boundaries)
    for seg in segments:
        r, c = int(row[seg[0]]), int(col[seg[0]])
        heights[r, c] = _lower_median(values[seg])
        counts[r, c] = int(weights[seg].sum())
    return heights, counts, counts > 0


def build_height_grid(points: np.ndarray, cell: float, min_samples: int = 3,
                      origin: tuple[float, float] | None = None) -> DemGrid:
    """Height grid over candidate ground points, lower median z per cell.

    Cells with fewer than min_samples points are marked invalid. The
    origin defaults to the candidates' min corner snapped to the cell
    size, so identical clouds always produce identical grids.
    """
    points = np.asarray(points, dtype=np.float64)
    if len(points) == 0:
        raise EmptyInputError("no ground candidate points")
    if origin is None:
        origin = (
            float(np.floor(points[:, 0].min() / cell) * cell),
            float(np.floor(points[:, 1].min() / cell) * cell),
        )
    heights, counts, _ = _median_grid(
        points[:, :2], points[:, 2], np.ones(len(points), dtype=np.int64), origin, cell
    )
    valid = counts >= min_samples
    heights[~valid] = NODATA
    return DemGrid(origin, float(cell), heights, counts, valid)


# 3x3 interpolation kernel: edge neighbors weigh twice the diagonals.
_NEIGHBOR_OFFSETS = [(-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1)]
_NEIGHBOR_WEIGHTS = [1.0, 2.0, 1.0, 2.0, 2.0, 1.0, 2.0, 1.0]


def refine_dem(height_grid: DemGrid, coarse_cell: float = 10.0,
               refined_cell: float = 1.0, consistency: float = 0.3) -> DemGrid:
    """Two-stage DEM: coarse medians gate the refined cells.

    Valid fine cells are aggregated (by cell-center coordinates, shared
    origin) into a refined grid and a coarse grid, both via medians.
    Refined cells deviating from their coarse cell by more than the
    consistency threshold are invalidated, then filled by weighted
    interpolation of their valid 8-neighbors when at least two exist.
    A filled value is kept only if it passes the same consistency check,
    so every valid output cell agrees with its coarse estimate.
    """
    rows, cols = np.nonzero(height_grid.valid)
    if len(rows) == 0:
        raise EmptyInputError("height grid has no valid cells")
    x0, y0 = height_grid.origin
    centers = np.column_stack([
        x0 + (cols + 0.5) * height_grid.cell,
        y0 + (rows + 0.5) * height_grid.cell,
    ])
    values = height_grid.heights[rows, cols]
    weights = height_grid.counts[rows, cols]

    ref_h, ref_n, ref_valid = _median_grid(centers, values, weights, (x0, y0), refined_cell)
    coarse_h, _, coarse_valid = _median_grid(centers, values, weights, (x0, y0), coarse_cell)

    nrows, ncols = ref_h.shape
    # coarse height per refined cell, via the refined cell's center
    ry, rx = np.mgrid[0:nrows, 0:ncols]
    ccol = np.floor((x0 + (rx + 0.5) * refined_cell - x0) / coarse_cell).astype(np.int64)
    crow = np.floor((y0 + (ry + 0.5) * refined_cell - y0) / coarse_cell).astype(np.int64)
    ccol = np.clip(ccol, 0, coarse_h.shape[1] - 1)
    crow = np.clip(crow, 0, coarse_h.shape[0] - 1)
    coarse_of = coarse_h[crow, ccol]
    coarse_ok = coarse_valid[crow, ccol]

    consistent = ref_valid & coarse_ok & (np.abs(ref_h - coarse_of) <= consistency)
    invalidated = ref_valid & ~consistent

    out_h = np.where(consistent, ref_h, NODATA)
    out_n = np.where(consistent, ref_n, 0)
    out_valid = consistent.copy()

    fill_rows, fill_cols = np.nonzero(invalidated)
    for r, c in zip(fill_rows, fill_cols):
        acc = wsum = 0.0
        nn = 0
        count_sum = 0
        for (dr, dc), w in zip(_NEIGHBOR_OFFSETS, _NEIGHBOR_WEIGHTS):
            rr, cc = r + dr, c + dc
            if 0 <= rr < nrows and 0 <= cc < ncols and consistent[rr, cc]:
                acc += w * ref_h[rr, cc]
                wsum += w
                nn += 1
                count_sum += int(ref_n[rr, cc])
        if nn >= 2:
            filled = acc / wsum
            if coarse_ok[r, c] and abs(filled - coarse_of[r, c]) <= consistency:
                out_h[r, c] = filled
                out_n[r, c] = count_sum
                out_valid[r, c] = True
    return DemGrid((x0, y0), float(refined_cell), out_h, out_n.astype(np.int64), out_valid)


def ground_height_at(dem: DemGrid, x: float, y: float):
    """Height of the enclosing cell, or None when unknown."""
    heights, ok = ground_heights(dem, np.array([[x, y]]))
    return float(heights[0]) if ok[0] else None


def ground_heights(dem: DemGrid, xy: np.ndarray):
    """Vectorized ground lookup. Returns (heights, known) arrays."""
    xy = np.atleast_2d(np.asarray(xy, dtype=np.float64))
    row, col = dem.cell_of(xy)
    nrows, ncols = dem.shape
    inside = (row >= 0) & (row < nrows) & (col >= 0) & (col < ncols)
    rs = np.clip(row, 0, nrows - 1)
    cs = np.clip(col, 0, ncols - 1)
    known = inside & dem.valid[rs, cs]
    heights = np.where(known, dem.heights[rs, cs], NODATA)
    return heights, known


def to_ascii_grid(dem: DemGrid) -> str:
    """ESRI-style ASCII grid, rows written from the top (max y) down."""
    nrows, ncols = dem.shape
    lines = [
        f"ncols {ncols}",
        f"nrows {nrows}",
        f"xllcorner {dem.origin[0]!r}",
        f"yllcorner {dem.origin[1]!r}",
        f"cellsize {dem.cell!r}",
        f"NODATA_value {NODATA!r}",
    ]
    for row in range(nrows - 1, -1, -1):
        lines.append(" ".join(repr(float(h)) for h in dem.heights[row]))
    return "\n".join(lines) + "\n"
