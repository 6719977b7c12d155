"""Point cloud container plus ASCII parsing, writing, and cropping.

Two text formats are supported: PCD (ASCII data section only) and plain
XYZ rows. Extra PCD fields and extra XYZ columns become named scalar
channels on the cloud. Points with non-finite coordinates are dropped at
parse time and reported in the parse summary rather than failing the
whole file, since real LiDAR dumps routinely contain NaN returns.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ParseError

_PCD_HEADER_ORDER = (
    "VERSION", "FIELDS", "SIZE", "TYPE", "COUNT",
    "WIDTH", "HEIGHT", "VIEWPOINT", "POINTS", "DATA",
)


@dataclass
class PointCloud:
    """Immutable-by-convention point set with optional scalar channels.

    points: (n, 3) float64 array of x, y, z in meters.
    channels: name -> (n,) float64 array. Channel lengths always equal
    the point count; names are unique by dict construction.
    """

    points: np.ndarray
    channels: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        self.points = np.ascontiguousarray(self.points, dtype=np.float64)
        if self.points.ndim != 2 or self.points.shape[1] != 3:
            raise ValueError(f"points must be (n, 3), got {self.points.shape}")
        if not np.isfinite(self.points).all():
            raise ValueError("point coordinates must be finite")
        self.channels = {
            name: np.ascontiguousarray(values, dtype=np.float64)
            for name, values in self.channels.items()
        }
        for name, values in self.channels.items():
            if values.shape != (len(self.points),):
                raise ValueError(
                    f"channel {name!r} has length {values.shape}, expected ({len(self.points)},)"
                )

    def __len__(self):
        return len(self.points)

    def channel(self, name: str) -> np.ndarray:
        from .errors import ChannelMissingError

        if name not in self.channels:
            raise ChannelMissingError(name)
        return self.channels[name]

    def with_channels(self, **extra: np.ndarray) -> "PointCloud":
        """Return a copy of this cloud with additional channels attached."""
        merged = dict(self.channels)
        merged.update(extra)
        return PointCloud(self.points, merged)

    def select(self, indices: np.ndarray) -> "PointCloud":
        """Sub-cloud at the given point indices, channels subset consistently."""
        indices = np.asarray(indices)
        return PointCloud(
            self.points[indices],
            {name: values[indices] for name, values in self.channels.items()},
        )


@dataclass(frozen=True)
class CropBox:
    """Axis-aligned box with inclusive bounds on both ends."""

    min_corner: tuple[float, float, float]
    max_corner: tuple[float, float, float]

    def __post_init__(self):
        lo = np.asarray(self.min_corner, dtype=np.float64)
        hi = np.asarray(self.max_corner, dtype=np.float64)
        if lo.shape != (3,) or hi.shape != (3,):
            raise ValueError("corners must be 3-vectors")
        if not (lo < hi).all():
            raise ValueError(f"min corner must be strictly below max corner, got {lo} vs {hi}")


@dataclass
class ParseSummary:
    """What the parser saw: totals plus per-line rejection records."""

    total_rows: int = 0
    rejected_lines: list[int] = field(default_factory=list)

    @property
    def rejected(self) -> int:
        return len(self.rejected_lines)


def parse_cloud(source: bytes | str, fmt: str) -> tuple[PointCloud, ParseSummary]:
    """Parse a point cloud from text. Returns the cloud and a parse summary.

    fmt is "pcd" or "xyz". Rows whose coordinates are not finite are
    dropped and recorded in the summary. Structural problems (bad header,
    declared/actual count mismatch, short rows) raise ParseError.
    """
    text = source.decode("utf-8", errors="replace") if isinstance(source, bytes) else source
    fmt = fmt.lower()
    if fmt == "pcd":
        return _parse_pcd(text)
    if fmt == "xyz":
        return _parse_xyz(text)
    raise ValueError(f"unknown format {fmt!r} (expected 'pcd' or 'xyz')")


def _parse_float_row(parts: list[str], lineno: int, width: int) -> list[float]:
    if len(parts) < width:
        raise ParseError(f"expected {width} columns, got {len(parts)}", line=lineno)
    try:
        return [float(p) for p in parts[:width]]
    except ValueError as exc:
        raise ParseError(str(exc), line=lineno) from None


def _assemble(rows, extra_names, rejected, total):
    if rows:
        data = np.asarray(rows, dtype=np.float64)
    else:
        data = np.zeros((0, 3 + len(extra_names)))
    channels = {name: data[:, 3 + k] for k, name in enumerate(extra_names)}
    cloud = PointCloud(data[:, :3], channels)
    return cloud, ParseSummary(total_rows=total, rejected_lines=rejected)


def _parse_xyz(text: str):
    rows, rejected = [], []
    total = 0
    width = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if width is None:
            width = len(parts)
            if width < 3:
                raise ParseError("XYZ rows need at least 3 columns", line=lineno)
        total += 1
        values = _parse_float_row(parts, lineno, width)
        if not all(np.isfinite(values[:3])):
            rejected.append(lineno)
            continue
        rows.append(values)
    extra = [f"extra{k}" for k in range((width or 3) - 3)]
    return _assemble(rows, extra, rejected, total)


def _parse_pcd(text: str):
    lines = text.splitlines()
    header: dict[str, list[str]] = {}
    data_start = None
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, _, rest = line.partition(" ")
        key = key.upper()
        if key not in _PCD_HEADER_ORDER:
            raise ParseError(f"unexpected header keyword {key!r}", line=lineno)
        header[key] = rest.split()
        if key == "DATA":
            if rest.strip().lower() != "ascii":
                raise ParseError(f"only DATA ascii is supported, got {rest!r}", line=lineno)
            data_start = lineno
            break
    if data_start is None:
        raise ParseError("missing DATA line", line=len(lines))
    for required in ("FIELDS", "POINTS"):
        if required not in header:
            raise ParseError(f"missing {required} header", line=data_start)

    fields = header["FIELDS"]
    if fields[:3] != ["x", "y", "z"]:
        raise ParseError(f"FIELDS must start with x y z, got {fields}", line=data_start)
    counts = header.get("COUNT", ["1"] * len(fields))
    if any(c != "1" for c in counts):
        raise ParseError("multi-count fields are not supported", line=data_start)
    try:
        declared = int(header["POINTS"][0])
    except (ValueError, IndexError):
        raise ParseError("POINTS must be an integer", line=data_start) from None

    rows, rejected = [], []
    total = 0
    for lineno, raw in enumerate(lines[data_start:], start=data_start + 1):
        line = raw.strip()
        if not line:
            continue
        total += 1
        values = _parse_float_row(line.split(), lineno, len(fields))
        if not all(np.isfinite(values[:3])):
            rejected.append(lineno)
            continue
        rows.append(values)
    if total != declared:
        raise ParseError(f"POINTS declares {declared} rows but data has {total}")
    return _assemble(rows, fields[3:], rejected, total)


def _fmt(x: float) -> str:
    # repr of a float is the shortest string that round-trips exactly
    return repr(float(x))


def write_cloud(cloud: PointCloud, fmt: str) -> bytes:
    """Serialize a cloud to PCD or XYZ text, channels as extra columns.

    Coordinates and channel values are written with full round-trip
    precision, so parse_cloud(write_cloud(c)) reproduces them exactly.
    """
    fmt = fmt.lower()
    names = list(cloud.channels)
    columns = [cloud.points[:, 0], cloud.points[:, 1], cloud.points[:, 2]]
    columns += [cloud.channels[n] for n in names]
    body = "\n".join(
        " ".join(_fmt(col[i]) for col in columns) for i in range(len(cloud))
    )
    if body:
        body += "\n"
    if fmt == "xyz":
        return body.encode()
    if fmt != "pcd":
        raise ValueError(f"unknown format {fmt!r} (expected 'pcd' or 'xyz')")
    n_fields = 3 + len(names)
    header = "\n".join(
        [
            "VERSION .7",
            "FIELDS x y z" + ("" if not names else " " + " ".join(names)),
            "SIZE" + " 8" * n_fields,
            "TYPE" + " F" * n_fields,
            "COUNT" + " 1" * n_fields,
            f"WIDTH {len(cloud)}",
            "HEIGHT 1",
            "VIEWPOINT 0 0 0 1 0 0 0",
            f"POINTS {len(cloud)}",
            "DATA ascii",
        ]
    )
    return (header + "\n" + body).encode()


def crop(cloud: PointCloud, box: CropBox) -> PointCloud:
    """Points inside the box, bounds inclusive, input order preserved."""
    lo = np.asarray(box.min_corner)
    hi = np.asarray(box.max_corner)
    keep = ((cloud.points >= lo) & (cloud.points <= hi)).all(axis=1)
    return cloud.select(np.flatnonzero(keep))
