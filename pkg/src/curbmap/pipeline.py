"""End-to-end orchestration with per-stage timing.

Stages run in a fixed order: parse, crop, index, vote, decompose, dem,
curb, grid, export. Any failure aborts the run with the stage name and
removes files already written, so a failed run leaves no partial
outputs. Outputs are deterministic for a fixed config regardless of the
thread count.
"""

from __future__ import annotations

import os
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import curb as curb_mod
from . import dem as dem_mod
from . import semantic, voting
from .cloud import PointCloud, crop, parse_cloud, write_cloud
from .config import PipelineConfig
from .errors import EmptyInputError, PipelineError
from .neighbors import build_index

STAGES = ("parse", "crop", "index", "vote", "decompose", "dem", "curb", "grid", "export")


@dataclass
class TimingReport:
    """Wall time per stage plus point counts flowing through the filters."""

    seconds: dict[str, float] = field(default_factory=dict)
    counts: dict[str, int] = field(default_factory=dict)

    @property
    def total(self) -> float:
        return sum(self.seconds.values())

    def lines(self) -> list[str]:
        out = [f"time_{stage}_s: {self.seconds[stage]:.6f}"
               for stage in STAGES if stage in self.seconds]
        out.append(f"time_total_s: {self.total:.6f}")
        out += [f"{key}: {value}" for key, value in self.counts.items()]
        return out

    def __str__(self) -> str:
        return "\n".join(self.lines())


@dataclass
class PipelineResult:
    timing: TimingReport
    cloud: PointCloud
    dem: dem_mod.DemGrid
    detection: curb_mod.CurbDetection
    grid: semantic.SemanticGrid
    written: list[str]


class _StageClock:
    def __init__(self, report: TimingReport):
        self.report = report
        self.stage = None
        self.t0 = 0.0

    def start(self, stage: str):
        self.stage = stage
        self.t0 = time.perf_counter()

    def stop(self):
        self.report.seconds[self.stage] = time.perf_counter() - self.t0


def run_pipeline(config: PipelineConfig, cloud: PointCloud | None = None) -> PipelineResult:
    """Execute the full detection pipeline described by the config.

    A pre-built cloud may be passed instead of reading config.input_path,
    which is how generated scenes run without touching disk.
    """
    report = TimingReport()
    clock = _StageClock(report)
    written: list[str] = []
    stage = "parse"
    try:
        clock.start("parse")
        if cloud is None:
            data = Path(config.input_path).read_bytes()
            cloud, summary = parse_cloud(data, config.input_format)
            report.counts["parse_rejected"] = summary.rejected
        clock.stop()
        report.counts["parse_points"] = len(cloud)

        stage = "crop"
        clock.start("crop")
        if config.crop is not None:
            cloud = crop(cloud, config.crop)
        if len(cloud) == 0:
            raise EmptyInputError("no points remain after crop")
        clock.stop()
        report.counts["crop_points"] = len(cloud)

        stage = "index"
        clock.start("index")
        index = None if config.oracle else build_index(cloud, config.voting.cutoff)
        clock.stop()

        stage = "vote"
        clock.start("vote")
        tensors = voting.sparse_vote(cloud, index, config.voting, threads=config.threads)
        clock.stop()

        stage = "decompose"
        clock.start("decompose")
        lam, vecs = voting.decompose_batch(tensors)
        stick, plate, ball = voting.saliencies(lam)
        cloud = cloud.with_channels(
            stick=stick, plate=plate, ball=ball,
            nx=vecs[:, 0, 0], ny=vecs[:, 0, 1], nz=vecs[:, 0, 2],
            zsal=np.abs(vecs[:, 0, 2]) * stick,
        )
        clock.stop()

        stage = "dem"
        clock.start("dem")
        ground_idx = dem_mod.extract_ground_candidates(cloud, config.ground)
        if len(ground_idx) == 0:
            raise EmptyInputError("no ground candidates found")
        height_grid = dem_mod.build_height_grid(
            cloud.points[ground_idx], config.ground.height_cell,
            min_samples=config.ground.min_samples)
        refined = dem_mod.refine_dem(
            height_grid, config.ground.coarse_cell,
            config.ground.refined_cell, config.ground.consistency)
        clock.stop()
        report.counts["ground_candidates"] = len(ground_idx)

        stage = "curb"
        clock.start("curb")
        stage1 = curb_mod.plate_candidates(cloud, config.curb)
        stage2 = curb_mod.height_gate(cloud, stage1, refined, config.curb)
        stage3 = curb_mod.outlier_removal(cloud, stage2, config.curb.outlier_radius,
                                          config.curb.outlier_min_neighbors)
        peak = cloud.channel("plate").max()
        detection = curb_mod.CurbDetection(
            stage3, cloud.channel("plate")[stage3] / peak if peak > 0 else
            np.zeros(len(stage3)))
        clock.stop()
        report.counts["curb_plate_candidates"] = len(stage1)
        report.counts["curb_height_gated"] = len(stage2)
        report.counts["curb_points"] = len(stage3)

        stage = "grid"
        clock.start("grid")
        grid = semantic.classify_cells(cloud, refined, detection.indices,
                                       ground_idx, config.classify)
        clock.stop()
        report.counts["grid_cells"] = int(grid.labels.size)

        stage = "export"
        clock.start("export")
        if config.out_cloud:
            curb_conf = np.zeros(len(cloud))
            curb_conf[detection.indices] = detection.confidence
            labeled = cloud.with_channels(curb_conf=curb_conf)
            _write(config.out_cloud, write_cloud(labeled, config.input_format), written)
        if config.out_dem:
            _write(config.out_dem, dem_mod.to_ascii_grid(refined).encode(), written)
        if config.out_raster:
            _write(config.out_raster, semantic.render_raster(grid), written)
        if config.out_grid:
            _write(config.out_grid, semantic.write_compact(grid), written)
        clock.stop()
    except Exception as exc:
        for path in written:
            try:
                os.unlink(path)
            except OSError:
                pass
        raise PipelineError(stage, exc) from exc
    return PipelineResult(report, cloud, refined, detection, grid, written)


def _write(path: str, data: bytes, written: list[str]):
    Path(path).write_bytes(data)
    written.append(path)
