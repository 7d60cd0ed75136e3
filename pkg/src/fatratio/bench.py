"""Per-stage wall-clock timings of the ratio pipeline.

The pipeline total excludes file loading, which is timed separately as the
``load`` stage. One untimed warm-up run precedes the repetitions.
"""
from __future__ import annotations

import statistics
import time
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidConfigError
from .fatseg import SweepConfig, measure_images
from .preprocess import MorphologyConfig, ThresholdConfig, open_image
from .volume_io import FOREGROUND, HuVolume, SliceSelector, load_volume, slice_image

STAGES = ("load", "threshold", "morphology", "sweep", "total")


@dataclass(frozen=True)
class PipelineConfig:
    threshold: ThresholdConfig = ThresholdConfig()
    morphology: MorphologyConfig = MorphologyConfig()
    sweep: SweepConfig = SweepConfig()
    selector: SliceSelector = SliceSelector()
    parallel: int = 1


@dataclass
class BenchReport:
    timings: dict[str, dict[str, float]]
    voxels: int
    shape: tuple[int, int, int]
    repetitions: int
    parallel: int
    samples: dict[str, list[float]] = field(default_factory=dict)

    def mean(self, stage: str) -> float:
        return self.timings[stage]["mean"]

    def to_dict(self) -> dict:
        return {
            "timings_s": self.timings,
            "voxels": self.voxels,
            "shape": list(self.shape),
            "repetitions": self.repetitions,
            "parallel": self.parallel,
            "samples_s": self.samples,
        }


def _run_once(vol: HuVolume, cfg: PipelineConfig) -> dict[str, float]:
    idx = list(cfg.selector.indices(vol.nz))
    t0 = time.perf_counter()
    fat = []
    for z in idx:
        hu = slice_image(vol, z)
        fat.append(np.where((hu >= cfg.threshold.hu_min) & (hu <= cfg.threshold.hu_max), FOREGROUND, 0)
                   .astype(np.uint8))
    t1 = time.perf_counter()
    opened = [open_image(f, cfg.morphology) for f in fat]
    t2 = time.perf_counter()
    measure_images(opened, cfg.sweep, spacing=vol.spacing_mm, slice_ids=idx, parallel=cfg.parallel)
    t3 = time.perf_counter()
    return {"threshold": t1 - t0, "morphology": t2 - t1, "sweep": t3 - t2, "total": t3 - t0}


def time_volume(vol: HuVolume, cfg: PipelineConfig = PipelineConfig(), repetitions: int = 5,
                load_times: list[float] | None = None) -> BenchReport:
    """Benchmark an in-memory volume; ``load_times`` fills the load stage."""
    if repetitions < 3:
        raise InvalidConfigError(f"need at least 3 repetitions, got {repetitions}")
    _run_once(vol, cfg)
    samples: dict[str, list[float]] = {s: [] for s in STAGES}
    for _ in range(repetitions):
        for stage, t in _run_once(vol, cfg).items():
            samples[stage].append(t)
    samples["load"] = list(load_times) if load_times else [0.0] * repetitions
    timings = {
        s: {"mean": statistics.fmean(v), "std": statistics.stdev(v) if len(v) > 1 else 0.0}
        for s, v in samples.items()
    }
    return BenchReport(timings, int(vol.data.size), vol.shape, repetitions, cfg.parallel, samples)


def run_bench(path, cfg: PipelineConfig = PipelineConfig(), repetitions: int = 5) -> BenchReport:
    if repetitions < 3:
        raise InvalidConfigError(f"need at least 3 repetitions, got {repetitions}")
    load_times = []
    vol = None
    for _ in range(repetitions):
        t = time.perf_counter()
        vol = load_volume(path)
        load_times.append(time.perf_counter() - t)
    return time_volume(vol, cfg, repetitions, load_times)
