"""Sweep-stage time against slice count and image size.

    python3 scripts/scaling.py --sizes 256 512 --slices 1 2 4
"""
import argparse

from fatratio.bench import PipelineConfig, time_volume
from fatratio.fatseg import SweepConfig
from fatratio.phantom import Blob, PhantomSpec, generate_phantom


def phantom(size, n_slices):
    s = size / 512
    spec = PhantomSpec(width=size, height=size, n_slices=n_slices, ring_inner=(50 * s, 50 * s),
                       ring_outer=(100 * s, 100 * s), blobs=(Blob(0.0, 0.0, 20 * s),))
    return generate_phantom(spec)[0]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[256, 384, 512])
    ap.add_argument("--slices", type=int, nargs="+", default=[1, 2, 4])
    ap.add_argument("--repetitions", type=int, default=5)
    ap.add_argument("--granular-degree", type=float, default=0.05)
    ap.add_argument("--parallel", type=int, default=1)
    args = ap.parse_args()

    cfg = PipelineConfig(sweep=SweepConfig(granular_degree=args.granular_degree), parallel=args.parallel)
    print("size  slices  voxels     sweep_s  per_slice_s  total_s")
    for size in args.sizes:
        for n in args.slices:
            rep = time_volume(phantom(size, n), cfg, args.repetitions)
            sweep = rep.mean("sweep")
            print(f"{size:4d}  {n:6d}  {rep.voxels:9d}  {sweep:7.3f}  {sweep / n:11.3f}  {rep.mean('total'):7.3f}")


if __name__ == "__main__":
    main()
