"""Run every detector on the synthetic rectangle scene and tabulate how much
of each map lies on the true boundary.

    python3 scripts/compare_detectors.py --sigma 20 --seed 0 [--denoiser gaussian] [--out DIR]
"""

import argparse
from pathlib import Path

import numpy as np
from scipy import ndimage

from thermedge.denoise import DENOISER_KINDS, DenoiserSpec
from thermedge.detectors import EIGHT
from thermedge.imageio import GrayFrame, save_pgm
from thermedge.pipeline import DETECTOR_KINDS, PipelineConfig, compare_detectors, count_components
from thermedge.scoring import ScoreConfig
from thermedge.synthetic import rectangle_scene


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--sigma", type=float, default=20.0, help="noise std in raw counts")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--et", type=int, default=1)
    ap.add_argument("--denoiser", choices=DENOISER_KINDS, default="nlmeans")
    ap.add_argument("--out", type=Path, help="write one PGM per detector here")
    args = ap.parse_args()

    frame, truth = rectangle_scene(noise_sigma=args.sigma, seed=args.seed)
    near = ndimage.binary_dilation(truth, EIGHT)
    cfg = PipelineConfig(denoiser=DenoiserSpec(args.denoiser), score=ScoreConfig(et=args.et))
    results = compare_detectors(frame, DETECTOR_KINDS, cfg)
    print(f"{'detector':10s} {'pixels':>7s} {'comps':>6s} {'on-edge':>8s} {'recall':>7s}")
    for kind, (emap, count) in results.items():
        on = (emap & near).sum() / max(1, count)
        recall = (ndimage.binary_dilation(emap, EIGHT) & truth).sum() / truth.sum()
        print(f"{kind:10s} {count:7d} {count_components(emap):6d} {on:8.3f} {recall:7.3f}")
        if args.out:
            args.out.mkdir(parents=True, exist_ok=True)
            save_pgm(args.out / f"{kind}.pgm", GrayFrame(np.where(emap, 255, 0).astype(np.uint8)))


if __name__ == "__main__":
    main()
