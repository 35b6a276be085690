"""Pipeline throughput on a 382x288 synthetic frame, per stage.

    python3 scripts/benchmark.py [--repeats 3]

Reports the best of ``--repeats`` runs for each denoiser at a moderate noise
level, plus a heavy-noise Gaussian run where thousands of noise edges must be
scored (the worst case for the scoring stage).
"""

import argparse
import time

from thermedge.denoise import DenoiserSpec
from thermedge.pipeline import PipelineConfig, run_pipeline_full
from thermedge.synthetic import rectangle_scene

CASES = [
    ("nlmeans, sigma=10", 10.0, DenoiserSpec.nlmeans()),
    ("gaussian, sigma=10", 10.0, DenoiserSpec.gaussian()),
    ("gaussian, sigma=20", 20.0, DenoiserSpec.gaussian()),
]


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--repeats", type=int, default=3)
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args()
    for label, sigma, den in CASES:
        frame, _ = rectangle_scene(382, 288, (80, 60, 300, 220), noise_sigma=sigma, seed=args.seed)
        cfg = PipelineConfig(denoiser=den)
        best, best_res = float("inf"), None
        for _ in range(args.repeats):
            t0 = time.perf_counter()
            res = run_pipeline_full(frame, cfg)
            dt = time.perf_counter() - t0
            if dt < best:
                best, best_res = dt, res
        stages = "  ".join(f"{k}={v:.1f}" for k, v in best_res.report.timings_ms.items())
        print(f"{label:20s} {best:7.3f} s  {len(best_res.scored):5d} edges  [ms] {stages}")


if __name__ == "__main__":
    main()
