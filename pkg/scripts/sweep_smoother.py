#!/usr/bin/env python3
"""Sweep the edge-smoother cutoff and threshold on a disk fixture.

Prints the final-mask IoU against ground truth for each (D0, g_threshold)
pair, which is how the defaults in SmootherConfig were sanity-checked.
"""

import sys

from scipy import ndimage

from zone.fixtures import FixtureSpec, paint_edit, region_mask, synth_original
from zone.grids import BinaryMask
from zone.refine import region_iou
from zone.smoother import SmootherConfig, smooth


def main() -> int:
    seed = int(sys.argv[1]) if len(sys.argv) > 1 else 3
    spec = FixtureSpec(seed=seed, shape="disk", extent=128)
    region = region_mask(spec)
    original = synth_original(seed, 512, 512)
    canvas = paint_edit(original, region, seed)
    refined = BinaryMask(ndimage.binary_erosion(region.bits, iterations=3))

    print(f"{'D0':>6} {'g_thr':>6} {'IoU':>8}")
    for cutoff in (50.0, 100.0, 200.0, 300.0):
        for threshold in (5.0, 10.0, 20.0):
            config = SmootherConfig(cutoff_D0=cutoff, g_threshold=threshold)
            final = smooth(original, canvas, refined, config)
            print(f"{cutoff:6.0f} {threshold:6.1f} {region_iou(final, region):8.4f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
