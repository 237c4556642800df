"""Experiment run: the two phase plots the acceptance tests pin.

e=40309 (sparse class, strong resonance island at the origin) and
e=40000 (square class, uniform portrait).  Prints the occupancy numbers
the regression thresholds were frozen from and writes the images next
to this script for eyeballing.
"""

import json
import sys
from pathlib import Path

sys.path.insert(0, "src")

from roundflow.cli import cmd_phase_plot

CONFIGS = [
    dict(e=40309, m=2, lam="1/25000000", resolution=(283, 283), seeds=96),
    dict(e=40000, m=1, lam="1/142857143", resolution=(283, 72), seeds=96),
]


def main():
    outdir = Path(__file__).resolve().parent / "out"
    outdir.mkdir(exist_ok=True)
    for cfg in CONFIGS:
        res = cmd_phase_plot(cfg["e"], cfg["m"], cfg["lam"],
                             cfg["resolution"], cfg["seeds"])
        man = res.manifest
        occ = man["occupancy"]
        print(f"e={cfg['e']} lam={man['lambda']} z0={man['z0']}")
        print(f"  anchor={man['anchor']} span={man['span_levels']} "
              f"stride={man['stride_levels']} counts={man['counts']}")
        print(f"  site occupancy: global={occ['site_global_occupancy']:.4f} "
              f"disc={occ['site_disc_occupancy']:.4f} "
              f"ratio={occ['site_disc_ratio']}")
        print(f"  pixel quadrants: {occ['pixel_quadrant_occupancy']} "
              f"spread={occ['pixel_quadrant_spread']}")
        (outdir / f"phase_{cfg['e']}.ppm").write_bytes(res.ppm)
        (outdir / f"phase_{cfg['e']}.json").write_text(
            json.dumps(man, sort_keys=True, indent=2))


if __name__ == "__main__":
    main()
