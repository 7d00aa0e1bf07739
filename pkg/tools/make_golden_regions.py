"""Regenerate the golden region-membership CSVs from the figure configs.

Runs the ``figures`` command on every configs/fig*.ini and stores its
regions.csv as tests/data/golden/<config name>.csv. Only rerun after an
intended change to region geometry or CSV layout, then review the diff.

    python3 tools/make_golden_regions.py
"""

import glob
import os
import shutil
import sys
import tempfile

from ultracarl.cli import run

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))


def main():
    dest = os.path.join(ROOT, "tests", "data", "golden")
    os.makedirs(dest, exist_ok=True)
    for cfg in sorted(glob.glob(os.path.join(ROOT, "configs", "fig*.ini"))):
        name = os.path.splitext(os.path.basename(cfg))[0]
        with tempfile.TemporaryDirectory() as tmp:
            code = run("figures", cfg, out=tmp)
            if code != 0:
                sys.exit(f"{name}: figures exited with {code}")
            shutil.copyfile(os.path.join(tmp, "regions.csv"), os.path.join(dest, f"{name}.csv"))
        print(f"wrote {name}.csv")


if __name__ == "__main__":
    main()
