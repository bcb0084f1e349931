"""One-shot figure rendering from a run directory."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .io import RunDataError
from .plots import ALL_PLOTS

DEFAULT_NAMES = {
    "model": "model.png",
    "density-map": "density_map.png",
    "probabilities": "probabilities.png",
    "sigma": "sigma_min.png",
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="mctdh-figures", description="Render figures from an openmctdh run directory"
    )
    parser.add_argument("plot", choices=[*ALL_PLOTS, "all"], help="which figure to render")
    parser.add_argument("--run-dir", required=True, help="directory holding the CSV outputs")
    parser.add_argument("--out", help="output image path (single plot) or directory (all)")
    parser.add_argument("--dpi", type=int, default=150)
    args = parser.parse_args(argv)

    try:
        if args.plot == "all":
            out_dir = Path(args.out) if args.out else Path(args.run_dir)
            out_dir.mkdir(parents=True, exist_ok=True)
            for name, fn in ALL_PLOTS.items():
                path = fn(args.run_dir, out_dir / DEFAULT_NAMES[name], dpi=args.dpi)
                print(f"wrote {path}")
        else:
            out = args.out or str(Path(args.run_dir) / DEFAULT_NAMES[args.plot])
            path = ALL_PLOTS[args.plot](args.run_dir, out, dpi=args.dpi)
            print(f"wrote {path}")
    except RunDataError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
