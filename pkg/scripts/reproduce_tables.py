"""Simulation tables for every preset, written as one CSV per preset.

    python scripts/reproduce_tables.py --reps 50 --threads 4 --outdir results/
"""

import argparse
from pathlib import Path

from lc_commune.cli import print_table, format_csv, run_simulation
from lc_commune.genmodel import PRESET_VARIANTS


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--presets", nargs="+", default=sorted(PRESET_VARIANTS))
    ap.add_argument("--reps", type=int, default=50)
    ap.add_argument("--rounds", type=int, nargs="+", default=[1, 10])
    ap.add_argument("--provable", action="store_true", help="also run the leave-one-out variant")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--outdir", type=Path, default=Path("results"))
    args = ap.parse_args()

    args.outdir.mkdir(parents=True, exist_ok=True)
    for preset in args.presets:
        rows, _ = run_simulation(preset, args.reps, rounds=args.rounds, seed=args.seed,
                                 threads=args.threads, provable=args.provable)
        (args.outdir / f"{preset}.csv").write_text(format_csv(rows), encoding="utf-8")
        print(f"== {preset}")
        print_table(rows)


if __name__ == "__main__":
    main()
