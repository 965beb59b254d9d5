#!/usr/bin/env python3
"""
Run every shipped experiment spec and print a one-line summary per run.

Bundles land in <out-root>/<spec name>/, or in each spec's own
output_dir with --keep-output-dirs.
"""

import argparse
import glob
import logging
import os
import sys

from clusterselect.config import configure_logging
from clusterselect.errors import ClusterSelectError
from clusterselect.experiments import load_experiment_spec, run_experiment

logger = logging.getLogger("clusterselect.run_experiments")


def main():
    parser = argparse.ArgumentParser(description="Run the shipped clustering-selection experiments")
    parser.add_argument("specs", nargs="*", help="Spec files (default: experiments/*.json)")
    parser.add_argument("--out-root", default="results", help="Directory that receives one bundle per spec")
    parser.add_argument("--keep-output-dirs", action="store_true", help="Use each spec's own output_dir")
    parser.add_argument("--skip", action="append", default=[], help="Spec name to skip (repeatable)")
    parser.add_argument("--threads", type=int, default=None, help="Worker threads")
    args = parser.parse_args()

    configure_logging()
    here = os.path.dirname(os.path.abspath(__file__))
    specs = args.specs or sorted(glob.glob(os.path.join(here, "experiments", "*.json")))
    if not specs:
        print("No experiment specs found")
        return 1

    failed = 0
    for path in specs:
        try:
            spec = load_experiment_spec(path)
            if spec.name in args.skip:
                print(f"{spec.name}: skipped")
                continue
            out_dir = None if args.keep_output_dirs else os.path.join(args.out_root, spec.name)
            outcome = run_experiment(spec, args.threads, output_dir=out_dir)
        except ClusterSelectError as e:
            failed += 1
            logger.error("%s failed: %s", path, e)
            continue

        first = outcome.anmi_max
        print(
            f"{spec.name}: n={outcome.dataset.n} m={len(outcome.ensemble)} "
            f"consensus ANMI={outcome.consensus_anmi:.3f} | "
            f"anmi_max={first.chosen_config.display_name if first else '--'} | "
            f"best_match={outcome.best_match.chosen_config.display_name} "
            f"(score {outcome.best_match.score:.3f})"
        )
        for row in outcome.sweep:
            print(f"    k*={row.k_star:<3d} winner={row.winner} score={row.score:.3f} runner-up={row.runner_up}")

    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
