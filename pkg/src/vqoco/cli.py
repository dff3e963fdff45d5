"""Command-line entry point: run experiments, compare summaries, validate configs."""

from __future__ import annotations

import argparse
import sys

from .config import ConfigParseError, parse_config
from .runner import compare_table, load_summary_rows, run_experiment, summary_rows_from_results, write_csv

_PLOT_SCRIPT = """\
#!/usr/bin/env python3
\"\"\"Plot time-averaged regret and violation curves from trajectory CSVs.\"\"\"
import glob
import sys

import matplotlib.pyplot as plt
import numpy as np

paths = sys.argv[1:] or sorted(glob.glob("*_T*_seed*.csv"))
fig, (ax_r, ax_v) = plt.subplots(1, 2, figsize=(11, 4))
for path in paths:
    data = np.genfromtxt(path, delimiter=",", names=True)
    t = data["t"]
    ax_r.plot(t, data["regret_cum"] / t, label=path.rsplit("/", 1)[-1][:-4])
    vio_cols = [n for n in data.dtype.names if n.startswith("vio")]
    worst = np.max(np.stack([data[c] for c in vio_cols]), axis=0)
    ax_v.plot(t, worst / t)
ax_r.set_xlabel("t"); ax_r.set_ylabel("regret(t)/t"); ax_r.legend(fontsize=6)
ax_v.set_xlabel("t"); ax_v.set_ylabel("max_k vio_k(t)/t")
fig.tight_layout()
fig.savefig("curves.png", dpi=150)
print("wrote curves.png")
"""


def _load_config(path: str):
    with open(path) as fh:
        return parse_config(fh.read())


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="vqoco", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run every (algorithm, horizon, seed) tuple of a config")
    p_run.add_argument("config")
    p_run.add_argument("--out", default=None, help="output directory (default: config 'output')")
    p_run.add_argument("--jobs", type=int, default=1, help="parallel (horizon, seed) groups")
    p_run.add_argument("--filter", default=None, help="run only this algorithm label")
    p_run.add_argument("--plot-script", action="store_true", help="emit plot.py next to the CSVs")

    p_cmp = sub.add_parser("compare", help="aggregate one or more summary.csv files")
    p_cmp.add_argument("summaries", nargs="+")

    p_val = sub.add_parser("validate", help="check a config and list every error")
    p_val.add_argument("config")

    args = parser.parse_args(argv)

    if args.command == "validate":
        try:
            _load_config(args.config)
        except ConfigParseError as exc:
            for line in exc.errors:
                print(line, file=sys.stderr)
            return 1
        except OSError as exc:
            print(exc, file=sys.stderr)
            return 1
        print("config ok")
        return 0

    if args.command == "compare":
        rows = []
        try:
            for path in args.summaries:
                rows.extend(load_summary_rows(path))
        except OSError as exc:
            print(exc, file=sys.stderr)
            return 1
        print(compare_table(rows))
        return 0

    # run
    try:
        cfg = _load_config(args.config)
    except ConfigParseError as exc:
        for line in exc.errors:
            print(line, file=sys.stderr)
        return 1
    except OSError as exc:
        print(exc, file=sys.stderr)
        return 1

    outdir = args.out if args.out is not None else cfg.output
    output = run_experiment(cfg, jobs=args.jobs, algo_filter=args.filter)
    paths = write_csv(output.results, outdir)
    if args.plot_script:
        script_path = f"{outdir}/plot.py"
        with open(script_path, "w", newline="") as fh:
            fh.write(_PLOT_SCRIPT)
        paths.append(script_path)
    for path in paths:
        print(path)
    if output.results:
        print()
        print(compare_table(summary_rows_from_results(output.results)))
    for failure in output.failures:
        print(f"FAILED {failure.key}: {failure.error}", file=sys.stderr)
    return 2 if output.failures else 0


if __name__ == "__main__":
    raise SystemExit(main())
