"""Cost of the hunt vs the BFS baseline on the infinite line, as CSV on stdout.

    python3 scripts/line_scaling.py --d 10,100,1000,10000
"""

import argparse
import math
import sys

from treasure_hunt.cli import bench_rows, parse_d_list, rows_to_csv


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--d", default="10,100,1000,10000")
    ap.add_argument("--x", default="1")
    ap.add_argument("--skip-baseline", action="store_true")
    args = ap.parse_args()
    ds = parse_d_list(args.d)
    rows = bench_rows("line", ds, x=args.x)
    if not args.skip_baseline:
        rows += bench_rows("line", ds, algo="bfs", pick="min")
    sys.stdout.write(rows_to_csv(rows))
    hunt = [r for r in rows if r["model"] == "unrestricted"]
    if hunt and hunt[0]["ratio"]:
        K = 4 * float(hunt[0]["ratio"])
        for r in hunt:
            d = r["d"]
            limit = K * 2 * d * math.log2(d + 2)
            print(f"# d={d}: cost/(K*2d*log2(d+2)) = {r['cost'] / limit:.3f}, cost/(d^2/4) = {r['cost'] / (d * d / 4):.3f}",
                  file=sys.stderr)


if __name__ == "__main__":
    main()
