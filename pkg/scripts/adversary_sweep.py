"""Lower-bound adversary over the standard parameter grid, as CSV on stdout."""

from treasure_hunt.adversary import run_adversary

CASES = [(2, 3), (3, 5), (5, 8), (8, 10)]
ALGOS = ["huntx:1/2", "huntx:1", "huntx:2", "bfs"]


def main():
    print("d,m,x,algo,forced_cost,bound,split,ok")
    for d, m in CASES:
        for x in sorted({m, m * (m - 1) // 2}):
            for algo in ALGOS:
                v = run_adversary(d, m, x, algo)
                print(f"{d},{m},{x},{algo},{v.forced_cost},{v.bound},{v.split_edge is not None},{v.ok}")


if __name__ == "__main__":
    main()
