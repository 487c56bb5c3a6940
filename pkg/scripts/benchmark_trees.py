"""Wall time of Kruskal and exact-RREF normal-tree construction on random
graphs with b = 3n edges, and the fitted log-log slopes."""
import argparse

from cphdae.validation import tree_scaling


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", default="50,100,200,400")
    ap.add_argument("--repeats", type=int, default=3)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    sizes = [int(s) for s in args.sizes.split(",")]
    res = tree_scaling(sizes, seed=args.seed, repeats=args.repeats)
    print(f"{'n':>6} {'kruskal [ms]':>14} {'rref [ms]':>12}")
    for n, a, b in zip(res["sizes"], res["kruskal"], res["rref"]):
        print(f"{n:6d} {a * 1e3:14.3f} {b * 1e3:12.3f}")
    print(f"slope kruskal {res['slope_kruskal']:.2f}, slope rref {res['slope_rref']:.2f}")


if __name__ == "__main__":
    main()
