"""Dirichlet versus periodic counts on the same realizations.

    python scripts/interlacing.py --d 2 --L 15 --seeds 20
"""

import argparse

from doslab import AndersonUniform, PotentialSpec, SpectralWindow, bc_compare


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--d", type=int, default=1)
    ap.add_argument("--L", type=float, default=101)
    ap.add_argument("--E", type=float, default=0.5)
    ap.add_argument("--eps", type=float, default=0.25)
    ap.add_argument("--seeds", type=int, default=10)
    args = ap.parse_args(argv)
    window = SpectralWindow(args.E, args.eps)
    worst = 0.0
    for seed in range(args.seeds):
        cd, cp, rank = bc_compare(PotentialSpec(AndersonUniform(), seed), args.L, window, d=args.d)
        worst = max(worst, abs(cd - cp) / rank)
        print(f"seed {seed:3d}: D={cd:6d}  P={cp:6d}  rank={rank}")
    print(f"max |D - P| / rank = {worst:.3f}")


if __name__ == "__main__":
    main()
