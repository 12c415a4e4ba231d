"""Empirical UCP exponent for eigenvectors of a free or disordered 2D box.

    python scripts/ucp_probe.py --L 21 --modes 5 --delta 0.0333
"""

import argparse

import numpy as np

from doslab import AndersonUniform, Constant, PotentialSpec, hamiltonian, make_box, ucp_probe


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--L", type=float, default=21)
    ap.add_argument("--modes", type=int, default=5)
    ap.add_argument("--delta", type=float, default=1 / 30)
    ap.add_argument("--disorder", type=float, default=0.0, help="Anderson coupling; 0 gives the free Laplacian")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    box = make_box(2, args.L)
    if args.disorder:
        spec = PotentialSpec(AndersonUniform(args.disorder, 0.0, 1.0), args.seed)
    else:
        spec = PotentialSpec(Constant(0.0))
    H = hamiltonian(spec, box)
    w, V = np.linalg.eigh(H.to_dense())
    sites = box.sites()
    theta = np.flatnonzero(sites[:, 0] > 0)
    x0 = box.index_of((int(box.lower[0]) + 1, 0))
    print(f"{'k':>3} {'E':>10} {'|psi_theta|':>12} {'local':>10} {'exponent':>9}")
    for k in range(args.modes):
        rep = ucp_probe(V[:, k], H, w[k], theta, x0, args.delta)
        exp = "n/a" if rep.empirical_exponent is None else f"{rep.empirical_exponent:9.4f}"
        print(f"{k:3d} {w[k]:10.5f} {rep.norm_theta:12.5f} {rep.norm_local:10.3e} {exp}")


if __name__ == "__main__":
    main()
