"""Remesh one model at several target angles and print a summary table.

    python3 scripts/theta_sweep.py [mesh.off] --thetas 0 10 20 30 35
"""

import argparse

from angleremesh import shapes
from angleremesh.experiments import theta_sweep
from angleremesh.fileio import load_mesh
from angleremesh.pipeline import RemeshConfig


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("mesh", nargs="?", help="input mesh (default: subdivided unit cube)")
    p.add_argument("--thetas", type=float, nargs="+", default=[0, 10, 20, 30, 35])
    p.add_argument("--delta", type=float, default=0.2, help="bound in percent of the bbox diagonal")
    args = p.parse_args()
    mesh = load_mesh(args.mesh) if args.mesh else shapes.cube()
    rows = theta_sweep(mesh, args.thetas, RemeshConfig(delta=args.delta / 100.0))
    print(f"{'theta':>6} {'#V':>6} {'Q_min':>7} {'Q_avg':>7} {'th_min':>7} {'th_max':>7} "
          f"{'d_H %bb':>8}  termination")
    for r in rows:
        print(f"{r['theta']:6.1f} {r['n_vertices']:6d} {r['q_min']:7.3f} {r['q_avg']:7.3f} "
              f"{r['theta_min']:7.2f} {r['theta_max']:7.2f} {r['hausdorff']:8.4f}  {r['termination']}")


if __name__ == "__main__":
    main()
