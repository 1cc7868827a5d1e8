"""Write the synthetic test models as OFF files.

    python3 scripts/make_test_meshes.py out_dir
"""

import argparse
import os

from angleremesh import shapes
from angleremesh.fileio import save_mesh

MODELS = {
    "cube": shapes.cube,
    "icosphere": shapes.icosphere,
    "open_cylinder": shapes.open_cylinder,
    "torus": shapes.torus,
    "icosahedron": shapes.icosahedron,
}


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("out_dir")
    args = p.parse_args()
    os.makedirs(args.out_dir, exist_ok=True)
    for name, make in MODELS.items():
        mesh = make()
        path = os.path.join(args.out_dir, f"{name}.off")
        save_mesh(mesh, path)
        print(f"{path}: {mesh.n_vertices} vertices, {mesh.n_faces} facets")


if __name__ == "__main__":
    main()
