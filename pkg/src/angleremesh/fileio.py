"""OFF and OBJ readers/writers for triangle meshes."""

from __future__ import annotations

import os
from pathlib import Path

import numpy as np

from .mesh import HalfedgeMesh, MeshError, NonTriangularFacetError


def _format_of(path, fmt):
    if fmt is not None:
        return fmt.lower()
    suffix = Path(path).suffix.lower().lstrip(".")
    if suffix not in ("off", "obj"):
        raise MeshError(f"cannot infer mesh format from {path!r}; use .off or .obj")
    return suffix


def read_off(path):
    """Parse an ASCII OFF file -> (points, faces as lists)."""
    tokens_by_line = []
    with open(path) as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if line:
                tokens_by_line.append(line.split())
    if not tokens_by_line:
        raise MeshError(f"{path}: empty file")
    head = tokens_by_line[0]
    if not head[0].upper().endswith("OFF"):
        raise MeshError(f"{path}: missing OFF header")
    rest = head[1:]
    body = tokens_by_line[1:]
    if not rest:
        rest, body = body[0], body[1:]
    try:
        nv, nf = int(rest[0]), int(rest[1])
    except (IndexError, ValueError) as exc:
        raise MeshError(f"{path}: malformed OFF counts line") from exc
    if len(body) < nv + nf:
        raise MeshError(f"{path}: expected {nv} vertices and {nf} facets, file is truncated")
    points = np.array([[float(x) for x in body[i][:3]] for i in range(nv)], dtype=float).reshape(-1, 3)
    faces = []
    for k in range(nf):
        rec = body[nv + k]
        size = int(rec[0])
        faces.append([int(x) for x in rec[1:1 + size]])
    return points, faces


def read_obj(path):
    points, faces = [], []
    with open(path) as fh:
        for line in fh:
            parts = line.split("#", 1)[0].split()
            if not parts:
                continue
            if parts[0] == "v":
                points.append([float(x) for x in parts[1:4]])
            elif parts[0] == "f":
                idx = []
                for tok in parts[1:]:
                    i = int(tok.split("/")[0])
                    idx.append(i - 1 if i > 0 else len(points) + i)
                faces.append(idx)
    return np.array(points, dtype=float).reshape(-1, 3), faces


def load_mesh(path, format=None) -> HalfedgeMesh:
    """Read an OFF or OBJ triangle mesh.

    Raises
    ------
    FileNotFoundError
    NonTriangularFacetError
        For any facet that is not a triangle (no auto-triangulation).
    NonManifoldError
    """
    fmt = _format_of(path, format)
    points, faces = read_off(path) if fmt == "off" else read_obj(path)
    for i, f in enumerate(faces):
        if len(f) != 3:
            raise NonTriangularFacetError(i, len(f))
    return HalfedgeMesh(points, faces)


def _num(x):
    return repr(float(x))


def save_mesh(mesh, path, format=None, colors=None):
    """Write a mesh (compacted) as OFF or OBJ.

    ``colors`` (n, 3) in [0, 1], per compacted vertex, is emitted as the
    common ``v x y z r g b`` OBJ extension; ignored for OFF.
    """
    fmt = _format_of(path, format)
    if isinstance(mesh, HalfedgeMesh):
        points, faces, _ = mesh.to_arrays()
    else:
        points, faces = mesh
        points = np.asarray(points, dtype=float)
        faces = np.asarray(faces, dtype=np.int64)
    lines = []
    if fmt == "off":
        lines.append("OFF")
        lines.append(f"{len(points)} {len(faces)} 0")
        lines += [" ".join(_num(x) for x in p) for p in points]
        lines += ["3 " + " ".join(str(int(i)) for i in f) for f in faces]
    else:
        for i, p in enumerate(points):
            rec = "v " + " ".join(_num(x) for x in p)
            if colors is not None:
                rec += " " + " ".join(f"{c:.6f}" for c in colors[i])
            lines.append(rec)
        lines += ["f " + " ".join(str(int(i) + 1) for i in f) for f in faces]
    directory = os.path.dirname(os.path.abspath(path))
    if not os.path.isdir(directory):
        raise OSError(f"directory does not exist: {directory}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def save_point_cloud(points, path):
    """Debug dump of sample positions as a vertex-only OBJ."""
    with open(path, "w") as fh:
        for p in np.asarray(points, dtype=float).reshape(-1, 3):
            fh.write("v " + " ".join(_num(x) for x in p) + "\n")
