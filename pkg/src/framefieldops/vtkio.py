"""Legacy ASCII VTK output for scalar point data, and OBJ polylines."""

import numpy as np

_CELL_TYPES = {2: 5, 3: 10}  # VTK triangle / tetrahedron


def write_vtk(path, mesh, point_data=None):
    """Write a mesh with named per-vertex scalar or vector fields.

    Legacy ASCII unstructured-grid format, readable by standard scientific
    viewers.  2D meshes are embedded at z=0.
    """
    point_data = point_data or {}
    pts = mesh.vertices
    if mesh.dim == 2:
        pts = np.column_stack([pts, np.zeros(len(pts))])
    k = mesh.dim + 1
    with open(path, "w") as fh:
        fh.write("# vtk DataFile Version 3.0\nframefieldops output\nASCII\n")
        fh.write("DATASET UNSTRUCTURED_GRID\n")
        fh.write(f"POINTS {len(pts)} double\n")
        for p in pts:
            fh.write(f"{p[0]:.17g} {p[1]:.17g} {p[2]:.17g}\n")
        fh.write(f"CELLS {mesh.num_elements} {mesh.num_elements * (k + 1)}\n")
        for e in mesh.elements:
            fh.write(f"{k} " + " ".join(str(v) for v in e) + "\n")
        fh.write(f"CELL_TYPES {mesh.num_elements}\n")
        fh.write("\n".join([str(_CELL_TYPES[mesh.dim])] * mesh.num_elements) + "\n")
        if point_data:
            fh.write(f"POINT_DATA {len(pts)}\n")
        for name, values in point_data.items():
            values = np.asarray(values, dtype=float)
            if values.ndim == 1:
                fh.write(f"SCALARS {name} double 1\nLOOKUP_TABLE default\n")
                for v in values:
                    fh.write(f"{v:.17g}\n")
            else:
                fh.write(f"VECTORS {name} double\n")
                for row in values:
                    r = np.zeros(3)
                    r[: len(row)] = row
                    fh.write(f"{r[0]:.17g} {r[1]:.17g} {r[2]:.17g}\n")


def write_polyline_obj(path, polylines):
    """Write one or more polylines as an OBJ file with line elements."""
    if isinstance(polylines, np.ndarray):
        polylines = [polylines]
    with open(path, "w") as fh:
        offset = 1
        for pts in polylines:
            pts = np.asarray(pts, dtype=float)
            for p in pts:
                z = p[2] if len(p) > 2 else 0.0
                fh.write(f"v {p[0]:.17g} {p[1]:.17g} {z:.17g}\n")
            idx = " ".join(str(offset + i) for i in range(len(pts)))
            fh.write(f"l {idx}\n")
            offset += len(pts)
