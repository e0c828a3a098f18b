"""Programmatic mesh constructions used by the demos, tests, and experiments.

All generators produce consistently oriented meshes whose boundary is a
polygon/polyhedron preserved exactly by uniform midpoint refinement, which
is what the convergence studies rely on.
"""

import numpy as np
from scipy.spatial import Delaunay

from .geometry import SimplicialMesh, _orient_elements


def structured_square(n, lo=-1.0, hi=1.0):
    """Structured triangulation of the square [lo, hi]^2 with n x n cells."""
    xs = np.linspace(lo, hi, n + 1)
    X, Y = np.meshgrid(xs, xs, indexing="ij")
    vertices = np.column_stack([X.ravel(), Y.ravel()])

    def vid(i, j):
        return i * (n + 1) + j

    tris = []
    for i in range(n):
        for j in range(n):
            v00, v10 = vid(i, j), vid(i + 1, j)
            v01, v11 = vid(i, j + 1), vid(i + 1, j + 1)
            tris.append((v00, v10, v11))
            tris.append((v00, v11, v01))
    return SimplicialMesh(vertices, np.array(tris, dtype=np.int64))


def disk(rings, radius=1.0):
    """Polygonal disk built from concentric rings of 6k points.

    Ring k (1 <= k <= rings) carries 6k equally spaced points at radius
    k/rings; bands between consecutive rings are triangulated by an angular
    merge.  The center vertex has index 0 and the boundary is a regular
    6*rings-gon.
    """
    vertices = [np.zeros(2)]
    ring_start = [None, 1]
    for k in range(1, rings + 1):
        count = 6 * k
        t = 2.0 * np.pi * np.arange(count) / count
        r = radius * k / rings
        vertices.extend(np.column_stack([r * np.cos(t), r * np.sin(t)]))
        ring_start.append(ring_start[k] + count)
    vertices = np.asarray(vertices)

    tris = []
    # Innermost fan around the center.
    for i in range(6):
        tris.append((0, 1 + i, 1 + (i + 1) % 6))
    # Angular merge between ring k and ring k+1.
    for k in range(1, rings):
        n_in, n_out = 6 * k, 6 * (k + 1)
        s_in, s_out = ring_start[k], ring_start[k + 1]
        ang_in = 2.0 * np.pi * np.arange(n_in + 1) / n_in
        ang_out = 2.0 * np.pi * np.arange(n_out + 1) / n_out
        i = j = 0
        while i < n_in or j < n_out:
            vi = s_in + i % n_in
            vj = s_out + j % n_out
            advance_outer = j < n_out and (i == n_in or ang_out[j + 1] <= ang_in[i + 1])
            if advance_outer:
                tris.append((vi, vj, s_out + (j + 1) % n_out))
                j += 1
            else:
                tris.append((vi, vj, s_in + (i + 1) % n_in))
                i += 1
    elements = _orient_elements(vertices, np.array(tris, dtype=np.int64), 2)
    return SimplicialMesh(vertices, elements)


def annulus(inner_rings, outer_rings, radius=1.0):
    """Polygonal annulus: the band of ring indices [inner, outer] of a disk.

    Ring k carries 6k points at radius ``k/outer_rings * radius``; both
    boundaries are regular polygons.
    """
    if not 1 <= inner_rings < outer_rings:
        raise ValueError("need 1 <= inner_rings < outer_rings")
    vertices = []
    ring_start = {}
    for k in range(inner_rings, outer_rings + 1):
        ring_start[k] = len(vertices)
        count = 6 * k
        t = 2.0 * np.pi * np.arange(count) / count
        r = radius * k / outer_rings
        vertices.extend(np.column_stack([r * np.cos(t), r * np.sin(t)]))
    vertices = np.asarray(vertices)
    tris = []
    for k in range(inner_rings, outer_rings):
        n_in, n_out = 6 * k, 6 * (k + 1)
        s_in, s_out = ring_start[k], ring_start[k + 1]
        ang_in = 2.0 * np.pi * np.arange(n_in + 1) / n_in
        ang_out = 2.0 * np.pi * np.arange(n_out + 1) / n_out
        i = j = 0
        while i < n_in or j < n_out:
            vi = s_in + i % n_in
            vj = s_out + j % n_out
            advance_outer = j < n_out and (i == n_in or ang_out[j + 1] <= ang_in[i + 1])
            if advance_outer:
                tris.append((vi, vj, s_out + (j + 1) % n_out))
                j += 1
            else:
                tris.append((vi, vj, s_in + (i + 1) % n_in))
                i += 1
    elements = _orient_elements(vertices, np.array(tris, dtype=np.int64), 2)
    return SimplicialMesh(vertices, elements)


def box(nx, ny, nz, lo=(0.0, 0.0, 0.0), hi=(1.0, 1.0, 1.0)):
    """Kuhn (Freudenthal) tetrahedralization of an axis-aligned box.

    Each grid cube is split into 6 tetrahedra along the main diagonal; the
    split is identical in every cube, so faces between cubes conform.
    """
    lo, hi = np.asarray(lo, float), np.asarray(hi, float)
    counts = (nx, ny, nz)
    axes = [np.linspace(lo[a], hi[a], counts[a] + 1) for a in range(3)]
    X, Y, Z = np.meshgrid(*axes, indexing="ij")
    vertices = np.column_stack([X.ravel(), Y.ravel(), Z.ravel()])

    def vid(i, j, k):
        return (i * (ny + 1) + j) * (nz + 1) + k

    # The 6 path-simplices of the unit cube: cumulative steps along each
    # permutation of the axes.
    import itertools

    perms = list(itertools.permutations(range(3)))
    tets = []
    for i in range(nx):
        for j in range(ny):
            for k in range(nz):
                base = np.array([i, j, k])
                for perm in perms:
                    corners = [base.copy()]
                    c = base.copy()
                    for axis in perm:
                        c = c.copy()
                        c[axis] += 1
                        corners.append(c)
                    tets.append([vid(*c) for c in corners])
    elements = _orient_elements(vertices, np.array(tets, dtype=np.int64), 3)
    return SimplicialMesh(vertices, elements)


def ball(radius=1.0):
    """Coarse ball: unit icosahedron vertices plus center, 20 tetrahedra.

    Refine with :func:`framefieldops.geometry.refine_uniform` to build
    hierarchies; the polyhedral boundary is preserved exactly.
    """
    phi = (1.0 + np.sqrt(5.0)) / 2.0
    raw = []
    for a, b in [(1.0, phi)]:
        raw += [
            (0, +a, +b), (0, +a, -b), (0, -a, +b), (0, -a, -b),
            (+a, +b, 0), (+a, -b, 0), (-a, +b, 0), (-a, -b, 0),
            (+b, 0, +a), (-b, 0, +a), (+b, 0, -a), (-b, 0, -a),
        ]
    pts = np.asarray(raw, dtype=float)
    pts *= radius / np.linalg.norm(pts[0])
    # Faces by convex hull of the 12 sphere points.
    hull = Delaunay(pts).convex_hull
    vertices = np.vstack([np.zeros(3), pts])
    tets = np.column_stack([np.zeros(len(hull), dtype=np.int64), hull + 1])
    elements = _orient_elements(vertices, tets, 3)
    return SimplicialMesh(vertices, elements)


def jittered_delaunay(dim, n_side, jitter=0.25, seed=0):
    """Delaunay mesh of a jittered grid in the unit square/cube.

    Each grid coordinate that is strictly interior along its axis is
    perturbed by ``jitter * h`` with a seeded RNG; coordinates pinned to the
    box faces stay put, so the domain is exactly the unit box while the
    regular-grid degeneracies that produce flat Delaunay simplices are
    broken.  Useful for randomized assembly tests.
    """
    rng = np.random.default_rng(seed)
    axes = [np.linspace(0.0, 1.0, n_side + 1)] * dim
    grid = np.meshgrid(*axes, indexing="ij")
    pts = np.column_stack([g.ravel() for g in grid])
    h = 1.0 / n_side
    for a in range(dim):
        free = (pts[:, a] > 1e-12) & (pts[:, a] < 1.0 - 1e-12)
        pts[free, a] += rng.uniform(-jitter * h, jitter * h, free.sum())
    tri = Delaunay(pts)
    elements = _orient_elements(pts, tri.simplices.astype(np.int64), dim)
    p = pts[elements]
    edges = np.swapaxes(p[:, 1:, :] - p[:, :1, :], 1, 2)
    vols = np.abs(np.linalg.det(edges))
    return SimplicialMesh(pts, elements[vols > 1e-9 * h**dim])
