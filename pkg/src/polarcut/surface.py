"""From a solved cut back to geometry: boundary indices, triangle mesh,
voxel mask and per-slice contours.

The source side of the minimum cut is, per ray, a prefix of the sample
nodes; the boundary index is the last node of that prefix and the surface
passes through the node positions at radius ``(b + 1) * delta_r``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EngineError
from .volume import BinaryMask


def extract_boundary(result, grid):
    """Boundary index per ray from a solved network's source side.

    The infinite intra-ray arcs guarantee that the source side restricted to
    one ray is a non-empty prefix; anything else means the solver produced a
    non-minimal cut and is reported as an internal error.
    """
    R, K = grid.nodes.shape
    side = np.asarray(result.source_side[: R * K]).reshape(R, K)
    if not side[:, 0].all():
        raise EngineError("ray base nodes detached from the source", kind="solver_error")
    nb = side.sum(axis=1)
    expected = np.arange(K)[None, :] < nb[:, None]
    if np.any(side != expected):
        raise EngineError("source side is not a per-ray prefix", kind="solver_error")
    return (nb - 1).astype(np.int64)


def boundary_radii_mm(grid, boundary):
    """Surface radius per ray: node ``k`` sits at ``(k + 1) * delta_r``."""
    boundary = np.asarray(boundary, dtype=np.int64)
    return (boundary + 1.0) * grid.delta_r_mm


@dataclass
class Mesh:
    """Triangle mesh in world millimeters."""

    vertices: np.ndarray  # (R, 3)
    faces: np.ndarray     # (F, 3) int, outward orientation

    @property
    def vertex_count(self):
        return len(self.vertices)

    @property
    def face_count(self):
        return len(self.faces)


def build_mesh(grid, boundary, poly):
    """One vertex per ray at the boundary radius, connected like the
    polyhedron's faces."""
    radii = boundary_radii_mm(grid, boundary)
    vertices = grid.seed[None, :] + radii[:, None] * grid.directions
    return Mesh(vertices=vertices, faces=poly.faces.copy())


def mesh_volume_mm3(mesh):
    """Signed enclosed volume via the divergence theorem; positive for
    outward-oriented faces."""
    v0 = mesh.vertices[mesh.faces[:, 0]]
    v1 = mesh.vertices[mesh.faces[:, 1]]
    v2 = mesh.vertices[mesh.faces[:, 2]]
    return float(np.einsum("ij,ij->i", v0, np.cross(v1, v2)).sum() / 6.0)


def save_obj(mesh, path):
    """Wavefront OBJ, vertices then 1-based triangular faces."""
    lines = []
    for v in mesh.vertices:
        lines.append("v %.9g %.9g %.9g" % (v[0], v[1], v[2]))
    for f in mesh.faces:
        lines.append("f %d %d %d" % (f[0] + 1, f[1] + 1, f[2] + 1))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


# --------------------------------------------------------------------------
# rasterization


def rasterize_mask(grid, boundary, dims, spacing_mm, chunk=2048):
    """Voxelize the star-shaped region: a voxel is inside when its center's
    distance to the seed is at most the boundary radius of the nearest ray
    (largest direction cosine; ties take the lower ray index).

    The voxel containing the seed is always set.
    """
    dims = tuple(int(d) for d in dims)
    spacing = np.asarray(spacing_mm, dtype=np.float64)
    radii = boundary_radii_mm(grid, boundary)
    rmax = float(radii.max())
    seed = grid.seed

    lo = np.maximum(np.floor((seed - rmax) / spacing - 0.5).astype(np.int64), 0)
    hi = np.minimum(np.ceil((seed + rmax) / spacing - 0.5).astype(np.int64),
                    np.asarray(dims, dtype=np.int64) - 1)
    bits = np.zeros(dims, dtype=bool)
    if np.all(lo <= hi):
        axes = [((np.arange(lo[a], hi[a] + 1) + 0.5) * spacing[a]) for a in range(3)]
        gx, gy, gz = np.meshgrid(*axes, indexing="ij")
        centers = np.stack([gx, gy, gz], axis=-1).reshape(-1, 3)
        rel = centers - seed[None, :]
        dist = np.sqrt((rel ** 2).sum(axis=1))
        cand = np.flatnonzero(dist <= rmax)
        inside = np.zeros(len(centers), dtype=bool)
        rmin = float(radii.min())
        inside[cand[dist[cand] <= rmin]] = True
        todo = cand[(dist[cand] > rmin)]
        dirs_t = grid.directions.T  # (3, R)
        for start in range(0, len(todo), chunk):
            sel = todo[start:start + chunk]
            # nearest ray by direction cosine; dist > 0 here since rmin >= 0
            scores = rel[sel] @ dirs_t
            ray = np.argmax(scores, axis=1)
            inside[sel] = dist[sel] <= radii[ray]
        sub = inside.reshape(hi[0] - lo[0] + 1, hi[1] - lo[1] + 1, hi[2] - lo[2] + 1)
        bits[lo[0]:hi[0] + 1, lo[1]:hi[1] + 1, lo[2]:hi[2] + 1] = sub
    seed_vox = np.floor(seed / spacing).astype(np.int64)
    seed_vox = np.clip(seed_vox, 0, np.asarray(dims) - 1)
    bits[tuple(seed_vox)] = True
    return BinaryMask(dims=dims, spacing_mm=tuple(float(s) for s in spacing), bits=bits)


# --------------------------------------------------------------------------
# plane contours


def _plane_loops(mesh, zc):
    """Closed intersection loops of the mesh with the plane z == zc, in
    world mm.  Vertices exactly on the plane count as the positive side, so
    every crossing triangle contributes exactly one segment between two of
    its edges and the segment graph stays 2-regular."""
    dz = mesh.vertices[:, 2] - zc
    pos = dz >= 0.0
    f = mesh.faces
    fpos = pos[f]
    crossing = ~(fpos.all(axis=1) | (~fpos).all(axis=1))
    points = {}   # edge key -> point index
    coords = []
    links = {}    # point index -> [point index, point index]

    def edge_point(a, b):
        key = (a, b) if a < b else (b, a)
        idx = points.get(key)
        if idx is None:
            va, vb = mesh.vertices[a], mesh.vertices[b]
            u = dz[a] / (dz[a] - dz[b])
            coords.append(va + u * (vb - va))
            idx = len(coords) - 1
            points[key] = idx
        return idx

    for a, b, c in f[crossing]:
        cut = []
        for u, v in ((a, b), (b, c), (c, a)):
            if pos[u] != pos[v]:
                cut.append(edge_point(u, v))
        if len(cut) != 2:
            raise EngineError("degenerate plane crossing", kind="solver_error")
        links.setdefault(cut[0], []).append(cut[1])
        links.setdefault(cut[1], []).append(cut[0])

    loops = []
    seen = set()
    for start in sorted(links):
        if start in seen:
            continue
        loop = [start]
        seen.add(start)
        prev, cur = None, start
        while True:
            nxt = [q for q in links[cur] if q != prev]
            step = nxt[0] if nxt else links[cur][0]
            if step == start:
                break
            loop.append(step)
            seen.add(step)
            prev, cur = cur, step
        loops.append(np.asarray([coords[i] for i in loop]))
    return loops


def slice_contours(mesh, dims, spacing_mm, z=None):
    """Contours of the mesh on axial slices, as closed polylines in voxel
    coordinates (x, y); the first point is repeated at the end.

    With ``z=None`` every slice the mesh intersects is returned, as a list
    of ``{"slice": z, "polylines": [...]}`` records.
    """
    spacing = np.asarray(spacing_mm, dtype=np.float64)
    sz = float(spacing[2])
    if z is None:
        zmin = float(mesh.vertices[:, 2].min())
        zmax = float(mesh.vertices[:, 2].max())
        z0 = max(int(np.ceil(zmin / sz - 0.5)), 0)
        z1 = min(int(np.floor(zmax / sz - 0.5)), int(dims[2]) - 1)
        zs = range(z0, z1 + 1)
    else:
        zs = [int(z)]
    out = []
    for zi in zs:
        loops = _plane_loops(mesh, (zi + 0.5) * sz)
        polylines = []
        for loop in loops:
            vox = np.empty((len(loop) + 1, 2), dtype=np.float64)
            vox[:-1, 0] = loop[:, 0] / spacing[0] - 0.5
            vox[:-1, 1] = loop[:, 1] / spacing[1] - 0.5
            vox[-1] = vox[0]
            polylines.append([[float(a), float(b)] for a, b in vox])
        if polylines:
            out.append({"slice": int(zi), "polylines": polylines})
    return out
