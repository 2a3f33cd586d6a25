"""Spherical ray grid around a seed point and its cut graph.

Rays leave the seed along the vertex directions of a subdivided icosahedron.
Each ray carries equally spaced sample nodes; the segmentation boundary is a
choice of one boundary index per ray.  The graph encodes:

* a per-node inclusion weight -- negative pulls the node into the object,
  positive pushes it out -- from whether the sampled intensity sits closer
  to the object's estimated gray level or to the background's, with the
  pooled seed mean arbitrating which side of the contrast the object is on;
* hard monotonicity along each ray (a node implies everything below it);
* hard smoothness across neighboring rays (boundary indices of adjacent
  rays may differ by at most ``smoothness``).

A minimum s-t cut on this network is exactly the minimum-cost feasible
boundary surface.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ConflictingConstraintError, SeedOutOfBoundsError
from .mincut import FlowNetwork
from .volume import _sample_trilinear_many, sample_trilinear


# --------------------------------------------------------------------------
# icosphere


@dataclass
class Polyhedron:
    """Unit-sphere triangulation: ray directions plus adjacency."""

    level: int
    directions: np.ndarray  # (R, 3) unit vectors
    edges: np.ndarray       # (E, 2) vertex index pairs, i < j, lexicographic
    faces: np.ndarray       # (F, 3) vertex triples, outward orientation

    @property
    def ray_count(self):
        return len(self.directions)


def _icosahedron():
    phi = (1.0 + np.sqrt(5.0)) / 2.0
    verts = np.array([
        [-1, phi, 0], [1, phi, 0], [-1, -phi, 0], [1, -phi, 0],
        [0, -1, phi], [0, 1, phi], [0, -1, -phi], [0, 1, -phi],
        [phi, 0, -1], [phi, 0, 1], [-phi, 0, -1], [-phi, 0, 1],
    ], dtype=np.float64)
    verts /= np.linalg.norm(verts, axis=1, keepdims=True)
    faces = np.array([
        [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
        [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
        [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
        [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
    ], dtype=np.int64)
    return verts, faces


def build_icosphere(level):
    """Subdivide an icosahedron ``level`` times; 10*4^level + 2 vertices."""
    level = int(level)
    if level < 0:
        raise ConfigError("subdivision level must be >= 0, got %d" % level)
    if level > 6:
        raise ConfigError("subdivision level %d is unreasonably fine (max 6)" % level)
    verts, faces = _icosahedron()
    for _ in range(level):
        verts_list = [v for v in verts]
        midpoint = {}

        def mid(a, b):
            key = (a, b) if a < b else (b, a)
            idx = midpoint.get(key)
            if idx is None:
                m = verts_list[a] + verts_list[b]
                m /= np.linalg.norm(m)
                idx = len(verts_list)
                verts_list.append(m)
                midpoint[key] = idx
            return idx

        new_faces = []
        for a, b, c in faces:
            ab, bc, ca = mid(a, b), mid(b, c), mid(c, a)
            new_faces.extend([(a, ab, ca), (ab, b, bc), (ca, bc, c), (ab, bc, ca)])
        verts = np.array(verts_list)
        faces = np.array(new_faces, dtype=np.int64)
    pairs = np.concatenate([faces[:, [0, 1]], faces[:, [1, 2]], faces[:, [2, 0]]])
    pairs.sort(axis=1)
    edges = np.unique(pairs, axis=0)
    return Polyhedron(level=level, directions=verts, edges=edges, faces=faces)


# --------------------------------------------------------------------------
# ray sampling


@dataclass
class RayGrid:
    """Intensities sampled along rays: node (r, k) sits at
    ``seed + (k+1) * delta_r_mm * directions[r]``."""

    seed: np.ndarray        # (3,) world mm
    delta_r_mm: float
    directions: np.ndarray  # (R, 3)
    positions: np.ndarray   # (R, K, 3) nominal world positions
    nodes: np.ndarray       # (R, K) sampled intensities, float64
    clamped: np.ndarray     # (R, K) True where the nominal position left the volume

    @property
    def ray_count(self):
        return self.nodes.shape[0]

    @property
    def sample_count(self):
        return self.nodes.shape[1]


def sample_rays(vol, seed, poly, samples, delta_r_mm):
    """Sample ``samples`` nodes along every ray of ``poly`` starting at
    ``seed`` (strictly inside the volume).

    Positions beyond the volume box keep the intensity of the last in-bounds
    sample on their ray (or the seed's intensity if the first sample is
    already outside) and are flagged in ``clamped``.
    """
    seed = np.asarray(seed, dtype=np.float64).reshape(3)
    samples = int(samples)
    if samples < 1:
        raise ConfigError("need at least one sample per ray, got %d" % samples)
    if not (delta_r_mm > 0):
        raise ConfigError("delta_r_mm must be positive, got %r" % delta_r_mm)
    if not vol.contains(seed, strict=True):
        raise SeedOutOfBoundsError(
            "seed %s outside volume extent %s" % (list(seed), list(vol.extent_mm))
        )
    dirs = poly.directions
    radii = (np.arange(1, samples + 1, dtype=np.float64)) * delta_r_mm
    positions = seed[None, None, :] + radii[None, :, None] * dirs[:, None, :]
    ext = np.asarray(vol.extent_mm)
    in_bounds = np.all((positions >= 0.0) & (positions <= ext), axis=2)
    vals = _sample_trilinear_many(vol, positions.reshape(-1, 3)).reshape(len(dirs), samples)
    # a ray leaves the box once and never returns; freeze values at the exit
    clamped = np.maximum.accumulate(~in_bounds, axis=1)
    nvalid = samples - clamped.sum(axis=1)
    take = np.minimum(np.arange(samples)[None, :], np.maximum(nvalid - 1, 0)[:, None])
    vals = np.take_along_axis(vals, take, axis=1)
    if np.any(nvalid == 0):
        vals[nvalid == 0, :] = sample_trilinear(vol, seed)
    return RayGrid(seed=seed, delta_r_mm=float(delta_r_mm), directions=dirs,
                   positions=positions, nodes=vals, clamped=clamped)


# --------------------------------------------------------------------------
# costs and weights


def node_cost(intensity, mean_gray):
    """Absolute deviation from the mean gray; symmetric in over/undershoot."""
    return np.abs(np.asarray(intensity, dtype=np.float64) - float(mean_gray))


def estimate_background(grid):
    """Background intensity estimate: median over the outermost quarter of
    samples on every ray.

    Rays must extend well past the object, so their far ends sample the
    surroundings; the median shrugs off the few rays still inside.  Samples
    clamped at the volume border repeat their last in-bounds value, which is
    surroundings as well.
    """
    K = grid.sample_count
    return float(np.median(grid.nodes[:, (3 * K) // 4:]))


def estimate_foreground(grid):
    """Object intensity estimate: median over the innermost eighth of the
    samples (at least one per ray), i.e. the immediate surroundings of the
    seed, which sit inside the object whenever the sampled radius extends a
    few times past it."""
    K = grid.sample_count
    return float(np.median(grid.nodes[:, : max(1, K // 8)]))


@dataclass
class GraphParams:
    """Knobs of the ray graph; JSON keys match the field names."""

    level: int = 4
    samples: int = 60
    delta_r_mm: float | None = None  # None: resolved to the volume's min spacing
    smoothness: int = 2
    cube_d: int = 3

    def __post_init__(self):
        self.level = int(self.level)
        self.samples = int(self.samples)
        self.smoothness = int(self.smoothness)
        self.cube_d = int(self.cube_d)
        if self.level < 0 or self.level > 6:
            raise ConfigError("level must be in 0..6, got %d" % self.level)
        if self.samples < 2:
            raise ConfigError("samples must be >= 2, got %d" % self.samples)
        if self.delta_r_mm is not None and not (float(self.delta_r_mm) > 0):
            raise ConfigError("delta_r_mm must be positive, got %r" % self.delta_r_mm)
        if not (0 <= self.smoothness <= self.samples - 1):
            raise ConfigError("smoothness must be in 0..samples-1, got %d" % self.smoothness)
        if self.cube_d < 1:
            raise ConfigError("cube_d must be >= 1 voxel, got %d" % self.cube_d)

    def to_json(self):
        return {
            "level": self.level,
            "samples": self.samples,
            "delta_r_mm": self.delta_r_mm,
            "smoothness": self.smoothness,
            "cube_d": self.cube_d,
        }

    @classmethod
    def from_json(cls, obj):
        known = {"level", "samples", "delta_r_mm", "smoothness", "cube_d"}
        unknown = set(obj) - known
        if unknown:
            raise ConfigError("unknown graph parameter keys: %s" % ", ".join(sorted(unknown)))
        return cls(**obj)

    def resolved_delta_r(self, vol):
        if self.delta_r_mm is not None:
            return float(self.delta_r_mm)
        return float(min(vol.spacing_mm))


def build_graph(grid, mean_gray, params, poly=None):
    """Assemble the cut network for a sampled ray grid.

    Node ``(r, k)`` has id ``r * K + k``; ``s`` and ``t`` follow.  Per node
    there is exactly one terminal arc: weight ``w(r, 0) = -MAXW`` anchors
    every ray base to the source, and for ``k >= 1``

        ``w(r, k) = (d(r, k) + d(r, k-1)) / 2``
        ``d(r, k) = |I(r, k) - foreground| - |I(r, k) - background)|``

    i.e. each sample votes by how much closer it sits to the object's
    intensity level than to the surroundings', both estimated from the ray
    samples themselves (innermost eighth vs outermost quarter).  The sign
    flips where the intensity crosses the midpoint of the two levels,
    whichever of them is brighter.  ``mean_gray`` -- the cube average over
    every placed seed -- arbitrates when the two estimates contradict the
    seeds: if it lies on the opposite side of the background level from the
    inner-sample estimate, the seeds win and replace the foreground level.
    Negative weight becomes an ``s -> node`` arc of capacity ``-w``,
    non-negative weight a ``node -> t`` arc of capacity ``w``.  Averaging
    each sample with its inner neighbor centers the recovered boundary on
    the crossing instead of systematically undershooting by one sample.
    Infinite arcs (capacity ``MAXW`` = 1 + total finite capacity) enforce
    per-ray monotonicity and the adjacent-ray cone:
    ``(r, k) -> (r', max(0, k - smoothness))`` for every polyhedron edge,
    both directions.  A constant volume yields ``w(r, k) = 0`` for all
    ``k >= 1``, so only the base nodes keep arcs from ``s``.
    """
    if poly is None:
        poly = _poly_for_grid(grid)
    R, K = grid.nodes.shape
    delta = int(params.smoothness)
    background = estimate_background(grid)
    foreground = estimate_foreground(grid)
    if (float(mean_gray) - background) * (foreground - background) < 0:
        foreground = float(mean_gray)
    d = node_cost(grid.nodes, foreground) - node_cost(grid.nodes, background)
    w = np.zeros((R, K), dtype=np.float64)
    if K > 1:
        w[:, 1:] = 0.5 * (d[:, 1:] + d[:, :-1])
    maxw = 1.0 + np.abs(w[:, 1:]).sum()
    w[:, 0] = -maxw

    ids = np.arange(R * K, dtype=np.int64).reshape(R, K)
    s = R * K
    t = R * K + 1

    neg = w < 0
    term_tails = np.where(neg, s, ids).ravel()
    term_heads = np.where(neg, ids, t).ravel()
    term_caps = np.abs(w).ravel()

    intra_tails = ids[:, 1:].ravel()
    intra_heads = ids[:, :-1].ravel()

    ea = poly.edges[:, 0]
    eb = poly.edges[:, 1]
    karr = np.arange(K, dtype=np.int64)
    ktgt = np.maximum(karr - delta, 0)
    inter_tails = np.concatenate([
        (ea[:, None] * K + karr[None, :]).ravel(),
        (eb[:, None] * K + karr[None, :]).ravel(),
    ])
    inter_heads = np.concatenate([
        (eb[:, None] * K + ktgt[None, :]).ravel(),
        (ea[:, None] * K + ktgt[None, :]).ravel(),
    ])

    tails = np.concatenate([term_tails, intra_tails, inter_tails])
    heads = np.concatenate([term_heads, intra_heads, inter_heads])
    caps = np.concatenate([
        term_caps,
        np.full(len(intra_tails), maxw),
        np.full(len(inter_tails), maxw),
    ])
    net = FlowNetwork(R * K, tails, heads, caps, s=s, t=t, maxw=float(maxw))
    net.threshold = 0.5 * (foreground + background)
    net.foreground = foreground
    net.background = background
    return net


def _poly_for_grid(grid):
    """Rebuild the polyhedron matching a grid's ray count."""
    R = grid.ray_count
    level = 0
    while 10 * 4 ** level + 2 < R:
        level += 1
    if 10 * 4 ** level + 2 != R:
        raise ConfigError("ray count %d is not an icosphere vertex count" % R)
    return build_icosphere(level)


# --------------------------------------------------------------------------
# constraints


@dataclass
class RayConstraint:
    """Pin ray ``ray``'s boundary exactly at sample index ``k``."""

    ray: int
    k: int


def nearest_node(grid, p):
    """Grid node (r, k) closest to world point ``p``; ties resolve to the
    lower ray index, then the lower sample index."""
    p = np.asarray(p, dtype=np.float64).reshape(3)
    d2 = ((grid.positions - p[None, None, :]) ** 2).sum(axis=2)
    flat = int(np.argmin(d2))  # first minimum in C order: lowest r, then k
    return flat // grid.sample_count, flat % grid.sample_count


def fix_ray(net, grid, constraint):
    """Clamp a ray's boundary to ``constraint.k``: every node at or below it
    binds to the source with maximum weight, every node above it to the sink.

    Repeating an identical constraint is a no-op; a different index for an
    already-fixed ray raises :class:`ConflictingConstraintError`.
    """
    r = int(constraint.ray)
    k = int(constraint.k)
    R, K = grid.nodes.shape
    if not (0 <= r < R):
        raise ConfigError("ray %d out of range 0..%d" % (r, R - 1))
    if not (0 <= k < K):
        raise ConfigError("boundary index %d out of range 0..%d" % (k, K - 1))
    if net.maxw is None:
        raise ConfigError("network was not produced by build_graph")
    seen = net.fixed_rays.get(r)
    if seen is not None:
        if seen == k:
            return net
        raise ConflictingConstraintError(
            "ray %d already fixed at %d, cannot re-fix at %d" % (r, seen, k)
        )
    base = r * K
    below = np.arange(base, base + k + 1, dtype=np.int64)
    above = np.arange(base + k + 1, base + K, dtype=np.int64)
    tails = np.concatenate([np.full(len(below), net.s, dtype=np.int64), above])
    heads = np.concatenate([below, np.full(len(above), net.t, dtype=np.int64)])
    caps = np.full(len(tails), net.maxw, dtype=np.float64)
    net.add_arcs(tails, heads, caps)
    net.fixed_rays[r] = k
    return net
