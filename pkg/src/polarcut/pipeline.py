"""End-to-end segmentation run shared by the CLI and the HTTP API.

Both frontends call :func:`run_segmentation`, so their results are
byte-identical for identical inputs: sample rays around the primary seed,
estimate the mean gray over all seeds, build and solve the cut graph with
one pinned ray per extra seed, then turn the boundary into mask, mesh and
slice contours.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .errors import InfeasibleConstraintError
from .metrics import dsc as dsc_of
from .metrics import volume_cm3
from .mincut import max_flow
from .spheregraph import (
    RayConstraint,
    build_graph,
    build_icosphere,
    fix_ray,
    nearest_node,
    sample_rays,
)
from .surface import (
    boundary_radii_mm,
    build_mesh,
    extract_boundary,
    rasterize_mask,
    slice_contours,
)
from .volume import check_seeds_inside, mean_gray_around_seeds


@dataclass
class SegmentationResult:
    """Everything a frontend needs to report or export one run."""

    mask: object
    mesh: object
    boundary: np.ndarray
    contours: list
    mean_gray: float
    threshold: float
    pinned: dict            # ray index -> pinned boundary index
    node_count: int
    arc_count: int
    cut_cost: float
    timings: dict           # seconds per phase + "total"
    stats: dict = field(default_factory=dict)
    dsc: float | None = None

    def stats_blob(self):
        """JSON-ready summary of the run."""
        blob = {
            "voxel_count": self.mask.voxel_count,
            "volume_cm3": volume_cm3(self.mask),
            "mean_gray": self.mean_gray,
            "threshold": self.threshold,
            "boundary_radius_mm": {
                "min": float(self.stats["radii_mm"].min()),
                "max": float(self.stats["radii_mm"].max()),
            },
            "cut_cost": self.cut_cost,
            "node_count": self.node_count,
            "arc_count": self.arc_count,
            "pinned_rays": {str(r): int(k) for r, k in sorted(self.pinned.items())},
            "timings_s": {k: round(v, 6) for k, v in self.timings.items()},
        }
        if self.dsc is not None:
            blob["dsc"] = self.dsc
        return blob


def run_segmentation(vol, seeds, params, reference=None):
    """Segment ``vol`` around ``seeds`` with ``params``.

    The mean gray pools every seed (primary and extras), so each added seed
    shifts the cost model as well as pinning its ray.  When ``reference`` is
    given the result carries a Dice score against it.
    """
    check_seeds_inside(vol, seeds)
    delta_r = params.resolved_delta_r(vol)
    timings = {}
    t_start = time.perf_counter()

    t0 = time.perf_counter()
    poly = build_icosphere(params.level)
    grid = sample_rays(vol, seeds.primary, poly, params.samples, delta_r)
    mean_gray = mean_gray_around_seeds(vol, seeds, params.cube_d)
    timings["sampling"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    net = build_graph(grid, mean_gray, params, poly)
    for extra in seeds.extras:
        r, k = nearest_node(grid, extra)
        fix_ray(net, grid, RayConstraint(ray=r, k=k))
    timings["graph_build"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    result = max_flow(net)
    timings["max_flow"] = time.perf_counter() - t0
    if net.fixed_rays and result.cut_capacity >= net.maxw:
        raise InfeasibleConstraintError(
            "pinned rays cannot be joined by a surface within the smoothness cone")
    boundary = extract_boundary(result, grid)

    t0 = time.perf_counter()
    mask = rasterize_mask(grid, boundary, vol.dims, vol.spacing_mm)
    timings["rasterize"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    mesh = build_mesh(grid, boundary, poly)
    contours = slice_contours(mesh, vol.dims, vol.spacing_mm)
    timings["contours"] = time.perf_counter() - t0
    timings["total"] = time.perf_counter() - t_start

    score = None
    if reference is not None:
        score = dsc_of(mask, reference)

    return SegmentationResult(
        mask=mask,
        mesh=mesh,
        boundary=boundary,
        contours=contours,
        mean_gray=float(mean_gray),
        threshold=float(net.threshold),
        pinned=dict(net.fixed_rays),
        node_count=net.node_count,
        arc_count=net.arc_count,
        cut_cost=float(result.cut_capacity),
        timings=timings,
        stats={"radii_mm": boundary_radii_mm(grid, boundary)},
        dsc=score,
    )
