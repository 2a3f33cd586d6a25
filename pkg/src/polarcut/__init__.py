"""polarcut: seed-based segmentation of blob-like 3D objects via a spherical
ray graph and an s-t minimum cut."""

__version__ = "0.1.0"

from .errors import (  # noqa: F401
    ConflictingConstraintError,
    ConfigError,
    EngineError,
    InfeasibleConstraintError,
    MaskMismatchError,
    OutOfBoundsError,
    SeedOutOfBoundsError,
    VolumeFormatError,
)
from .volume import (  # noqa: F401
    BinaryMask,
    PhantomSpec,
    SeedSet,
    Volume,
    generate_phantom,
    load_mask,
    load_volume,
    mean_gray_around_seeds,
    sample_trilinear,
    save_mask,
    save_volume,
)
from .spheregraph import (  # noqa: F401
    GraphParams,
    Polyhedron,
    RayConstraint,
    RayGrid,
    build_graph,
    build_icosphere,
    estimate_background,
    estimate_foreground,
    fix_ray,
    nearest_node,
    node_cost,
    sample_rays,
)
from .mincut import CutResult, FlowNetwork, max_flow  # noqa: F401
from .surface import (  # noqa: F401
    Mesh,
    boundary_radii_mm,
    build_mesh,
    extract_boundary,
    mesh_volume_mm3,
    rasterize_mask,
    save_obj,
    slice_contours,
)
from .metrics import CaseStats, Report, dsc, summarize, volume_cm3  # noqa: F401
from .pipeline import SegmentationResult, run_segmentation  # noqa: F401
