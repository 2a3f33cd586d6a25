"""Command-line frontend: segment volumes, evaluate masks, generate phantoms,
and serve the HTTP API.

Every subcommand prints machine-readable JSON on failure and exits 2 for
input errors, so shell loops can triage batches without parsing tracebacks.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, EngineError
from .metrics import CaseStats, dsc, volume_cm3
from .pipeline import run_segmentation
from .spheregraph import GraphParams
from .surface import save_obj
from .volume import (
    PhantomSpec,
    SeedSet,
    generate_phantom,
    load_mask,
    load_volume,
    save_mask,
    save_volume,
)

_PARAM_KEYS = ("level", "samples", "delta_r_mm", "smoothness", "cube_d")
_OUTPUT_KEYS = ("mask", "mesh", "contours", "stats")


@dataclass
class JobConfig:
    """One segmentation job: input volume, seeds, graph parameters, outputs."""

    input: str
    seed: np.ndarray
    extra_seeds: list = field(default_factory=list)
    params: GraphParams = field(default_factory=GraphParams)
    reference: str | None = None
    outputs: dict = field(default_factory=dict)

    @classmethod
    def from_json(cls, obj):
        if not isinstance(obj, dict):
            raise ConfigError("job config must be a JSON object")
        known = {"input", "seed", "extra_seeds", "reference", "outputs", *_PARAM_KEYS}
        unknown = set(obj) - known
        if unknown:
            raise ConfigError("unknown job config keys: %s" % ", ".join(sorted(unknown)))
        for key in ("input", "seed"):
            if key not in obj:
                raise ConfigError("job config is missing %r" % key)
        seed = np.asarray(obj["seed"], dtype=np.float64)
        if seed.shape != (3,):
            raise ConfigError("seed must be a triple, got %r" % (obj["seed"],))
        extras = []
        for i, e in enumerate(obj.get("extra_seeds", [])):
            p = np.asarray(e, dtype=np.float64)
            if p.shape != (3,):
                raise ConfigError("extra_seeds[%d] must be a triple, got %r" % (i, e))
            extras.append(p)
        outputs = obj.get("outputs", {})
        if not isinstance(outputs, dict) or set(outputs) - set(_OUTPUT_KEYS):
            raise ConfigError("outputs may only contain %s" % ", ".join(_OUTPUT_KEYS))
        params = GraphParams.from_json({k: obj[k] for k in _PARAM_KEYS if k in obj})
        return cls(
            input=str(obj["input"]),
            seed=seed,
            extra_seeds=extras,
            params=params,
            reference=str(obj["reference"]) if obj.get("reference") else None,
            outputs={k: str(v) for k, v in outputs.items()},
        )


def _load_json(path, what):
    try:
        with open(path, "r") as fh:
            return json.load(fh)
    except OSError as exc:
        raise ConfigError("cannot read %s %s: %s" % (what, path, exc))
    except json.JSONDecodeError as exc:
        raise ConfigError("%s %s is not valid JSON: %s" % (what, path, exc))


def _to_mm(point, vol, voxel_coords):
    # voxel indices address voxel centers: index i sits at (i + 0.5) * spacing
    if voxel_coords:
        return (np.asarray(point, dtype=np.float64) + 0.5) * np.asarray(vol.spacing_mm)
    return np.asarray(point, dtype=np.float64)


def cmd_segment(config, voxel_coords=False):
    """Run one segmentation job and write the requested artifacts."""
    vol = load_volume(config.input)
    seeds = SeedSet(
        primary=_to_mm(config.seed, vol, voxel_coords),
        extras=[_to_mm(e, vol, voxel_coords) for e in config.extra_seeds],
    )
    reference = load_mask(config.reference) if config.reference else None
    result = run_segmentation(vol, seeds, config.params, reference=reference)
    if "mask" in config.outputs:
        save_mask(result.mask, config.outputs["mask"])
    if "mesh" in config.outputs:
        save_obj(result.mesh, config.outputs["mesh"])
    if "contours" in config.outputs:
        with open(config.outputs["contours"], "w") as fh:
            json.dump(result.contours, fh)
            fh.write("\n")
    blob = result.stats_blob()
    if "stats" in config.outputs:
        with open(config.outputs["stats"], "w") as fh:
            json.dump(blob, fh, indent=2, sort_keys=True)
            fh.write("\n")
    print(json.dumps(blob, sort_keys=True))
    return 0


def cmd_eval(mask_a, mask_r, csv_path=None):
    """Compare mask ``a`` against reference ``r``; optionally append a CSV row."""
    a = load_mask(mask_a)
    r = load_mask(mask_r)
    score = dsc(a, r)
    print("DSC %.6f" % score)
    print("volume_a_cm3 %.6g" % volume_cm3(a))
    print("volume_r_cm3 %.6g" % volume_cm3(r))
    print("voxels_a %d" % a.voxel_count)
    print("voxels_r %d" % r.voxel_count)
    if csv_path:
        # a single eval has no separate refined run; both run columns carry
        # the evaluated mask so rows stay schema-compatible with full studies
        row = CaseStats(
            case=os.path.splitext(os.path.basename(mask_a))[0],
            vol_manual_cm3=volume_cm3(r),
            vol_oneclick_cm3=volume_cm3(a),
            vol_semi_cm3=volume_cm3(a),
            vox_manual=r.voxel_count,
            vox_oneclick=a.voxel_count,
            vox_semi=a.voxel_count,
            dsc_oneclick=score,
            dsc_semi=score,
        )
        fresh = not os.path.exists(csv_path) or os.path.getsize(csv_path) == 0
        with open(csv_path, "a") as fh:
            if fresh:
                fh.write(CaseStats.CSV_HEADER + "\n")
            fh.write(row.csv_row() + "\n")
    return 0


def cmd_phantom(spec_path, out_prefix):
    """Generate a synthetic volume + ground-truth mask pair."""
    spec = PhantomSpec.from_json(_load_json(spec_path, "phantom spec"))
    vol, mask = generate_phantom(spec)
    save_volume(vol, out_prefix + ".vol")
    save_mask(mask, out_prefix + ".mask")
    print(json.dumps({
        "vol": out_prefix + ".vol",
        "mask": out_prefix + ".mask",
        "dims": list(vol.dims),
        "mask_voxels": mask.voxel_count,
    }, sort_keys=True))
    return 0


def cmd_serve(host, port):
    """Serve the HTTP API (blocks until interrupted)."""
    import uvicorn

    from .api import create_app

    uvicorn.run(create_app(), host=host, port=port, log_level="warning")
    return 0


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="polarcut",
        description="Seed-based 3D segmentation via a spherical ray graph and minimum cut.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_seg = sub.add_parser("segment", help="segment a volume from a job config")
    p_seg.add_argument("--config", required=True, help="job config JSON path")
    p_seg.add_argument(
        "--voxel-coords", action="store_true",
        help="interpret seeds as voxel indices instead of world millimeters",
    )

    p_eval = sub.add_parser("eval", help="score a mask against a reference mask")
    p_eval.add_argument("--a", required=True, help="mask under evaluation")
    p_eval.add_argument("--r", required=True, help="reference mask")
    p_eval.add_argument("--csv", help="append a per-case stats row to this CSV")

    p_ph = sub.add_parser("phantom", help="generate a synthetic volume + mask")
    p_ph.add_argument("--spec", required=True, help="phantom spec JSON path")
    p_ph.add_argument("--out", required=True, help="output path prefix")

    p_srv = sub.add_parser("serve", help="run the HTTP API server")
    p_srv.add_argument("--host", default="127.0.0.1")
    p_srv.add_argument("--port", type=int, default=8000)
    return parser


def main(argv=None):
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "segment":
            config = JobConfig.from_json(_load_json(args.config, "job config"))
            return cmd_segment(config, voxel_coords=args.voxel_coords)
        if args.command == "eval":
            return cmd_eval(args.a, args.r, csv_path=args.csv)
        if args.command == "phantom":
            return cmd_phantom(args.spec, args.out)
        if args.command == "serve":
            return cmd_serve(args.host, args.port)
        raise AssertionError("unreachable: %r" % args.command)
    except EngineError as exc:
        print(json.dumps(exc.to_json(), sort_keys=True))
        return 2
    except Exception as exc:  # pragma: no cover - defensive belt
        print(json.dumps({"error": {"kind": "internal", "message": str(exc)}}, sort_keys=True))
        return 1


if __name__ == "__main__":
    sys.exit(main())
