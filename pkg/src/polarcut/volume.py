"""Scalar volumes, binary masks, seed points and synthetic phantoms.

Conventions used throughout the package:

* A volume has ``dims = (nx, ny, nz)`` voxels with ``spacing_mm =
  (sx, sy, sz)``.  Arrays are indexed ``data[x, y, z]``.
* World coordinates are in millimetres.  The center of voxel ``(i, j, k)``
  sits at ``((i + 0.5) * sx, (j + 0.5) * sy, (k + 0.5) * sz)``, so the
  volume occupies the box ``[0, nx * sx] x [0, ny * sy] x [0, nz * sz]``.
* On disk a volume is ``<name>.vol`` -- raw little-endian float32, x
  varying fastest, z slowest -- next to a JSON sidecar ``<name>.vol.json``
  holding ``{"dims": [...], "spacing_mm": [...], "dtype": "f32"}``.
  Masks use ``<name>.mask`` / ``<name>.mask.json`` with ``"dtype": "u8"``
  and values restricted to 0/1.
"""

from __future__ import annotations

import json
import math
import os
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ConfigError,
    OutOfBoundsError,
    SeedOutOfBoundsError,
    VolumeFormatError,
)


# --------------------------------------------------------------------------
# data containers


@dataclass
class Volume:
    """A 3D scalar image."""

    dims: tuple
    spacing_mm: tuple
    data: np.ndarray  # float32, shape dims, indexed [x, y, z]

    def __post_init__(self):
        self.dims = tuple(int(d) for d in self.dims)
        self.spacing_mm = tuple(float(s) for s in self.spacing_mm)
        if len(self.dims) != 3 or any(d < 1 for d in self.dims):
            raise VolumeFormatError("dims must be three positive integers, got %r" % (self.dims,))
        if len(self.spacing_mm) != 3 or any(not (s > 0) for s in self.spacing_mm):
            raise VolumeFormatError("spacing_mm must be three positive floats, got %r" % (self.spacing_mm,))
        data = np.asarray(self.data, dtype=np.float32)
        if data.shape != self.dims:
            if data.size == int(np.prod(self.dims)):
                data = data.reshape(self.dims, order="F")
            else:
                raise VolumeFormatError(
                    "data has %d scalars, dims %r require %d"
                    % (data.size, self.dims, int(np.prod(self.dims)))
                )
        self.data = data
        lo = float(data.min())
        hi = float(data.max())
        self.intensity_range = (lo, hi)

    @property
    def extent_mm(self):
        """World-space size of the volume box per axis."""
        return tuple(d * s for d, s in zip(self.dims, self.spacing_mm))

    def contains(self, p, strict=False):
        """True if world point ``p`` lies inside the volume box."""
        p = np.asarray(p, dtype=np.float64)
        ext = self.extent_mm
        if strict:
            return bool(np.all(p > 0) and np.all(p < ext))
        return bool(np.all(p >= 0) and np.all(p <= ext))

    def voxel_of(self, p):
        """Index of the voxel containing world point ``p`` (clipped to the grid)."""
        p = np.asarray(p, dtype=np.float64)
        idx = np.floor(p / np.asarray(self.spacing_mm)).astype(np.int64)
        return tuple(int(np.clip(idx[a], 0, self.dims[a] - 1)) for a in range(3))


@dataclass
class BinaryMask:
    """A 0/1 labeling on the same grid layout as :class:`Volume`."""

    dims: tuple
    spacing_mm: tuple
    bits: np.ndarray  # bool, shape dims

    def __post_init__(self):
        self.dims = tuple(int(d) for d in self.dims)
        self.spacing_mm = tuple(float(s) for s in self.spacing_mm)
        if len(self.dims) != 3 or any(d < 1 for d in self.dims):
            raise VolumeFormatError("dims must be three positive integers, got %r" % (self.dims,))
        if any(not (s > 0) for s in self.spacing_mm):
            raise VolumeFormatError("spacing_mm must be positive, got %r" % (self.spacing_mm,))
        bits = np.asarray(self.bits)
        if bits.dtype != np.bool_:
            vals = np.unique(bits)
            if not np.all(np.isin(vals, (0, 1))):
                raise VolumeFormatError("mask values must be 0 or 1, found %r" % (vals[:8],))
            bits = bits.astype(bool)
        if bits.shape != self.dims:
            if bits.size == int(np.prod(self.dims)):
                bits = bits.reshape(self.dims, order="F")
            else:
                raise VolumeFormatError(
                    "mask has %d voxels, dims %r require %d"
                    % (bits.size, self.dims, int(np.prod(self.dims)))
                )
        self.bits = bits

    @property
    def voxel_count(self):
        return int(self.bits.sum())

    @property
    def voxel_volume_mm3(self):
        sx, sy, sz = self.spacing_mm
        return sx * sy * sz


@dataclass
class SeedSet:
    """One mandatory primary seed plus optional extra seeds, world mm."""

    primary: np.ndarray
    extras: list = field(default_factory=list)

    def __post_init__(self):
        self.primary = np.asarray(self.primary, dtype=np.float64).reshape(3)
        self.extras = [np.asarray(e, dtype=np.float64).reshape(3) for e in self.extras]

    @property
    def count(self):
        return 1 + len(self.extras)

    def points(self):
        return [self.primary] + list(self.extras)


def check_seeds_inside(vol, seeds):
    """Raise :class:`SeedOutOfBoundsError` unless the primary seed is strictly
    inside the volume and every extra seed is inside the volume box."""
    if not vol.contains(seeds.primary, strict=True):
        raise SeedOutOfBoundsError(
            "primary seed %s outside volume extent %s" % (list(seeds.primary), list(vol.extent_mm))
        )
    for i, e in enumerate(seeds.extras):
        if not vol.contains(e):
            raise SeedOutOfBoundsError(
                "extra seed %d at %s outside volume extent %s" % (i, list(e), list(vol.extent_mm))
            )


# --------------------------------------------------------------------------
# native .vol / .mask I/O


def _read_sidecar(path):
    sidecar = path + ".json"
    if not os.path.exists(sidecar):
        raise VolumeFormatError("missing sidecar %s" % sidecar)
    try:
        with open(sidecar, "r") as fh:
            meta = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise VolumeFormatError("unreadable sidecar %s: %s" % (sidecar, exc))
    for key in ("dims", "spacing_mm", "dtype"):
        if key not in meta:
            raise VolumeFormatError("sidecar %s lacks key %r" % (sidecar, key))
    return meta


def _read_payload(path, meta, np_dtype, item_size):
    dims = [int(d) for d in meta["dims"]]
    want = dims[0] * dims[1] * dims[2] * item_size
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) != want:
        raise VolumeFormatError(
            "payload length mismatch in %s: %d bytes, sidecar dims imply %d" % (path, len(raw), want)
        )
    flat = np.frombuffer(raw, dtype=np_dtype)
    return flat.reshape(dims, order="F"), dims, [float(s) for s in meta["spacing_mm"]]


def save_volume(vol, path):
    """Write ``<path>`` (raw f32, x fastest) and ``<path>.json``."""
    with open(path, "wb") as fh:
        fh.write(np.ascontiguousarray(vol.data.ravel(order="F"), dtype="<f4").tobytes())
    with open(path + ".json", "w") as fh:
        json.dump({"dims": list(vol.dims), "spacing_mm": list(vol.spacing_mm), "dtype": "f32"}, fh)
        fh.write("\n")


def save_mask(mask, path):
    """Write ``<path>`` (raw u8, x fastest) and ``<path>.json``."""
    with open(path, "wb") as fh:
        fh.write(np.ascontiguousarray(mask.bits.ravel(order="F").astype(np.uint8)).tobytes())
    with open(path + ".json", "w") as fh:
        json.dump({"dims": list(mask.dims), "spacing_mm": list(mask.spacing_mm), "dtype": "u8"}, fh)
        fh.write("\n")


def load_mask(path):
    meta = _read_sidecar(path)
    if meta["dtype"] != "u8":
        raise VolumeFormatError("mask sidecar %s.json declares dtype %r, expected 'u8'" % (path, meta["dtype"]))
    arr, dims, spacing = _read_payload(path, meta, np.uint8, 1)
    bad = (arr > 1)
    if bad.any():
        raise VolumeFormatError("mask %s contains values other than 0/1" % path)
    return BinaryMask(dims, spacing, arr.astype(bool))


def load_volume(path, format=None):
    """Load a volume.  ``format`` is ``"native"`` or ``"nifti1"``; when omitted
    it is inferred from the extension (``.nii`` selects NIfTI-1)."""
    if format is None:
        format = "nifti1" if path.lower().endswith(".nii") else "native"
    if format == "nifti1":
        return _load_nifti1(path)
    if format != "native":
        raise VolumeFormatError("unknown volume format %r" % format)
    meta = _read_sidecar(path)
    if meta["dtype"] != "f32":
        raise VolumeFormatError("volume sidecar %s.json declares dtype %r, expected 'f32'" % (path, meta["dtype"]))
    arr, dims, spacing = _read_payload(path, meta, "<f4", 4)
    return Volume(dims, spacing, arr.astype(np.float32))


# --------------------------------------------------------------------------
# NIfTI-1 reader (single file, uncompressed, scalar datatypes only)

_NIFTI_DTYPES = {2: "u1", 4: "i2", 16: "f4"}  # uint8, int16, float32


def _load_nifti1(path):
    try:
        with open(path, "rb") as fh:
            blob = fh.read()
    except OSError as exc:
        raise VolumeFormatError("cannot read %s: %s" % (path, exc))
    if len(blob) < 352:
        raise VolumeFormatError("%s too short for a NIfTI-1 header" % path)
    hdr = blob[:348]
    endian = "<"
    (sizeof_hdr,) = struct.unpack("<i", hdr[0:4])
    if sizeof_hdr != 348:
        (sizeof_hdr,) = struct.unpack(">i", hdr[0:4])
        if sizeof_hdr != 348:
            raise VolumeFormatError("%s is not NIfTI-1 (header size field is wrong)" % path)
        endian = ">"
    magic = hdr[344:348]
    if magic[:3] != b"n+1":
        if magic[:3] == b"ni1":
            raise VolumeFormatError("%s is a two-file NIfTI pair; only single-file n+1 is supported" % path)
        raise VolumeFormatError("%s has no NIfTI-1 magic" % path)
    dim = struct.unpack(endian + "8h", hdr[40:56])
    if dim[0] < 3:
        raise VolumeFormatError("%s has %d dims, need a 3D volume" % (path, dim[0]))
    if any(dim[a] > 1 for a in range(4, dim[0] + 1)):
        raise VolumeFormatError("%s has non-singleton dims beyond the third; scalar volumes only" % path)
    dims = [int(dim[1]), int(dim[2]), int(dim[3])]
    if any(d < 1 for d in dims):
        raise VolumeFormatError("%s declares non-positive dims %r" % (path, dims))
    (datatype,) = struct.unpack(endian + "h", hdr[70:72])
    if datatype not in _NIFTI_DTYPES:
        raise VolumeFormatError("%s datatype code %d unsupported (need uint8/int16/float32)" % (path, datatype))
    pixdim = struct.unpack(endian + "8f", hdr[76:108])
    spacing = [float(pixdim[1]), float(pixdim[2]), float(pixdim[3])]
    if any(not (s > 0) for s in spacing):
        raise VolumeFormatError("%s has non-positive pixdim %r" % (path, spacing))
    (vox_offset,) = struct.unpack(endian + "f", hdr[108:112])
    offset = int(vox_offset)
    if offset < 348:
        offset = 352
    np_dtype = np.dtype(endian + _NIFTI_DTYPES[datatype])
    count = dims[0] * dims[1] * dims[2]
    need = offset + count * np_dtype.itemsize
    if len(blob) < need:
        raise VolumeFormatError("%s truncated: %d bytes, need %d" % (path, len(blob), need))
    flat = np.frombuffer(blob, dtype=np_dtype, count=count, offset=offset)
    data = flat.reshape(dims, order="F").astype(np.float32)
    return Volume(dims, spacing, data)


# --------------------------------------------------------------------------
# interpolation


def _sample_trilinear_many(vol, pts):
    """Trilinear interpolation at an (N, 3) array of world points, float64 out.

    Coordinates are clamped to the voxel-center range per axis, so callers
    must do their own bounds policing; see :func:`sample_trilinear`.
    """
    pts = np.asarray(pts, dtype=np.float64).reshape(-1, 3)
    data = vol.data
    out = np.empty(len(pts), dtype=np.float64)
    u = pts / np.asarray(vol.spacing_mm, dtype=np.float64) - 0.5
    idx0 = []
    frac = []
    for a in range(3):
        n = vol.dims[a]
        ua = np.clip(u[:, a], 0.0, n - 1.0)
        i0 = np.clip(np.floor(ua).astype(np.int64), 0, max(n - 2, 0))
        idx0.append(i0)
        frac.append(ua - i0)
    x0, y0, z0 = idx0
    fx, fy, fz = frac
    x1 = np.minimum(x0 + 1, vol.dims[0] - 1)
    y1 = np.minimum(y0 + 1, vol.dims[1] - 1)
    z1 = np.minimum(z0 + 1, vol.dims[2] - 1)
    c000 = data[x0, y0, z0].astype(np.float64)
    c100 = data[x1, y0, z0].astype(np.float64)
    c010 = data[x0, y1, z0].astype(np.float64)
    c110 = data[x1, y1, z0].astype(np.float64)
    c001 = data[x0, y0, z1].astype(np.float64)
    c101 = data[x1, y0, z1].astype(np.float64)
    c011 = data[x0, y1, z1].astype(np.float64)
    c111 = data[x1, y1, z1].astype(np.float64)
    c00 = c000 * (1 - fx) + c100 * fx
    c10 = c010 * (1 - fx) + c110 * fx
    c01 = c001 * (1 - fx) + c101 * fx
    c11 = c011 * (1 - fx) + c111 * fx
    c0 = c00 * (1 - fy) + c10 * fy
    c1 = c01 * (1 - fy) + c11 * fy
    out[:] = c0 * (1 - fz) + c1 * fz
    return out


def sample_trilinear(vol, p):
    """Interpolated intensity at world point ``p``.

    Reproduces voxel values exactly at voxel centers.  Points inside the
    volume box but within the outer half-voxel shell clamp to the nearest
    cell face.  Points outside the box raise :class:`OutOfBoundsError`.
    """
    p = np.asarray(p, dtype=np.float64).reshape(3)
    if not vol.contains(p):
        raise OutOfBoundsError("point %s outside volume extent %s" % (list(p), list(vol.extent_mm)))
    return float(_sample_trilinear_many(vol, p[None, :])[0])


# --------------------------------------------------------------------------
# seed-cube mean gray


def _cube_axis_indices(p_a, spacing_a, n_a, d):
    """Indices j with voxel center within d/2 voxels of coordinate p_a."""
    half = d * spacing_a / 2.0
    center = p_a / spacing_a - 0.5
    lo = max(int(math.floor(center - d / 2.0)) - 1, 0)
    hi = min(int(math.ceil(center + d / 2.0)) + 1, n_a - 1)
    js = np.arange(lo, hi + 1)
    # same predicate an exhaustive scan would use, evaluated on a window
    keep = np.abs((js + 0.5) * spacing_a - p_a) <= half
    return js[keep]


def mean_gray_around_seeds(vol, seeds, d=3):
    """Average intensity in axis-aligned cubes of edge ``d`` voxels centered
    on each seed, then averaged over seeds.

    Cubes are clipped at the volume border.  Each cube collects the voxels
    whose centers fall inside it; per-seed averages get equal weight, which
    makes the result independent of seed order.
    """
    if isinstance(seeds, SeedSet):
        points = seeds.points()
    else:
        points = [np.asarray(p, dtype=np.float64).reshape(3) for p in seeds]
    if len(points) == 0:
        raise ValueError("at least one seed point is required")
    d = int(d)
    if d < 1:
        raise ValueError("cube edge d must be >= 1 voxel, got %d" % d)
    per_seed = []
    for p in points:
        if not vol.contains(p):
            raise SeedOutOfBoundsError("seed %s outside volume extent %s" % (list(p), list(vol.extent_mm)))
        sel = vol.data
        for a in range(3):
            js = _cube_axis_indices(float(p[a]), vol.spacing_mm[a], vol.dims[a], d)
            sel = np.take(sel, js, axis=a)
        per_seed.append(float(sel.sum(dtype=np.float64)) / sel.size)
    # fsum: exactly-rounded, so permuting the seeds cannot change the result
    return math.fsum(per_seed) / len(per_seed)


# --------------------------------------------------------------------------
# phantoms


@dataclass
class PhantomSpec:
    """Description of a synthetic test object.

    ``kind`` is ``"sphere"`` or ``"lobed"``.  A lobed object has radius
    ``radius_mm * (1 + lobe_amplitude * cos(lobe_frequency * azimuth) *
    sin(polar)^2)``, a smooth star-shaped bump pattern that vanishes at the
    poles.
    """

    dims: tuple = (64, 64, 64)
    spacing_mm: tuple = (1.0, 1.0, 1.0)
    kind: str = "sphere"
    center_mm: tuple = (32.0, 32.0, 32.0)
    radius_mm: float = 10.0
    lobe_amplitude: float = 0.0
    lobe_frequency: int = 0
    foreground_mean: float = 100.0
    background_mean: float = 0.0
    noise_sigma: float = 0.0
    rng_seed: int = 0

    def __post_init__(self):
        self.dims = tuple(int(d) for d in self.dims)
        self.spacing_mm = tuple(float(s) for s in self.spacing_mm)
        self.center_mm = tuple(float(c) for c in self.center_mm)
        if self.kind not in ("sphere", "lobed"):
            raise ConfigError("phantom kind must be 'sphere' or 'lobed', got %r" % self.kind)
        if not (self.radius_mm > 0):
            raise ConfigError("phantom radius must be positive")
        if self.kind == "lobed":
            if not (0 < self.lobe_amplitude < 1):
                raise ConfigError("lobe_amplitude must be in (0, 1) for a star-shaped object")
            if int(self.lobe_frequency) < 1:
                raise ConfigError("lobe_frequency must be a positive integer")
        if self.foreground_mean == self.background_mean:
            raise ConfigError("foreground and background means must differ")
        if self.noise_sigma < 0:
            raise ConfigError("noise_sigma must be >= 0")
        ext = [d * s for d, s in zip(self.dims, self.spacing_mm)]
        rmax = self.max_radius_mm
        for a in range(3):
            if self.center_mm[a] - rmax < 0 or self.center_mm[a] + rmax > ext[a]:
                raise ConfigError(
                    "object of max radius %.3f mm at %s does not fit inside extent %s"
                    % (rmax, list(self.center_mm), ext)
                )

    @property
    def max_radius_mm(self):
        return self.radius_mm * (1.0 + abs(self.lobe_amplitude))

    def radius_in_direction(self, dirs):
        """Analytic object radius for unit direction(s), shape (...,3) -> (...)."""
        dirs = np.asarray(dirs, dtype=np.float64)
        if self.kind == "sphere":
            return np.full(dirs.shape[:-1], self.radius_mm)
        cos_theta = np.clip(dirs[..., 2], -1.0, 1.0)
        sin_theta_sq = 1.0 - cos_theta * cos_theta
        phi = np.arctan2(dirs[..., 1], dirs[..., 0])
        bump = self.lobe_amplitude * np.cos(self.lobe_frequency * phi) * sin_theta_sq
        return self.radius_mm * (1.0 + bump)

    @classmethod
    def from_json(cls, obj):
        if not isinstance(obj, dict):
            raise ConfigError("phantom spec must be a JSON object")
        known = {
            "dims", "spacing_mm", "kind", "center_mm", "radius_mm",
            "lobe_amplitude", "lobe_frequency", "foreground_mean",
            "background_mean", "noise_sigma", "rng_seed",
        }
        unknown = set(obj) - known
        if unknown:
            raise ConfigError("unknown phantom spec keys: %s" % ", ".join(sorted(unknown)))
        try:
            return cls(**obj)
        except TypeError as exc:
            raise ConfigError("bad phantom spec: %s" % exc)


def generate_phantom(spec):
    """Rasterize a phantom; returns ``(Volume, BinaryMask)``.

    A voxel belongs to the object iff its center lies within the analytic
    radius along its direction from the object center.  The volume takes
    ``foreground_mean`` inside and ``background_mean`` outside; Gaussian
    noise of ``noise_sigma`` is added everywhere when sigma > 0, reproducible
    from ``rng_seed``.
    """
    nx, ny, nz = spec.dims
    sx, sy, sz = spec.spacing_mm
    cx = (np.arange(nx) + 0.5) * sx - spec.center_mm[0]
    cy = (np.arange(ny) + 0.5) * sy - spec.center_mm[1]
    cz = (np.arange(nz) + 0.5) * sz - spec.center_mm[2]
    dx, dy, dz = np.meshgrid(cx, cy, cz, indexing="ij")
    dist = np.sqrt(dx * dx + dy * dy + dz * dz)
    if spec.kind == "sphere":
        inside = dist <= spec.radius_mm
    else:
        with np.errstate(invalid="ignore", divide="ignore"):
            offs = np.stack([dx, dy, dz], axis=-1)
            safe = np.maximum(dist, 1e-12)[..., None]
            rdir = spec.radius_in_direction(offs / safe)
        inside = dist <= rdir
        inside |= dist == 0.0  # center voxel: direction undefined, radius > 0
    data = np.where(inside, np.float64(spec.foreground_mean), np.float64(spec.background_mean))
    if spec.noise_sigma > 0:
        rng = np.random.default_rng(spec.rng_seed)
        data = data + rng.normal(0.0, spec.noise_sigma, size=data.shape)
    vol = Volume(spec.dims, spec.spacing_mm, data.astype(np.float32))
    mask = BinaryMask(spec.dims, spec.spacing_mm, inside)
    return vol, mask
