"""Error types shared by the library, the CLI and the HTTP API.

Every error carries a short machine-readable ``kind`` so the two frontends
can map failures onto exit codes / HTTP status codes without string
matching on messages.
"""


class EngineError(Exception):
    """Base class for all errors raised by this package."""

    kind = "engine_error"

    def __init__(self, message, kind=None):
        super().__init__(message)
        if kind is not None:
            self.kind = kind

    def to_json(self):
        return {"error": {"kind": self.kind, "message": str(self)}}


class VolumeFormatError(EngineError):
    """Unreadable or inconsistent volume/mask file."""

    kind = "bad_volume"


class OutOfBoundsError(EngineError):
    """A world-space position falls outside the volume."""

    kind = "out_of_bounds"


class SeedOutOfBoundsError(OutOfBoundsError):
    """A seed point falls outside the volume."""

    kind = "seed_out_of_bounds"


class ConflictingConstraintError(EngineError):
    """Two constraints pin the same ray to different boundary indices."""

    kind = "conflicting_constraint"


class InfeasibleConstraintError(EngineError):
    """Pinned rays cannot be joined by any surface within the smoothness cone."""

    kind = "infeasible_constraint"


class MaskMismatchError(EngineError):
    """Two masks with different grids were compared."""

    kind = "mask_mismatch"


class ConfigError(EngineError):
    """Malformed job or phantom description."""

    kind = "bad_config"
