"""Overlap and volume statistics for comparing segmentations.

The agreement score between two masks is the Dice similarity coefficient
``2 |A & B| / (|A| + |B|)``; two empty masks agree perfectly.  Study-style
results aggregate per-case rows into min / max / mean and the population
standard deviation.
"""

from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np

from .errors import MaskMismatchError


def dsc(a, b):
    """Dice similarity coefficient of two binary masks on the same grid."""
    if tuple(a.dims) != tuple(b.dims):
        raise MaskMismatchError(
            "mask dimensions differ: %s vs %s" % (tuple(a.dims), tuple(b.dims)))
    if tuple(a.spacing_mm) != tuple(b.spacing_mm):
        raise MaskMismatchError(
            "mask spacings differ: %s vs %s" % (tuple(a.spacing_mm), tuple(b.spacing_mm)))
    na = int(a.bits.sum())
    nb = int(b.bits.sum())
    if na == 0 and nb == 0:
        return 1.0
    inter = int(np.logical_and(a.bits, b.bits).sum())
    return 2.0 * inter / (na + nb)


def volume_cm3(mask):
    """Segmented volume in cubic centimeters."""
    return mask.voxel_count * mask.voxel_volume_mm3 / 1000.0


@dataclass
class CaseStats:
    """One study row: manual reference vs one-click vs seed-refined runs."""

    case: str
    vol_manual_cm3: float
    vol_oneclick_cm3: float
    vol_semi_cm3: float
    vox_manual: int
    vox_oneclick: int
    vox_semi: int
    dsc_oneclick: float
    dsc_semi: float

    CSV_HEADER = ("case,vol_manual_cm3,vol_oneclick_cm3,vol_semi_cm3,"
                  "vox_manual,vox_oneclick,vox_semi,dsc_oneclick,dsc_semi")

    def csv_row(self):
        return "%s,%.6g,%.6g,%.6g,%d,%d,%d,%.6g,%.6g" % (
            self.case, self.vol_manual_cm3, self.vol_oneclick_cm3,
            self.vol_semi_cm3, self.vox_manual, self.vox_oneclick,
            self.vox_semi, self.dsc_oneclick, self.dsc_semi)


_NUMERIC = [f.name for f in fields(CaseStats) if f.name != "case"]


@dataclass
class Report:
    """Column-wise aggregate over a list of :class:`CaseStats`."""

    rows: list
    minimum: dict
    maximum: dict
    mean: dict
    sigma: dict

    def to_csv(self):
        lines = [CaseStats.CSV_HEADER]
        lines.extend(r.csv_row() for r in self.rows)
        return "\n".join(lines) + "\n"

    def to_text(self):
        lines = ["%-12s %10s %10s %10s %10s" % ("column", "min", "max", "mean", "sigma")]
        for name in _NUMERIC:
            lines.append("%-12s %10.4g %10.4g %10.4g %10.4g" % (
                name, self.minimum[name], self.maximum[name],
                self.mean[name], self.sigma[name]))
        lines.append("(%d cases; sigma is the population standard deviation)" % len(self.rows))
        return "\n".join(lines) + "\n"


def summarize(rows):
    """Aggregate study rows column by column."""
    rows = list(rows)
    if not rows:
        raise ValueError("cannot summarize an empty list of cases")
    cols = {name: np.array([getattr(r, name) for r in rows], dtype=np.float64)
            for name in _NUMERIC}
    return Report(
        rows=rows,
        minimum={n: float(v.min()) for n, v in cols.items()},
        maximum={n: float(v.max()) for n, v in cols.items()},
        mean={n: float(v.mean()) for n, v in cols.items()},
        sigma={n: float(v.std(ddof=0)) for n, v in cols.items()},
    )
