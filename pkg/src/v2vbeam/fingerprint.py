"""Location-binned fingerprint baseline.

A grid over normalized position space stores, per bin, the running mean of
every power vector observed there. A query maps a position to its bin (or the
nearest non-empty bin) and returns the m beam indices with the highest mean
power, which is the candidate list a receiver would hand back for beam
training.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import EmptyDatasetError
from .geodata import NormalizationParams, NormalizedPosition, normalize
from .ingest import Dataset


@dataclass(frozen=True)
class BinGrid:
    """Uniform rectangular bins over normalized coordinates."""

    origin: NormalizedPosition = NormalizedPosition(0.0, 0.0)
    bin_width_u: float = 1.0 / 32.0
    bin_width_v: float = 1.0 / 32.0

    def __post_init__(self):
        if not (self.bin_width_u > 0 and self.bin_width_v > 0):
            raise ValueError("bin widths must be > 0")

    @classmethod
    def unit_square(cls, bins_per_axis: int = 32) -> "BinGrid":
        """Grid covering [0, 1]^2 (the span of any fitted training set)."""
        if bins_per_axis < 1:
            raise ValueError("bins_per_axis must be >= 1")
        width = 1.0 / bins_per_axis
        return cls(NormalizedPosition(0.0, 0.0), width, width)

    def bin_of(self, pos: NormalizedPosition) -> tuple[int, int]:
        row = int(np.floor((pos.u - self.origin.u) / self.bin_width_u))
        col = int(np.floor((pos.v - self.origin.v) / self.bin_width_v))
        return row, col

    def center_of(self, key: tuple[int, int]) -> tuple[float, float]:
        row, col = key
        return (
            self.origin.u + (row + 0.5) * self.bin_width_u,
            self.origin.v + (col + 0.5) * self.bin_width_v,
        )


@dataclass(frozen=True)
class BinStats:
    """Per-bin sample count and mean power vector."""

    count: int
    mean_power: np.ndarray

    def __post_init__(self):
        mp = np.asarray(self.mean_power, dtype=np.float64)
        mp.setflags(write=False)
        object.__setattr__(self, "mean_power", mp)
        if self.count < 1:
            raise ValueError("stored bins must have count >= 1")


@dataclass(frozen=True)
class FingerprintDatabase:
    grid: BinGrid
    codebook_size: int
    bins: dict[tuple[int, int], BinStats]

    def __len__(self) -> int:
        return len(self.bins)


def build_database(
    train: Dataset, grid: BinGrid, norm: NormalizationParams
) -> FingerprintDatabase:
    """Accumulate per-bin mean power vectors over the training set.

    Sums are Kahan-compensated so the result is permutation-invariant to well
    below 1e-12 relative error.
    """
    if not train.samples:
        raise EmptyDatasetError("cannot build a fingerprint database from no samples")
    sums: dict[tuple[int, int], np.ndarray] = {}
    comps: dict[tuple[int, int], np.ndarray] = {}
    counts: dict[tuple[int, int], int] = {}
    for s in train.samples:
        key = grid.bin_of(normalize(s.tx_pos, norm))
        if key not in sums:
            sums[key] = np.zeros(train.codebook_size)
            comps[key] = np.zeros(train.codebook_size)
            counts[key] = 0
        y = s.powers - comps[key]
        t = sums[key] + y
        comps[key] = (t - sums[key]) - y
        sums[key] = t
        counts[key] += 1
    bins = {
        key: BinStats(count=counts[key], mean_power=sums[key] / counts[key])
        for key in sums
    }
    return FingerprintDatabase(grid=grid, codebook_size=train.codebook_size, bins=bins)


def _top_m_indices(mean_power: np.ndarray, m: int) -> list[int]:
    # stable sort on the negated powers keeps the lowest index first among ties
    order = np.argsort(-mean_power, kind="stable")
    return [int(i) for i in order[: min(m, mean_power.size)]]


def query_candidates(
    db: FingerprintDatabase, pos: NormalizedPosition, m: int
) -> list[int]:
    """The m beam indices with highest mean power in the queried bin.

    An empty bin falls back to the nearest non-empty bin by distance between
    bin centers (ties toward the lowest (row, col)), so a non-empty database
    always answers.
    """
    if m < 1:
        raise ValueError("m must be >= 1")
    if not db.bins:
        raise EmptyDatasetError("fingerprint database has no bins")
    key = db.grid.bin_of(pos)
    if key not in db.bins:
        center = db.grid.center_of(key)
        key = min(
            db.bins,
            key=lambda k: (
                (db.grid.center_of(k)[0] - center[0]) ** 2
                + (db.grid.center_of(k)[1] - center[1]) ** 2,
                k,
            ),
        )
    return _top_m_indices(db.bins[key].mean_power, m)


def evaluate_baseline(
    db: FingerprintDatabase, test: Dataset, norm: NormalizationParams, m: int
) -> list[list[int]]:
    """Candidate lists for every test sample, in order."""
    return [
        query_candidates(db, normalize(s.tx_pos, norm), m) for s in test.samples
    ]


def save_database(db: FingerprintDatabase, path: str | Path) -> Path:
    """Export as JSON for reuse across runs; bins sorted for stable bytes."""
    doc = {
        "version": 1,
        "codebook_size": db.codebook_size,
        "grid": {
            "origin_u": db.grid.origin.u,
            "origin_v": db.grid.origin.v,
            "bin_width_u": db.grid.bin_width_u,
            "bin_width_v": db.grid.bin_width_v,
        },
        "bins": [
            {
                "row": key[0],
                "col": key[1],
                "count": stats.count,
                "mean_power": [float(x) for x in stats.mean_power],
            }
            for key, stats in sorted(db.bins.items())
        ],
    }
    path = Path(path)
    path.write_text(json.dumps(doc, indent=1, sort_keys=True), encoding="utf-8")
    return path


def load_database(path: str | Path) -> FingerprintDatabase:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    grid = BinGrid(
        NormalizedPosition(doc["grid"]["origin_u"], doc["grid"]["origin_v"]),
        doc["grid"]["bin_width_u"],
        doc["grid"]["bin_width_v"],
    )
    bins = {
        (entry["row"], entry["col"]): BinStats(
            count=entry["count"],
            mean_power=np.array(entry["mean_power"], dtype=np.float64),
        )
        for entry in doc["bins"]
    }
    return FingerprintDatabase(
        grid=grid, codebook_size=doc["codebook_size"], bins=bins
    )
