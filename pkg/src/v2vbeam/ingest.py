"""Dataset loading, splitting, and persistence.

One CSV schema serves both real exports and synthetic scenarios:

    t,tx_lat,tx_lon,rx_lat,rx_lon,best_beam,p0,p1,...,p{Q-1}

rx_lat/rx_lon may be empty, best_beam may be empty or absent (it is always
recomputed from the powers and cross-checked when present), and powers are
non-negative decimals in linear units. Floats are written with their shortest
round-trip representation, so write -> parse is bit-exact.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    IndexMismatchError,
    RowParseError,
    SchemaMismatchError,
)
from .geodata import GeoPosition, validate_position

_FIXED_COLUMNS = ("t", "tx_lat", "tx_lon", "rx_lat", "rx_lon")
DEFAULT_SAMPLING_PERIOD = 0.1


@dataclass(frozen=True, eq=False)
class Sample:
    """One time instant: positions, per-beam received powers, ground-truth index."""

    t: float
    tx_pos: GeoPosition
    rx_pos: GeoPosition | None
    powers: np.ndarray
    optimal_index: int

    def __post_init__(self):
        p = np.array(self.powers, dtype=np.float64)
        if p.ndim != 1 or p.size == 0:
            raise ValueError("powers must be a non-empty 1-D vector")
        if not np.all(np.isfinite(p)) or np.any(p < 0):
            raise ValueError("powers must be finite and non-negative")
        p.setflags(write=False)
        object.__setattr__(self, "powers", p)
        if self.optimal_index != int(np.argmax(p)):
            raise ValueError(
                f"optimal_index {self.optimal_index} is not the argmax of powers"
            )

    def __eq__(self, other):
        if not isinstance(other, Sample):
            return NotImplemented
        return (
            self.t == other.t
            and self.tx_pos == other.tx_pos
            and self.rx_pos == other.rx_pos
            and self.optimal_index == other.optimal_index
            and np.array_equal(self.powers, other.powers)
        )


@dataclass(frozen=True)
class Dataset:
    """An ordered, immutable collection of samples sharing one codebook."""

    samples: tuple[Sample, ...]
    codebook_size: int
    sampling_period: float = DEFAULT_SAMPLING_PERIOD

    def __post_init__(self):
        if not self.sampling_period > 0:
            raise ValueError("sampling_period must be > 0")
        for s in self.samples:
            if s.powers.size != self.codebook_size:
                raise ValueError(
                    f"sample at t={s.t} has {s.powers.size} powers, "
                    f"expected {self.codebook_size}"
                )

    def __len__(self) -> int:
        return len(self.samples)

    def tx_positions(self) -> list[GeoPosition]:
        return [s.tx_pos for s in self.samples]

    def powers_matrix(self) -> np.ndarray:
        """All power vectors stacked, shape (n, codebook_size)."""
        if not self.samples:
            return np.zeros((0, self.codebook_size))
        return np.stack([s.powers for s in self.samples])

    def optimal_indices(self) -> np.ndarray:
        return np.array([s.optimal_index for s in self.samples], dtype=np.int64)


@dataclass(frozen=True)
class SplitSpec:
    """Fractions for the train/validation/test partition plus the shuffle seed."""

    train_frac: float = 0.6
    val_frac: float = 0.2
    test_frac: float = 0.2
    seed: int = 0

    def __post_init__(self):
        fracs = (self.train_frac, self.val_frac, self.test_frac)
        if any(f < 0 for f in fracs):
            raise ValueError("split fractions must be >= 0")
        if abs(sum(fracs) - 1.0) > 1e-9:
            raise ValueError(f"split fractions must sum to 1, got {sum(fracs)}")


def _infer_sampling_period(samples: list[Sample]) -> float:
    if len(samples) >= 2:
        delta = samples[1].t - samples[0].t
        if delta > 0:
            return delta
    return DEFAULT_SAMPLING_PERIOD


def parse_dataset(path: str | Path) -> Dataset:
    """Load a dataset CSV, validating every row.

    Raises SchemaMismatchError for a bad header or a row whose field count
    disagrees with the header, RowParseError for unparseable values, and
    IndexMismatchError when a stored best-beam disagrees with the argmax of
    that row's powers.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaMismatchError("empty file, expected a header row") from None
        has_best_beam, codebook_size = _check_header(header)
        samples: list[Sample] = []
        for line_no, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise SchemaMismatchError(
                    f"line {line_no}: expected {len(header)} fields, got {len(row)}"
                )
            samples.append(_parse_row(row, line_no, has_best_beam, codebook_size))
    return Dataset(
        samples=tuple(samples),
        codebook_size=codebook_size,
        sampling_period=_infer_sampling_period(samples),
    )


def _check_header(header: list[str]) -> tuple[bool, int]:
    if tuple(header[:5]) != _FIXED_COLUMNS:
        raise SchemaMismatchError(
            f"header must start with {','.join(_FIXED_COLUMNS)}, got {header[:5]}"
        )
    rest = header[5:]
    has_best_beam = bool(rest) and rest[0] == "best_beam"
    power_cols = rest[1:] if has_best_beam else rest
    if not power_cols:
        raise SchemaMismatchError("header has no power columns")
    expected = [f"p{i}" for i in range(len(power_cols))]
    if power_cols != expected:
        raise SchemaMismatchError(
            f"power columns must be p0..p{len(power_cols) - 1}, got {power_cols}"
        )
    return has_best_beam, len(power_cols)


def _parse_row(
    row: list[str], line_no: int, has_best_beam: bool, codebook_size: int
) -> Sample:
    def as_float(text: str, what: str) -> float:
        try:
            value = float(text)
        except ValueError:
            raise RowParseError(line_no, f"bad {what}: {text!r}") from None
        if not math.isfinite(value):
            raise RowParseError(line_no, f"non-finite {what}: {text!r}")
        return value

    t = as_float(row[0], "t")
    try:
        tx_pos = validate_position(
            GeoPosition(as_float(row[1], "tx_lat"), as_float(row[2], "tx_lon"))
        )
        rx_pos = None
        if row[3] or row[4]:
            rx_pos = validate_position(
                GeoPosition(as_float(row[3], "rx_lat"), as_float(row[4], "rx_lon"))
            )
    except RowParseError:
        raise
    except Exception as exc:
        raise RowParseError(line_no, str(exc)) from exc

    offset = 6 if has_best_beam else 5
    powers = np.array(
        [as_float(cell, "power") for cell in row[offset:]], dtype=np.float64
    )
    if np.any(powers < 0):
        raise RowParseError(line_no, "negative power value")
    computed = int(np.argmax(powers))
    if has_best_beam and row[5]:
        try:
            stored = int(row[5])
        except ValueError:
            raise RowParseError(line_no, f"bad best_beam: {row[5]!r}") from None
        if stored != computed:
            raise IndexMismatchError(line_no, stored, computed)
    return Sample(t=t, tx_pos=tx_pos, rx_pos=rx_pos, powers=powers, optimal_index=computed)


def write_dataset(d: Dataset, path: str | Path) -> Path:
    """Write a dataset in the CSV schema; round-trips bit-exactly through parse."""
    path = Path(path)
    header = list(_FIXED_COLUMNS) + ["best_beam"] + [
        f"p{i}" for i in range(d.codebook_size)
    ]
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for s in d.samples:
            row = [
                repr(float(s.t)),
                repr(float(s.tx_pos.lat_deg)),
                repr(float(s.tx_pos.lon_deg)),
                repr(float(s.rx_pos.lat_deg)) if s.rx_pos else "",
                repr(float(s.rx_pos.lon_deg)) if s.rx_pos else "",
                str(s.optimal_index),
            ] + [repr(float(p)) for p in s.powers]
            writer.writerow(row)
    return path


def split(
    d: Dataset, s: SplitSpec, mode: str = "shuffle"
) -> tuple[Dataset, Dataset, Dataset]:
    """Partition into train/val/test.

    ``mode`` "shuffle" permutes sample order with the spec's seed before
    cutting; "sequential" preserves time order. Sizes are floor(n * frac) for
    each part, with the remainder assigned to train. The three parts are
    disjoint and cover the input exactly.
    """
    if mode not in ("shuffle", "sequential"):
        raise ValueError(f"unknown split mode {mode!r}")
    n = len(d.samples)
    order = np.arange(n)
    if mode == "shuffle":
        order = np.random.default_rng(s.seed).permutation(n)
    n_train = int(n * s.train_frac)
    n_val = int(n * s.val_frac)
    n_test = int(n * s.test_frac)
    n_train += n - (n_train + n_val + n_test)

    def subset(indices: np.ndarray) -> Dataset:
        return Dataset(
            samples=tuple(d.samples[i] for i in indices),
            codebook_size=d.codebook_size,
            sampling_period=d.sampling_period,
        )

    return (
        subset(order[:n_train]),
        subset(order[n_train : n_train + n_val]),
        subset(order[n_train + n_val :]),
    )


def write_split_datasets(
    base: str | Path, train: Dataset, val: Dataset, test: Dataset
) -> tuple[Path, Path, Path]:
    """Write the three split parts next to ``base`` with the standard suffixes."""
    base = Path(base)
    stem = base.with_suffix("") if base.suffix == ".csv" else base
    paths = tuple(Path(f"{stem}.{part}.csv") for part in ("train", "val", "test"))
    for part, p in zip((train, val, test), paths):
        write_dataset(part, p)
    return paths
