"""GPS position types and min-max normalization for model input.

Raw positions are decimal degrees. The model consumes dimensionless
coordinates scaled against the extremes of a fitting set (normally the
training split, so the test split never leaks into the scaling). Values
outside the fitting range map outside [0, 1] on purpose: clamping would
destroy monotonicity for unseen positions.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

from .errors import DegenerateRangeError, OutOfRangeError


@dataclass(frozen=True)
class GeoPosition:
    """A raw GPS fix in decimal degrees."""

    lat_deg: float
    lon_deg: float


@dataclass(frozen=True)
class NormalizationParams:
    """Per-axis extremes of the fitting set, used for min-max scaling."""

    lat_min: float
    lat_max: float
    lon_min: float
    lon_max: float

    def __post_init__(self):
        if not self.lat_max > self.lat_min:
            raise DegenerateRangeError("lat")
        if not self.lon_max > self.lon_min:
            raise DegenerateRangeError("lon")


@dataclass(frozen=True)
class NormalizedPosition:
    """Dimensionless position; in [0, 1]^2 for positions from the fitting set."""

    u: float
    v: float


def validate_position(p: GeoPosition) -> GeoPosition:
    """Return ``p`` unchanged if it lies within decimal-degree bounds.

    Raises OutOfRangeError("lat") or OutOfRangeError("lon") otherwise.
    Bounds are inclusive: lat in [-90, 90], lon in [-180, 180].
    """
    if not (-90.0 <= p.lat_deg <= 90.0):
        raise OutOfRangeError("lat", p.lat_deg)
    if not (-180.0 <= p.lon_deg <= 180.0):
        raise OutOfRangeError("lon", p.lon_deg)
    return p


def fit_normalization(samples: Iterable[GeoPosition]) -> NormalizationParams:
    """Compute exact per-axis min/max over a fitting set.

    Needs at least two distinct latitudes and two distinct longitudes;
    a degenerate axis would make the scale factor undefined.
    """
    lats = [p.lat_deg for p in samples]
    lons = [p.lon_deg for p in samples]
    if len(lats) < 2 or min(lats) == max(lats):
        raise DegenerateRangeError("lat")
    if min(lons) == max(lons):
        raise DegenerateRangeError("lon")
    return NormalizationParams(min(lats), max(lats), min(lons), max(lons))


def normalize(p: GeoPosition, params: NormalizationParams) -> NormalizedPosition:
    """Min-max scale ``p`` against ``params``. No clamping."""
    u = (p.lat_deg - params.lat_min) / (params.lat_max - params.lat_min)
    v = (p.lon_deg - params.lon_min) / (params.lon_max - params.lon_min)
    return NormalizedPosition(u, v)


def denormalize(n: NormalizedPosition, params: NormalizationParams) -> GeoPosition:
    """Invert :func:`normalize` (up to float rounding)."""
    lat = n.u * (params.lat_max - params.lat_min) + params.lat_min
    lon = n.v * (params.lon_max - params.lon_min) + params.lon_min
    return GeoPosition(lat, lon)
