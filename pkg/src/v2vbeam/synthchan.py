"""ULA responses, an oversampled DFT codebook, per-beam received power, and
synthetic V2V scenario generation.

The channel is single-path line-of-sight: the per-subcarrier channel vector is
a real path gain times the array response at the transmitter's angle, flat
across subcarriers. Received power for beam i is then

    P_i = n_subcarriers * g(d) * |a(theta)^T q_i|^2 * tx_power  (+ noise),

with the power-law path gain g(d) = (reference_distance / d) ** exponent.
The plain transpose product (no conjugation) keeps the matched beam at grid
frequency psi ~= sin(theta) for half-wavelength spacing.

Scenarios move a transmitter and receiver along planar waypoint paths anchored
at a GPS origin, and record one sample per period in the ingest CSV schema.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    ConfigError,
    EmptyVectorError,
    GeometryOutOfSectorError,
    InvalidGeometryError,
)
from .geodata import GeoPosition
from .ingest import Dataset, Sample

# Local planar frame scale: meters per degree of latitude (and of longitude
# at the equator). Scenario geometry only needs a consistent, monotone map.
METERS_PER_DEGREE = 111_320.0


@dataclass(frozen=True)
class ArrayConfig:
    """Receive uniform linear array: element count and spacing in wavelengths."""

    n_elements: int = 16
    element_spacing: float = 0.5

    def __post_init__(self):
        if self.n_elements < 1:
            raise ValueError("n_elements must be >= 1")
        if not self.element_spacing > 0:
            raise ValueError("element_spacing must be > 0")


@dataclass(frozen=True)
class Codebook:
    """A fixed set of unit-norm beamforming vectors, one per row."""

    weights: np.ndarray  # complex, shape (size, n_elements)

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.complex128)
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        norms = np.linalg.norm(w, axis=1)
        if not np.allclose(norms, 1.0, rtol=0.0, atol=1e-12):
            raise ValueError("codebook beams must have unit norm")

    @property
    def size(self) -> int:
        return self.weights.shape[0]

    @property
    def n_elements(self) -> int:
        return self.weights.shape[1]

    @property
    def beams(self) -> list[np.ndarray]:
        return list(self.weights)


@dataclass(frozen=True)
class SyntheticChannelConfig:
    """Line-of-sight channel parameters, all in linear units."""

    n_subcarriers: int = 16
    tx_power: float = 1.0
    noise_power: float = 0.0
    pathloss_exponent: float = 2.0
    reference_distance: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.n_subcarriers < 1:
            raise ValueError("n_subcarriers must be >= 1")
        if self.noise_power < 0:
            raise ValueError("noise_power must be >= 0")
        if not self.reference_distance > 0:
            raise ValueError("reference_distance must be > 0")


@dataclass(frozen=True)
class TrajectoryConfig:
    """Planar waypoint paths for both vehicles, anchored at a GPS origin.

    Waypoints are (east, north) meters; each path is traversed at piecewise
    constant speed, its segments splitting the duration evenly. The receiver
    array boresight points at ``rx_heading`` radians from the +east axis,
    counter-clockwise.
    """

    duration: float
    sample_period: float = 0.1
    rx_heading: float = 0.0
    origin: GeoPosition = GeoPosition(0.0, 0.0)
    tx_waypoints: tuple[tuple[float, float], ...] = ((0.0, 0.0),)
    rx_waypoints: tuple[tuple[float, float], ...] = ((0.0, 0.0),)

    def __post_init__(self):
        if not self.duration > 0:
            raise ValueError("duration must be > 0")
        if not self.sample_period > 0:
            raise ValueError("sample_period must be > 0")
        if not self.tx_waypoints or not self.rx_waypoints:
            raise ValueError("waypoint paths must be non-empty")


def array_response(cfg: ArrayConfig, theta: float) -> np.ndarray:
    """Array response at angle ``theta`` radians from boresight.

    Element k gets phase 2*pi*spacing*k*sin(theta); unit magnitude each.
    ``theta`` must lie in the front half-plane, |theta| <= pi/2.
    """
    if abs(theta) > math.pi / 2:
        raise GeometryOutOfSectorError(f"theta {theta} outside front half-plane")
    k = np.arange(cfg.n_elements)
    return np.exp(2j * math.pi * cfg.element_spacing * k * math.sin(theta))


def dft_codebook(cfg: ArrayConfig, size: int = 64) -> Codebook:
    """Oversampled DFT codebook on the uniform sin-space grid psi_i = -1 + 2i/size.

    Beam i has weights exp(-1j*pi*k*psi_i)/sqrt(n_elements); unit norm by
    construction. ``size`` must be >= n_elements.
    """
    if size < cfg.n_elements:
        raise ValueError("codebook size must be >= n_elements")
    psi = -1.0 + 2.0 * np.arange(size) / size
    k = np.arange(cfg.n_elements)
    weights = np.exp(-1j * math.pi * np.outer(psi, k)) / math.sqrt(cfg.n_elements)
    return Codebook(weights)


def beam_gains(cfg: ArrayConfig, cb: Codebook, theta: float) -> np.ndarray:
    """Per-beam array gains |a(theta)^T q_i|^2, length ``cb.size``."""
    a = array_response(cfg, theta)
    return np.abs(cb.weights @ a) ** 2


def path_gain(ch: SyntheticChannelConfig, distance: float) -> float:
    """Power-law path gain (reference_distance / distance) ** exponent."""
    if distance < ch.reference_distance:
        raise InvalidGeometryError(
            f"distance {distance} below reference {ch.reference_distance}"
        )
    return (ch.reference_distance / distance) ** ch.pathloss_exponent


def beam_power_vector(
    cfg: ArrayConfig,
    cb: Codebook,
    ch: SyntheticChannelConfig,
    theta: float,
    distance: float,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """Received power per beam for a transmitter at (theta, distance).

    The channel is flat across subcarriers, so the subcarrier sum reduces to a
    factor n_subcarriers. Noise is an additive non-negative perturbation per
    beam: the absolute value of a zero-mean normal scaled so its mean equals
    ``noise_power`` (zero noise_power means exactly zero noise). Draws come
    from ``rng``, or from a generator seeded with ``ch.seed`` if not given.
    """
    g = path_gain(ch, distance)
    p = ch.n_subcarriers * g * ch.tx_power * beam_gains(cfg, cb, theta)
    if ch.noise_power > 0.0:
        if rng is None:
            rng = np.random.default_rng(ch.seed)
        sigma = ch.noise_power * math.sqrt(math.pi / 2.0)
        p = p + np.abs(rng.normal(0.0, sigma, size=cb.size))
    return p


def optimal_beam(p: np.ndarray) -> int:
    """Index of the maximum power; ties break toward the lowest index."""
    p = np.asarray(p)
    if p.size == 0:
        raise EmptyVectorError("power vector is empty")
    return int(np.argmax(p))


def local_to_geo(origin: GeoPosition, east_m: float, north_m: float) -> GeoPosition:
    """Map planar (east, north) meters to a GPS position near ``origin``."""
    lat = origin.lat_deg + north_m / METERS_PER_DEGREE
    lon = origin.lon_deg + east_m / (
        METERS_PER_DEGREE * math.cos(math.radians(origin.lat_deg))
    )
    return GeoPosition(lat, lon)


def _path_position(
    waypoints: tuple[tuple[float, float], ...], fraction: float
) -> tuple[float, float]:
    """Piecewise-linear interpolation along a waypoint path at fraction in [0, 1]."""
    if len(waypoints) == 1:
        return waypoints[0]
    n_segments = len(waypoints) - 1
    s = min(max(fraction, 0.0), 1.0) * n_segments
    seg = min(int(s), n_segments - 1)
    frac = s - seg
    (x0, y0), (x1, y1) = waypoints[seg], waypoints[seg + 1]
    return (x0 + frac * (x1 - x0), y0 + frac * (y1 - y0))


def _wrap_angle(angle: float) -> float:
    """Wrap to (-pi, pi]."""
    wrapped = math.fmod(angle + math.pi, 2.0 * math.pi)
    if wrapped <= 0.0:
        wrapped += 2.0 * math.pi
    return wrapped - math.pi


def generate_scenario(
    traj: TrajectoryConfig,
    arr: ArrayConfig,
    ch: SyntheticChannelConfig,
    codebook_size: int = 64,
) -> Dataset:
    """Simulate one drive: a sample per period with positions, powers, and label.

    The transmitter must stay in the receiver's front half-plane; the angle is
    measured from the array boresight. Per-sample noise comes from spawned
    substreams of ``ch.seed``, so output is deterministic and independent of
    evaluation order.
    """
    cb = dft_codebook(arr, codebook_size)
    n_samples = int(round(traj.duration / traj.sample_period))
    streams = np.random.SeedSequence(ch.seed).spawn(n_samples)
    samples = []
    for i in range(n_samples):
        t = i * traj.sample_period
        fraction = t / traj.duration
        tx = _path_position(traj.tx_waypoints, fraction)
        rx = _path_position(traj.rx_waypoints, fraction)
        dx, dy = tx[0] - rx[0], tx[1] - rx[1]
        theta = _wrap_angle(math.atan2(dy, dx) - traj.rx_heading)
        if not -math.pi / 2 < theta < math.pi / 2:
            raise GeometryOutOfSectorError(
                f"sample {i}: transmitter angle {theta:.4f} rad outside (-pi/2, pi/2)"
            )
        distance = math.hypot(dx, dy)
        powers = beam_power_vector(
            arr, cb, ch, theta, distance, rng=np.random.default_rng(streams[i])
        )
        samples.append(
            Sample(
                t=t,
                tx_pos=local_to_geo(traj.origin, tx[0], tx[1]),
                rx_pos=local_to_geo(traj.origin, rx[0], rx[1]),
                powers=powers,
                optimal_index=optimal_beam(powers),
            )
        )
    return Dataset(
        samples=tuple(samples),
        codebook_size=codebook_size,
        sampling_period=traj.sample_period,
    )


def scenario_from_json(doc: dict) -> tuple[TrajectoryConfig, ArrayConfig, SyntheticChannelConfig, int]:
    """Build scenario configs from a JSON document.

    Raises ConfigError naming the offending field on any malformed entry.
    """
    if not isinstance(doc, dict):
        raise ConfigError("<root>", "expected a JSON object")

    def section(name: str) -> dict:
        value = doc.get(name)
        if not isinstance(value, dict):
            raise ConfigError(name, "expected an object")
        return value

    def number(obj: dict, section_name: str, key: str, default=None):
        if key not in obj:
            if default is None:
                raise ConfigError(f"{section_name}.{key}", "missing")
            return default
        value = obj[key]
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{section_name}.{key}", f"expected a number, got {value!r}")
        return value

    traj_doc = section("trajectory")
    arr_doc = doc.get("array", {})
    ch_doc = doc.get("channel", {})
    if not isinstance(arr_doc, dict):
        raise ConfigError("array", "expected an object")
    if not isinstance(ch_doc, dict):
        raise ConfigError("channel", "expected an object")

    def waypoints(key: str) -> tuple[tuple[float, float], ...]:
        raw = traj_doc.get(key)
        if (
            not isinstance(raw, list)
            or not raw
            or not all(isinstance(p, list) and len(p) == 2 for p in raw)
        ):
            raise ConfigError(f"trajectory.{key}", "expected a list of [east, north] pairs")
        return tuple((float(x), float(y)) for x, y in raw)

    origin_doc = traj_doc.get("origin", {})
    if not isinstance(origin_doc, dict):
        raise ConfigError("trajectory.origin", "expected an object")
    origin = GeoPosition(
        number(origin_doc, "trajectory.origin", "lat", 0.0),
        number(origin_doc, "trajectory.origin", "lon", 0.0),
    )
    try:
        traj = TrajectoryConfig(
            duration=number(traj_doc, "trajectory", "duration"),
            sample_period=number(traj_doc, "trajectory", "sample_period", 0.1),
            rx_heading=number(traj_doc, "trajectory", "rx_heading", 0.0),
            origin=origin,
            tx_waypoints=waypoints("tx_waypoints"),
            rx_waypoints=waypoints("rx_waypoints"),
        )
        arr = ArrayConfig(
            n_elements=int(number(arr_doc, "array", "n_elements", 16)),
            element_spacing=number(arr_doc, "array", "element_spacing", 0.5),
        )
        ch = SyntheticChannelConfig(
            n_subcarriers=int(number(ch_doc, "channel", "n_subcarriers", 16)),
            tx_power=number(ch_doc, "channel", "tx_power", 1.0),
            noise_power=number(ch_doc, "channel", "noise_power", 0.0),
            pathloss_exponent=number(ch_doc, "channel", "pathloss_exponent", 2.0),
            reference_distance=number(ch_doc, "channel", "reference_distance", 1.0),
            seed=int(number(ch_doc, "channel", "seed", 0)),
        )
    except ValueError as exc:
        raise ConfigError("<scenario>", str(exc)) from exc
    codebook_size = int(number(doc, "<root>", "codebook_size", 64))
    return traj, arr, ch, codebook_size
