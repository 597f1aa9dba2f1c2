"""Array geometry, beam directions, angular grids and phase-level mapping."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError

SPEED_OF_LIGHT = 299_792_458.0  # m/s
TIE_TOL = 1e-9  # rad; quantization ties closer than this go to the smaller level


@dataclass(frozen=True)
class ArrayGeometry:
    """Uniform rectangular reflectarray under normal incidence.

    Elements sit at ``((x - 1) * spacing, (y - 1) * spacing)`` for
    ``x = 1..rows`` and ``y = 1..cols``, i.e. the array corner is the origin.
    """

    rows: int = 30
    cols: int = 30
    spacing: float = 0.021
    frequency: float = 3.5e9
    element_amplitude: float = 0.7
    resolution_bits: int = 2

    def __post_init__(self):
        if int(self.rows) != self.rows or self.rows < 1:
            raise DomainError(f"rows must be a positive integer, got {self.rows}")
        if int(self.cols) != self.cols or self.cols < 1:
            raise DomainError(f"cols must be a positive integer, got {self.cols}")
        if not (math.isfinite(self.spacing) and self.spacing > 0):
            raise DomainError(f"spacing must be > 0, got {self.spacing}")
        if not (math.isfinite(self.frequency) and self.frequency > 0):
            raise DomainError(f"frequency must be > 0, got {self.frequency}")
        if not (0 < self.element_amplitude <= 1):
            raise DomainError(
                f"element_amplitude must lie in (0, 1], got {self.element_amplitude}")
        if int(self.resolution_bits) != self.resolution_bits or self.resolution_bits < 1:
            raise DomainError(
                f"resolution_bits must be an integer >= 1, got {self.resolution_bits}")

    @property
    def shape(self) -> tuple[int, int]:
        return (self.rows, self.cols)

    @property
    def elements(self) -> int:
        return self.rows * self.cols

    @property
    def wavelength(self) -> float:
        return SPEED_OF_LIGHT / self.frequency

    @property
    def wavenumber(self) -> float:
        return 2.0 * math.pi / self.wavelength

    @property
    def levels(self) -> int:
        """Number of discrete phase states, ``2**resolution_bits``."""
        return 2 ** self.resolution_bits

    def positions(self) -> tuple[np.ndarray, np.ndarray]:
        """Element distances along x and y, each of shape ``(rows, cols)``."""
        dx = np.arange(self.rows, dtype=float) * self.spacing
        dy = np.arange(self.cols, dtype=float) * self.spacing
        return np.meshgrid(dx, dy, indexing="ij")


@dataclass(frozen=True)
class BeamSpec:
    """Reflected-beam direction in degrees.

    ``theta_deg`` is measured from broadside and may be negative; ``phi_deg``
    is the azimuth used both for the optical path difference and the masks.
    """

    theta_deg: float
    phi_deg: float

    def __post_init__(self):
        if not (math.isfinite(self.theta_deg) and math.isfinite(self.phi_deg)):
            raise DomainError(f"beam angles must be finite, got {self}")
        if not -90.0 <= self.theta_deg <= 90.0:
            raise DomainError(f"theta_deg must lie in [-90, 90], got {self.theta_deg}")
        if not 0.0 <= self.phi_deg < 360.0:
            raise DomainError(f"phi_deg must lie in [0, 360), got {self.phi_deg}")


def _uniform_samples(start: float, stop: float, step: float, inclusive: bool) -> np.ndarray:
    if not step > 0:
        raise DomainError(f"grid step must be > 0, got {step}")
    if stop < start:
        raise DomainError(f"grid range [{start}, {stop}] is empty")
    n = int(math.floor((stop - start) / step + 1e-9))
    if inclusive:
        n += 1
    elif start + n * step < stop - 1e-9 * step:
        n += 1
    if n < 1:
        raise DomainError(f"grid range [{start}, {stop}) holds no samples")
    return start + step * np.arange(n, dtype=float)


@dataclass(frozen=True)
class AngularGrid:
    """Regular (theta, phi) evaluation grid in degrees.

    The default covers theta in [-90, 90] and phi in [0, 180) at 1 degree.
    Negative theta with phi in [0, 180) spans the whole reflection hemisphere
    exactly once.
    """

    theta_samples: np.ndarray = field(
        default_factory=lambda: _uniform_samples(-90.0, 90.0, 1.0, inclusive=True))
    phi_samples: np.ndarray = field(
        default_factory=lambda: _uniform_samples(0.0, 180.0, 1.0, inclusive=False))

    def __post_init__(self):
        theta = np.asarray(self.theta_samples, dtype=float)
        phi = np.asarray(self.phi_samples, dtype=float)
        for name, s in (("theta", theta), ("phi", phi)):
            if s.ndim != 1 or s.size == 0:
                raise DomainError(f"{name} samples must be a non-empty 1-D sequence")
            if not np.all(np.isfinite(s)):
                raise DomainError(f"{name} samples must be finite")
            if s.size > 1:
                d = np.diff(s)
                if np.any(d <= 0):
                    raise DomainError(f"{name} samples must be strictly increasing")
                if not np.allclose(d, d[0], rtol=1e-9, atol=1e-12):
                    raise DomainError(f"{name} samples must be uniformly spaced")
        theta.setflags(write=False)
        phi.setflags(write=False)
        object.__setattr__(self, "theta_samples", theta)
        object.__setattr__(self, "phi_samples", phi)

    @classmethod
    def from_ranges(cls, theta_min=-90.0, theta_max=90.0, theta_step=1.0,
                    phi_min=0.0, phi_max=180.0, phi_step=1.0) -> "AngularGrid":
        """Theta range is closed, phi range is half-open ``[phi_min, phi_max)``."""
        return cls(_uniform_samples(theta_min, theta_max, theta_step, inclusive=True),
                   _uniform_samples(phi_min, phi_max, phi_step, inclusive=False))

    @property
    def shape(self) -> tuple[int, int]:
        return (self.theta_samples.size, self.phi_samples.size)

    @property
    def size(self) -> int:
        return self.theta_samples.size * self.phi_samples.size

    @property
    def resolution(self) -> tuple[float, float]:
        """Step in degrees along theta and phi (0.0 for single-sample axes)."""
        t, p = self.theta_samples, self.phi_samples
        return (float(t[1] - t[0]) if t.size > 1 else 0.0,
                float(p[1] - p[0]) if p.size > 1 else 0.0)

    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        """Theta and phi in degrees, each of shape ``grid.shape``."""
        return np.meshgrid(self.theta_samples, self.phi_samples, indexing="ij")

    def __eq__(self, other):
        if not isinstance(other, AngularGrid):
            return NotImplemented
        return (np.array_equal(self.theta_samples, other.theta_samples)
                and np.array_equal(self.phi_samples, other.phi_samples))

    def __hash__(self):
        return hash((self.theta_samples.tobytes(), self.phi_samples.tobytes()))


def optical_path_difference(geometry: ArrayGeometry, theta_deg: float, phi_deg: float) -> np.ndarray:
    """Per-element path difference in meters toward ``(theta, phi)``.

    ``Dx * cos(phi) * sin(theta) + Dy * sin(phi) * sin(theta)``.
    """
    dx, dy = geometry.positions()
    t = math.radians(theta_deg)
    p = math.radians(phi_deg)
    return dx * (math.cos(p) * math.sin(t)) + dy * (math.sin(p) * math.sin(t))


def level_phases(resolution_bits: int) -> np.ndarray:
    """Phase in radians of every level ``1..2**K``, indexed from 0."""
    n = 2 ** resolution_bits
    return (2.0 * np.arange(1, n + 1) - 1.0) * math.pi / n


def level_to_phase(level, resolution_bits: int):
    """Map integer level(s) in ``[1, 2**K]`` to ``(2*level - 1) * pi / 2**K``.

    Works element-wise on arrays. For K=2 the levels 1..4 give 45, 135, 225
    and 315 degrees.
    """
    n = 2 ** resolution_bits
    arr = np.asarray(level)
    if arr.dtype.kind not in "iu":
        if not np.all(np.equal(np.mod(arr, 1), 0)):
            raise DomainError(f"phase levels must be integers, got {level!r}")
        arr = arr.astype(np.int64)
    bad = (arr < 1) | (arr > n)
    if np.any(bad):
        offending = arr[bad].flat[0] if arr.ndim else int(arr)
        raise DomainError(
            f"level {offending} outside [1, {n}] for resolution_bits={resolution_bits}")
    out = level_phases(resolution_bits)[arr - 1]
    return float(out) if np.ndim(out) == 0 else out


def circular_distance(a, b):
    """Smallest absolute angular separation in radians, in ``[0, pi]``."""
    d = np.mod(np.asarray(a, dtype=float) - b, 2.0 * math.pi)
    return np.minimum(d, 2.0 * math.pi - d)


def phase_to_level(phase, resolution_bits: int):
    """Quantize radian phase(s) to the nearest level by wraparound distance.

    Ties go to the smaller level index.
    """
    arr = np.asarray(phase, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError("phase must be finite")
    table = level_phases(resolution_bits)
    dist = circular_distance(np.mod(arr, 2.0 * math.pi)[..., None], table)
    # distances within TIE_TOL count as equal; argmax picks the first, i.e. smaller level
    near = dist <= dist.min(axis=-1, keepdims=True) + TIE_TOL
    out = np.argmax(near, axis=-1) + 1
    return int(out) if out.ndim == 0 else out
