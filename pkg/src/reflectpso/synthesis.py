"""Single-beam phase compensation and multi-beam superposition profiles."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .geometry import (ArrayGeometry, BeamSpec, DomainError, level_to_phase,
                       optical_path_difference, phase_to_level)


@dataclass(frozen=True, eq=False)
class PhaseProfile:
    """Integer phase-level matrix of a reflectarray, entries in ``[1, 2**K]``."""

    levels: np.ndarray
    resolution_bits: int

    def __post_init__(self):
        lv = np.array(self.levels)
        if lv.ndim != 2 or 0 in lv.shape:
            raise DomainError(f"profile must be a non-empty 2-D matrix, got shape {lv.shape}")
        if lv.dtype.kind not in "iu":
            if not np.all(np.mod(lv, 1) == 0):
                raise DomainError("profile levels must be integers")
        lv = lv.astype(np.int64)
        n = 2 ** self.resolution_bits
        if lv.min() < 1 or lv.max() > n:
            raise DomainError(
                f"profile levels must lie in [1, {n}], got range [{lv.min()}, {lv.max()}]")
        lv.setflags(write=False)
        object.__setattr__(self, "levels", lv)

    @property
    def shape(self) -> tuple[int, int]:
        return self.levels.shape

    def phases(self) -> np.ndarray:
        return level_to_phase(self.levels, self.resolution_bits)

    def check_geometry(self, geometry: ArrayGeometry) -> None:
        if self.shape != geometry.shape:
            raise DomainError(
                f"profile shape {self.shape} does not match array {geometry.shape}")
        if self.resolution_bits != geometry.resolution_bits:
            raise DomainError(
                f"profile is {self.resolution_bits}-bit, array is "
                f"{geometry.resolution_bits}-bit")

    def __eq__(self, other):
        if not isinstance(other, PhaseProfile):
            return NotImplemented
        return (self.resolution_bits == other.resolution_bits
                and np.array_equal(self.levels, other.levels))

    __hash__ = None


def single_beam_compensation(geometry: ArrayGeometry, beam: BeamSpec) -> np.ndarray:
    """Continuous phase compensation in ``[0, 2*pi)`` steering toward ``beam``.

    The sign cancels ``k * OPD`` at the beam direction so every element phasor
    adds in phase there.
    """
    opd = optical_path_difference(geometry, beam.theta_deg, beam.phi_deg)
    comp = np.mod(-geometry.wavenumber * opd, 2.0 * math.pi)
    # mod of a tiny negative number can round up to exactly 2*pi
    comp[comp >= 2.0 * math.pi] = 0.0
    return comp


def single_beam_profile(geometry: ArrayGeometry, beam: BeamSpec) -> PhaseProfile:
    comp = single_beam_compensation(geometry, beam)
    return PhaseProfile(phase_to_level(comp, geometry.resolution_bits), geometry.resolution_bits)


def superpose_profiles(geometry: ArrayGeometry, beams: Sequence[BeamSpec]) -> PhaseProfile:
    """Multi-beam profile from the mean of the quantized single-beam phases.

    Each beam's compensation is quantized to a level, mapped back to its phase
    in ``[0, 2*pi)``, averaged arithmetically over beams and re-quantized.
    This plain mean is not circular: two phases either side of the 0/2*pi seam
    average to roughly pi.
    """
    beams = list(beams)
    if not beams:
        raise DomainError("superpose_profiles needs at least one beam")
    K = geometry.resolution_bits
    quantized = [single_beam_profile(geometry, b).phases() for b in beams]
    # sorted accumulation keeps the sum independent of beam order
    total = np.sum(np.sort(np.stack(quantized), axis=0), axis=0)
    mean = total / len(beams)
    return PhaseProfile(phase_to_level(mean, K), K)
