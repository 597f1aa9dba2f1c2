import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from reflectpso.errors import DomainError
from reflectpso.geometry import (AngularGrid, ArrayGeometry, BeamSpec, circular_distance,
                                 level_to_phase, optical_path_difference, phase_to_level)


def brute_force_level(phase, K):
    """Nearest level by explicit circular distance, smaller level on ties."""
    best, best_d = None, None
    for level in range(1, 2 ** K + 1):
        target = (2 * level - 1) * math.pi / 2 ** K
        d = abs(math.remainder(phase - target, 2 * math.pi))
        if best_d is None or d < best_d - 1e-9:
            best, best_d = level, d
    return best


class TestArrayGeometry:
    def test_paper_scenario_derived_quantities(self):
        g = ArrayGeometry()
        assert g.wavelength == pytest.approx(0.0856550, rel=1e-5)
        assert g.wavenumber == pytest.approx(2 * math.pi / g.wavelength)
        # 21 mm is about a quarter wavelength at 3.5 GHz
        assert g.spacing / g.wavelength == pytest.approx(0.245, abs=0.005)
        assert g.levels == 4
        assert g.elements == 900

    def test_positions_start_at_corner(self):
        g = ArrayGeometry(rows=3, cols=2, spacing=0.01)
        dx, dy = g.positions()
        assert dx.shape == (3, 2)
        np.testing.assert_allclose(dx[:, 0], [0.0, 0.01, 0.02])
        np.testing.assert_allclose(dy[0], [0.0, 0.01])

    @pytest.mark.parametrize("kwargs", [
        {"rows": 0}, {"cols": -1}, {"spacing": 0.0}, {"frequency": -1.0},
        {"element_amplitude": 0.0}, {"element_amplitude": 1.5}, {"resolution_bits": 0},
    ])
    def test_invalid(self, kwargs):
        with pytest.raises(DomainError):
            ArrayGeometry(**kwargs)


def test_beam_validation():
    BeamSpec(-30, 150)
    with pytest.raises(DomainError):
        BeamSpec(91, 0)
    with pytest.raises(DomainError):
        BeamSpec(10, 360)
    with pytest.raises(DomainError):
        BeamSpec(float("nan"), 0)


class TestAngularGrid:
    def test_default_grid(self):
        grid = AngularGrid()
        assert grid.shape == (181, 180)
        assert grid.size == 181 * 180
        assert grid.theta_samples[0] == -90 and grid.theta_samples[-1] == 90
        assert grid.phi_samples[0] == 0 and grid.phi_samples[-1] == 179
        assert grid.resolution == (1.0, 1.0)

    def test_from_ranges(self):
        grid = AngularGrid.from_ranges(-10, 10, 0.5, 0, 90, 2)
        assert grid.shape == (41, 45)

    def test_rejects_non_uniform(self):
        with pytest.raises(DomainError):
            AngularGrid(np.array([0.0, 1.0, 3.0]), np.array([0.0]))
        with pytest.raises(DomainError):
            AngularGrid(np.array([1.0, 0.0]), np.array([0.0]))

    def test_equality_and_hash(self):
        assert AngularGrid() == AngularGrid.from_ranges()
        assert hash(AngularGrid()) == hash(AngularGrid.from_ranges())


class TestLevelToPhase:
    def test_two_bit_mapping(self):
        got = [math.degrees(level_to_phase(l, 2)) for l in (1, 2, 3, 4)]
        np.testing.assert_allclose(got, [45, 135, 225, 315])

    def test_examples(self):
        assert level_to_phase(1, 2) == pytest.approx(math.pi / 4)
        assert math.degrees(level_to_phase(4, 2)) == pytest.approx(315)
        assert math.degrees(level_to_phase(2, 1)) == pytest.approx(270)

    @pytest.mark.parametrize("level", [0, 5, -1])
    def test_out_of_range(self, level):
        with pytest.raises(DomainError, match=f"level {level}.*resolution_bits=2"):
            level_to_phase(level, 2)

    def test_vectorized(self):
        out = level_to_phase(np.array([[1, 2], [3, 4]]), 2)
        assert out.shape == (2, 2)


class TestPhaseToLevel:
    def test_examples(self):
        assert phase_to_level(math.radians(100), 2) == brute_force_level(math.radians(100), 2) == 2
        assert phase_to_level(0.0, 2) == 1
        assert phase_to_level(math.radians(-45), 2) == 4

    def test_tie_between_45_and_135_goes_low(self):
        assert phase_to_level((math.pi / 4 + 3 * math.pi / 4) / 2, 2) == 1

    def test_non_finite(self):
        with pytest.raises(DomainError):
            phase_to_level(float("inf"), 2)

    @pytest.mark.parametrize("K", [1, 2, 3])
    def test_round_trip_all_levels(self, K):
        for level in range(1, 2 ** K + 1):
            assert phase_to_level(level_to_phase(level, K), K) == level

    @given(st.floats(-50, 50, allow_nan=False), st.integers(1, 4))
    def test_matches_brute_force(self, phase, K):
        assert phase_to_level(phase, K) == brute_force_level(phase, K)

    @given(st.floats(-1e3, 1e3, allow_nan=False), st.integers(1, 5))
    def test_quantization_error_bound(self, phase, K):
        q = level_to_phase(phase_to_level(phase, K), K)
        assert circular_distance(phase, q) <= math.pi / 2 ** K + 1e-9


class TestOpticalPathDifference:
    def test_broadside_is_zero(self):
        g = ArrayGeometry(rows=4, cols=3)
        assert np.all(optical_path_difference(g, 0.0, 37.0) == 0)

    def test_endfire_along_x(self):
        g = ArrayGeometry(rows=4, cols=3)
        dx, _ = g.positions()
        np.testing.assert_allclose(optical_path_difference(g, 90.0, 0.0), dx, atol=1e-15)

    def test_hand_value(self):
        g = ArrayGeometry(rows=1, cols=2, spacing=0.1)
        opd = optical_path_difference(g, 30.0, 90.0)
        assert opd[0, 1] == pytest.approx(0.05, abs=1e-15)
