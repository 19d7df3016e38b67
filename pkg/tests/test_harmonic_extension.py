"""
Tests for the Poisson extension, the composed sector function and the
kernel integral of the primed variables.
"""

import cmath
import math

import numpy as np
import pytest

from directed_currents.models.asymptotics import window_integral
from directed_currents.models.epsilon_profiles import (
    BoundaryData,
    ConstantBoundaryData,
    power_profile,
)
from directed_currents.models.geometry import coords_from_rs, make_hyperbolicity
from directed_currents.models.harmonic_extension import (
    SectorField,
    find_kernel_peak,
    h_on_sector,
    kernel_integral_I,
    kernel_integral_estimate,
    kernel_tail_bound,
    kernel_truncation,
    kernel_value,
    mean_value_residual,
    poisson_extend,
    poisson_extend_estimate,
)
from directed_currents.models.quadrature import QuadratureSpec


class TentBoundaryData(BoundaryData):
    """H~(x) = max(0, 1 - |x|) with gamma = 1."""

    def __init__(self):
        super().__init__(1.0)

    def on_line(self, x):
        return max(0.0, 1.0 - abs(x))

    def tau_density(self, tau):
        return max(0.0, 1.0 - tau)

    def breakpoints(self):
        return (1.0,)

    def tail_mass(self, tau):
        return 0.0 if tau >= 1.0 else math.inf


@pytest.fixture
def q():
    return QuadratureSpec()


@pytest.fixture
def h01():
    return make_hyperbolicity(0.0, 1.0)


@pytest.fixture
def power_data():
    return power_profile(1.0).boundary_data(2.0)


class TestPoissonExtend:
    """Test the Poisson extension on the upper half-plane."""

    @pytest.mark.parametrize("U,V", [(0.0, 1.0), (3.0, 0.5), (-20.0, 2.0), (1.0, 1e-3)])
    def test_constant_data(self, q, U, V):
        """Constant data extends to the same constant, split or not."""
        bd = ConstantBoundaryData(3.0, 2.0)
        assert poisson_extend(bd, U, V, q) == pytest.approx(3.0, rel=1e-7)

    def test_constant_data_random_points(self, q):
        """The kernel has unit mass everywhere in H."""
        rng = np.random.default_rng(7)
        bd = ConstantBoundaryData(1.0, 4.0 / 3.0)
        for U, logV in zip(rng.uniform(-10.0, 10.0, 20), rng.uniform(-2.0, 1.0, 20)):
            assert poisson_extend(bd, float(U), float(10.0 ** logV), q) == pytest.approx(1.0, rel=1e-7)

    def test_tent(self, q):
        """The tent at i gives (pi/2 - ln 2) / pi."""
        expected = (math.pi / 2.0 - math.log(2.0)) / math.pi
        assert poisson_extend(TentBoundaryData(), 0.0, 1.0, q) == pytest.approx(expected, rel=1e-8)

    def test_symmetry(self, q, power_data):
        """Boundary data even in x gives an extension even in U."""
        for U, V in ((0.7, 0.3), (5.0, 2.0), (40.0, 10.0)):
            assert poisson_extend(power_data, U, V, q) == pytest.approx(
                poisson_extend(power_data, -U, V, q), rel=1e-8
            )

    def test_positive(self, q, power_data):
        """Positive data has a positive extension."""
        for U in (-50.0, -1.0, 0.0, 2.0, 80.0):
            for V in (1e-3, 0.1, 10.0):
                assert poisson_extend(power_data, U, V, q) > 0

    def test_boundary_recovery(self, q, power_data):
        """H~(1 + iV) tends to H~(1) as V -> 0."""
        target = power_data.on_line(1.0)
        errors = [abs(poisson_extend(power_data, 1.0, V, q) - target) for V in (1e-1, 1e-2, 1e-3)]
        assert errors[0] > errors[1] > errors[2]

    def test_error_estimate(self, q, power_data):
        """The error bound is small compared with the value."""
        result = poisson_extend_estimate(power_data, 2.0, 1.0, q)
        assert result.value > 0
        assert 0 <= result.error < 1e-6 * result.value

    def test_rejects_boundary(self, q, power_data):
        """V <= 0 and non-finite points are rejected."""
        for U, V in ((0.0, 0.0), (1.0, -1.0), (math.nan, 1.0)):
            with pytest.raises(ValueError):
                poisson_extend(power_data, U, V, q)


class TestMeanValue:
    """Test harmonicity through the mean value property."""

    def test_constant(self, q):
        """Constant data has no residual."""
        bd = ConstantBoundaryData(2.0, 2.0)
        assert mean_value_residual(bd, 1 + 3j, 1.0, 16, q) < 1e-7

    def test_power_data(self, q, power_data):
        """The extension of profile data is harmonic at 2i."""
        value = poisson_extend(power_data, 0.0, 2.0, q)
        assert mean_value_residual(power_data, 2j, 1.0, 64, q) <= 1e-6 * value

    def test_rejects_bad_disc(self, q, power_data):
        """The disc must stay in H and use at least 3 samples."""
        with pytest.raises(ValueError):
            mean_value_residual(power_data, 1j, 1.0, 16, q)
        with pytest.raises(ValueError):
            mean_value_residual(power_data, 2j, 1.0, 2, q)


class TestSector:
    """Test H = H~ o Phi on the sector."""

    def test_diagonal(self, q, h01, power_data):
        """Phi(y exp(i pi/4)) = i y**2 for eta = i."""
        for y in (0.5, 1.0, 2.0):
            zeta = y * cmath.exp(1j * math.pi / 4.0)
            assert h_on_sector(h01, power_data, zeta, q) == pytest.approx(
                poisson_extend(power_data, 0.0, y * y, q), rel=1e-10
            )

    def test_rejects_outside(self, q, h01, power_data):
        """Points outside the open sector are rejected."""
        for zeta in (1.0 + 0j, -1 + 1j, 0j):
            with pytest.raises(ValueError):
                h_on_sector(h01, power_data, zeta, q)

    def test_field_matches_direct_evaluation(self, q, h01, power_data):
        """SectorField in (r, s) agrees with h_on_sector."""
        field = SectorField(h01, power_data, q)
        c = coords_from_rs(h01, 0.5, 1.5)
        assert field.value(0.5, 1.5) == pytest.approx(h_on_sector(h01, power_data, c.zeta, q), rel=1e-10)
        assert field.value_uv(c.u, c.v) == pytest.approx(field.value(0.5, 1.5), rel=1e-10)

    def test_field_shared_between_threads(self, q, h01, power_data):
        """One evaluator serves several threads with identical results."""
        from concurrent.futures import ThreadPoolExecutor

        field = SectorField(h01, power_data, q)
        points = [(0.2, 1.0), (1.0, 2.0), (3.0, 0.5)] * 4
        expected = [field.value(r, s) for r, s in points]
        with ThreadPoolExecutor(max_workers=4) as pool:
            values = list(pool.map(lambda point: field.value(*point), points))
        assert values == expected

    def test_positive_on_grid(self, q):
        """H > 0 on a 30 x 30 interior grid of the sector."""
        h = make_hyperbolicity(1.0, 1.0)
        field = SectorField(h, power_profile(0.5).boundary_data(h.gamma), q)
        for r in np.geomspace(1e-3, 10.0, 30):
            for s in np.linspace(0.1, 4.0, 30):
                assert field.value(float(r), float(s)) > 0


class TestKernelIntegral:
    """Test I(x') against closed forms for eta = i."""

    def test_kernel_value(self, h01):
        """At r = 1, Z' = 2i."""
        assert kernel_value(h01, 1.0, 0.0) == pytest.approx(0.5)

    def test_peak(self, h01):
        """U'(r) = r**2 - 1 reaches 4 at sqrt(5)."""
        assert find_kernel_peak(h01, 4.0) == pytest.approx(math.sqrt(5.0), rel=1e-10)
        assert find_kernel_peak(h01, -2.0) is None

    def test_full_integral(self, q, h01):
        """I(4) = (pi/2 + atan(3/4)) / 4."""
        expected = (math.pi / 2.0 + math.atan(0.75)) / 4.0
        assert kernel_integral_I(h01, 4.0, 0.0, q) == pytest.approx(expected, rel=1e-7)

    @pytest.mark.parametrize("x_p", [1.0, 9.0, 100.0])
    def test_half_sector_integral(self, q, h01, x_p):
        """I(x'; r >= 1) = (pi/2 + atan((x' - 2) / (2 sqrt x'))) / (2 sqrt x')."""
        root = math.sqrt(x_p)
        expected = (math.pi / 2.0 + math.atan((x_p - 2.0) / (2.0 * root))) / (2.0 * root)
        assert kernel_integral_I(h01, x_p, 1.0, q) == pytest.approx(expected, rel=1e-7)

    def test_negative_side(self, q, h01):
        """I(-2) = ln(3 + 2 sqrt 2) / (2 sqrt 2)."""
        expected = math.log(3.0 + 2.0 * math.sqrt(2.0)) / (2.0 * math.sqrt(2.0))
        assert kernel_integral_I(h01, -2.0, 0.0, q) == pytest.approx(expected, rel=1e-7)

    def test_tail_bound(self, h01):
        """The bound is infinite before the kernel peak and 4 R**-gamma after."""
        assert kernel_tail_bound(h01, 100.0, 5.0) == math.inf
        assert kernel_tail_bound(h01, 1.0, 2.0) == pytest.approx(1.0)

    def test_truncation_radius(self, q, h01):
        """The cut-off is pushed out until the tail bound reaches tol_abs."""
        cutoff, bound = kernel_truncation(h01, 4.0, 3.0, q)
        assert cutoff == pytest.approx(2e6)
        assert bound == pytest.approx(q.tol_abs)
        assert kernel_tail_bound(h01, 4.0, cutoff) == bound

    def test_tail_in_error_estimate(self, q, h01):
        """The truncated tail is carried in the error, not dropped."""
        expected = (math.pi / 2.0 + math.atan(0.75)) / 4.0
        assert kernel_integral_estimate(h01, 4.0, 0.0, q).error >= q.tol_abs * (1.0 - 1e-9)

        loose = QuadratureSpec(tol_abs=1e-4)
        result = kernel_integral_estimate(h01, 4.0, 0.0, loose)
        assert result.error >= 1e-4 * (1.0 - 1e-9)
        assert result.value < expected
        assert abs(result.value - expected) <= result.error

    def test_window(self, q, h01):
        """The unit window after the peak at x' = 100."""
        expected = (math.atan(1.1) - math.atan(0.05)) / 20.0
        assert window_integral(h01, 100.0, q) == pytest.approx(expected, rel=1e-8)

    def test_rejects_bad_input(self, q, h01):
        """r_lo must be non-negative and x' finite."""
        with pytest.raises(ValueError):
            kernel_integral_I(h01, 1.0, -1.0, q)
        with pytest.raises(ValueError):
            kernel_integral_I(h01, math.inf, 0.0, q)
