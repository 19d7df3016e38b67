"""
Tests for the sector geometry, the conformal map and the leaf parametrization.
"""

import cmath
import math

import numpy as np
import pytest

from directed_currents.models.geometry import (
    coords_from_rs,
    coords_from_uv,
    in_closed_sector,
    leaf_point,
    make_hyperbolicity,
    phi,
    phi_array,
    preimage_region,
    primed,
    reflect,
    swap_coordinates,
    tangency_bound,
    tangency_residual,
)


@pytest.fixture
def h01():
    return make_hyperbolicity(0.0, 1.0)


@pytest.fixture
def h11():
    return make_hyperbolicity(1.0, 1.0)


def sector_grid(h, n=50):
    return [
        coords_from_rs(h, float(r), float(s)).zeta
        for r in np.geomspace(1e-3, 10.0, n) / h.b
        for s in np.linspace(0.1, 5.0, n)
    ]


class TestHyperbolicity:
    """Test the derived singularity constants."""

    def test_eta_i(self, h01):
        """eta = i gives Phi(zeta) = zeta**2."""
        assert h01.gamma == pytest.approx(2.0)
        assert h01.u_star == pytest.approx(0.0, abs=1e-15)
        assert h01.rho == pytest.approx(1.0)
        assert h01.beta == pytest.approx(2.0)

    def test_eta_one_plus_i(self, h11):
        """a = b = 1 opens the sector to 3 pi / 4."""
        assert h11.theta == pytest.approx(3.0 * math.pi / 4.0)
        assert h11.gamma == pytest.approx(4.0 / 3.0)
        assert math.tan(math.pi / h11.gamma) == pytest.approx(-h11.b / h11.a)

    def test_eta_minus_one_plus_i(self):
        """a = -1, b = 1 gives a quarter sector and rho = |1 + i|**4."""
        h = make_hyperbolicity(-1.0, 1.0)
        assert h.theta == pytest.approx(math.pi / 4.0)
        assert h.gamma == pytest.approx(4.0)
        assert h.rho == pytest.approx(4.0)
        assert -((1 + 1j) ** 4).real == pytest.approx(h.rho)

    def test_rejects_invalid(self):
        """b <= 0 and non-finite input are rejected."""
        for a, b in ((1.0, 0.0), (1.0, -1.0), (math.nan, 1.0), (0.0, math.inf)):
            with pytest.raises(ValueError):
                make_hyperbolicity(a, b)

    def test_swap_coordinates(self):
        """The swap inverts eta."""
        a, b = swap_coordinates(1.0, -1.0)
        assert (a, b) == pytest.approx((0.5, 0.5))
        with pytest.raises(ValueError):
            swap_coordinates(1.0, 0.0)

    def test_beta_finite_difference(self, h11):
        """V'(r) / r approaches beta."""
        r = 1e-4
        assert abs(primed(h11, r)[1] / r - h11.beta) <= 0.01 * h11.beta


class TestPhi:
    """Test the conformal map of the sector onto the upper half-plane."""

    def test_values_for_eta_i(self, h01):
        """Phi is squaring for eta = i."""
        assert abs(phi(h01, 1j) - (-1.0)) < 1e-12
        assert abs(phi(h01, 1 + 1j) - 2j) < 1e-12

    def test_zeta_star_maps_to_minus_rho(self, h11):
        """The corner zeta* lands on -rho."""
        value = phi(h11, h11.zeta_star)
        assert value.real == pytest.approx(-(2.0 ** (2.0 / 3.0)))
        assert abs(value.imag) < 1e-12

    def test_rejects_outside(self, h01):
        """The vertex and points outside the closed sector are rejected."""
        with pytest.raises(ValueError):
            phi(h01, 0j)
        with pytest.raises(ValueError):
            phi(h01, -2 + 1j)

    def test_image_in_upper_half_plane(self, h11):
        """Im Phi > 0 on an interior grid."""
        assert all(phi(h11, z).imag > 0 for z in sector_grid(h11))

    def test_edge_monotone(self, h11):
        """The ray v = 0 maps increasingly onto the positive axis."""
        values = [phi(h11, complex(u, 0.0)).real for u in np.linspace(0.1, 5.0, 20)]
        assert all(v2 > v1 for v1, v2 in zip(values, values[1:]))

    def test_vectorised_matches_scalar(self, h11):
        """phi_array agrees with phi."""
        points = sector_grid(h11, n=8)
        np.testing.assert_allclose(
            phi_array(h11, np.array(points)), [phi(h11, z) for z in points], rtol=1e-12
        )


class TestLeaf:
    """Test the leaf parametrization."""

    def test_origin(self, h11):
        """zeta = 0 maps to (1, 1)."""
        z1, z2 = leaf_point(h11, 1.0, 0j)
        assert z1 == pytest.approx(1.0)
        assert z2 == pytest.approx(1.0)

    def test_direct_exponential(self, h01):
        """zeta = i on the edge: z1 = exp(-i), z2 = exp(-1)."""
        z1, z2 = leaf_point(h01, 1.0, 1j)
        assert abs(z1 - cmath.exp(-1j)) < 1e-15
        assert abs(z2 - math.exp(-1.0)) < 1e-15

    def test_moduli_on_grid(self, h11):
        """|z1| = exp(-(bu + av)) and |z2| = exp(-v), both below 1."""
        for z in sector_grid(h11, n=20):
            z1, z2 = leaf_point(h11, 1.0, z)
            expected1 = math.exp(-(h11.b * z.real + h11.a * z.imag))
            assert abs(z1) == pytest.approx(expected1, rel=1e-12)
            assert abs(z2) == pytest.approx(math.exp(-z.imag), rel=1e-12)
            assert abs(z1) < 1.0 and abs(z2) < 1.0

    def test_leaf_label_comes_first(self, h11):
        """leaf_point(h, alpha, zeta): the alpha = 2 leaf passes through (e^{i log 2}, e^{i log 2})."""
        z1, z2 = leaf_point(h11, 2.0, 0j)
        expected = cmath.exp(1j * math.log(2.0))
        assert abs(z1 - expected) < 1e-14
        assert abs(z2 - expected) < 1e-14

    def test_rejects_zero_alpha(self, h11):
        """The leaf label must be non-zero."""
        with pytest.raises(ValueError):
            leaf_point(h11, 0, 1j)

    @pytest.mark.parametrize("a,b,zeta", [(0.0, 1.0, 1j), (1.0, 1.0, 2j), (-0.5, 2.0, 1 + 3j)])
    def test_tangency(self, a, b, zeta):
        """The leaf is tangent to the vector field."""
        h = make_hyperbolicity(a, b)
        assert tangency_residual(h, zeta) <= tangency_bound(h, zeta)


class TestCoordinates:
    """Test the (u, v), (r, s) and primed coordinate systems."""

    def test_uv_to_primed(self, h01):
        """(1 + i)**2 = 2i."""
        c = coords_from_uv(h01, 1.0, 1.0)
        assert c.r == pytest.approx(1.0)
        assert c.U_p == pytest.approx(0.0, abs=1e-12)
        assert c.V_p == pytest.approx(2.0)

    def test_primed_depends_on_r_only(self, h01):
        """Scaling zeta keeps the primed coordinates."""
        c = coords_from_uv(h01, 2.0, 2.0)
        assert c.r == pytest.approx(1.0)
        assert c.U_p == pytest.approx(0.0, abs=1e-12)
        assert c.V_p == pytest.approx(2.0)

    def test_corner(self, h11):
        """r = 0 is the edge point zeta*, where Z' = -rho."""
        c = coords_from_rs(h11, 0.0, 1.0)
        assert c.U_p == pytest.approx(-h11.rho)
        assert c.V_p == pytest.approx(0.0, abs=1e-12)

    def test_round_trip(self, h11):
        """(u, v) -> (r, s) -> (u, v) is exact to 1e-12."""
        for u, v in ((0.5, 0.3), (-0.9, 1.0), (7.0, 0.01), (3.0, 12.0)):
            c = coords_from_uv(h11, u, v)
            back = coords_from_rs(h11, c.r, v)
            assert back.u == pytest.approx(u, rel=1e-12, abs=1e-12)
            assert back.v == pytest.approx(v, rel=1e-12)

    def test_rejects_non_positive_height(self, h11):
        """v <= 0 and s <= 0 are rejected."""
        with pytest.raises(ValueError):
            coords_from_uv(h11, 1.0, 0.0)
        with pytest.raises(ValueError):
            coords_from_rs(h11, 1.0, -1.0)

    def test_edge_distance(self, h11):
        """Distance to {bu + av = 0} and the product rs."""
        c = coords_from_rs(h11, 2.0, 3.0)
        assert c.in_sector
        assert c.edge_distance == pytest.approx(h11.b * 3.0 * 2.0 / math.sqrt(2.0))
        assert c.rs == pytest.approx(6.0)

    def test_reflection_swaps_edges(self, h11):
        """The bisector reflection swaps v and (bu + av) / |eta|."""
        z = 2 + 1j
        w = reflect(h11, z)
        assert in_closed_sector(h11, w)
        assert w.imag == pytest.approx((h11.b * z.real + h11.a * z.imag) / h11.eta_abs)
        assert (h11.b * w.real + h11.a * w.imag) / h11.eta_abs == pytest.approx(z.imag)


class TestPreimageRegion:
    """Test the preimage of a bidisc."""

    def test_t(self):
        """delta = 1/e gives t = 1."""
        assert preimage_region(make_hyperbolicity(1.0, 1.0), math.exp(-1.0)).t == pytest.approx(1.0)

    def test_membership(self, h01):
        """3 + 3i is inside, 1 + 3i is not (bu + av = 1 < 2)."""
        region = preimage_region(h01, math.exp(-2.0))
        assert region.contains(3 + 3j)
        assert not region.contains(1 + 3j)
        assert region.delta == pytest.approx(math.exp(-2.0))

    def test_near_one(self, h01):
        """delta -> 1 shrinks t to 0."""
        assert preimage_region(h01, 1.0 - 1e-9).t == pytest.approx(1e-9, rel=1e-6)

    def test_rejects_out_of_range(self, h01):
        """delta must lie in (0, 1)."""
        for delta in (0.0, 1.0, 1.5, -0.1):
            with pytest.raises(ValueError):
                preimage_region(h01, delta)
