"""
Geometry - Singularity parameters, the sector S, the conformal map Phi and
the leaf parametrization of a linearized hyperbolic singularity.

The vector field is F = eta*z1 d/dz1 + z2 d/dz2 with eta = a + ib, b > 0.
The leaf through alpha is parametrized over the sector
S = {u + iv : v > 0, bu + av > 0}, and Phi(zeta) = zeta**gamma maps S onto
the upper half-plane.
"""

import cmath
import logging
import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np

logger = logging.getLogger(__name__)

# Slack allowed when testing membership of the closed sector.
_SECTOR_SLACK = 1e-12


@dataclass(frozen=True)
class Hyperbolicity:
    """
    Singularity parameters and the geometric constants derived from them.

    Build instances with :func:`make_hyperbolicity`; the derived fields are
    not checked for consistency when the constructor is called directly.
    """

    a: float
    b: float
    eta: complex
    u_star: float
    theta: float
    gamma: float
    rho: float
    beta: float

    @property
    def zeta_star(self) -> complex:
        """The point u* + i where {v = 1} meets the edge {bu + av = 0}."""
        return complex(self.u_star, 1.0)

    @property
    def eta_abs(self) -> float:
        return abs(self.eta)


def _finite(*values: float) -> bool:
    return all(math.isfinite(v) for v in values)


def make_hyperbolicity(a: float, b: float) -> Hyperbolicity:
    """
    Build the singularity parameters for eta = a + ib.

    Args:
        a: Real part of eta
        b: Imaginary part of eta, must be positive

    Returns:
        Hyperbolicity: Parameters with gamma, rho and beta populated

    Raises:
        ValueError: If b <= 0 or an input is not finite
    """
    a = float(a)
    b = float(b)
    if not _finite(a, b):
        raise ValueError(f"Hyperbolicity parameters must be finite, got a={a}, b={b}")
    if b <= 0:
        raise ValueError(
            f"b must be positive (swap the coordinates for b < 0), got b={b}"
        )

    u_star = -a / b
    theta = math.atan2(1.0, u_star)
    gamma = math.pi / theta
    rho = (u_star * u_star + 1.0) ** (gamma / 2.0)
    beta = gamma * rho ** (1.0 - 2.0 / gamma)

    return Hyperbolicity(
        a=a,
        b=b,
        eta=complex(a, b),
        u_star=u_star,
        theta=theta,
        gamma=gamma,
        rho=rho,
        beta=beta,
    )


def swap_coordinates(a: float, b: float) -> Tuple[float, float]:
    """
    Reduce b < 0 to b > 0 by (z1, z2) -> (z2, z1) and eta -> 1/eta.

    Args:
        a: Real part of eta
        b: Imaginary part of eta, must be non-zero

    Returns:
        Tuple (a', b') with a' + ib' = 1 / (a + ib)
    """
    if b == 0:
        raise ValueError("b must be non-zero for a hyperbolic singularity")
    inverse = 1.0 / complex(a, b)
    return inverse.real, inverse.imag


def _power(h: Hyperbolicity, u: float, v: float) -> complex:
    # arg in [0, pi): S lies in the upper half-plane, so no wrapping.
    v = v + 0.0
    modulus = math.hypot(u, v)
    angle = math.atan2(v, u)
    scale = modulus ** h.gamma
    return complex(scale * math.cos(h.gamma * angle), scale * math.sin(h.gamma * angle))


def in_closed_sector(h: Hyperbolicity, zeta: complex) -> bool:
    """Whether zeta lies in the closure of S."""
    u, v = zeta.real, zeta.imag
    slack = _SECTOR_SLACK * max(1.0, abs(zeta))
    return v >= -slack and h.b * u + h.a * v >= -slack


def phi(h: Hyperbolicity, zeta: complex) -> complex:
    """
    The conformal map Phi(zeta) = zeta**gamma from S onto the upper half-plane.

    Args:
        h: Singularity parameters
        zeta: Point of the closed sector, non-zero

    Returns:
        complex: The image Z = U + iV

    Raises:
        ValueError: If zeta is zero or outside the closed sector
    """
    zeta = complex(zeta)
    if zeta == 0:
        raise ValueError("Phi is not defined at the vertex zeta = 0")
    if not in_closed_sector(h, zeta):
        raise ValueError(f"zeta={zeta} lies outside the closed sector")
    u = zeta.real
    v = max(zeta.imag, 0.0)
    angle = min(math.atan2(v, u), h.theta)
    scale = abs(zeta) ** h.gamma
    return complex(scale * math.cos(h.gamma * angle), scale * math.sin(h.gamma * angle))


def phi_array(h: Hyperbolicity, zeta: np.ndarray) -> np.ndarray:
    """Vectorised Phi for points of the upper half-plane."""
    zeta = np.asarray(zeta, dtype=complex)
    angle = np.arctan2(np.maximum(zeta.imag, 0.0), zeta.real)
    return np.abs(zeta) ** h.gamma * np.exp(1j * h.gamma * angle)


def primed(h: Hyperbolicity, r: float) -> Tuple[float, float]:
    """
    The primed coordinates Z'(r) = Phi(zeta* + r) as a (U', V') pair.

    Fast scalar path used inside integrands.
    """
    x = h.u_star + r
    modulus = math.hypot(x, 1.0)
    angle = math.atan2(1.0, x)
    scale = modulus ** h.gamma
    return scale * math.cos(h.gamma * angle), scale * math.sin(h.gamma * angle)


def primed_array(h: Hyperbolicity, r: np.ndarray) -> np.ndarray:
    """Vectorised Z'(r) = Phi(zeta* + r)."""
    return phi_array(h, h.u_star + np.asarray(r, dtype=float) + 1j)


def leaf_point(h: Hyperbolicity, alpha: complex, zeta: complex) -> Tuple[complex, complex]:
    """
    Point of the leaf L_alpha above zeta.

    z1 = alpha * exp(i*eta*(zeta + log|alpha|/b)), z2 = exp(i*(zeta + log|alpha|/b)).

    Args:
        h: Singularity parameters
        alpha: Leaf label, non-zero (alpha = 1 is the leaf used for currents)
        zeta: Parameter in the sector

    Returns:
        Tuple (z1, z2)

    Raises:
        ValueError: If alpha is zero
    """
    alpha = complex(alpha)
    if alpha == 0:
        raise ValueError("alpha must be non-zero")
    w = complex(zeta) + math.log(abs(alpha)) / h.b
    return alpha * cmath.exp(1j * h.eta * w), cmath.exp(1j * w)


def tangency_residual(h: Hyperbolicity, zeta: complex, alpha: complex = 1.0) -> float:
    """
    Distance between d(pi)/d(zeta) and i*F(pi(zeta)).

    The derivative is evaluated from its own closed form and compared with
    the vector field at the image point.

    Returns:
        float: Euclidean norm in C^2 of the difference
    """
    z1, z2 = leaf_point(h, alpha, zeta)
    w = complex(zeta) + math.log(abs(complex(alpha))) / h.b
    dz1 = 1j * h.eta * complex(alpha) * cmath.exp(1j * h.eta * w)
    dz2 = 1j * cmath.exp(1j * w)
    field1, field2 = h.eta * z1, z2
    return math.hypot(abs(dz1 - 1j * field1), abs(dz2 - 1j * field2))


def tangency_bound(h: Hyperbolicity, zeta: complex, alpha: complex = 1.0) -> float:
    """Tolerance 1e-12 * (1 + |F(pi(zeta))|) for :func:`tangency_residual`."""
    z1, z2 = leaf_point(h, alpha, zeta)
    return 1e-12 * (1.0 + math.hypot(abs(h.eta * z1), abs(z2)))


@dataclass(frozen=True)
class SectorCoords:
    """A point of the sector in the (u, v), (r, s), Z and primed Z' systems."""

    u: float
    v: float
    r: float
    s: float
    U: float
    V: float
    U_p: float
    V_p: float
    a: float
    b: float

    @property
    def zeta(self) -> complex:
        return complex(self.u, self.v)

    @property
    def in_sector(self) -> bool:
        return self.v > 0 and self.r > 0

    @property
    def edge_distance(self) -> float:
        """Euclidean distance to the edge {bu + av = 0}."""
        return (self.b * self.u + self.a * self.v) / math.hypot(self.a, self.b)

    @property
    def rs(self) -> float:
        return self.r * self.s


def _coords(h: Hyperbolicity, u: float, v: float, r: float) -> SectorCoords:
    Z = _power(h, u, v)
    U, V = Z.real, Z.imag
    scale = v ** (-h.gamma)
    return SectorCoords(
        u=u, v=v, r=r, s=v, U=U, V=V, U_p=scale * U, V_p=scale * V, a=h.a, b=h.b
    )


def coords_from_uv(h: Hyperbolicity, u: float, v: float) -> SectorCoords:
    """
    Coordinates of zeta = u + iv in every system.

    Raises:
        ValueError: If v <= 0
    """
    if not (_finite(u, v) and v > 0):
        raise ValueError(f"v must be positive and finite, got u={u}, v={v}")
    return _coords(h, float(u), float(v), u / v - h.u_star)


def coords_from_rs(h: Hyperbolicity, r: float, s: float) -> SectorCoords:
    """
    Coordinates of zeta = s * (zeta* + r) in every system.

    Raises:
        ValueError: If s <= 0
    """
    if not (_finite(r, s) and s > 0):
        raise ValueError(f"s must be positive and finite, got r={r}, s={s}")
    return _coords(h, float(s * (r + h.u_star)), float(s), float(r))


@dataclass(frozen=True)
class PreimageRegion:
    """The preimage {v > t, bu + av > t} of the bidisc of radius exp(-t)."""

    t: float
    a: float
    b: float

    @property
    def delta(self) -> float:
        return math.exp(-self.t)

    def contains(self, zeta: complex) -> bool:
        u, v = zeta.real, zeta.imag
        return v > self.t and self.b * u + self.a * v > self.t


def preimage_region(h: Hyperbolicity, delta: float) -> PreimageRegion:
    """
    Preimage under pi of the bidisc delta*D^2.

    Raises:
        ValueError: If delta is not in (0, 1)
    """
    if not (0.0 < delta < 1.0):
        raise ValueError(f"delta must lie in (0, 1), got {delta}")
    return PreimageRegion(t=-math.log(delta), a=h.a, b=h.b)


def reflect(h: Hyperbolicity, zeta: complex) -> complex:
    """Reflection of S across its bisector; it swaps the two edges."""
    return cmath.exp(1j * h.theta) * complex(zeta).conjugate()
