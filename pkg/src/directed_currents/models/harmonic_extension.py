"""
Harmonic extension - Poisson extension of the boundary data to the upper
half-plane, the composed function H = H~ o Phi on the sector, and the kernel
integral I(x') in the primed variables.
"""

import logging
import math
from typing import List, Optional, Tuple

import numpy as np
from scipy.optimize import brentq

from .epsilon_profiles import BoundaryData
from .geometry import Hyperbolicity, phi, primed
from .quadrature import Estimate, QuadratureError, QuadratureSpec, integrate

logger = logging.getLogger(__name__)


def _peak_points(gamma: float, U: float, V: float, side: int) -> List[float]:
    # x = side * tau**gamma; the kernel peaks where x = U with width V in x.
    points = [V ** (1.0 / gamma), 10.0 * V ** (1.0 / gamma), 1.0, 10.0]
    if side * U > 0:
        tau_c = abs(U) ** (1.0 / gamma)
        width = V / (gamma * tau_c ** (gamma - 1.0)) if gamma > 1 else V
        points.append(tau_c)
        for k in (1.0, 8.0):
            points.append(tau_c - k * width)
            points.append(tau_c + k * width)
    return [p for p in points if p > 0]


def _side_upper_limit(bd: BoundaryData, U: float, V: float, q: QuadratureSpec) -> Tuple[float, float]:
    """Truncation point and certified tail for one half-line of the Poisson integral."""
    gamma = bd.gamma
    tau_c = abs(U) ** (1.0 / gamma)
    upper = max(2.0 ** (1.0 / gamma) * tau_c, tau_c + q.tail_cutoff_t)
    # For tau**gamma >= 2|U| the kernel is at most 4V / tau**(2 gamma).
    tail = 4.0 * V * upper ** (-gamma - 1.0) * bd.tail_mass(upper) / math.pi
    if tail < q.tol_abs:
        return upper, tail
    return math.inf, 0.0


def poisson_extend_estimate(bd: BoundaryData, U: float, V: float, q: QuadratureSpec) -> Estimate:
    """
    Poisson extension of the boundary data at U + iV with its error bound.

    Both half-lines are integrated in the variable x = +-tau**gamma. Close to
    the real axis the kernel is a nascent delta; there the value H~(U) is
    taken out exactly and only the remainder is integrated.

    Args:
        bd: Boundary data on the real line
        U: Real part of the evaluation point
        V: Imaginary part, must be positive
        q: Quadrature specification

    Returns:
        Estimate: Value (non-negative) and absolute error including tail bounds

    Raises:
        ValueError: If V <= 0 or an input is not finite
        QuadratureError: If an integral does not converge
    """
    if not (math.isfinite(U) and math.isfinite(V)):
        raise ValueError(f"Evaluation point must be finite, got U={U}, V={V}")
    if V <= 0:
        raise ValueError(f"V must be positive, got {V}")

    gamma = bd.gamma
    split = V < q.split_ratio * (1.0 + abs(U))
    anchor = bd.on_line(U) if split else 0.0

    total = Estimate(anchor, 0.0)
    for side in (1, -1):

        def integrand(tau: float, side: int = side) -> float:
            x = side * tau ** gamma
            density = bd.tau_density(tau)
            if split:
                density -= anchor * gamma * tau ** (gamma - 1.0)
            return density * V / (V * V + (U - x) ** 2)

        points = _peak_points(gamma, U, V, side) + list(bd.breakpoints())
        if split:
            upper, tail = math.inf, 0.0
        else:
            upper, tail = _side_upper_limit(bd, U, V, q)
        part = integrate(integrand, 0.0, upper, q, points=points)
        total = total + part.scaled(1.0 / math.pi) + Estimate(0.0, tail)

    if total.value < 0:
        logger.debug("Clamped Poisson value %.3g at U=%g V=%g", total.value, U, V)
        total = Estimate(0.0, total.error + abs(total.value))
    return total


def poisson_extend(bd: BoundaryData, U: float, V: float, q: QuadratureSpec) -> float:
    """
    Poisson extension (1/pi) * int H~(x) V / (V**2 + (U - x)**2) dx.

    See :func:`poisson_extend_estimate` for the error-carrying variant.
    """
    return poisson_extend_estimate(bd, U, V, q).value


def h_on_sector(h: Hyperbolicity, bd: BoundaryData, zeta: complex, q: QuadratureSpec) -> float:
    """
    H(zeta) = H~(Phi(zeta)) for zeta in the open sector.

    Raises:
        ValueError: If zeta is not in the open sector
    """
    zeta = complex(zeta)
    if not (zeta.imag > 0 and h.b * zeta.real + h.a * zeta.imag > 0):
        raise ValueError(f"zeta={zeta} is not in the open sector")
    Z = phi(h, zeta)
    return poisson_extend(bd, Z.real, Z.imag, q)


class SectorField:
    """
    H on the sector in (r, s) coordinates.

    H(s * (zeta* + r)) = H~(s**gamma * Z'(r)). Evaluation is pure, so one
    instance can be shared between worker threads. Nothing is memoised:
    adaptive quadrature nodes do not repeat across integrals.
    """

    def __init__(self, h: Hyperbolicity, bd: BoundaryData, q: QuadratureSpec):
        self.h = h
        self.bd = bd
        self.q = q

    def value(self, r: float, s: float) -> float:
        """H at zeta = s * (zeta* + r), r > 0, s > 0."""
        U_p, V_p = primed(self.h, r)
        scale = s ** self.h.gamma
        return poisson_extend(self.bd, scale * U_p, scale * V_p, self.q)

    def value_uv(self, u: float, v: float) -> float:
        return self.value(u / v - self.h.u_star, v)


def mean_value_residual(
    bd: BoundaryData,
    Z0: complex,
    radius: float,
    n_samples: int,
    q: QuadratureSpec,
) -> float:
    """
    |H~(Z0) - mean of H~ over n equispaced points of the circle |Z - Z0| = radius|.

    The trapezoid rule on a circle is spectrally accurate for harmonic
    functions, so the residual certifies harmonicity of the extension.

    Raises:
        ValueError: If the disc leaves the upper half-plane or n_samples < 3
    """
    Z0 = complex(Z0)
    if radius <= 0 or Z0.imag - radius <= 0:
        raise ValueError(f"Disc of radius {radius} about {Z0} leaves the upper half-plane")
    if n_samples < 3:
        raise ValueError(f"n_samples must be at least 3, got {n_samples}")
    centre = poisson_extend(bd, Z0.real, Z0.imag, q)
    angles = 2.0 * np.pi * np.arange(n_samples) / n_samples
    ring = Z0 + radius * np.exp(1j * angles)
    values = [poisson_extend(bd, float(z.real), float(z.imag), q) for z in ring]
    return abs(centre - math.fsum(values) / n_samples)


def kernel_value(h: Hyperbolicity, r: float, x_p: float) -> float:
    """The integrand V'/(V'**2 + (U' - x')**2) at r."""
    U_p, V_p = primed(h, r)
    return V_p / (V_p * V_p + (U_p - x_p) ** 2)


def find_kernel_peak(h: Hyperbolicity, x_p: float) -> Optional[float]:
    """
    Largest r > 0 with U'(r) = x', or None when U' never reaches x'.

    Beyond that point U' grows like r**gamma, so the kernel of I(x') peaks there.
    """
    r_max = (abs(x_p) + h.rho + 1.0) ** (1.0 / h.gamma) + abs(h.u_star) + 10.0
    grid = np.concatenate((np.geomspace(1e-8, 1.0, 60), np.linspace(1.0, r_max, 400)[1:]))
    gap = np.array([primed(h, r)[0] - x_p for r in grid])
    changes = np.nonzero(np.sign(gap[:-1]) != np.sign(gap[1:]))[0]
    if len(changes) == 0:
        return None
    i = int(changes[-1])
    if gap[i] == 0.0:
        return float(grid[i])
    return float(brentq(lambda r: primed(h, r)[0] - x_p, grid[i], grid[i + 1], xtol=1e-14))


def kernel_tail_bound(h: Hyperbolicity, x_p: float, R: float) -> float:
    """
    Certified bound for the integral of the kernel over r >= R.

    Valid when R + u* > 0 and (R + u*)**gamma >= 2|x'|: there
    |Z' - x'| >= |Z'|/2 and V' <= gamma |Z'| / (r + u*), so the integrand is
    at most 4 gamma (r + u*)**(-gamma - 1). Returns inf otherwise.
    """
    base = R + h.u_star
    if base <= 0 or base ** h.gamma < 2.0 * abs(x_p):
        return math.inf
    return 4.0 * base ** (-h.gamma)


def kernel_truncation(h: Hyperbolicity, x_p: float, R: float, q: QuadratureSpec) -> Tuple[float, float]:
    """
    Truncation radius of the kernel integral and its certified tail.

    Requires R to satisfy the conditions of :func:`kernel_tail_bound`. The
    cut-off is pushed out until the tail bound drops to q.tol_abs.

    Returns:
        Tuple (cut-off radius >= R, tail bound beyond it)
    """
    base = max(R + h.u_star, (4.0 / q.tol_abs) ** (1.0 / h.gamma))
    cutoff = base - h.u_star
    return cutoff, kernel_tail_bound(h, x_p, cutoff)


def kernel_integral_estimate(h: Hyperbolicity, x_p: float, r_lo: float, q: QuadratureSpec) -> Estimate:
    """
    I(x') = int_{r_lo}^inf V'(r) / (V'(r)**2 + (U'(r) - x')**2) dr with error bound.

    The range is split at the kernel peak and at the radius R beyond which
    the r**(-gamma - 1) tail bound holds. The piece past R is integrated up
    to the truncation radius and checked against that bound; the tail beyond
    the truncation is added to the error.

    Raises:
        ValueError: If r_lo < 0 or x' is not finite
        QuadratureError: If an integral does not converge or violates the tail bound
    """
    if not (math.isfinite(x_p) and math.isfinite(r_lo) and r_lo >= 0):
        raise ValueError(f"Need finite x' and r_lo >= 0, got x'={x_p}, r_lo={r_lo}")

    points = [r_lo + d for d in (1e-3, 1e-2, 0.1, 1.0, 10.0)]
    peak = find_kernel_peak(h, x_p)
    if peak is not None:
        U_p, V_p = primed(h, peak)
        width = max(V_p / max(h.gamma * peak ** (h.gamma - 1.0), 1e-12), 1e-12)
        width = min(width, max(peak, 1e-12))
        points += [peak] + [peak + k * width for k in (-8.0, -1.0, 1.0, 8.0)]
    R = max(
        max(points),
        1.0 - h.u_star,
        (2.0 * abs(x_p)) ** (1.0 / h.gamma) - h.u_star,
    )
    points.append(R)

    def integrand(r: float) -> float:
        return kernel_value(h, r, x_p)

    head = integrate(integrand, r_lo, R, q, points=points)
    start = max(R, r_lo)
    cutoff, tail_bound = kernel_truncation(h, x_p, start, q)
    decades = max(2, int(math.ceil(math.log10(cutoff / start))) + 1)
    middle = integrate(integrand, start, cutoff, q, points=list(np.geomspace(start, cutoff, decades)))
    bound = kernel_tail_bound(h, x_p, start)
    if middle.value > bound * (1.0 + 1e-6) + q.tol_abs:
        raise QuadratureError(
            f"Kernel tail beyond r={start:g} exceeds its bound {bound:.3g}", middle.value, middle.error
        )
    return head + middle + Estimate(0.0, tail_bound)


def kernel_integral_I(h: Hyperbolicity, x_p: float, r_lo: float, q: QuadratureSpec) -> float:
    """
    The kernel integral of the primed variables.

    Args:
        h: Singularity parameters
        x_p: The rescaled boundary point x' = s**-gamma * x
        r_lo: Lower limit, 0 for the full integral and 1/b for the half sector
        q: Quadrature specification

    Returns:
        float: I(x')
    """
    return kernel_integral_estimate(h, x_p, r_lo, q).value
