"""
Epsilon profiles - The modulus function epsilon, its admissible
replacements, and the boundary data H~ it induces on the real line.

An admissible profile is smooth on (0, 1], strictly increasing, concave and
vanishes at 0. The boundary data is

    H~(+-t**gamma) = gamma**-1 * A * exp(-t) * eps'(exp(-t)),   t >= 0,

which is even in x by construction.
"""

import logging
import math
from abc import ABC, abstractmethod
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import brentq, minimize_scalar
from scipy.special import logsumexp, softmax

from .quadrature import QuadratureSpec, integrate

logger = logging.getLogger(__name__)


class EpsilonProfile(ABC):
    """
    Base class for modulus functions epsilon on (0, 1].

    Subclasses implement :meth:`value` and :meth:`derivative`; the tau-variable
    helpers can be overridden where a closed form avoids underflow.
    """

    kind: str = "abstract"

    def __init__(self, amplitude: float):
        if not (math.isfinite(amplitude) and amplitude > 0):
            raise ValueError(f"Amplitude A must be positive, got {amplitude}")
        self.amplitude = float(amplitude)

    @abstractmethod
    def value(self, delta: float) -> float:
        """epsilon(delta)."""

    @abstractmethod
    def derivative(self, delta: float) -> float:
        """epsilon'(delta)."""

    @abstractmethod
    def params(self) -> Dict[str, Any]:
        """Parameters identifying the profile in reports."""

    def weight(self, tau: float) -> float:
        """exp(-tau) * epsilon'(exp(-tau))."""
        delta = math.exp(-tau)
        if delta == 0.0:
            return 0.0
        return delta * self.derivative(delta)

    def value_at_tau(self, tau: float) -> float:
        """epsilon(exp(-tau))."""
        return self.value(math.exp(-tau))

    def label(self) -> str:
        details = ",".join(f"{k}={v:g}" for k, v in self.params().items())
        return f"{self.kind}({details}) A={self.amplitude:g}"

    def check_invariants(self, n: int = 200) -> Dict[str, bool]:
        """
        Check positivity, monotonicity, concavity and vanishing at 0 on a grid.

        Args:
            n: Number of grid points in (0, 1]

        Returns:
            Dict mapping invariant names to pass flags
        """
        grid = np.geomspace(1e-6, 1.0, n)
        values = np.array([self.value(d) for d in grid])
        slopes = np.array([self.derivative(d) for d in grid])
        tolerance = 1e-12 * np.max(np.abs(slopes))
        return {
            "positive": bool(np.all(values > 0)),
            "increasing": bool(np.all(slopes > 0) and np.all(np.diff(values) > 0)),
            "concave": bool(np.all(np.diff(slopes) <= tolerance)),
            "vanishes_at_zero": self._vanishes_at_zero(),
        }

    def _vanishes_at_zero(self) -> bool:
        return self.value(1e-8) <= 1e-3 * self.value(1.0)

    def boundary_data(self, gamma: float) -> "ProfileBoundaryData":
        return ProfileBoundaryData(self, gamma)


class PowerProfile(EpsilonProfile):
    """epsilon(delta) = delta**p with 0 < p <= 1."""

    kind = "power"

    def __init__(self, p: float, amplitude: float = 10.0):
        super().__init__(amplitude)
        if not (0.0 < p <= 1.0):
            raise ValueError(f"Power exponent p must lie in (0, 1], got {p}")
        self.p = float(p)

    def value(self, delta: float) -> float:
        return delta ** self.p

    def derivative(self, delta: float) -> float:
        return self.p * delta ** (self.p - 1.0)

    def weight(self, tau: float) -> float:
        return self.p * math.exp(-self.p * tau)

    def value_at_tau(self, tau: float) -> float:
        return math.exp(-self.p * tau)

    def params(self) -> Dict[str, Any]:
        return {"p": self.p}


class LogPowerProfile(EpsilonProfile):
    """
    epsilon(delta) = log(e / delta)**-alpha, capped where it stops being concave.

    Above the cap the profile continues along its tangent line, which keeps
    it increasing, concave and C^1.
    """

    kind = "log_power"

    def __init__(self, alpha: float, amplitude: float = 10.0):
        super().__init__(amplitude)
        if not (math.isfinite(alpha) and alpha > 0):
            raise ValueError(f"alpha must be positive, got {alpha}")
        self.alpha = float(alpha)
        self.cap = self._find_cap()
        self.tau_cap = -math.log(self.cap)
        self._value_cap = self._raw_value(self.cap)
        self._slope_cap = self._raw_derivative(self.cap)

    def _raw_value(self, delta: float) -> float:
        return (1.0 - math.log(delta)) ** (-self.alpha)

    def _raw_derivative(self, delta: float) -> float:
        return self.alpha * (1.0 - math.log(delta)) ** (-self.alpha - 1.0) / delta

    def _raw_curvature(self, delta: float) -> float:
        step = 1e-5 * delta
        return (self._raw_derivative(delta + step) - self._raw_derivative(delta - step)) / (
            2.0 * step
        )

    def _find_cap(self) -> float:
        grid = np.geomspace(1e-12, 1.0 - 1e-9, 400)
        signs = [self._raw_curvature(d) >= 0 for d in grid]
        for i, convex in enumerate(signs):
            if convex:
                if i == 0:
                    raise ValueError(f"log-power profile with alpha={self.alpha} is never concave")
                cap = brentq(self._raw_curvature, grid[i - 1], grid[i], xtol=1e-14)
                logger.debug("log-power alpha=%g capped at delta=%.12g", self.alpha, cap)
                return float(cap)
        return 1.0

    def value(self, delta: float) -> float:
        if delta <= 0.0:
            return 0.0
        if delta <= self.cap:
            return self._raw_value(delta)
        return self._value_cap + self._slope_cap * (delta - self.cap)

    def derivative(self, delta: float) -> float:
        if delta <= self.cap:
            return self._raw_derivative(delta)
        return self._slope_cap

    def weight(self, tau: float) -> float:
        if tau >= self.tau_cap:
            return self.alpha * (1.0 + tau) ** (-self.alpha - 1.0)
        return math.exp(-tau) * self._slope_cap

    def value_at_tau(self, tau: float) -> float:
        if tau >= self.tau_cap:
            return (1.0 + tau) ** (-self.alpha)
        return self.value(math.exp(-tau))

    def params(self) -> Dict[str, Any]:
        return {"alpha": self.alpha}

    def _vanishes_at_zero(self) -> bool:
        # Logarithmic decay: (log(e/delta))**-alpha stays above 1e-3 long after
        # delta underflows, so check strict decrease far into the tail instead.
        samples = [self.value_at_tau(-math.log(d)) for d in (1e-2, 1e-8)]
        samples.append(self.value_at_tau(300.0 * math.log(10.0)))
        return samples[0] > samples[1] > samples[2] > 0.0


class TabulatedProfile(EpsilonProfile):
    """
    Smooth concave majorant of tabulated samples.

    The profile is a shifted soft minimum of the supporting lines of the upper
    concave envelope, so it is smooth, concave and at least the envelope.
    """

    kind = "tabulated"

    def __init__(
        self,
        slopes: Sequence[float],
        intercepts: Sequence[float],
        smoothing: float,
        amplitude: float = 10.0,
        samples: Optional[Sequence[Tuple[float, float]]] = None,
    ):
        super().__init__(amplitude)
        self._slopes = np.asarray(slopes, dtype=float)
        self._intercepts = np.asarray(intercepts, dtype=float)
        self.smoothing = float(smoothing)
        self._shift = self.smoothing * math.log(len(self._slopes))
        self.samples = list(samples or [])
        self.majorant_gap = self._gap()

    def _lines(self, delta: float) -> np.ndarray:
        return self._intercepts + self._slopes * delta

    def value(self, delta: float) -> float:
        lines = self._lines(delta)
        return float(-self.smoothing * logsumexp(-lines / self.smoothing) + self._shift)

    def derivative(self, delta: float) -> float:
        weights = softmax(-self._lines(delta) / self.smoothing)
        return float(np.dot(weights, self._slopes))

    def params(self) -> Dict[str, Any]:
        return {"samples": len(self.samples), "gap": self.majorant_gap}

    def _gap(self) -> float:
        if not self.samples:
            return 0.0
        return max(self.value(d) - e for d, e in self.samples)


def power_profile(p: float, amplitude: float = 10.0) -> PowerProfile:
    """
    epsilon(delta) = delta**p.

    Args:
        p: Exponent in (0, 1]
        amplitude: The constant A

    Returns:
        PowerProfile: The profile
    """
    return PowerProfile(p, amplitude)


def log_power_profile(alpha: float, amplitude: float = 10.0) -> LogPowerProfile:
    """epsilon(delta) = log(e/delta)**-alpha, extended linearly above its concavity cap."""
    return LogPowerProfile(alpha, amplitude)


def _upper_hull(points: List[Tuple[float, float]]) -> List[Tuple[float, float]]:
    hull: List[Tuple[float, float]] = []
    for x, y in points:
        while len(hull) >= 2:
            (x1, y1), (x2, y2) = hull[-2], hull[-1]
            # Drop the middle point unless it lies strictly above the chord.
            if (x2 - x1) * (y - y1) - (y2 - y1) * (x - x1) >= 0:
                hull.pop()
            else:
                break
        hull.append((x, y))
    return hull


def concave_majorant(
    samples: Sequence[Tuple[float, float]],
    amplitude: float = 10.0,
    min_slope: Optional[float] = None,
) -> TabulatedProfile:
    """
    Smooth, strictly increasing, concave profile dominating the samples.

    The upper concave envelope of the samples and the origin is flattened
    after its maximum, tilted by ``min_slope`` and smoothed by a soft minimum
    of its supporting lines.

    Args:
        samples: (delta, epsilon) pairs, delta strictly increasing in (0, 1]
        amplitude: The constant A
        min_slope: Tilt enforcing strict increase (default 1e-6 * max epsilon)

    Returns:
        TabulatedProfile: The majorant

    Raises:
        ValueError: If there are fewer than 2 samples or the grid is invalid
    """
    pairs = [(float(d), float(e)) for d, e in samples]
    if len(pairs) < 2:
        raise ValueError(f"At least 2 samples are required, got {len(pairs)}")
    deltas = [d for d, _ in pairs]
    if any(d2 <= d1 for d1, d2 in zip(deltas, deltas[1:])):
        raise ValueError("Sample deltas must be strictly increasing")
    if deltas[0] <= 0 or deltas[-1] > 1:
        raise ValueError("Sample deltas must lie in (0, 1]")
    if any(not (math.isfinite(e) and e > 0) for _, e in pairs):
        raise ValueError("Sample values must be positive and finite")

    hull = _upper_hull([(0.0, 0.0)] + pairs)
    peak = max(range(len(hull)), key=lambda i: hull[i][1])
    hull = hull[: peak + 1]
    top = hull[-1][1]
    tilt = 1e-6 * top if min_slope is None else float(min_slope)

    slopes = []
    intercepts = []
    for (x1, y1), (x2, y2) in zip(hull, hull[1:]):
        slope = (y2 - y1) / (x2 - x1)
        slopes.append(slope + tilt)
        intercepts.append(y1 - slope * x1)
    slopes.append(tilt)
    intercepts.append(top)

    smallest = min(e for _, e in pairs)
    smoothing = 1e-4 * smallest / max(1.0, math.log(len(slopes)))
    profile = TabulatedProfile(slopes, intercepts, smoothing, amplitude, samples=pairs)
    logger.debug("Concave majorant of %d samples, gap %.3g", len(pairs), profile.majorant_gap)
    return profile


def load_tabulated_profile(path: str, amplitude: float = 10.0) -> TabulatedProfile:
    """
    Load (delta, epsilon) samples from a two-column CSV with a header row.

    Raises:
        ValueError: If the file is malformed
    """
    try:
        table = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    except (OSError, ValueError) as exc:
        raise ValueError(f"Cannot read profile table {path}: {exc}") from exc
    if table.shape[1] != 2:
        raise ValueError(f"Profile table {path} must have exactly two columns")
    return concave_majorant([(row[0], row[1]) for row in table], amplitude)


class BoundaryData(ABC):
    """
    Boundary values on the real line of a positive harmonic function on H.

    ``tau_density`` is the density in the variable x = +-tau**gamma, i.e.
    H~(tau**gamma) * gamma * tau**(gamma - 1).
    """

    def __init__(self, gamma: float):
        if not (math.isfinite(gamma) and gamma >= 1):
            raise ValueError(f"gamma must be at least 1, got {gamma}")
        self.gamma = float(gamma)

    @abstractmethod
    def on_line(self, x: float) -> float:
        """H~(x) for real x."""

    @abstractmethod
    def tau_density(self, tau: float) -> float:
        """H~(tau**gamma) * gamma * tau**(gamma - 1)."""

    def breakpoints(self) -> Tuple[float, ...]:
        """Tau values where the density is not smooth."""
        return ()

    def tail_mass(self, tau: float) -> float:
        """
        Upper bound for the integral of gamma * H~(sigma**gamma) over sigma >= tau.

        Infinite when no bound is known, which disables truncation.
        """
        return math.inf

    def supremum(self) -> float:
        """Numerical supremum of H~ on the real line."""
        grid = np.concatenate(([0.0], np.geomspace(1e-6, 200.0, 400)))
        values = np.array([self.on_line(t ** self.gamma) for t in grid])
        best = int(np.argmax(values))
        lo = grid[max(best - 1, 0)]
        hi = grid[min(best + 1, len(grid) - 1)]
        if hi > lo:
            refined = minimize_scalar(
                lambda t: -self.on_line(t ** self.gamma), bounds=(lo, hi), method="bounded"
            )
            return float(max(values[best], -refined.fun))
        return float(values[best])


class ProfileBoundaryData(BoundaryData):
    """The boundary data gamma**-1 * A * exp(-t) * eps'(exp(-t)) at x = +-t**gamma."""

    def __init__(self, profile: EpsilonProfile, gamma: float):
        super().__init__(gamma)
        self.profile = profile
        self.amplitude = profile.amplitude

    def on_line(self, x: float) -> float:
        tau = abs(x) ** (1.0 / self.gamma)
        return self.amplitude * self.profile.weight(tau) / self.gamma

    def tau_density(self, tau: float) -> float:
        return self.amplitude * tau ** (self.gamma - 1.0) * self.profile.weight(tau)

    def breakpoints(self) -> Tuple[float, ...]:
        tau_cap = getattr(self.profile, "tau_cap", 0.0)
        return (tau_cap,) if tau_cap > 0 else ()

    def tail_mass(self, tau: float) -> float:
        # Exact by the identity: the integral equals A * eps(exp(-tau)).
        return self.amplitude * self.profile.value_at_tau(tau)


class ConstantBoundaryData(BoundaryData):
    """H~ identically equal to a constant; the Poisson extension is that constant."""

    def __init__(self, constant: float, gamma: float):
        super().__init__(gamma)
        self.constant = float(constant)

    def on_line(self, x: float) -> float:
        return self.constant

    def tau_density(self, tau: float) -> float:
        return self.constant * self.gamma * tau ** (self.gamma - 1.0)


def tau_upper_limit(profile: EpsilonProfile, start: float, q: QuadratureSpec) -> Tuple[float, float]:
    """
    Truncation point of a tau integral of A * exp(-tau) * eps'(exp(-tau)).

    The remainder beyond T equals A * eps(exp(-T)) exactly, which is used as
    the certified tail bound.

    Returns:
        Tuple (upper limit, tail bound); the limit is infinite when the tail
        at ``start + tail_cutoff_t`` is still above ``tol_abs``
    """
    upper = start + q.tail_cutoff_t
    tail = profile.amplitude * profile.value_at_tau(upper)
    if tail < q.tol_abs:
        return upper, tail
    return math.inf, 0.0


def tail_identity(
    bd: ProfileBoundaryData,
    ep: EpsilonProfile,
    t: float,
    q: QuadratureSpec,
    side: int = 1,
) -> Tuple[float, float]:
    """
    Both sides of  int_{x >= t**gamma} H~(x) x**(-1 + 1/gamma) dx = A eps(exp(-t)).

    With x = tau**gamma the integrand becomes gamma * H~(tau**gamma), which is
    A * exp(-tau) * eps'(exp(-tau)).

    Args:
        bd: Boundary data built from ``ep``
        ep: The profile
        t: Lower limit in the tau variable, t >= 0
        q: Quadrature specification
        side: +1 for x >= t**gamma, -1 for the mirrored integral over x <= -t**gamma

    Returns:
        Tuple (lhs, rhs)

    Raises:
        ValueError: If t < 0
        QuadratureError: If the integral does not converge
    """
    if not (math.isfinite(t) and t >= 0):
        raise ValueError(f"t must be a non-negative number, got {t}")
    if side not in (1, -1):
        raise ValueError(f"side must be +1 or -1, got {side}")
    gamma = bd.gamma

    def integrand(tau: float) -> float:
        return gamma * bd.on_line(side * tau ** gamma)

    upper, tail = tau_upper_limit(ep, t, q)
    points = [t + 1.0, t + 10.0] + list(bd.breakpoints())
    lhs = integrate(integrand, t, upper, q, points=points)
    logger.debug("tail identity t=%g lhs=%.15g err=%.3g tail=%.3g", t, lhs.value, lhs.error, tail)
    return lhs.value, ep.amplitude * ep.value_at_tau(t)


BUILTIN_PROFILES = ("power:0.5", "power:1", "log_power:1")


def profile_from_spec(spec: str, amplitude: float = 10.0) -> EpsilonProfile:
    """
    Build a profile from ``kind:parameter`` text such as ``power:0.5``.

    ``tabulated:PATH`` loads a CSV table.
    """
    kind, _, argument = spec.partition(":")
    kind = kind.strip().lower()
    if not argument:
        raise ValueError(f"Profile spec {spec!r} must look like kind:parameter")
    if kind == "power":
        return power_profile(float(argument), amplitude)
    if kind == "log_power":
        return log_power_profile(float(argument), amplitude)
    if kind == "tabulated":
        return load_tabulated_profile(argument, amplitude)
    raise ValueError(f"Unknown profile kind {kind!r}")
