"""
Quadrature - Adaptive integration with error estimates on top of QUADPACK.
"""

import logging
import math
from dataclasses import dataclass, replace
from typing import Callable, Iterable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import quad, quad_vec

logger = logging.getLogger(__name__)


class QuadratureError(RuntimeError):
    """
    Raised when an adaptive integral does not reach its tolerance.

    Carries the partial value and the error estimate so that callers can
    still report them.
    """

    def __init__(self, message: str, value: float, abserr: float):
        super().__init__(f"{message} (value={value!r}, abserr={abserr!r})")
        self.value = value
        self.abserr = abserr


@dataclass(frozen=True)
class QuadratureSpec:
    """
    Tolerances and limits shared by every integral in the package.

    Attributes:
        tol_rel: Relative tolerance of one-dimensional integrals.
        tol_abs: Absolute tolerance of one-dimensional integrals.
        max_subdivisions: QUADPACK subdivision limit.
        tail_cutoff_t: Truncation point in the tau variable for exponentially
            decaying integrands.
        mass_tol_rel: Relative tolerance of the outer integral of the
            two-dimensional mass and flux computations.
        split_ratio: Poisson evaluations with V < split_ratio * (1 + |U|)
            use kernel splitting.
        error_slack: Factor by which a QUADPACK warning may exceed the
            requested tolerance before it is treated as a failure.
    """

    tol_rel: float = 1e-8
    tol_abs: float = 1e-12
    max_subdivisions: int = 2000
    tail_cutoff_t: float = 60.0
    mass_tol_rel: float = 1e-4
    split_ratio: float = 0.05
    error_slack: float = 100.0

    def __post_init__(self) -> None:
        for name in ("tol_rel", "tol_abs", "tail_cutoff_t", "mass_tol_rel",
                     "split_ratio", "error_slack"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise ValueError(f"{name} must be positive and finite, got {value!r}")
        if self.max_subdivisions < 50:
            raise ValueError(
                f"max_subdivisions must be at least 50, got {self.max_subdivisions}"
            )

    def tightened(self, factor: float) -> "QuadratureSpec":
        """
        Return a copy with all tolerances divided by ``factor``.

        Args:
            factor: Tightening factor (> 1 tightens)

        Returns:
            QuadratureSpec: The tightened specification
        """
        if factor <= 0:
            raise ValueError(f"Tightening factor must be positive, got {factor}")
        return replace(
            self,
            tol_rel=self.tol_rel / factor,
            tol_abs=self.tol_abs / factor,
            mass_tol_rel=self.mass_tol_rel / factor,
        )

    def inner(self) -> "QuadratureSpec":
        """Specification for integrals nested inside a two-dimensional one."""
        return replace(self, tol_rel=max(self.tol_rel, self.mass_tol_rel * 1e-2))

    def accepts(self, value: float, abserr: float, tol_rel: Optional[float] = None) -> bool:
        """Whether an error estimate is good enough despite a QUADPACK warning."""
        rel = self.tol_rel if tol_rel is None else tol_rel
        return abserr <= self.error_slack * max(self.tol_abs, rel * abs(value))


@dataclass(frozen=True)
class Estimate:
    """A value together with its absolute error bound."""

    value: float
    error: float = 0.0

    def __add__(self, other: "Estimate") -> "Estimate":
        return Estimate(self.value + other.value, self.error + other.error)

    def scaled(self, factor: float) -> "Estimate":
        return Estimate(self.value * factor, self.error * abs(factor))

    @staticmethod
    def total(estimates: Iterable["Estimate"]) -> "Estimate":
        result = Estimate(0.0, 0.0)
        for item in estimates:
            result = result + item
        return result


def _interior_points(points: Optional[Iterable[float]], a: float, b: float) -> List[float]:
    if not points:
        return []
    inside = sorted({float(p) for p in points if math.isfinite(p) and a < p < b})
    return inside


def _quad_once(
    f: Callable[[float], float],
    a: float,
    b: float,
    q: QuadratureSpec,
    tol_rel: float,
    points: List[float],
) -> Estimate:
    kwargs = {
        "epsabs": q.tol_abs,
        "epsrel": tol_rel,
        "limit": q.max_subdivisions,
        "full_output": 1,
    }
    if points:
        kwargs["points"] = points
        kwargs["limit"] = max(q.max_subdivisions, 2 * len(points) + 2)
    out = quad(f, a, b, **kwargs)
    value, abserr = float(out[0]), float(out[1])
    if not math.isfinite(value):
        raise QuadratureError(f"Integral over [{a}, {b}] is not finite", value, abserr)
    if len(out) > 3:
        if not q.accepts(value, abserr, tol_rel):
            raise QuadratureError(
                f"Integral over [{a}, {b}] did not converge: {out[3]}", value, abserr
            )
        logger.debug("Accepted quad warning on [%g, %g]: %s", a, b, out[3])
    return Estimate(value, abserr)


def integrate(
    f: Callable[[float], float],
    a: float,
    b: float,
    q: QuadratureSpec,
    points: Optional[Sequence[float]] = None,
    tol_rel: Optional[float] = None,
) -> Estimate:
    """
    Integrate a scalar function over [a, b], where b may be infinite.

    Breakpoints are honoured on the finite part; when ``b`` is infinite the
    range is split at the largest breakpoint and the remainder is handed to
    QUADPACK's infinite-interval rule.

    Args:
        f: Integrand
        a: Lower limit (finite)
        b: Upper limit, possibly ``math.inf``
        q: Quadrature specification
        points: Optional breakpoints where the integrand varies quickly
        tol_rel: Override of ``q.tol_rel``

    Returns:
        Estimate: Value and absolute error estimate

    Raises:
        QuadratureError: If the integral does not converge
    """
    rel = q.tol_rel if tol_rel is None else tol_rel
    if not math.isfinite(a):
        raise ValueError(f"Lower limit must be finite, got {a}")
    if b <= a:
        return Estimate(0.0, 0.0)

    if math.isfinite(b):
        return _quad_once(f, a, b, q, rel, _interior_points(points, a, b))

    inside = _interior_points(points, a, math.inf)
    if not inside:
        return _quad_once(f, a, math.inf, q, rel, [])
    split = inside[-1]
    head = _quad_once(f, a, split, q, rel, inside[:-1])
    tail = _quad_once(f, split, math.inf, q, rel, [])
    return head + tail


def integrate_vec(
    f: Callable[[float], np.ndarray],
    a: float,
    b: float,
    q: QuadratureSpec,
    tol_rel: Optional[float] = None,
    workers: Optional[Callable] = None,
) -> Tuple[np.ndarray, float]:
    """
    Integrate a vector-valued function over [a, b] with ``quad_vec``.

    Args:
        f: Integrand returning a 1-D array
        a: Lower limit
        b: Upper limit
        q: Quadrature specification
        tol_rel: Override of ``q.mass_tol_rel``
        workers: Optional map-like callable used to evaluate intervals in
            parallel

    Returns:
        Tuple of the integral vector and its max-norm error estimate

    Raises:
        QuadratureError: If the integral does not converge
    """
    rel = q.mass_tol_rel if tol_rel is None else tol_rel
    kwargs = {
        "epsabs": q.tol_abs,
        "epsrel": rel,
        "norm": "max",
        "limit": q.max_subdivisions,
        "full_output": True,
    }
    if workers is not None:
        kwargs["workers"] = workers
    value, err, info = quad_vec(f, a, b, **kwargs)
    value = np.asarray(value, dtype=float)
    err = float(err)
    if not np.all(np.isfinite(value)):
        raise QuadratureError(f"Integral over [{a}, {b}] is not finite", float(np.sum(value)), err)
    if not info.success and not q.accepts(float(np.max(np.abs(value))), err, rel):
        raise QuadratureError(
            f"Integral over [{a}, {b}] did not converge: {info.message}",
            float(np.sum(value)),
            err,
        )
    return value, err
