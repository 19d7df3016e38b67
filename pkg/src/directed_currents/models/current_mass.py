"""
Current mass - Trace-measure mass of the current on bidiscs.

The mass on the bidisc of radius delta = exp(-t) is the integral of
H * (2/pi) * ((a^2 + b^2) exp(-2(bu + av)) + exp(-2v)) over
{v > t, bu + av > t}. Both terms are computed in (r, s) coordinates,
zeta = s * (zeta* + r) with du dv = s dr ds. The first term is moved to
reflected coordinates (the reflection across the bisector of S preserves H),
where its weight becomes exp(-2 |eta| v), so every outer integral decays
exponentially in s.
"""

import logging
import math
from dataclasses import asdict, dataclass
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np

from .epsilon_profiles import BoundaryData, EpsilonProfile
from .geometry import Hyperbolicity, preimage_region
from .harmonic_extension import SectorField
from .quadrature import QuadratureError, QuadratureSpec, integrate, integrate_vec

logger = logging.getLogger(__name__)

MASS_CSV_COLUMNS = ("delta", "t", "mass", "err", "ratio_lelong", "ratio_sharp")


def trace_density(h: Hyperbolicity, zeta: complex) -> float:
    """
    Density of the pulled-back trace form against du dv.

    (2/pi) * ((a^2 + b^2) exp(-2(bu + av)) + exp(-2v)), using
    i dzeta ^ dzeta-bar = 2 du ^ dv.
    """
    u, v = zeta.real, zeta.imag
    return (2.0 / math.pi) * (
        h.eta_abs ** 2 * math.exp(-2.0 * (h.b * u + h.a * v)) + math.exp(-2.0 * v)
    )


@dataclass(frozen=True)
class MassReport:
    """
    Trace mass on one bidisc.

    ``s1_mass`` and ``s2_mass`` are the parts over the half sectors
    {bu + av >= v} and {bu + av <= v}; ``s1_lower`` is the S1 integral of
    the exp(-2v) term alone, the quantity the lower bound is proved for.
    """

    delta: float
    t: float
    mass: float
    err: float
    ratio_lelong: float
    ratio_sharp: float
    epsilon: float
    s1_mass: float = math.nan
    s2_mass: float = math.nan
    s1_lower: float = math.nan
    converged: bool = True
    message: str = ""

    @classmethod
    def build(
        cls,
        delta: float,
        mass: float,
        err: float,
        epsilon: float,
        **parts: Any,
    ) -> "MassReport":
        scale = delta * delta
        return cls(
            delta=delta,
            t=-math.log(delta),
            mass=mass,
            err=err,
            ratio_lelong=mass / scale,
            ratio_sharp=mass / (scale * epsilon),
            epsilon=epsilon,
            **parts,
        )

    def as_row(self) -> Dict[str, float]:
        return {name: getattr(self, name) for name in MASS_CSV_COLUMNS}

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)


def _outer_length(q: QuadratureSpec, rate: float) -> float:
    # exp(-2 rate L) = mass_tol_rel / 100
    return (math.log(1.0 / q.mass_tol_rel) + math.log(100.0)) / (2.0 * rate)


class _MassIntegrand:
    """Vector integrand of the outer s-integral, one entry per region part."""

    def __init__(self, h: Hyperbolicity, field: SectorField, t: float, q: QuadratureSpec, split: bool):
        self.h = h
        self.field = field
        self.t = t
        self.q = q.inner()
        self.split = split
        self.eta_abs = h.eta_abs

    def _radial(self, s: float, r_lo: float, r_hi: float) -> float:
        def integrand(r: float) -> float:
            return self.field.value(r, s) * s

        points = [1.0 / s, 10.0 / s, 2.0 * r_lo, r_lo + 1.0]
        return integrate(integrand, r_lo, r_hi, self.q, points=points).value

    def _parts(self, s: float, r_lo: float, r_split: float) -> List[float]:
        if not self.split:
            return [self._radial(s, r_lo, math.inf)]
        r_split = max(r_split, r_lo)
        return [self._radial(s, r_split, math.inf), self._radial(s, r_lo, r_split)]

    def __call__(self, sigma: float) -> np.ndarray:
        h = self.h
        # exp(-2v) term, original coordinates: v = s > t, r > t / (b s).
        s_b = self.t + sigma
        above_b = self._parts(s_b, self.t / (h.b * s_b), 1.0 / h.b)
        weight_b = (2.0 / math.pi) * math.exp(-2.0 * s_b)
        # |eta|^2 exp(-2(bu + av)) term, reflected coordinates:
        # v > t/|eta|, r > t |eta| / (b s); S1 is r <= |eta|^2 / b there.
        s_a = self.t / self.eta_abs + sigma
        parts_a = self._parts(s_a, self.t * self.eta_abs / (h.b * s_a), self.eta_abs ** 2 / h.b)
        weight_a = (2.0 / math.pi) * self.eta_abs ** 2 * math.exp(-2.0 * self.eta_abs * s_a)
        if self.split:
            # Order: B over S1, B over S2, A over S1, A over S2.
            values = [above_b[0], above_b[1], parts_a[1], parts_a[0]]
            weights = [weight_b, weight_b, weight_a, weight_a]
        else:
            values = [above_b[0], parts_a[0]]
            weights = [weight_b, weight_a]
        return np.array([w * v for w, v in zip(weights, values)])


def _integrate_region(
    h: Hyperbolicity,
    field: SectorField,
    t: float,
    q: QuadratureSpec,
    split: bool,
    workers: Optional[Callable] = None,
) -> Dict[str, Any]:
    integrand = _MassIntegrand(h, field, t, q, split)
    rate = min(1.0, h.eta_abs)
    length = _outer_length(q, rate)
    values, err = integrate_vec(integrand, 0.0, length, q, workers=workers)
    end = integrand(length)
    tail = float(np.sum(np.abs(end))) / (2.0 * rate)
    inner_err = q.inner().tol_rel * float(np.sum(np.abs(values)))
    logger.debug(
        "Region t=%g split=%s: %s (outer err %.3g, tail %.3g)",
        t, split, values, err, tail,
    )
    return {"values": values, "err": err + tail + inner_err}


def mass_bidisc(
    h: Hyperbolicity,
    bd: BoundaryData,
    ep: EpsilonProfile,
    delta: float,
    q: QuadratureSpec,
    workers: Optional[Callable] = None,
    field: Optional[SectorField] = None,
) -> MassReport:
    """
    Trace mass of the current on the bidisc of radius delta.

    Args:
        h: Singularity parameters
        bd: Boundary data of H
        ep: Profile used for the sharpness ratio
        delta: Bidisc radius in (0, 1)
        q: Quadrature specification
        workers: Optional map-like callable for the outer integral
        field: Evaluator of H, built from ``bd`` when omitted

    Returns:
        MassReport: Mass, error bound, ratios and the half-sector parts

    Raises:
        ValueError: If delta is not in (0, 1)
        QuadratureError: If an integral does not converge
    """
    region = preimage_region(h, delta)
    field = field if field is not None else SectorField(h, bd, q.inner())
    parts = _integrate_region(h, field, region.t, q, split=True, workers=workers)
    b_s1, b_s2, a_s1, a_s2 = (float(v) for v in parts["values"])
    mass = b_s1 + b_s2 + a_s1 + a_s2
    return MassReport.build(
        delta,
        mass,
        parts["err"],
        ep.value(delta),
        s1_mass=b_s1 + a_s1,
        s2_mass=b_s2 + a_s2,
        s1_lower=b_s1,
    )


def mass_full_region(
    h: Hyperbolicity,
    bd: BoundaryData,
    delta: float,
    q: QuadratureSpec,
    workers: Optional[Callable] = None,
    field: Optional[SectorField] = None,
) -> Dict[str, float]:
    """
    The same trace integral without the half-sector split.

    Returns:
        Dict with ``mass`` and ``err``
    """
    region = preimage_region(h, delta)
    field = field if field is not None else SectorField(h, bd, q.inner())
    parts = _integrate_region(h, field, region.t, q, split=False, workers=workers)
    return {"mass": float(np.sum(parts["values"])), "err": parts["err"]}


def mass_scan(
    h: Hyperbolicity,
    bd: BoundaryData,
    ep: EpsilonProfile,
    deltas: Sequence[float],
    q: QuadratureSpec,
    workers: Optional[Callable] = None,
) -> List[MassReport]:
    """
    One MassReport per delta; a failing delta is recorded, not raised.

    Raises:
        ValueError: If deltas are not sorted in descending order
    """
    deltas = [float(d) for d in deltas]
    if any(d2 >= d1 for d1, d2 in zip(deltas, deltas[1:])):
        raise ValueError(f"deltas must be strictly decreasing, got {deltas}")
    field = SectorField(h, bd, q.inner())
    reports = []
    for delta in deltas:
        if delta < 0.02:
            logger.warning("delta=%g (t=%.2f) makes the mass integral slow", delta, -math.log(delta))
        try:
            report = mass_bidisc(h, bd, ep, delta, q, workers=workers, field=field)
        except QuadratureError as exc:
            logger.warning("Mass at delta=%g did not converge: %s", delta, exc)
            report = MassReport.build(
                delta,
                max(exc.value, 0.0) if math.isfinite(exc.value) else math.nan,
                exc.abserr if math.isfinite(exc.abserr) else math.inf,
                ep.value(delta),
                converged=False,
                message=str(exc),
            )
        logger.info("delta=%g mass=%.6g err=%.2g", delta, report.mass, report.err)
        reports.append(report)
    return reports


def s1_inequality_holds(h: Hyperbolicity, t: float, n: int = 50) -> bool:
    """
    exp(-2(bu + av)) <= exp(-2v) on an n x n grid of the half sector S1 above t.

    On S1, br >= 1, i.e. bu + av = bsr >= s = v.
    """
    r_grid = np.geomspace(1.0 / h.b, 1e3 / h.b, n)
    s_grid = np.linspace(max(t, 1e-6), max(t, 1e-6) + 20.0, n)
    for s in s_grid:
        for r in r_grid:
            if math.exp(-2.0 * h.b * s * r) > math.exp(-2.0 * s):
                return False
    return True


def sharpness_floor(ep: EpsilonProfile, delta: float) -> float:
    """
    Reference floor (A/8) * log 2 * delta^2 * eps(delta) for the S1 term.

    Integrating exp(-2s) over s in (t, t + log 2) against the tail identity
    gives log 2 * (delta/2)^2 * A * eps(delta/2), and concavity with
    eps(0) = 0 gives eps(delta/2) >= eps(delta)/2. The floor holds up to the
    kernel constant relating H to the boundary tail, so it is reported, not
    asserted.
    """
    return ep.amplitude / 8.0 * math.log(2.0) * delta * delta * ep.value(delta)


def ratios_decreasing(reports: Sequence[MassReport], attribute: str = "ratio_lelong") -> bool:
    values = [getattr(r, attribute) for r in reports]
    return all(r.converged for r in reports) and all(
        v2 < v1 for v1, v2 in zip(values, values[1:])
    )


def lelong_drop(reports: Sequence[MassReport]) -> float:
    """ratio_lelong at the smallest delta over its value at the largest."""
    first, last = reports[0].ratio_lelong, reports[-1].ratio_lelong
    if not (math.isfinite(first) and math.isfinite(last)) or first <= 0:
        return math.nan
    return last / first


def lelong_log_rate(reports: Sequence[MassReport]) -> float:
    """
    Fitted kappa in ratio_lelong ~ C * log(1/delta)**(-kappa).

    H seen from height v ~ log(1/delta) decays like v**(-gamma), so the
    Lelong ratio falls off only logarithmically in delta.
    """
    points = [
        (r.t, r.ratio_lelong) for r in reports
        if r.converged and r.t > 0 and math.isfinite(r.ratio_lelong) and r.ratio_lelong > 0
    ]
    if len(points) < 2:
        return math.nan
    t, ratio = np.array(points).T
    return float(-np.polyfit(np.log(t), np.log(ratio), 1)[0])
