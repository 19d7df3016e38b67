"""
Asymptotics - Empirical checks of the primed-coordinate estimates.

Each check samples a grid, reports empirical constants and fitted exponents,
and decides pass/fail from explicit thresholds. These are boundedness
heuristics, not proofs.
"""

import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from .geometry import Hyperbolicity, primed, primed_array
from .harmonic_extension import kernel_integral_I, kernel_value
from .quadrature import QuadratureError, QuadratureSpec, integrate

logger = logging.getLogger(__name__)

UV1 = "UV1"
UV2 = "UV2"
KERNEL_UPPER = "KernelUpper"
KERNEL_LOWER = "KernelLower"

Row = Tuple[float, float, float]


@dataclass
class LemmaReport:
    """Outcome of one lemma check; ``rows`` holds (grid point, value, normalized value)."""

    lemma_id: str
    grid: str
    fitted_exponents: List[float]
    empirical_constant: float
    passed: bool
    details: str
    rows: List[Row] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        record = asdict(self)
        record.pop("rows")
        return record


def _fit(r: np.ndarray, values: np.ndarray) -> np.ndarray:
    design = np.column_stack((r, r * r))
    coefficients, *_ = np.linalg.lstsq(design, values, rcond=None)
    return coefficients


def check_uv1(
    h: Hyperbolicity,
    r_grid: Optional[Sequence[float]] = None,
    N: float = 1.0,
    threshold: float = 1e-6,
    n_r: int = 200,
    n_x: int = 121,
) -> LemmaReport:
    """
    Behaviour of Z'(r) near r = 0.

    Fits U' + rho and V' - beta*r on a small-r grid, then scans
    dist(x', Z')^2 / (r^2 + (x' + rho)^2) over r in (0, N] and
    x' in [-3 rho, 3 rho]. Passes when the infimum exceeds ``threshold``.

    Args:
        h: Singularity parameters
        r_grid: Small r values in (0, 0.1] (default: 40 points in [1e-5, 0.1])
        N: Upper end of the r range of the distance scan
        threshold: Minimum accepted infimum
        n_r: r samples of the distance scan
        n_x: x' samples of the distance scan

    Returns:
        LemmaReport: fitted_exponents = [first-order coefficient of U' + rho,
        fitted beta]; empirical_constant = infimum of the ratio

    Raises:
        ValueError: If the grid leaves (0, 0.1] or N <= 0
    """
    r = np.geomspace(1e-5, 0.1, 40) if r_grid is None else np.asarray(r_grid, dtype=float)
    if r.size < 3 or np.any(r <= 0) or np.any(r > 0.1):
        raise ValueError("r_grid must hold at least 3 values in (0, 0.1]")
    if N <= 0:
        raise ValueError(f"N must be positive, got {N}")

    Z = primed_array(h, r)
    du = Z.real + h.rho
    dv = Z.imag - h.beta * r
    u_coefficients = _fit(r, du)
    v_coefficients = _fit(r, Z.imag)
    bound_u = float(np.max(np.abs(du) / r))
    bound_v = float(np.max(np.abs(dv) / r ** 2))

    r_scan = np.geomspace(1e-4 * N, N, n_r)
    x_scan = np.linspace(-3.0 * h.rho, 3.0 * h.rho, n_x)
    Z_scan = primed_array(h, r_scan)
    distance = np.abs(Z_scan[:, None] - x_scan[None, :]) ** 2
    reference = r_scan[:, None] ** 2 + (x_scan[None, :] + h.rho) ** 2
    ratio = distance / reference
    i, j = np.unravel_index(int(np.argmin(ratio)), ratio.shape)
    infimum = float(ratio[i, j])

    limit = h.gamma ** 2 * h.rho ** 2 / abs(h.zeta_star) ** 2
    near = []
    for r0 in (1e-3, 1e-4):
        U_p, V_p = primed(h, r0)
        near.append(((U_p + h.rho) ** 2 + V_p ** 2) / r0 ** 2)

    passed = infimum > threshold and math.isfinite(bound_u) and math.isfinite(bound_v)
    details = (
        f"|U'+rho| <= {bound_u:.4g} r, |V'-beta r| <= {bound_v:.4g} r^2; "
        f"inf ratio {infimum:.4g} at r={r_scan[i]:.3g}, x'={x_scan[j]:.3g}; "
        f"ratio at x'=-rho: r=1e-3 {near[0]:.6g}, r=1e-4 {near[1]:.6g} (limit {limit:.6g})"
    )
    rows = [(float(rv), float(Z.real[k] + h.rho), float(du[k] / rv)) for k, rv in enumerate(r)]
    return LemmaReport(
        lemma_id=UV1,
        grid=f"r in [{r[0]:.3g}, {r[-1]:.3g}] ({r.size}); scan r in (0, {N:g}], x' in [-3rho, 3rho]",
        fitted_exponents=[float(u_coefficients[0]), float(v_coefficients[0])],
        empirical_constant=infimum,
        passed=bool(passed),
        details=details,
        rows=rows,
    )


def check_uv2(
    h: Hyperbolicity,
    r_grid: Optional[Sequence[float]] = None,
    slope_tol: float = 0.01,
) -> LemmaReport:
    """
    Growth of Z'(r) for large r.

    The log-log slope of U' must be within ``slope_tol`` (relative) of gamma,
    and the residuals |U' - r^gamma| / r^(gamma-1) and
    |V' - gamma r^(gamma-1)| / r^(gamma-2) must stay finite on the grid.

    Raises:
        ValueError: If the grid leaves [10, 1e4]
    """
    r = np.geomspace(1e2, 1e4, 50) if r_grid is None else np.asarray(r_grid, dtype=float)
    if r.size < 2 or np.any(r < 10) or np.any(r > 1e4):
        raise ValueError("r_grid must hold at least 2 values in [10, 1e4]")

    Z = primed_array(h, r)
    slope = float(np.polyfit(np.log(r), np.log(Z.real), 1)[0])
    g = h.gamma
    residual_u = np.abs(Z.real - r ** g) / r ** (g - 1.0)
    residual_v = np.abs(Z.imag - g * r ** (g - 1.0)) / r ** (g - 2.0)
    bound_u = float(np.max(residual_u))
    bound_v = float(np.max(residual_v))
    passed = (
        abs(slope - g) <= slope_tol * g and math.isfinite(bound_u) and math.isfinite(bound_v)
    )
    rows = [(float(rv), float(Z.real[k]), float(residual_u[k])) for k, rv in enumerate(r)]
    return LemmaReport(
        lemma_id=UV2,
        grid=f"r in [{r[0]:.3g}, {r[-1]:.3g}] ({r.size} points, geometric)",
        fitted_exponents=[slope],
        empirical_constant=max(bound_u, bound_v),
        passed=bool(passed),
        details=(
            f"slope {slope:.6f} vs gamma {g:.6f}; |U'-r^g|/r^(g-1) <= {bound_u:.4g}, "
            f"|V'-g r^(g-1)|/r^(g-2) <= {bound_v:.4g}"
        ),
        rows=rows,
    )


def _normalized_kernel(
    h: Hyperbolicity,
    xp_grid: Sequence[float],
    r_lo: float,
    q: QuadratureSpec,
    workers: Optional[Callable],
) -> Tuple[List[Row], List[str]]:
    def evaluate(x_p: float) -> Tuple[float, Optional[str]]:
        try:
            return kernel_integral_I(h, x_p, r_lo, q), None
        except QuadratureError as exc:
            return math.nan, f"x'={x_p:g}: {exc}"

    mapper = workers or map
    results = list(mapper(evaluate, list(xp_grid)))
    exponent = 1.0 - 1.0 / h.gamma
    rows = [(float(x), value, value * abs(x) ** exponent) for x, (value, _) in zip(xp_grid, results)]
    failures = [message for _, message in results if message]
    return rows, failures


def _last_decade_growth(rows: List[Row]) -> float:
    ordered = sorted(rows, key=lambda row: abs(row[0]))
    top = abs(ordered[-1][0])
    decade = [row[2] for row in ordered if abs(row[0]) >= top / 10.0]
    if len(decade) < 2 or decade[0] <= 0:
        return math.inf
    return max(decade) / decade[0] - 1.0


def default_upper_grid(h: Hyperbolicity) -> List[float]:
    magnitudes = [2.0 * h.rho * 2.0 ** k for k in range(13)] + [1e4 * h.rho]
    return magnitudes + [-m for m in magnitudes]


def check_kernel_upper(
    h: Hyperbolicity,
    xp_grid: Optional[Sequence[float]] = None,
    q: Optional[QuadratureSpec] = None,
    growth_limit: float = 0.2,
    workers: Optional[Callable] = None,
) -> LemmaReport:
    """
    Upper bound I(x') <= c |x'|^(-1 + 1/gamma) for |x'| >= 2 rho.

    Reports sup of I(x') |x'|^(1 - 1/gamma) over the grid; passes when, on
    each side, the normalized value grows by less than ``growth_limit`` over
    the last decade of the grid.

    Raises:
        ValueError: If a grid point has |x'| < 2 rho
    """
    q = q or QuadratureSpec()
    grid = default_upper_grid(h) if xp_grid is None else [float(x) for x in xp_grid]
    if any(abs(x) < 2.0 * h.rho * (1.0 - 1e-12) for x in grid):
        raise ValueError("Every x' must satisfy |x'| >= 2 rho")
    rows, failures = _normalized_kernel(h, grid, 0.0, q, workers)

    growth = {}
    for name, sign in (("positive", 1.0), ("negative", -1.0)):
        side = [row for row in rows if row[0] * sign > 0]
        if len(side) >= 2:
            growth[name] = _last_decade_growth(side)
    constant = max((row[2] for row in rows), default=math.nan)
    passed = not failures and all(g < growth_limit for g in growth.values())
    details = ", ".join(f"{k} last-decade growth {v:.3%}" for k, v in growth.items())
    if failures:
        details += "; failures: " + "; ".join(failures)
    return LemmaReport(
        lemma_id=KERNEL_UPPER,
        grid=f"{len(grid)} x' values, |x'| in [{min(abs(x) for x in grid):.3g}, {max(abs(x) for x in grid):.3g}]",
        fitted_exponents=[-1.0 + 1.0 / h.gamma],
        empirical_constant=float(constant),
        passed=bool(passed),
        details=details,
        rows=rows,
    )


def check_kernel_lower(
    h: Hyperbolicity,
    xp_grid: Optional[Sequence[float]] = None,
    q: Optional[QuadratureSpec] = None,
    threshold: float = 1e-4,
    workers: Optional[Callable] = None,
) -> LemmaReport:
    """
    Lower bound I(x'; r_lo = 1/b) >= c x'^(-1 + 1/gamma) for x' >= 1.

    Raises:
        ValueError: If a grid point is below 1
    """
    q = q or QuadratureSpec()
    grid = list(np.geomspace(1.0, 1e4, 41)) if xp_grid is None else [float(x) for x in xp_grid]
    if any(x < 1.0 for x in grid):
        raise ValueError("Every x' must be at least 1")
    rows, failures = _normalized_kernel(h, grid, 1.0 / h.b, q, workers)
    infimum = min((row[2] for row in rows), default=math.nan)
    passed = not failures and infimum > threshold
    details = f"inf normalized value {infimum:.4g} (threshold {threshold:g})"
    if failures:
        details += "; failures: " + "; ".join(failures)
    return LemmaReport(
        lemma_id=KERNEL_LOWER,
        grid=f"{len(grid)} x' values in [{min(grid):.3g}, {max(grid):.3g}], r >= 1/b",
        fitted_exponents=[-1.0 + 1.0 / h.gamma],
        empirical_constant=float(infimum),
        passed=bool(passed),
        details=details,
        rows=rows,
    )


def window_integral(h: Hyperbolicity, x_p: float, q: Optional[QuadratureSpec] = None) -> float:
    """Kernel integral over the unit window r in [x'^(1/gamma), x'^(1/gamma) + 1]."""
    if x_p <= 0:
        raise ValueError(f"x' must be positive, got {x_p}")
    q = q or QuadratureSpec()
    start = x_p ** (1.0 / h.gamma)
    return integrate(lambda r: kernel_value(h, r, x_p), start, start + 1.0, q).value


def window_ratio(h: Hyperbolicity, x_p: float, n: int = 201) -> float:
    """max |U' - x'| / V' over the unit window, sampled at n points."""
    if x_p <= 0:
        raise ValueError(f"x' must be positive, got {x_p}")
    start = x_p ** (1.0 / h.gamma)
    Z = primed_array(h, np.linspace(start, start + 1.0, n))
    return float(np.max(np.abs(Z.real - x_p) / Z.imag))
