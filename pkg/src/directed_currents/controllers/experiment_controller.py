"""
Experiment controller - Runs the six experiments and collects their artifacts.

Every ``cmd_*`` method returns a result dict with ``flags`` (criterion name
to verdict), ``files``, ``summary`` and, when the experiment stopped early,
``error``. Files written before a failure are still listed.
"""

from typing import Any, Callable, Dict, List, Optional, Sequence
import logging
import math

import numpy as np

from ..models.asymptotics import (
    LemmaReport,
    check_kernel_lower,
    check_kernel_upper,
    check_uv1,
    check_uv2,
    window_integral,
    window_ratio,
)
from ..models.current_mass import (
    MASS_CSV_COLUMNS,
    MassReport,
    mass_bidisc,
    mass_full_region,
    mass_scan,
    ratios_decreasing,
    lelong_drop,
    lelong_log_rate,
    s1_inequality_holds,
    sharpness_floor,
)
from ..models.ddc_verifier import (
    HORIZONTAL,
    VERTICAL,
    expected_exponents,
    far_field_split,
    flux_scan,
    negative_control,
)
from ..models.epsilon_profiles import (
    BUILTIN_PROFILES,
    EpsilonProfile,
    ProfileBoundaryData,
    tail_identity,
    profile_from_spec,
)
from ..models.geometry import (
    coords_from_rs,
    in_closed_sector,
    leaf_point,
    primed,
    tangency_bound,
    tangency_residual,
)
from ..models.harmonic_extension import SectorField, mean_value_residual, poisson_extend
from ..models.quadrature import QuadratureError
from ..models.run_config import RunConfig
from ..views.cli_view import CLIView
from ..views.report_writer import ReportWriter

logger = logging.getLogger(__name__)

COMMANDS = ('leaf', 'extend', 'mass', 'lemmas', 'ddc', 'sharpness')

IDENTITY_TS = (0.0, 1.0, 2.0, 5.0, 10.0)
WINDOW_POINTS = (1e2, 1e3, 1e4)
WINDOW_RATIO_LIMIT = 10.0
SHARPNESS_STABILITY = 0.25
LELONG_DROP = 0.8
WINDOW_CONSTANT = 0.2
TOTAL_MASS_DELTA = 1.0 - 1e-9


class ExperimentController:
    """
    Controller running experiments for one configuration.
    """

    def __init__(
        self,
        config: RunConfig,
        writer: ReportWriter,
        view: Optional[CLIView] = None,
        workers: Optional[Callable] = None,
    ):
        """
        Initialize the experiment controller.

        Args:
            config: Validated run configuration
            writer: Artifact writer for the output directory
            view: CLI view instance
            workers: Optional map-like callable for parallel evaluation
        """
        self.config = config
        self.writer = writer
        self.view = view or CLIView()
        self.workers = workers
        self.h = config.hyperbolicity()

    def _map(self, fn: Callable, items: Sequence[Any]) -> List[Any]:
        mapper = self.workers or map
        return list(mapper(fn, list(items)))

    def run(self, command: str) -> Dict[str, Any]:
        """
        Run one experiment, converting failures into the result-dict form.

        Args:
            command: One of COMMANDS

        Returns:
            Dict with flags, files, summary and optionally error
        """
        if command not in COMMANDS:
            return {'flags': {}, 'files': [], 'summary': {}, 'error': f"Unknown command: {command}"}
        result: Dict[str, Any] = {'flags': {}, 'files': [], 'summary': {}}
        try:
            getattr(self, f"cmd_{command}")(result)
        except (ValueError, QuadratureError, OSError) as e:
            logger.debug("Command %s failed", command, exc_info=True)
            result['error'] = str(e)
            result['flags']['completed'] = False
        result['flags'] = {name: bool(value) for name, value in result['flags'].items()}
        result['files'] = list(self.writer.files)
        return result

    # leaf

    def cmd_leaf(self, result: Dict[str, Any]) -> None:
        """Sample the leaf over an (r, s) grid and check its defining identities."""
        h = self.h
        n = self.config.leaf_grid
        r_grid = np.geomspace(1e-3, 10.0, n) / h.b
        s_grid = np.linspace(0.05, 5.0, n)

        rows = []
        worst_modulus = 0.0
        worst_tangency = 0.0
        inside = True
        for s in s_grid:
            for r in r_grid:
                c = coords_from_rs(h, float(r), float(s))
                z1, z2 = leaf_point(h, 1.0, c.zeta)
                m1, m2 = abs(z1), abs(z2)
                expected1 = math.exp(-(h.b * c.u + h.a * c.v))
                expected2 = math.exp(-c.v)
                worst_modulus = max(
                    worst_modulus, abs(m1 - expected1) / expected1, abs(m2 - expected2) / expected2
                )
                worst_tangency = max(
                    worst_tangency, tangency_residual(h, c.zeta) / tangency_bound(h, c.zeta)
                )
                inside = inside and m1 < 1.0 and m2 < 1.0
                rows.append((c.u, c.v, z1.real, z1.imag, z2.real, z2.imag, m1, m2))

        self.writer.write_csv(
            'leaf.csv', ['u', 'v', 're_z1', 'im_z1', 're_z2', 'im_z2', 'abs_z1', 'abs_z2'], rows
        )
        self.writer.write_svg('leaf.svg', lambda fig: self._draw_leaf(fig, rows), figsize=(14, 4.5))

        result['flags'].update({
            'leaf_in_bidisc': inside,
            'leaf_moduli': worst_modulus <= 1e-12,
            'leaf_tangency': worst_tangency <= 1.0,
        })
        result['summary'].update({
            'grid': f"{n}x{n}",
            'rows': len(rows),
            'max_modulus_error': worst_modulus,
            'max_tangency_ratio': worst_tangency,
        })

    def _draw_leaf(self, figure: Any, rows: List[tuple]) -> None:
        h = self.h
        spiral, projection, sector = figure.subplots(1, 3)

        v0 = 1.0
        u = np.linspace(-h.a * v0 / h.b, 12.0, 600)
        z1 = [leaf_point(h, 1.0, complex(x, v0))[0] for x in u]
        spiral.plot([z.real for z in z1], [z.imag for z in z1], lw=0.8)
        spiral.set_title('z1 along v = 1')
        spiral.set_aspect('equal')

        step = max(1, len(rows) // 4000)
        projection.scatter([r[6] for r in rows[::step]], [r[7] for r in rows[::step]], s=1)
        projection.set_xlabel('|z1|')
        projection.set_ylabel('|z2|')
        projection.set_title('(|z1|, |z2|) projection')

        top = max(self.config.s_values)
        sector.plot([0.0, top / h.b], [0.0, 0.0], color='black', lw=1)
        sector.plot([0.0, -h.a * top / h.b], [0.0, top], color='black', lw=1)
        for s in self.config.s_values:
            corners = [(0.0, 0.0), (s / h.b, 0.0), ((s - h.a * s) / h.b, s), (-h.a * s / h.b, s), (0.0, 0.0)]
            sector.plot([c[0] for c in corners], [c[1] for c in corners], lw=0.8, label=f"Q_{s:g}")
        sector.set_title('Sector S and Q_s')
        sector.legend(fontsize='small')

    # extend

    def cmd_extend(self, result: Dict[str, Any]) -> None:
        """Evaluate the Poisson extension on a half-plane grid and H on a sector grid."""
        config = self.config
        h = self.h
        q = config.quadrature
        profile = config.profile()
        bd = ProfileBoundaryData(profile, h.gamma)
        n = config.extend_grid

        invariants = profile.check_invariants()
        result['flags'].update({f"profile_{k}": v for k, v in invariants.items()})

        identity_ok = True
        for t in IDENTITY_TS:
            for side in (1, -1):
                lhs, rhs = tail_identity(bd, profile, t, q, side=side)
                identity_ok = identity_ok and abs(lhs - rhs) <= max(q.tol_rel * rhs, q.tol_abs)
        result['flags']['identity_tail'] = identity_ok

        extent = 20.0
        U_grid = np.linspace(-extent, extent, n)
        V_grid = np.geomspace(1e-2, extent, n)

        def halfplane_row(V: float) -> List[tuple]:
            row = []
            for U in U_grid:
                value = poisson_extend(bd, float(U), float(V), q)
                mirror = poisson_extend(bd, float(-U), float(V), q)
                residual = abs(value - mirror) / max(value, q.tol_abs)
                row.append((float(U), float(V), value, mirror, residual, value > 0))
            return row

        half_rows = [row for block in self._map(halfplane_row, V_grid) for row in block]
        self.writer.write_csv(
            'extension_halfplane.csv',
            ['U', 'V', 'H', 'H_mirror', 'symmetry_residual', 'positive'],
            half_rows,
        )

        field = SectorField(h, bd, q)
        r_grid = np.geomspace(1e-2, 10.0, n) / h.b
        s_grid = np.linspace(0.1, 3.0, n)

        def sector_row(s: float) -> List[tuple]:
            row = []
            for r in r_grid:
                c = coords_from_rs(h, float(r), float(s))
                row.append((c.u, c.v, c.r, c.s, field.value(float(r), float(s))))
            return row

        sector_rows = [row for block in self._map(sector_row, s_grid) for row in block]
        self.writer.write_csv('extension_sector.csv', ['u', 'v', 'r', 's', 'H'], sector_rows)

        rng = np.random.default_rng(config.seed)
        residuals = []
        for _ in range(10):
            centre = complex(rng.uniform(-5.0, 5.0), rng.uniform(1.0, 5.0))
            radius = 0.5 * centre.imag * rng.uniform(0.2, 1.0)
            base = poisson_extend(bd, centre.real, centre.imag, q)
            residuals.append(mean_value_residual(bd, centre, radius, 64, q) / base)
        harmonic_threshold = max(1e-6, 10.0 * q.tol_rel)

        self.writer.write_svg(
            'extension.svg',
            lambda fig: self._draw_extension(fig, U_grid, V_grid, half_rows, r_grid, s_grid, sector_rows),
            figsize=(12, 4.5),
        )

        max_symmetry = max(row[4] for row in half_rows)
        result['flags'].update({
            'extension_symmetry': max_symmetry < 1e-6,
            'extension_positive': all(row[5] for row in half_rows) and all(row[4] > 0 for row in sector_rows),
            'extension_mean_value': max(residuals) < harmonic_threshold,
        })
        result['summary'].update({
            'profile': profile.label(),
            'sup_boundary_data': bd.supremum(),
            'max_symmetry_residual': max_symmetry,
            'max_mean_value_residual': max(residuals),
        })
        if profile.kind == 'tabulated':
            result['summary']['majorant_gap'] = profile.params()['gap']

    def _draw_extension(
        self,
        figure: Any,
        U_grid: np.ndarray,
        V_grid: np.ndarray,
        half_rows: List[tuple],
        r_grid: np.ndarray,
        s_grid: np.ndarray,
        sector_rows: List[tuple],
    ) -> None:
        left, right = figure.subplots(1, 2)
        values = np.array([row[2] for row in half_rows]).reshape(len(V_grid), len(U_grid))
        mesh = left.pcolormesh(U_grid, V_grid, np.log10(np.maximum(values, 1e-300)), shading='auto')
        left.set_yscale('log')
        left.set_xlabel('U')
        left.set_ylabel('V')
        left.set_title('log10 of the Poisson extension')
        figure.colorbar(mesh, ax=left)

        u = np.array([row[0] for row in sector_rows]).reshape(len(s_grid), len(r_grid))
        v = np.array([row[1] for row in sector_rows]).reshape(len(s_grid), len(r_grid))
        H = np.array([row[4] for row in sector_rows]).reshape(len(s_grid), len(r_grid))
        mesh = right.pcolormesh(u, v, np.log10(np.maximum(H, 1e-300)), shading='auto')
        right.set_xlabel('u')
        right.set_ylabel('v')
        right.set_title('log10 H on the sector')
        figure.colorbar(mesh, ax=right)

    # mass

    def _mass_rows(self, reports: Sequence[MassReport]) -> List[tuple]:
        return [
            tuple(r.as_row()[c] for c in MASS_CSV_COLUMNS)
            + (r.s1_mass, r.s2_mass, r.s1_lower, r.converged)
            for r in reports
        ]

    def _write_mass(self, name: str, reports: Sequence[MassReport]) -> None:
        self.writer.write_csv(
            name,
            list(MASS_CSV_COLUMNS) + ['s1_mass', 's2_mass', 's1_lower', 'converged'],
            self._mass_rows(reports),
        )

    def _profiles_for_mass(self) -> Dict[str, EpsilonProfile]:
        profiles = {self.config.profile_spec(): self.config.profile()}
        for spec in BUILTIN_PROFILES:
            if spec not in profiles:
                profiles[spec] = profile_from_spec(spec, self.config.amplitude)
        return profiles

    def cmd_mass(self, result: Dict[str, Any]) -> None:
        """Mass scans for the configured and built-in profiles plus consistency checks."""
        config = self.config
        h = self.h
        q = config.quadrature
        scans: Dict[str, List[MassReport]] = {}
        drops: Dict[str, float] = {}
        rates: Dict[str, float] = {}

        for spec, profile in self._profiles_for_mass().items():
            bd = ProfileBoundaryData(profile, h.gamma)
            reports = mass_scan(h, bd, profile, config.deltas, q, workers=self.workers)
            scans[spec] = reports
            label = spec.replace(':', '_').replace('/', '_')
            self._write_mass(f"mass_{label}.csv", reports)
            self.view.display_mass_table(reports, title=f"Trace mass, {profile.label()}")

            masses = [r.mass for r in reports]
            drop = lelong_drop(reports)
            result['flags'][f"lelong_decreasing[{spec}]"] = ratios_decreasing(reports)
            result['flags'][f"lelong_reduced[{spec}]"] = bool(drop < LELONG_DROP)
            drops[spec] = drop
            rates[spec] = lelong_log_rate(reports)
            result['flags'][f"mass_monotone[{spec}]"] = all(
                m2 <= m1 for m1, m2 in zip(masses, masses[1:])
            )

        profile = config.profile()
        bd = ProfileBoundaryData(profile, h.gamma)
        field = SectorField(h, bd, q.inner())
        delta = config.deltas[0]
        split = mass_bidisc(h, bd, profile, delta, q, workers=self.workers, field=field)
        full = mass_full_region(h, bd, delta, q, workers=self.workers, field=field)
        result['flags']['split_consistent'] = abs(split.mass - full['mass']) <= split.err + full['err']

        total = mass_bidisc(h, bd, profile, TOTAL_MASS_DELTA, q, workers=self.workers, field=field)
        result['flags']['finite_total_mass'] = bool(
            math.isfinite(total.mass) and total.err < 0.01 * total.mass
        )
        result['flags']['s1_inequality'] = all(
            s1_inequality_holds(h, -math.log(d)) for d in config.deltas
        )

        self.writer.write_svg('mass.svg', lambda fig: self._draw_lelong(fig, scans))
        result['summary'].update({
            'profiles': ', '.join(scans),
            'total_mass': total.mass,
            'total_mass_err': total.err,
            'split_mass': split.mass,
            'full_region_mass': full['mass'],
            'lelong_drop': drops,
            'lelong_log_rate': rates,
        })

    def _draw_lelong(self, figure: Any, scans: Dict[str, List[MassReport]]) -> None:
        axes = figure.subplots()
        for spec, reports in scans.items():
            axes.loglog([r.delta for r in reports], [r.ratio_lelong for r in reports], 'o-', label=spec)
        axes.set_xlabel('delta')
        axes.set_ylabel('mass / delta^2')
        axes.set_title('Lelong ratio')
        axes.legend()

    # lemmas

    def cmd_lemmas(self, result: Dict[str, Any]) -> None:
        """Run the four lemma checks and the window mechanism."""
        config = self.config
        h = self.h
        q = config.quadrature

        reports: List[LemmaReport] = [
            check_uv1(h, N=config.uv1_n, threshold=config.uv1_threshold),
            check_uv2(h, slope_tol=config.slope_tol),
            check_kernel_upper(h, q=q, growth_limit=config.growth_limit, workers=self.workers),
            check_kernel_lower(h, q=q, threshold=config.lower_threshold, workers=self.workers),
        ]
        for report in reports:
            self.view.display_lemma_report(report)
            self.writer.write_csv(
                f"lemma_{report.lemma_id}.csv", ['point', 'value', 'normalized'], report.rows
            )
            result['flags'][f"lemma_{report.lemma_id}"] = bool(report.passed)

        upper, lower = reports[2], reports[3]
        overlap = [row for row in upper.rows if row[0] >= 2.0 * h.rho]
        lower_overlap = [row for row in lower.rows if row[0] >= 2.0 * h.rho]
        if overlap and lower_overlap:
            result['flags']['kernel_upper_ge_lower'] = bool(
                max(r[2] for r in overlap) >= min(r[2] for r in lower_overlap)
            )

        beta_fd = primed(h, 1e-4)[1] / 1e-4
        result['flags']['beta_finite_difference'] = bool(abs(beta_fd - h.beta) <= 0.01 * h.beta)

        exponent = -1.0 + 1.0 / h.gamma
        window_rows = []
        for x_p in WINDOW_POINTS:
            integral = window_integral(h, x_p, q)
            ratio = window_ratio(h, x_p)
            window_rows.append((x_p, integral, integral / x_p ** exponent, ratio))
        self.writer.write_csv('lemma_window.csv', ['x', 'window_integral', 'normalized', 'max_ratio'], window_rows)
        # The normalized window integral scales like 1/gamma.
        window_floor = min(0.1, WINDOW_CONSTANT / h.gamma)
        result['flags']['window_dominance'] = all(row[2] >= window_floor for row in window_rows)
        result['flags']['window_ratio_bounded'] = all(row[3] <= WINDOW_RATIO_LIMIT for row in window_rows)

        self.writer.write_svg('lemmas.svg', lambda fig: self._draw_kernel(fig, upper, lower))
        result['summary']['lemmas'] = [report.to_dict() for report in reports]
        result['summary']['window_floor'] = window_floor

    def _draw_kernel(self, figure: Any, upper: LemmaReport, lower: LemmaReport) -> None:
        axes = figure.subplots()
        for report, sign, label in ((upper, 1.0, "x' > 0"), (upper, -1.0, "x' < 0"), (lower, 1.0, 'r >= 1/b')):
            rows = sorted((r for r in report.rows if r[0] * sign > 0), key=lambda r: abs(r[0]))
            axes.semilogx([abs(r[0]) for r in rows], [r[2] for r in rows], 'o-', label=label)
        axes.set_xlabel("|x'|")
        axes.set_ylabel("I(x') |x'|^(1-1/gamma)")
        axes.set_title('Normalized kernel integral')
        axes.legend()

    # ddc

    def cmd_ddc(self, result: Dict[str, Any]) -> None:
        """Edge integrals over the exhaustion, the negative control and the far-field split."""
        config = self.config
        h = self.h
        q = config.quadrature
        bd = config.boundary_data()

        horizontal = flux_scan(h, bd, config.s_values, config.lam, q, edge=HORIZONTAL, workers=self.workers)
        vertical = flux_scan(h, bd, config.s_values, config.lam, q, edge=VERTICAL, workers=self.workers)
        for report in (horizontal, vertical):
            self.view.display_flux_report(report)

        rows = list(zip(
            horizontal.s_values,
            horizontal.flux_value,
            horizontal.grad_value,
            vertical.flux_value,
            vertical.grad_value,
        ))
        self.writer.write_csv('ddc_flux.csv', ['s', 'flux', 'grad', 'vertical_flux', 'vertical_grad'], rows)

        control = negative_control(h, config.s_values, config.lam, q)
        self.writer.write_csv(
            'ddc_negative_control.csv',
            ['s', 'flux', 'expected'],
            list(zip(control['s_values'], control['flux'], control['expected'])),
        )

        far_rows = [far_field_split(h, bd, s, config.lam, q) for s in config.s_values]
        self.writer.write_csv(
            'ddc_far_field.csv',
            ['s', 'far', 'envelope', 'kernel_constant', 'bound'],
            [(r['s'], r['far'], r['envelope'], r['kernel_constant'], r['bound']) for r in far_rows],
        )

        self.writer.write_svg('ddc.svg', lambda fig: self._draw_flux(fig, horizontal, vertical, control))
        result['flags'].update({
            'ddc_horizontal_decay': horizontal.passed,
            'ddc_vertical_decay': vertical.passed,
            'ddc_negative_control': control['passed'],
            'ddc_far_field_envelope': all(r['dominated'] > 0 for r in far_rows),
        })
        result['summary'].update({
            'lambda': config.lam,
            'negative_control_limit': control['limit'],
            'negative_control_error': control['limit_error'],
            'expected_exponents': expected_exponents(h),
            'fitted_exponents': {
                report.edge: {'flux': report.flux_exponent, 'grad': report.grad_exponent}
                for report in (horizontal, vertical)
            },
            'note': 'decay of the surrogate edge integrals only; the bounded coefficients are not estimated',
        })

    def _draw_flux(self, figure: Any, horizontal: Any, vertical: Any, control: Dict[str, Any]) -> None:
        axes = figure.subplots()
        s = horizontal.s_values
        axes.semilogy(s, horizontal.flux_value, 'o-', label='flux (E_s)')
        axes.semilogy(s, horizontal.grad_value, 's-', label='grad (E_s)')
        axes.semilogy(s, vertical.flux_value, '^-', label="flux (E'_s)")
        axes.semilogy(s, vertical.grad_value, 'v-', label="grad (E'_s)")
        axes.semilogy(s, control['flux'], 'k--', label='constant data')
        axes.set_xlabel('s')
        axes.set_title(f"Edge integrals, lambda = {self.config.lam:g}")
        axes.legend(fontsize='small')

    # sharpness

    def cmd_sharpness(self, result: Dict[str, Any]) -> None:
        """Headline table mass / (delta^2 eps(delta)) and its stability under tighter tolerances."""
        config = self.config
        h = self.h
        profile = config.profile()
        bd = ProfileBoundaryData(profile, h.gamma)

        reports = mass_scan(h, bd, profile, config.deltas, config.quadrature, workers=self.workers)
        self.view.display_mass_table(reports, title=f"Sharpness, {profile.label()}")
        floors = [sharpness_floor(profile, r.delta) for r in reports]
        rows = [
            (r.delta, r.mass, r.ratio_lelong, r.ratio_sharp, r.s1_lower, f, r.converged)
            for r, f in zip(reports, floors)
        ]
        self.writer.write_csv(
            'sharpness.csv',
            ['delta', 'mass', 'mass_over_delta2', 'mass_over_delta2_eps', 's1_lower', 'floor', 'converged'],
            rows,
        )
        converged = all(r.converged for r in reports)
        c0 = min(r.ratio_sharp for r in reports)
        result['flags']['sharpness_positive'] = converged and c0 > 0
        result['flags']['s1_lower_below_mass'] = all(r.s1_lower <= r.mass + r.err for r in reports)

        self.writer.write_svg('sharpness.svg', lambda fig: self._draw_sharpness(fig, profile, reports))

        tight = config.tightened(10.0)
        tight_reports = mass_scan(h, bd, profile, config.deltas, tight.quadrature, workers=self.workers)
        self._write_mass('sharpness_tightened.csv', tight_reports)
        c0_tight = min(r.ratio_sharp for r in tight_reports)
        result['flags']['sharpness_stable'] = bool(
            all(r.converged for r in tight_reports)
            and abs(c0_tight - c0) <= SHARPNESS_STABILITY * c0
        )

        # The mass is linear in A, so the constant scales with it.
        amplitude_rows = [(A, c0 * A / profile.amplitude) for A in (1.0, 10.0, 100.0)]
        self.writer.write_csv('sharpness_amplitude.csv', ['A', 'c0'], amplitude_rows)
        self.view.display_table('Constant c0 by amplitude', ['A', 'c0'], amplitude_rows)
        result['summary'].update({
            'profile': profile.label(),
            'c0': c0,
            'c0_tightened': c0_tight,
            'min_s1_over_floor': min(r.s1_lower / f for r, f in zip(reports, floors)),
        })

    def _draw_sharpness(self, figure: Any, profile: EpsilonProfile, reports: Sequence[MassReport]) -> None:
        axes = figure.subplots()
        deltas = np.array([r.delta for r in reports])
        axes.loglog(deltas, [r.mass for r in reports], 'o-', label='trace mass')
        axes.loglog(deltas, [r.s1_lower for r in reports], 's--', label='S1, exp(-2v) term')
        fine = np.geomspace(deltas.min(), deltas.max(), 100)
        reference = np.array([profile.value(d) for d in fine]) * fine ** 2
        axes.loglog(fine, reference, 'k:', label='eps(delta) delta^2')
        axes.set_xlabel('delta')
        axes.set_title('Mass against eps(delta) delta^2')
        axes.legend()
