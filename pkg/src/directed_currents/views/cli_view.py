"""
CLI View - Command line interface presentation layer.
"""

from typing import Any, Dict, List, Optional, Sequence

from ..models.asymptotics import LemmaReport
from ..models.current_mass import MassReport
from ..models.ddc_verifier import FluxReport
from .console_formatter import ConsoleFormatter


class CLIView:
    """
    Command-line interface view for experiment reports.
    """

    def __init__(self, formatter: Optional[ConsoleFormatter] = None):
        """
        Initialize the CLI view.

        Args:
            formatter: Console formatter instance. Creates default if None.
        """
        self.formatter = formatter or ConsoleFormatter()

    def display_welcome(self, command: str, summary: Dict[str, Any]) -> None:
        """
        Display the command header and the run parameters.

        Args:
            command: Sub-command being run
            summary: Short description of the configuration
        """
        self.formatter.print_output(self.formatter.format_title(f"directed-currents {command}"))
        self.formatter.print_output(self.formatter.format_statistics(summary))

    def display_mass_table(self, reports: Sequence[MassReport], title: str = "Trace mass") -> None:
        """
        Display one row per bidisc radius.

        Args:
            reports: Mass reports in scan order
            title: Table title
        """
        self.formatter.print_output(self.formatter.format_title(title))
        columns = ['delta', 't', 'mass', 'err', 'mass/d^2', 'mass/(d^2 eps)', 'S1 exp(-2v)']
        rows = [
            [r.delta, r.t, r.mass, r.err, r.ratio_lelong, r.ratio_sharp, r.s1_lower]
            for r in reports
        ]
        self.formatter.print_output(self.formatter.format_table(columns, rows))
        for report in reports:
            if not report.converged:
                self.display_warning(f"delta={report.delta:g}: {report.message}")

    def display_lemma_report(self, report: LemmaReport) -> None:
        """
        Display a lemma check with its verdict.

        Args:
            report: The lemma report
        """
        self.formatter.print_output(self.formatter.format_flag(report.lemma_id, report.passed))
        stats = {
            'grid': report.grid,
            'fitted_exponents': ', '.join(f"{e:.6g}" for e in report.fitted_exponents),
            'empirical_constant': report.empirical_constant,
            'details': report.details,
        }
        self.formatter.print_output(self.formatter.format_statistics(stats))

    def display_flux_report(self, report: FluxReport) -> None:
        """
        Display an edge-integral scan.

        Args:
            report: The flux report
        """
        self.formatter.print_output(
            self.formatter.format_title(f"{report.edge} edge, lambda={report.lambda_:g}")
        )
        rows = list(zip(report.s_values, report.flux_value, report.grad_value))
        self.formatter.print_output(self.formatter.format_table(['s', 'flux', 'grad'], rows))
        self.formatter.print_output(self.formatter.format_statistics({
            'flux_slope': report.flux_exponent,
            'grad_slope': report.grad_exponent,
        }))
        for failure in report.failures:
            self.display_warning(failure)

    def display_table(self, title: str, columns: Sequence[str], rows: Sequence[Sequence[Any]]) -> None:
        self.formatter.print_output(self.formatter.format_title(title))
        self.formatter.print_output(self.formatter.format_table(columns, rows))

    def display_flags(self, flags: Dict[str, bool]) -> None:
        """
        Display all pass/fail criteria of a run.

        Args:
            flags: Criterion name to verdict
        """
        self.formatter.print_output(self.formatter.format_title("Criteria"))
        for name, passed in flags.items():
            self.formatter.print_output(self.formatter.format_flag(name, passed))

    def display_files(self, files: List[str]) -> None:
        self.formatter.print_output(self.formatter.format_title("Files"))
        for path in files:
            self.formatter.print_output(f"  {path}")

    def display_error(self, error_message: str) -> None:
        self.formatter.print_error(error_message)

    def display_warning(self, message: str) -> None:
        self.formatter.print_output(self.formatter.format_warning(message))

    def display_success(self, message: str) -> None:
        self.formatter.print_output(self.formatter.format_success(message))

    def display_info(self, message: str) -> None:
        self.formatter.print_output(self.formatter.format_info(message))
