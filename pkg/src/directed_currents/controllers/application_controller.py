"""
Application controller - Main controller coordinating a run.
"""

from concurrent.futures import ThreadPoolExecutor
from typing import Any, Dict, Optional
import datetime
import logging
import os

from ..models.run_config import RunConfig
from ..views.cli_view import CLIView
from ..views.report_writer import ReportWriter
from .experiment_controller import COMMANDS, ExperimentController

logger = logging.getLogger(__name__)


class ApplicationController:
    """
    Main application controller: owns the configuration, the worker pool,
    the view and the run manifest.
    """

    def __init__(self, config: Optional[RunConfig] = None, view: Optional[CLIView] = None):
        """
        Initialize the application controller.

        Args:
            config: Validated run configuration. Uses defaults if None.
            view: CLI view instance
        """
        self.config = config or RunConfig()
        self.view = view or CLIView()

    def output_dir(self, command: str) -> str:
        return os.path.join(self.config.out, command)

    def execute(self, command: str) -> Dict[str, Any]:
        """
        Run one command and write its manifest.

        Args:
            command: One of leaf, extend, mass, lemmas, ddc, sharpness

        Returns:
            Dict with flags, files, summary, manifest and optionally error
        """
        if command not in COMMANDS:
            return {'flags': {}, 'files': [], 'summary': {}, 'error': f"Unknown command: {command}"}

        from .. import __version__

        config = self.config
        writer = ReportWriter(self.output_dir(command))
        self.view.display_welcome(command, {
            'a': config.a,
            'b': config.b,
            'profile': config.profile_spec(),
            'A': config.amplitude,
            'threads': config.threads,
            'output': writer.out_dir,
        })

        started = datetime.datetime.now(datetime.timezone.utc)
        executor = ThreadPoolExecutor(max_workers=config.threads) if config.threads > 1 else None
        try:
            workers = executor.map if executor is not None else None
            experiment = ExperimentController(config, writer, view=self.view, workers=workers)
            result = experiment.run(command)
        finally:
            if executor is not None:
                executor.shutdown(wait=True)
        finished = datetime.datetime.now(datetime.timezone.utc)

        summary = dict(result['summary'])
        if 'error' in result:
            summary['error'] = result['error']
        result['manifest'] = writer.write_manifest(
            command,
            config.to_sections(),
            __version__,
            started,
            finished,
            result['flags'],
            extra=summary,
        )
        logger.info("%s finished in %.1f s", command, (finished - started).total_seconds())
        return result

    def run(self, command: str) -> int:
        """
        Run a command, display its outcome and map it to an exit status.

        Args:
            command: Sub-command name

        Returns:
            int: 0 when every pass flag holds, 1 otherwise
        """
        result = self.execute(command)
        if 'error' in result:
            self.view.display_error(result['error'])
        self.view.display_flags(result['flags'])
        files = list(result['files'])
        if 'manifest' in result:
            files.append(result['manifest'])
        self.view.display_files(files)

        passed = 'error' not in result and all(result['flags'].values())
        if passed:
            self.view.display_success(f"{command}: all criteria passed")
        else:
            self.view.display_warning(f"{command}: some criteria failed")
        return 0 if passed else 1
