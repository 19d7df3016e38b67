"""
Report writer - Persists run artifacts: CSV tables, SVG plots and the manifest.
"""

from typing import Any, Callable, Dict, List, Optional, Sequence
import csv
import datetime
import hashlib
import json
import logging
import math
import os

import matplotlib

matplotlib.use('Agg')
import matplotlib.pyplot as plt  # noqa: E402

logger = logging.getLogger(__name__)

# Fixed salt and no date so that SVG bytes depend on the data only.
plt.rcParams['svg.hashsalt'] = 'directed-currents'


def sha256_file(path: str, chunk: int = 1 << 20) -> str:
    digest = hashlib.sha256()
    with open(path, 'rb') as handle:
        for block in iter(lambda: handle.read(chunk), b''):
            digest.update(block)
    return digest.hexdigest()


def _cell(value: Any) -> str:
    if isinstance(value, bool):
        return 'true' if value else 'false'
    if isinstance(value, float):
        if math.isnan(value):
            return 'nan'
        return repr(value)
    return str(value)


class ReportWriter:
    """
    Writes artifacts into one output directory and remembers what it wrote.
    """

    def __init__(self, out_dir: str):
        """
        Initialize the writer.

        Args:
            out_dir: Output directory, created on first write
        """
        self.out_dir = out_dir
        self.files: List[str] = []

    def _path(self, name: str) -> str:
        try:
            os.makedirs(self.out_dir, exist_ok=True)
        except OSError as exc:
            raise OSError(f"Cannot create output directory {self.out_dir}: {exc}") from exc
        return os.path.join(self.out_dir, name)

    def _record(self, path: str) -> str:
        if path not in self.files:
            self.files.append(path)
        logger.debug("Wrote %s", path)
        return path

    def write_csv(self, name: str, columns: Sequence[str], rows: Sequence[Sequence[Any]]) -> str:
        """
        Write an RFC 4180 CSV (CRLF line endings, UTF-8, header row).

        Floats are written with ``repr`` so that values round-trip exactly.

        Args:
            name: File name inside the output directory
            columns: Header names
            rows: One sequence per row

        Returns:
            str: Path of the written file

        Raises:
            OSError: With the path in the message when writing fails
        """
        path = self._path(name)
        try:
            with open(path, 'w', encoding='utf-8', newline='') as handle:
                writer = csv.writer(handle, lineterminator='\r\n')
                writer.writerow(columns)
                for row in rows:
                    writer.writerow([_cell(v) for v in row])
        except OSError as exc:
            raise OSError(f"Cannot write {path}: {exc}") from exc
        return self._record(path)

    def write_svg(self, name: str, draw: Callable[[Any], None], figsize: Sequence[float] = (6.4, 4.8)) -> str:
        """
        Draw a figure with ``draw(figure)`` and save it as SVG.

        Args:
            name: File name inside the output directory
            draw: Callback receiving the matplotlib figure
            figsize: Figure size in inches

        Returns:
            str: Path of the written file
        """
        path = self._path(name)
        figure = plt.figure(figsize=tuple(figsize))
        try:
            draw(figure)
            figure.savefig(path, format='svg', metadata={'Date': None})
        except OSError as exc:
            raise OSError(f"Cannot write {path}: {exc}") from exc
        finally:
            plt.close(figure)
        return self._record(path)

    def file_hashes(self) -> List[Dict[str, str]]:
        return [
            {'path': os.path.relpath(path, self.out_dir), 'sha256': sha256_file(path)}
            for path in self.files
        ]

    def write_manifest(
        self,
        command: str,
        config_sections: Dict[str, Dict[str, str]],
        version: str,
        started: datetime.datetime,
        finished: datetime.datetime,
        flags: Dict[str, bool],
        extra: Optional[Dict[str, Any]] = None,
        name: str = 'manifest.json',
    ) -> str:
        """
        Write the run manifest: configuration, timings, flags and file hashes.

        Returns:
            str: Path of the manifest
        """
        manifest = {
            'command': command,
            'version': version,
            'config': config_sections,
            'started': started.isoformat(),
            'finished': finished.isoformat(),
            'wall_time_s': (finished - started).total_seconds(),
            'flags': flags,
            'passed': all(flags.values()),
            'files': self.file_hashes(),
        }
        if extra:
            manifest['summary'] = extra
        path = self._path(name)
        try:
            with open(path, 'w', encoding='utf-8') as handle:
                json.dump(manifest, handle, indent=2, sort_keys=True, default=str)
                handle.write('\n')
        except OSError as exc:
            raise OSError(f"Cannot write {path}: {exc}") from exc
        logger.info("Manifest written to %s", path)
        return path
