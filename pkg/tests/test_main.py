"""
Tests for the directed_currents command line, configuration and report files.
"""

import configparser
import json
import math
import os

import pytest

from directed_currents import __version__, run_command
from directed_currents.controllers.application_controller import ApplicationController
from directed_currents.controllers.experiment_controller import COMMANDS, ExperimentController
from directed_currents.main import build_parser, main
from directed_currents.models.run_config import RunConfig, parse_profile_option
from directed_currents.models.quadrature import QuadratureSpec
from directed_currents.views.cli_view import CLIView
from directed_currents.views.console_formatter import ConsoleFormatter
from directed_currents.views.report_writer import ReportWriter, sha256_file


def write_ini(path, sections):
    parser = configparser.ConfigParser()
    parser.optionxform = str
    parser.read_dict(sections)
    with open(path, "w", encoding="utf-8") as handle:
        parser.write(handle)
    return str(path)


@pytest.fixture
def quiet_view():
    return CLIView(ConsoleFormatter(use_colors=False))


class TestCommandLine:
    """Test the argparse entry point."""

    def test_no_command(self, capsys):
        """Without a command the usage goes to stderr and the exit code is 2."""
        with pytest.raises(SystemExit) as info:
            main([])
        assert info.value.code == 2
        assert "usage" in capsys.readouterr().err

    def test_parser(self):
        """Flags map onto the expected destinations."""
        args = build_parser().parse_args(["mass", "--A", "5", "--profile", "log_power:2", "--threads", "3"])
        assert args.command == "mass"
        assert args.amplitude == 5.0
        assert args.profile == "log_power:2"
        assert args.threads == 3
        assert set(COMMANDS) == {"leaf", "extend", "mass", "lemmas", "ddc", "sharpness"}

    def test_leaf_run(self, tmp_path):
        """A small leaf run passes and writes the table, the plot and the manifest."""
        ini = write_ini(tmp_path / "run.ini", {
            "cli_reports": {"out": str(tmp_path / "out"), "leaf_grid": "20"},
        })
        with pytest.raises(SystemExit) as info:
            main(["leaf", "--config", ini])
        assert info.value.code == 0

        out = tmp_path / "out" / "leaf"
        data = (out / "leaf.csv").read_bytes()
        lines = data.split(b"\r\n")
        assert lines[-1] == b""
        assert len(lines) - 1 == 401
        assert lines[0] == b"u,v,re_z1,im_z1,re_z2,im_z2,abs_z1,abs_z2"
        assert (out / "leaf.svg").exists()

        manifest = json.loads((out / "manifest.json").read_text(encoding="utf-8"))
        assert manifest["command"] == "leaf"
        assert manifest["version"] == __version__
        assert manifest["passed"] is True
        hashes = {item["path"]: item["sha256"] for item in manifest["files"]}
        assert hashes["leaf.csv"] == sha256_file(str(out / "leaf.csv"))
        assert "leaf.svg" in hashes

    def test_bad_profile(self, tmp_path, capsys):
        """An invalid profile exits with 1 and an error message."""
        with pytest.raises(SystemExit) as info:
            main(["leaf", "--profile", "cubic:1", "--out", str(tmp_path)])
        assert info.value.code == 1
        assert "Error" in capsys.readouterr().err

    def test_flags_override_file(self, tmp_path):
        """Command-line flags win over the config file."""
        from directed_currents.main import load_config

        ini = write_ini(tmp_path / "run.ini", {"geometry": {"a": "2.0", "b": "3.0"}})
        args = build_parser().parse_args(["leaf", "--config", ini, "--a", "0"])
        config = load_config(args)
        assert config.a == 0.0
        assert config.b == 3.0


class TestRunConfig:
    """Test the validated run configuration."""

    def test_defaults(self):
        """Default run: eta = 1 + i with power:0.5 and A = 10."""
        config = RunConfig.build()
        assert (config.a, config.b) == (1.0, 1.0)
        assert config.profile_spec() == "power:0.5"
        assert config.amplitude == 10.0
        assert config.hyperbolicity().gamma == pytest.approx(4.0 / 3.0)

    def test_negative_b_swaps(self):
        """b < 0 swaps the coordinates and inverts eta."""
        config = RunConfig.build(a=1.0, b=-1.0)
        assert (config.a, config.b) == pytest.approx((0.5, 0.5))

    @pytest.mark.parametrize("values", [
        {"b": 0.0},
        {"deltas": (0.3, 0.5)},
        {"deltas": (0.5, 1.0)},
        {"s_values": (0.5, 2.0)},
        {"s_values": (4.0, 2.0)},
        {"lam": 0.0},
        {"threads": 0},
        {"leaf_grid": 1},
        {"profile_kind": "cubic"},
        {"profile_kind": "tabulated"},
        {"p": 1.5},
    ])
    def test_validation(self, values):
        """Invalid values are rejected up front."""
        with pytest.raises(ValueError):
            RunConfig.build(**values)

    def test_sections_round_trip(self):
        """The sectioned form rebuilds the same configuration."""
        config = RunConfig.build(
            a=-0.5, b=2.0, profile_kind="log_power", alpha=2.0, amplitude=3.0,
            deltas=(0.4, 0.2), quadrature=QuadratureSpec(tol_rel=1e-7, mass_tol_rel=1e-3),
        )
        assert RunConfig.from_sections(config.to_sections()) == config

    def test_file_round_trip(self, tmp_path):
        """An INI file written from the sections reads back unchanged."""
        config = RunConfig.build(a=0.0, p=0.75, s_values=(2.0, 4.0), seed=7)
        path = write_ini(tmp_path / "config.ini", config.to_sections())
        assert RunConfig.from_file(path) == config

    def test_unreadable_file(self, tmp_path):
        """Missing files and bad values raise ValueError."""
        with pytest.raises(ValueError):
            RunConfig.from_file(str(tmp_path / "missing.ini"))
        path = write_ini(tmp_path / "bad.ini", {"geometry": {"a": "one"}})
        with pytest.raises(ValueError):
            RunConfig.from_file(path)

    def test_parse_profile_option(self):
        """The three profile kinds and malformed text."""
        assert parse_profile_option("power:0.25") == {"profile_kind": "power", "p": 0.25}
        assert parse_profile_option("log_power:2") == {"profile_kind": "log_power", "alpha": 2.0}
        assert parse_profile_option("tabulated:eps.csv") == {"profile_kind": "tabulated", "table": "eps.csv"}
        for text in ("power", "cubic:1", "power:"):
            with pytest.raises(ValueError):
                parse_profile_option(text)

    def test_with_overrides(self):
        """None values are ignored and the result is validated."""
        config = RunConfig.build()
        assert config.with_overrides(a=None, out=None) is config
        assert config.with_overrides(p=0.75).p == 0.75
        with pytest.raises(ValueError):
            config.with_overrides(threads=0)

    def test_tightened(self):
        """Tightening reaches the quadrature only."""
        config = RunConfig.build()
        tight = config.tightened(10.0)
        assert tight.quadrature.tol_rel == pytest.approx(config.quadrature.tol_rel / 10.0)
        assert tight.a == config.a


class TestViews:
    """Test the console formatter and the report writer."""

    def test_formatter_plain(self):
        """Without colors the text is unchanged."""
        formatter = ConsoleFormatter(use_colors=False)
        assert formatter.format_flag("leaf_moduli", True) == "PASS leaf_moduli"
        assert formatter.format_flag("leaf_moduli", False) == "FAIL leaf_moduli"
        assert formatter.format_number(math.nan) == "-"
        assert formatter.format_number(True) == "yes"
        assert formatter.format_number(1.23456789) == "1.23457"

    def test_formatter_messages(self):
        """Titles and messages carry their markers; colors wrap them in escape codes."""
        plain = ConsoleFormatter(use_colors=False)
        assert plain.format_title("Criteria") == "\n=== Criteria ===\n"
        assert plain.format_success("done") == "✓ done"
        assert plain.format_error("bad delta") == "✗ Error: bad delta"
        assert plain.format_warning("slow") == "⚠ Warning: slow"
        assert plain.format_info("note") == "ℹ note"
        colored = ConsoleFormatter(use_colors=True)
        colored.use_colors = True
        text = colored.format_success("done")
        assert text.startswith("\033[") and text.endswith(colored.colors['reset'])
        for method in ("format_title", "format_success", "format_error", "format_warning", "format_info"):
            assert "Returns:" in getattr(ConsoleFormatter, method).__doc__

    def test_formatter_table(self):
        """Columns are right-aligned under a rule."""
        formatter = ConsoleFormatter(use_colors=False)
        table = formatter.format_table(["x", "value"], [(1, 0.5), (10, math.nan)])
        lines = table.split("\n")
        assert lines[0] == " x  value"
        assert lines[1] == "--  -----"
        assert lines[3] == "10      -"

    def test_csv(self, tmp_path):
        """CRLF line endings and exact float text."""
        writer = ReportWriter(str(tmp_path / "new"))
        path = writer.write_csv("t.csv", ["x", "ok"], [(0.1, True), (math.nan, False)])
        assert open(path, "rb").read() == b"x,ok\r\n0.1,true\r\nnan,false\r\n"
        assert writer.files == [path]

    def test_svg_deterministic(self, tmp_path):
        """The same drawing gives the same bytes."""
        def draw(figure):
            axes = figure.subplots()
            axes.plot([0, 1, 2], [1, 0, 1])

        writer = ReportWriter(str(tmp_path))
        first = open(writer.write_svg("a.svg", draw), "rb").read()
        second = open(writer.write_svg("b.svg", draw), "rb").read()
        assert first == second

    def test_manifest(self, tmp_path):
        """The manifest records flags, the verdict and file hashes."""
        import datetime

        writer = ReportWriter(str(tmp_path))
        writer.write_csv("t.csv", ["x"], [(1,)])
        now = datetime.datetime(2024, 1, 1, tzinfo=datetime.timezone.utc)
        path = writer.write_manifest("leaf", {"geometry": {"a": "1.0"}}, "0.1.0", now, now, {"x": False})
        manifest = json.loads(open(path, encoding="utf-8").read())
        assert manifest["passed"] is False
        assert manifest["wall_time_s"] == 0.0
        assert manifest["files"][0]["path"] == "t.csv"


class TestControllers:
    """Test the controllers."""

    def test_unknown_command(self, tmp_path, quiet_view):
        """Unknown commands come back as an error."""
        app = ApplicationController(RunConfig.build(out=str(tmp_path)), view=quiet_view)
        assert "error" in app.execute("bogus")
        writer = ReportWriter(str(tmp_path))
        assert "error" in ExperimentController(RunConfig.build(), writer, view=quiet_view).run("bogus")

    def test_run_exit_status(self, tmp_path, quiet_view):
        """A passing leaf run maps to 0."""
        app = ApplicationController(RunConfig.build(out=str(tmp_path), leaf_grid=5), view=quiet_view)
        assert app.run("leaf") == 0
        assert os.path.exists(os.path.join(str(tmp_path), "leaf", "manifest.json"))

    def test_run_command(self, tmp_path):
        """The package-level helper returns the result dict and the manifest rebuilds the config."""
        config = RunConfig.build(out=str(tmp_path), leaf_grid=4, a=0.0)
        result = run_command("leaf", config)
        assert result["flags"]["leaf_moduli"]
        assert result["summary"]["rows"] == 16
        assert RunConfig.from_manifest(result["manifest"]) == config

    @pytest.mark.slow
    def test_extend(self, tmp_path, quiet_view):
        """A small extension run is positive, symmetric and harmonic."""
        config = RunConfig.build(out=str(tmp_path), extend_grid=3, a=0.0)
        writer = ReportWriter(str(tmp_path))
        result = ExperimentController(config, writer, view=quiet_view).run("extend")
        assert "error" not in result
        assert result["flags"]["extension_positive"]
        assert result["flags"]["extension_symmetry"]
        assert result["flags"]["extension_mean_value"]
        names = {os.path.basename(path) for path in result["files"]}
        assert {"extension_halfplane.csv", "extension_sector.csv", "extension.svg"} <= names

    def test_flags_are_plain_booleans(self, tmp_path, quiet_view, monkeypatch):
        """numpy booleans in flags reach the manifest as JSON true/false."""
        import numpy as np

        def fake_leaf(self, result):
            result['flags']['numpy_flag'] = np.bool_(True)

        monkeypatch.setattr(ExperimentController, "cmd_leaf", fake_leaf)
        app = ApplicationController(RunConfig.build(out=str(tmp_path)), view=quiet_view)
        result = app.execute("leaf")
        assert type(result["flags"]["numpy_flag"]) is bool
        manifest = json.loads(open(result["manifest"], encoding="utf-8").read())
        assert manifest["flags"]["numpy_flag"] is True
        assert manifest["passed"] is True

    def test_rerun_is_byte_identical(self, tmp_path, quiet_view):
        """Running the same configuration twice writes the same CSV and SVG bytes."""
        outputs = []
        for name in ("first", "second"):
            config = RunConfig.build(out=str(tmp_path / name), leaf_grid=8)
            ApplicationController(config, view=quiet_view).execute("leaf")
            outputs.append(tmp_path / name / "leaf")
        for artifact in ("leaf.csv", "leaf.svg"):
            assert (outputs[0] / artifact).read_bytes() == (outputs[1] / artifact).read_bytes()


def loose_config(tmp_path, **values):
    return RunConfig.build(
        out=str(tmp_path),
        quadrature=QuadratureSpec(tol_rel=1e-6, mass_tol_rel=1e-3),
        **values,
    )


@pytest.mark.slow
class TestExperiments:
    """Run the numerical experiments end to end."""

    def test_extend_threads_do_not_change_bytes(self, tmp_path, quiet_view):
        """One thread and two threads write identical extension tables."""
        tables = []
        for threads in (1, 2):
            config = RunConfig.build(out=str(tmp_path / str(threads)), extend_grid=4, threads=threads)
            result = ApplicationController(config, view=quiet_view).execute("extend")
            assert "error" not in result
            tables.append((tmp_path / str(threads) / "extend" / "extension_sector.csv").read_bytes())
        assert tables[0] == tables[1]

    def test_mass(self, tmp_path, quiet_view):
        """Mass scans decrease, the split is consistent and the total mass is finite."""
        config = loose_config(tmp_path, deltas=(0.5, 0.1, 0.02))
        result = ApplicationController(config, view=quiet_view).execute("mass")
        assert "error" not in result
        flags = result["flags"]
        for spec in ("power:0.5", "power:1", "log_power:1"):
            assert flags[f"lelong_decreasing[{spec}]"]
            assert flags[f"lelong_reduced[{spec}]"]
            assert 0 < result["summary"]["lelong_drop"][spec] < 0.8
        assert flags["split_consistent"]
        assert flags["finite_total_mass"]
        assert flags["s1_inequality"]
        assert all(flags.values())

    def test_lemmas(self, tmp_path, quiet_view):
        """All estimate checks pass for eta = 1 + i and the manifest stores booleans."""
        result = ApplicationController(RunConfig.build(out=str(tmp_path)), view=quiet_view).execute("lemmas")
        assert "error" not in result
        assert all(type(v) is bool for v in result["flags"].values())
        assert all(result["flags"].values())
        manifest = json.loads(open(result["manifest"], encoding="utf-8").read())
        assert all(v is True for v in manifest["flags"].values())

    def test_lemmas_window_for_large_gamma(self, tmp_path, quiet_view):
        """eta = -1 + i (gamma = 4): the window floor scales down with gamma."""
        config = RunConfig.build(out=str(tmp_path), a=-1.0, b=1.0)
        result = ApplicationController(config, view=quiet_view).execute("lemmas")
        assert "error" not in result
        assert config.hyperbolicity().gamma == pytest.approx(4.0)
        assert result["summary"]["window_floor"] == pytest.approx(0.05)
        assert result["flags"]["window_dominance"]

    def test_ddc(self, tmp_path, quiet_view):
        """The default edge scans pass and the constant-data control does not decay."""
        result = ApplicationController(RunConfig.build(out=str(tmp_path)), view=quiet_view).execute("ddc")
        assert "error" not in result
        flags = result["flags"]
        assert flags["ddc_horizontal_decay"]
        assert flags["ddc_vertical_decay"]
        assert flags["ddc_negative_control"]
        assert flags["ddc_far_field_envelope"]
        fitted = result["summary"]["fitted_exponents"]
        assert fitted["Horizontal"]["grad"] < 0

    def test_sharpness(self, tmp_path, quiet_view):
        """c0 is positive and stable under ten times tighter tolerances."""
        config = loose_config(tmp_path, deltas=(0.5, 0.3))
        result = ApplicationController(config, view=quiet_view).execute("sharpness")
        assert "error" not in result
        flags = result["flags"]
        assert flags["sharpness_positive"]
        assert flags["sharpness_stable"]
        assert flags["s1_lower_below_mass"]
        summary = result["summary"]
        assert summary["c0_tightened"] == pytest.approx(summary["c0"], rel=0.25)
        names = {os.path.basename(path) for path in result["files"]}
        assert {"sharpness.csv", "sharpness_tightened.csv", "sharpness_amplitude.csv", "sharpness.svg"} <= names
