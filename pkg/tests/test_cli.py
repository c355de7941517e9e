"""Tests for the relmesh command-line interface."""

import pytest
from click.testing import CliRunner

from relmesh import __version__
from relmesh.cli import cli


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def db_path(tmp_path):
    return str(tmp_path / "ledger.sqlite")


def _run_vortex(runner, tmp_path, db_path, *extra):
    return runner.invoke(
        cli,
        [
            "run",
            "vortex",
            "--n",
            "8",
            "--t-final",
            "0.2",
            "--output-dir",
            str(tmp_path / "out"),
            "--db-path",
            db_path,
            *extra,
        ],
    )


def test_version(runner):
    """Test --version prints the package version."""
    result = runner.invoke(cli, ["--version"])
    assert result.exit_code == 0
    assert __version__ in result.output


def test_list_cases(runner):
    """Test list-cases shows every benchmark."""
    result = runner.invoke(cli, ["list-cases"])
    assert result.exit_code == 0
    for name in ("vortex", "rp1", "rp2", "rp3", "sine3d", "spherical-riemann", "shock-bubble"):
        assert name in result.output
    assert "qualitative" in result.output


def test_run_and_history(runner, tmp_path, db_path):
    """Test a run writes artifacts and shows up in the ledger."""
    result = _run_vortex(runner, tmp_path, db_path)
    assert result.exit_code == 0, result.output
    assert f"Output: {tmp_path / 'out'}" in result.output
    assert (tmp_path / "out" / "entropy.csv").exists()
    assert (tmp_path / "out" / "snapshot_000000.dat").exists()

    history = runner.invoke(cli, ["history", "--db-path", db_path])
    assert history.exit_code == 0
    assert "vortex" in history.output
    assert "completed" in history.output


def test_run_with_config_file(runner, tmp_path, db_path):
    """Test a config file supplies settings and flags override them."""
    config = tmp_path / "run.cfg"
    config.write_text("case = vortex\ncells = 8\nflux = ec\nt_final = 0.1\noutput.times = 0.1\n")
    result = runner.invoke(
        cli,
        ["run", "--config", str(config), "--flux", "ES1", "--output-dir", str(tmp_path / "cfg"), "--db-path", db_path],
    )
    assert result.exit_code == 0, result.output
    assert "flux = es1" in (tmp_path / "cfg" / "config.txt").read_text()


def test_config_file_error_names_line(runner, tmp_path, db_path):
    """Test a bad config line is reported with its number."""
    config = tmp_path / "bad.cfg"
    config.write_text("case = vortex\nflux = roe\n")
    result = runner.invoke(cli, ["run", "--config", str(config), "--db-path", db_path])
    assert result.exit_code == 1
    assert "line 2" in result.output


def test_run_unknown_case(runner, db_path):
    """Test an unknown case is a validation error."""
    result = runner.invoke(cli, ["run", "sod", "--db-path", db_path])
    assert result.exit_code == 1
    assert "Error:" in result.output


def test_run_bad_options(runner, db_path):
    """Test invalid flux and adapt values exit with code 1."""
    result = runner.invoke(cli, ["run", "vortex", "--flux", "roe", "--db-path", db_path])
    assert result.exit_code == 1
    assert "flux" in result.output

    result = runner.invoke(cli, ["run", "vortex", "--adapt", "sometimes", "--db-path", db_path])
    assert result.exit_code == 1


def test_history_empty(runner, db_path):
    """Test history on an empty ledger."""
    result = runner.invoke(cli, ["history", "--db-path", db_path])
    assert result.exit_code == 0
    assert "No runs recorded." in result.output


def test_converge_zero_time(runner, tmp_path):
    """Test converge prints a table and writes CSV."""
    csv_path = tmp_path / "table.csv"
    result = runner.invoke(cli, ["converge", "vortex", "--grids", "8,16", "--zero-time", "--csv", str(csv_path)])
    assert result.exit_code == 0, result.output
    assert "Convergence for 'vortex'" in result.output
    assert len(csv_path.read_text().splitlines()) == 3


def test_converge_qualitative_case(runner):
    """Test converge refuses a case without an exact solution."""
    result = runner.invoke(cli, ["converge", "rp1", "--grids", "8,16", "--zero-time"])
    assert result.exit_code == 1
    assert "exact solution" in result.output


def test_cutline(runner, tmp_path, db_path):
    """Test cutline samples a snapshot to stdout and to a file."""
    assert _run_vortex(runner, tmp_path, db_path).exit_code == 0
    snapshot = str(tmp_path / "out" / "snapshot_000000.dat")

    result = runner.invoke(cli, ["cutline", snapshot, "--from", "-4,-4", "--to", "4,4", "--samples", "5"])
    assert result.exit_code == 0, result.output
    lines = result.output.strip().splitlines()
    assert lines[0] == "s,lnrho"
    assert len(lines) == 6

    out = tmp_path / "cut.csv"
    result = runner.invoke(
        cli, ["cutline", snapshot, "--from", "-4,0", "--to", "4,0", "--field", "rho", "--out", str(out)]
    )
    assert result.exit_code == 0
    assert out.read_text().startswith("s,rho")


def test_cutline_outside_mesh(runner, tmp_path, db_path):
    """Test a line leaving the mesh fails."""
    assert _run_vortex(runner, tmp_path, db_path).exit_code == 0
    snapshot = str(tmp_path / "out" / "snapshot_000000.dat")
    result = runner.invoke(cli, ["cutline", snapshot, "--from", "0,0", "--to", "9,0"])
    assert result.exit_code == 2
    assert "outside the mesh" in result.output


def test_vcl_compare(runner, tmp_path):
    """Test vcl-compare prints all four combinations."""
    result = runner.invoke(
        cli, ["vcl-compare", "vortex", "--n", "8", "--t-final", "0.1", "--output-dir", str(tmp_path)]
    )
    assert result.exit_code == 0, result.output
    for label in ("vcl1/rk2", "vcl1/rk3", "vcl2/rk2", "vcl2/rk3"):
        assert label in result.output
    assert (tmp_path / "vcl_vcl2_rk3.csv").exists()


@pytest.mark.slow
def test_vortex_es2_acceptance(runner, tmp_path, db_path):
    """Test the default adaptive vortex run to t = 4."""
    result = runner.invoke(
        cli, ["run", "vortex", "--output-dir", str(tmp_path / "full"), "--db-path", db_path]
    )
    assert result.exit_code == 0, result.output
    assert (tmp_path / "full" / "summary.txt").exists()
