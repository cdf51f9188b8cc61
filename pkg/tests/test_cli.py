import json

import pytest

from stretchfrac.cli import EXIT_CHECK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_OK, main, parse_grid, ConfigError


def run(capsys, *args):
    code = main(list(args))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_list_templates(capsys):
    code, out, _ = run(capsys, "list-templates")
    assert code == EXIT_OK
    assert "vicsek,5,4,4" in out


def test_verify(capsys):
    code, out, _ = run(capsys, "verify", "-t", "vicsek", "--lam", "0.2", "--rho", "0.1")
    assert code == EXIT_OK and "harmonic" in out
    code, out, _ = run(capsys, "verify", "-t", "sierpinski3", "--lam", "0.3", "--rho", "0.4")
    assert code == EXIT_CHECK


def test_dims(capsys):
    code, out, _ = run(capsys, "dims", "-t", "sierpinski3", "--lam", "0.6", "--eta", "0.5")
    assert code == EXIT_OK
    header, row = out.strip().splitlines()
    assert dict(zip(header.split(","), row.split(",")))["d_spectral"].startswith("1.3652")


def test_solve_harmonic_grid(capsys):
    code, out, _ = run(capsys, "solve-harmonic", "-t", "sierpinski3", "--lam", "0.1:0.5:5", "-j", "1")
    assert code == EXIT_OK
    assert len(out.strip().splitlines()) == 6
    code2, out2, _ = run(capsys, "solve-harmonic", "-t", "sierpinski3", "--lam", "0.1:0.5:5", "-j", "2")
    assert out2 == out
    code, _, _ = run(capsys, "solve-harmonic", "-t", "sierpinski3", "--lam", "0.7")
    assert code == EXIT_NUMERIC


def test_reversed_grid(capsys):
    code, _, err = run(capsys, "sweep", "--lam", "0.5:0.1:3")
    assert code == EXIT_CONFIG
    with pytest.raises(ConfigError):
        parse_grid("0.5:0.1:3")


def test_bad_flags_and_templates(capsys):
    assert run(capsys, "verify", "--bogus")[0] == EXIT_CONFIG
    assert run(capsys, "verify", "-t", "nosuch", "--lam", "0.2", "--rho", "0.1")[0] == EXIT_CONFIG
    assert run(capsys, "spectrum", "--lam", "0.3", "--eta", "0")[0] == EXIT_CONFIG
    assert run(capsys, "spectrum", "--lam", "0.9")[0] == EXIT_NUMERIC


def test_spectrum_outputs(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("STRETCHFRAC_OUTDIR", str(tmp_path / "a"))
    code, out, _ = run(capsys, "spectrum", "-t", "sierpinski3", "--lam", "0.3", "-n", "3", "-s", "2")
    assert code == EXIT_OK
    files = sorted(p.name for p in (tmp_path / "a").iterdir())
    assert files == ["counting.csv", "eigenvalues.csv", "fit.csv", "plot_counting.py"]
    first = (tmp_path / "a" / "eigenvalues.csv").read_bytes()
    run(capsys, "spectrum", "-t", "sierpinski3", "--lam", "0.3", "-n", "3", "-s", "2", "--outdir", str(tmp_path / "b"))
    assert (tmp_path / "b" / "eigenvalues.csv").read_bytes() == first
    compile((tmp_path / "a" / "plot_counting.py").read_text(), "plot", "exec")


def test_config_file_wins(tmp_path, capsys, caplog):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"level": 1, "lam": 0.3}))
    code, out, _ = run(capsys, "export-graph", "--config", str(cfg), "-n", "2")
    assert code == EXIT_OK
    assert len(out.strip().splitlines()) == 1 + 9 + 6
    assert any("overrides" in r.message for r in caplog.records)
    cfg.write_text(json.dumps({"nonsense": 1}))
    assert run(capsys, "export-graph", "--config", str(cfg))[0] == EXIT_CONFIG


def test_sweep_is_deterministic(capsys):
    args = ("sweep", "--lam", "0.2:0.4:3", "--eta", "0.5", "-n", "3")
    code, out, _ = run(capsys, *args, "-j", "1")
    assert code == EXIT_OK
    assert out.splitlines()[0].startswith("template,lam,eta,beta")
    assert len(out.strip().splitlines()) == 4
    assert run(capsys, *args, "-j", "2")[1] == out


def test_check(capsys):
    code, out, _ = run(capsys, "check")
    assert code == EXIT_OK
    assert out.count("PASS") == 6
