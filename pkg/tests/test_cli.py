import subprocess
import sys

from mimodec.cli import main


def run_cli(*argv):
    return main(list(argv))


def test_simulate_writes_csv(tmp_path, capsys):
    out = tmp_path / "run.csv"
    code = run_cli("simulate", "--tx", "2", "--rx", "2", "--mod", "bpsk",
                   "--snr", "0:8:4", "--trials", "20", "--decoder", "sd:bestfs",
                   "--seed", "5", "--out", str(out))
    assert code == 0
    text = out.read_text()
    assert text.startswith("# mimodec-metrics v1")
    assert "snr_db,decoder" in text
    assert len(text.strip().splitlines()) == 3 + 3  # tag, grid, header + 3 rows
    assert "sd:bestfs" in capsys.readouterr().out


def test_simulate_config_file_and_flag_override(tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text(
        "tx = 2\nrx = 2\nmod = bpsk\nsnr = 4\n"
        "trials = 10  # tiny smoke\ndecoder = mmse\nseed = 1\n")
    out = tmp_path / "a.csv"
    code = run_cli("simulate", "--config", str(cfg), "--out", str(out))
    assert code == 0
    # flags win over the file
    out2 = tmp_path / "b.csv"
    code = run_cli("simulate", "--config", str(cfg), "--mod", "qpsk",
                   "--out", str(out2))
    assert code == 0
    assert "mod=qpsk" in out2.read_text().splitlines()[1]


def test_config_error_exit_code(capsys):
    assert run_cli("simulate", "--tx", "4", "--rx", "2", "--mod", "bpsk",
                   "--snr", "0", "--trials", "5", "--decoder", "mmse") == 2
    assert "rx" in capsys.readouterr().err
    assert run_cli("simulate", "--tx", "2", "--rx", "2", "--mod", "bpsk",
                   "--snr", "0", "--trials", "5", "--decoder", "nope") == 2


def test_missing_required_flags(capsys):
    assert run_cli("simulate", "--tx", "2") == 2
    assert "--rx" in capsys.readouterr().err


def test_io_error_exit_code(tmp_path):
    code = run_cli("simulate", "--tx", "2", "--rx", "2", "--mod", "bpsk",
                   "--snr", "0", "--trials", "5", "--decoder", "mmse",
                   "--out", str(tmp_path / "missing_dir" / "x.csv"))
    assert code == 3


def test_compare_subcommand(tmp_path, capsys):
    out_a = tmp_path / "a.csv"
    out_b = tmp_path / "b.csv"
    for out, dec in ((out_a, "mmse"), (out_b, "zf")):
        assert run_cli("simulate", "--tx", "4", "--rx", "4", "--mod", "bpsk",
                       "--snr", "4:8:4", "--trials", "50", "--decoder", dec,
                       "--seed", "2", "--out", str(out)) == 0
    capsys.readouterr()
    assert run_cli("compare", str(out_a), str(out_b)) == 0
    shown = capsys.readouterr().out
    assert "verdict" in shown and "ser" in shown


def test_compare_missing_file():
    assert run_cli("compare", "/nonexistent/a.csv", "/nonexistent/b.csv") == 3


def test_console_entry_point(tmp_path):
    result = subprocess.run(
        [sys.executable, "-m", "mimodec.cli", "simulate", "--tx", "2", "--rx", "2",
         "--mod", "bpsk", "--snr", "6", "--trials", "5", "--decoder", "zf",
         "--out", str(tmp_path / "o.csv")],
        capture_output=True, text=True)
    assert result.returncode == 0


def test_trace_flag(tmp_path):
    trace = tmp_path / "t.trace"
    assert run_cli("simulate", "--tx", "2", "--rx", "2", "--mod", "qam16",
                   "--snr", "10", "--trials", "4", "--decoder", "sd:dfs",
                   "--trace", str(trace), "--out", str(tmp_path / "o.csv")) == 0
    assert trace.exists() and trace.read_text().strip()
