"""CLI smoke tests for every subcommand."""

import os

import numpy as np
import pytest

from dc_ode.cli import main


def test_coeffs_trapezoid(capsys):
    main(["coeffs", "--family", "trapezoid", "--p", "2"])
    out = capsys.readouterr().out.strip().split("\n")
    assert out[0] == "2 1/8 0.125"
    assert out[1].startswith("3 1/24 ")
    assert out[2].startswith("4 -3/128 ")
    assert len(out) == 4


def test_coeffs_euler(capsys):
    main(["coeffs", "--family", "euler", "--p", "3"])
    out = capsys.readouterr().out.strip().split("\n")
    assert out == ["1 1/1 1", "2 1/2 0.5", "3 1/6 0.16666666666666666"]


def test_run_with_csv(tmp_path, capsys):
    out = os.path.join(tmp_path, "traj.csv")
    main(["run", "--problem", "oscillator", "--family", "trapezoid",
          "--order", "4", "--dt", "0.1", "--t-end", "5", "--out", out])
    text = capsys.readouterr().out
    assert "max absolute error" in text
    lines = open(out).read().strip().split("\n")
    assert lines[0] == "t,u0"
    assert len(lines) == 52  # header + 51 states
    t, u = lines[-1].split(",")
    assert float(t) == pytest.approx(5.0)
    assert float(u) == pytest.approx(np.exp(2 * np.sin(5.0)), rel=1e-4)


def test_reference_and_convergence(tmp_path, capsys):
    ref = os.path.join(tmp_path, "ref.bin")
    main(["reference", "--problem", "oscillator", "--order", "8",
          "--dt", "0.005", "--t-end", "5", "--out", ref])
    rep = os.path.join(tmp_path, "report.csv")
    main(["convergence", "--problem", "oscillator", "--orders", "2,4",
          "--dts", "0.2,0.1,0.05", "--t-end", "5",
          "--reference", ref, "--report", rep])
    text = open(rep).read()
    assert "# problem=oscillator family=trapezoid order=2" in text
    assert "# problem=oscillator family=trapezoid order=4" in text
    assert text.count("fitted,") == 2


def test_convergence_exact_flag(tmp_path, capsys):
    rep = os.path.join(tmp_path, "report.csv")
    main(["convergence", "--problem", "oscillator", "--orders", "2",
          "--dts", "0.2,0.1", "--t-end", "3", "--exact", "--report", rep])
    out = capsys.readouterr().out
    assert "order 2: fitted" in out


def test_stability_csv(tmp_path, capsys):
    out = os.path.join(tmp_path, "region.csv")
    main(["stability", "--family", "trapezoid", "--order", "2",
          "--re", "-10:2:-2", "--im", "-4:2:4", "--steps", "60", "--out", out])
    lines = open(out).read().strip().split("\n")
    assert lines[0] == "re,im,decayed,max_modulus,tail_ratio"
    assert len(lines) == 1 + 5 * 5
    assert all(row.split(",")[2] == "1" for row in lines[1:])
    assert "25/25 samples decayed" in capsys.readouterr().out


def test_euler_family_run(capsys):
    main(["run", "--problem", "oscillator", "--family", "euler-bwd",
          "--order", "2", "--dt", "0.05", "--t-end", "2"])
    assert "oscillator: 40 steps" in capsys.readouterr().out


def test_bad_inputs():
    with pytest.raises(SystemExit):
        main(["convergence", "--problem", "oscillator", "--orders", "2",
              "--dts", "0.1", "--report", "/tmp/x.csv"])  # no truth source
    with pytest.raises(SystemExit):
        main(["run", "--problem", "oscillator", "--order", "4", "--dt", "0.1",
              "--mu", "7"])  # --mu is vdp-only
    with pytest.raises(SystemExit):
        main(["stability", "--order", "2", "--re", "oops", "--im", "0:1:0",
              "--out", "/tmp/y.csv"])
