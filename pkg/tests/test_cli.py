import io

import numpy as np
import pytest

from gmrfinfo import cli
from gmrfinfo.imaging import add_gaussian_noise, encode_pgm, step_image
from gmrfinfo.io import load_field_csv


def run(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = cli.main([str(a) for a in argv], out, err)
    return code, out.getvalue(), err.getvalue()


def values(text):
    pairs = (line.split("=", 1) for line in text.splitlines() if "=" in line and " " not in line)
    return {k: v for k, v in pairs}


@pytest.fixture
def workdir(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    return tmp_path


def test_sample_reference_settings(workdir):
    code, out, _ = run("sample", "--width", 128, "--height", 128, "--order", 2, "--mu", 0, "--sigma2", 5,
                       "--beta", 0.125, "--sweeps", 1000, "--seed", 7, "--out", "s")
    assert code == 0
    v = values(out)
    assert abs(float(v["beta"]) - 0.125) <= 0.02
    assert len(v["beta"].replace("-", "").replace(".", "").lstrip("0")) <= 6
    assert (workdir / "s.csv").exists() and (workdir / "s.pgm").exists()
    assert load_field_csv(workdir / "s.csv").shape == (128, 128)


def test_sample_independence():
    code, out, _ = run("sample", "--beta", 0, "--sweeps", 3, "--seed", 1)
    assert code == 0 and abs(float(values(out)["beta"])) <= 0.02


def test_sample_flag_errors():
    code, _, err = run("sample", "--sigma2", -1)
    assert code == 2 and "sigma2" in err
    assert run("sample", "--bogus", 1)[0] == 2
    assert run("sample", "--width", 2)[0] == 2
    assert run("sample", "--sweeps", 0)[0] == 2
    assert run("sample", "--order", 3)[0] == 2


def test_seed_drawn_and_printed():
    code, _, err = run("sample", "--width", 8, "--height", 8, "--sweeps", 1)
    assert code == 0 and "seed=" in err


def test_sample_replicates(workdir):
    code, out, _ = run("sample", "--width", 12, "--height", 12, "--sweeps", 3, "--seed", 5,
                       "--replicates", 2, "--out", "r")
    assert code == 0
    assert sorted(p.name for p in workdir.iterdir()) == ["r_r000.csv", "r_r000.pgm", "r_r001.csv", "r_r001.pgm"]
    code, single, _ = run("sample", "--width", 12, "--height", 12, "--sweeps", 3, "--seed", 6)
    assert values(single)["beta"] == values(out.split("replicate=1")[1])["beta"]


def write_pgm(path, image):
    path.write_bytes(encode_pgm(image))
    return path


def test_infomap_step_boundary(workdir):
    image = add_gaussian_noise(step_image(64, 64), 15.0, seed=3)
    write_pgm(workdir / "step.pgm", image)
    code, out, _ = run("infomap", "--input", "step.pgm", "--measure", "linfo", "--out", "m")
    assert code == 0
    m = np.loadtxt(workdir / "m.csv", delimiter=",")
    edge = m[:, [0, 31, 32, 63]]
    flat = np.delete(m, [0, 31, 32, 63], axis=1)
    assert np.nanmean(edge) > np.nanmean(flat)
    assert (workdir / "m.pgm").read_bytes().startswith(b"P5\n64 64\n255\n")


def test_infomap_constant_is_degenerate(workdir):
    write_pgm(workdir / "c.pgm", np.full((8, 8), 90.0))
    code, _, err = run("infomap", "--input", "c.pgm")
    assert code == 3 and "degenerate" in err


def test_infomap_phi_mean_matches_print(workdir):
    run("sample", "--width", 32, "--height", 32, "--sweeps", 50, "--seed", 2, "--beta", 0.1, "--out", "g")
    code, out, _ = run("infomap", "--input", "g.csv", "--measure", "phi", "--out", "phi")
    assert code == 0
    m = np.loadtxt(workdir / "phi.csv", delimiter=",")
    assert np.all(m >= 0)
    assert float(values(out)["global_phi"]) == pytest.approx(m.mean(), rel=1e-5)


def test_infomap_explicit_params(workdir):
    run("sample", "--width", 16, "--height", 16, "--sweeps", 5, "--seed", 2, "--out", "g")
    code, out, _ = run("infomap", "--input", "g.csv", "--measure", "psi", "--params", "0,2,0.1")
    assert code == 0 and values(out)["sigma2"] == "2"
    assert run("infomap", "--input", "g.csv", "--params", "1,2")[0] == 2
    assert run("infomap", "--input", "g.csv", "--params", "0,-2,0.1")[0] == 2


def test_estimate(workdir):
    run("sample", "--width", 32, "--height", 32, "--sweeps", 20, "--seed", 4, "--out", "g")
    code, out, _ = run("estimate", "--input", "g.csv", "--csv", "row.csv")
    assert code == 0
    v = values(out)
    assert {"mu", "sigma2", "beta", "phi", "psi", "gap", "linfo", "entropy", "var"} <= set(v)
    header, row = (workdir / "row.csv").read_text().splitlines()
    assert header == "n,k,mu,sigma2,beta,score,phi,psi,gap,linfo,entropy,var,beta_star_lo,beta_star_hi"
    assert len(row.split(",")) == 14
    code, out, _ = run("estimate", "--input", "g.csv", "--refine-mu")
    assert code == 0 and "beta" in values(out)


def test_io_errors(workdir):
    assert run("estimate", "--input", "missing.csv")[0] == 4
    (workdir / "bad.pgm").write_bytes(b"P5\n4 4\n255\n" + bytes(3))
    code, _, err = run("estimate", "--input", "bad.pgm")
    assert code == 4 and "byte offset" in err
    (workdir / "ascii.pgm").write_bytes(b"P2\n2 2\n255\n1 2 3 4\n")
    assert run("hist-entropy", "--input", "ascii.pgm")[0] == 4


def test_trajectory(workdir):
    args = ("trajectory", "--width", 16, "--height", 16, "--sweeps", 30, "--dbeta", 0.01, "--seed", 3)
    assert run(*args, "--out", "a.csv")[0] == 0
    assert run(*args, "--out", "b.csv")[0] == 0
    a = (workdir / "a.csv").read_bytes()
    assert a == (workdir / "b.csv").read_bytes()
    assert a.splitlines()[0] == b"iter,beta_true,beta_hat,phi,psi,entropy,linfo,var,beta_star_lo,beta_star_hi"
    assert len(a.splitlines()) == 31
    assert run("trajectory", "--sweeps", 0)[0] == 2
    assert run("trajectory", "--dbeta", 0)[0] == 2
    assert run("trajectory", "--beta-start", 0.5)[0] == 2


def test_trajectory_stdout_and_snapshots(workdir):
    code, out, _ = run("trajectory", "--width", 12, "--height", 12, "--sweeps", 10, "--seed", 1,
                       "--record-every", 2, "--snapshots", 2, "--out", "t.csv")
    assert code == 0
    names = sorted(p.name for p in workdir.iterdir())
    assert names == ["t.csv", "t_it000000.csv", "t_it000000.pgm", "t_it000004.csv", "t_it000004.pgm",
                     "t_it000008.csv", "t_it000008.pgm"]
    code, out, _ = run("trajectory", "--width", 12, "--height", 12, "--sweeps", 4, "--seed", 1)
    assert out.startswith("iter,") and len(out.splitlines()) == 5


def test_config_file_and_precedence(workdir):
    (workdir / "run.cfg").write_text("# schedule\nsweeps = 12\nseed=9\nwidth=10\nheight=10\ndbeta=0.01\n")
    code, out, _ = run("trajectory", "--config", "run.cfg")
    assert code == 0 and len(out.splitlines()) == 13
    code, out2, _ = run("trajectory", "--config", "run.cfg", "--sweeps", 5)
    assert len(out2.splitlines()) == 6
    assert out2.splitlines()[:6] == out.splitlines()[:6]
    (workdir / "bad.cfg").write_text("sweps=3\n")
    code, _, err = run("trajectory", "--config", "bad.cfg")
    assert code == 2 and "sweps" in err
    (workdir / "badval.cfg").write_text("sweeps=many\n")
    assert run("trajectory", "--config", "badval.cfg")[0] == 2
    assert run("trajectory", "--config", "nothere.cfg")[0] == 4


def test_perturb_hold_zero_matches_trajectory(workdir):
    common = ("--width", 16, "--height", 16, "--sweeps", 30, "--dbeta", 0.01, "--seed", 5)
    run("trajectory", *common, "--out", "t.csv")
    code, out, _ = run("perturb", *common, "--hold", 0, "--at", 10, "--out", "p.csv")
    assert code == 0
    assert (workdir / "t.csv").read_bytes() == (workdir / "p.csv").read_bytes()
    assert "summary:" in out


def test_perturb_modes(workdir):
    common = ("--width", 16, "--height", 16, "--sweeps", 30, "--dbeta", 0.01, "--seed", 5, "--at", 15)
    code, out, err = run("perturb", *common, "--mode", "beta-star")
    assert code == 0
    rows = [line.split(",") for line in out.splitlines()[1:]]
    assert len({r[1] for r in rows[15:20]}) == 1
    assert "summary: mode=beta_star_min" in err
    code, out, err = run("perturb", *common, "--mode", "zero", "--hold", 3)
    rows = [line.split(",") for line in out.splitlines()[1:]]
    assert [float(r[1]) for r in rows[15:18]] == [0.0] * 3
    assert run("perturb", *common[:-2], "--at", 30)[0] == 2
    assert run("perturb", *common, "--hold", -1)[0] == 2


def test_noise_laplacian_hist(workdir):
    write_pgm(workdir / "g.pgm", np.full((64, 64), 128.0))
    assert run("noise", "--input", "g.pgm", "--sigma", 15, "--seed", 1, "--out", "n.pgm")[0] == 0
    assert run("noise", "--input", "g.pgm", "--sigma", 15, "--seed", 1, "--out", "n2.pgm")[0] == 0
    assert (workdir / "n.pgm").read_bytes() == (workdir / "n2.pgm").read_bytes()
    assert run("noise", "--input", "g.pgm", "--sigma", -1, "--out", "x.pgm")[0] == 2
    assert not (workdir / "x.pgm").exists()
    code, out, _ = run("laplacian", "--input", "n.pgm", "--out", "lap")
    assert code == 0 and "mean_abs_laplacian=" in out and (workdir / "lap.pgm").exists()
    code, out, _ = run("hist-entropy", "--input", "g.pgm")
    assert code == 0 and out.strip() == "hist_entropy=0"
    write_pgm(workdir / "ramp.pgm", np.arange(256.0).reshape(16, 16))
    assert run("hist-entropy", "--input", "ramp.pgm")[1].strip() == "hist_entropy=8"


@pytest.mark.parametrize("command", ["sample", "estimate", "infomap", "trajectory", "perturb",
                                     "noise", "laplacian", "hist-entropy"])
def test_help_documents_every_flag(command, capsys):
    parser, sub = cli.build_parser()
    p = sub.choices[command]
    for action in p._actions:
        if action.option_strings and action.dest != "help":
            assert action.help, f"{command} {action.option_strings} has no help text"
    with pytest.raises(SystemExit) as info:
        parser.parse_args([command, "--help"])
    assert info.value.code == 0
    assert run(command, "--help")[0] == 0
