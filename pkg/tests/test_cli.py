import csv
import json
import os

import numpy as np
import pytest

from periodic_dirac import cli
from periodic_dirac.bands import free_band_values
from periodic_dirac.clifford import build_clifford
from periodic_dirac.lattice import Lattice

FREE = """
[lattice]
dim = 3
[basis]
n_max = 1
[potential]
preset = free
[bands]
grid = 2
"""


def write(tmp_path, text, name="run.ini"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def read_csv(path):
    with open(path) as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def test_bands_free_csv(tmp_path):
    out = tmp_path / "out"
    assert cli.main(["bands", "--config", write(tmp_path, FREE), "--out", str(out)]) == 0
    header, rows = read_csv(out / "bands.csv")
    assert header == ["k_index", "k1", "k2", "k3", "band", "lambda"]
    summary = json.loads((out / "bands.json").read_text())
    lo, hi = summary["window"]
    lat, c = Lattice.cubic(3), build_clifford(3)
    by_k = {}
    for r in rows:
        by_k.setdefault(int(r[0]), (np.array([float(x) for x in r[1:4]]), []))[1].append(float(r[5]))
    for k, vals in by_k.values():
        ref = free_band_values(lat, c, 1, k)[lo:hi]
        assert np.allclose(vals, ref, atol=1e-12)
    assert summary["flat_bands"] == []
    assert (out / "bands.txt").read_text().startswith("bands:")


def test_seventeen_digit_round_trip(tmp_path):
    out = tmp_path / "out"
    cli.main(["bands", "--config", write(tmp_path, FREE), "--out", str(out)])
    _, rows = read_csv(out / "bands.csv")
    for r in rows[:20]:
        assert format(float(r[5]), ".17g") == r[5]


def test_verify_passes_and_exports(tmp_path):
    text = FREE + "[verify]\ntrials = 10\nexport_matrices = yes\n"
    out = tmp_path / "v"
    assert cli.main(["verify", "--config", write(tmp_path, text), "--out", str(out)]) == 0
    summary = json.loads((out / "verify.json").read_text())
    assert summary["all_passed"]
    header, rows = read_csv(out / "fiber_matrix.csv")
    assert len(rows) == 27 * 4 and len(header) == 2 * 27 * 4
    assert (out / "weights.csv").exists()


def test_verify_failure_exit_code(tmp_path, monkeypatch):
    monkeypatch.setattr(cli, "verification_suite", lambda cfg, seed, trials: [("broken", 1.0, 0.0)])
    out = tmp_path / "v"
    assert cli.main(["verify", "--config", write(tmp_path, FREE), "--out", str(out)]) == 2
    assert "FAIL broken" in (out / "verify.txt").read_text()


def test_env_default_out(tmp_path, monkeypatch):
    monkeypatch.setenv(cli.OUT_ENV, str(tmp_path / "envout"))
    assert cli.main(["bands", "--config", write(tmp_path, FREE)]) == 0
    assert (tmp_path / "envout" / "bands.csv").exists()


@pytest.mark.parametrize("text", [
    "[lattice]\ndim = x\n",
    "[lattice]\ndim = 3\nbasis = 1 0 0; 0 1 0\n",
    "[lattice]\ndim = 3\nbasis = 1 0 0; 2 0 0; 0 0 1\n",
    "[lattice]\ndim = 3\n[potential]\npreset = nonsense\n",
    "[lattice]\ndim = 3\n[bands]\ngrid = 0\n",
    "not an ini file",
])
def test_bad_configs_exit_one(tmp_path, text, capsys):
    assert cli.main(["bands", "--config", write(tmp_path, text), "--out", str(tmp_path / "o")]) == 1
    assert "error" in capsys.readouterr().err


def test_missing_file_and_bad_flags(tmp_path):
    assert cli.main(["bands", "--config", str(tmp_path / "nope.ini")]) == 1
    with pytest.raises(SystemExit) as exc:
        cli.main(["nonsense", "--config", "x"])
    assert exc.value.code == 1
    cfg = write(tmp_path, FREE)
    assert cli.main(["bands", "--config", cfg, "--threads", "0", "--out", str(tmp_path / "o")]) == 1
    assert cli.main(["bands", "--config", cfg, "--seed", "-1", "--out", str(tmp_path / "o")]) == 1


def test_gauge_needs_vector_potential(tmp_path):
    assert cli.main(["gauge-check", "--config", write(tmp_path, FREE), "--out", str(tmp_path / "g")]) == 1


def test_gauge_check_outputs(tmp_path):
    text = """
[lattice]
dim = 3
[potential]
preset = free
vector_mode = 1 0 1
vector_amplitude = 1.0 0.5 0.3
[gauge]
gamma = 0 0 1
et = 1 0 0
grids = 6 8
c_star_samples = 1
kernel_grid = 6
"""
    out = tmp_path / "g"
    assert cli.main(["gauge-check", "--config", write(tmp_path, text), "--out", str(out)]) == 0
    s = json.loads((out / "gauge.json").read_text())
    assert s["divergence_residual"] < 1e-12 and s["curl_residual"] < 1e-12
    assert s["identity_residuals"][0] > s["identity_residuals"][1]


def test_norms_coulomb(tmp_path):
    text = """
[lattice]
dim = 3
[potential]
preset = coulomb
series_n_max = 1
[norms]
grid = 32
t_min = 4
"""
    out = tmp_path / "n"
    assert cli.main(["norms", "--config", write(tmp_path, text), "--out", str(out)]) == 0
    s = json.loads((out / "norms.json").read_text())
    assert s["values"]["tail"] == pytest.approx(s["values"]["coulomb_reference"], rel=0.15)


def test_table_preset(tmp_path):
    (tmp_path / "v.csv").write_text("# n1,n2,n3,re,im\n1,0,0,0.1,0\n-1,0,0,0.1,0\n")
    text = FREE.replace("preset = free", "preset = table\nscalar_table = v.csv")
    out = tmp_path / "t"
    assert cli.main(["bands", "--config", write(tmp_path, text), "--out", str(out)]) == 0
    text = FREE.replace("preset = free", "preset = table\nscalar_table = missing.csv")
    assert cli.main(["bands", "--config", write(tmp_path, text, "b.ini"), "--out", str(out)]) == 1


def test_thomas_scan_outputs(tmp_path):
    text = """
[lattice]
dim = 3
[basis]
n_max = 1
[potential]
preset = scalar_mode
mode = 1 0 0
amplitude = 0.2
[thomas]
gamma = 0 0 1
k_count = 2
kappas = 1 4
checks = scan weighted smallness
"""
    out = tmp_path / "t"
    assert cli.main(["thomas-scan", "--config", write(tmp_path, text), "--out", str(out)]) == 0
    header, rows = read_csv(out / "thomas_scan.csv")
    assert header == ["k1", "k2", "k3", "kappa", "sigma_min", "min_G_minus", "C1", "pass"]
    assert len(rows) == 4
    s = json.loads((out / "thomas.json").read_text())
    # no magnetic part: Q = tau / (4 |gamma|^2), theta = 0 and C*(h) = 0
    assert s["constants"]["C2"] == pytest.approx(0.5 / (1 + 0.125 / np.pi))
    assert os.path.exists(out / "thomas_smallness.csv")


def test_byte_identical_reruns(tmp_path):
    cfg = write(tmp_path, FREE + "[verify]\ntrials = 5\n")
    for sub in ("bands", "verify"):
        cli.main([sub, "--config", cfg, "--out", str(tmp_path / "a")])
        cli.main([sub, "--config", cfg, "--out", str(tmp_path / "b")])
    for name in sorted(os.listdir(tmp_path / "a")):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
