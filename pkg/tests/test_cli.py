import json
import subprocess
import sys

import pytest

from asymhier.cli import bundled_config_path, bundled_configs, list_experiments, load_config, main
from asymhier.errors import ConfigError
from asymhier.harness import family_names


def write_cfg(tmp_path, text, name="exp.cfg"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def test_smooth_1d_config_reports_v1_exact(tmp_path, capsys):
    assert main(["--config", "smooth_1d_v1.cfg", "--out", str(tmp_path), "--workers", "1"]) == 0
    out = capsys.readouterr().out
    assert "v[1]" in out and "exact to resolution" in out
    data = json.loads((tmp_path / "smooth_1d_v1.json").read_text())
    assert data["rates"]["v[1]"]["Linf"]["status"] == "exact"
    assert all(data["floor_flags"]["v[1]"]["Linf"])


def test_malformed_config_exits_2(tmp_path, capsys):
    path = write_cfg(tmp_path, "[experiment\nfamily = smooth_1d\n")
    assert main(["--config", path, "--out", str(tmp_path)]) == 2
    assert "ConfigError" in capsys.readouterr().err


def test_unknown_key_exits_2(tmp_path):
    path = write_cfg(tmp_path, "[experiment]\nfamily = smooth_1d\n[params]\nbogus = 1\n")
    assert main(["--config", path, "--out", str(tmp_path)]) == 2


def test_unknown_family_exits_2(tmp_path):
    path = write_cfg(tmp_path, "[experiment]\nfamily = nope\n")
    assert main(["--config", path, "--out", str(tmp_path)]) == 2


def test_missing_config_file_exits_2(tmp_path):
    assert main(["--config", str(tmp_path / "absent.cfg"), "--out", str(tmp_path)]) == 2


def test_bad_norm_exits_2(tmp_path):
    assert main(["--config", "smooth_1d_v1.cfg", "--norms", "H7", "--out", str(tmp_path)]) == 2


def test_no_arguments_exits_2(capsys):
    assert main([]) == 2


def test_case_iii_requires_positive_c(tmp_path):
    path = write_cfg(tmp_path, "[experiment]\nfamily = two_param_case_iii\n[params]\nc = 0\n")
    with pytest.raises(ConfigError):
        load_config(path)


def test_case_ii2_requires_positive_h(tmp_path):
    path = write_cfg(tmp_path, "[experiment]\nfamily = two_param_case_ii2\n[params]\nh0 = 0\n")
    with pytest.raises(ConfigError):
        load_config(path)


def test_interface_case_i_reports_c0(tmp_path, capsys):
    assert main(["--config", "interface_case_i_radial.cfg", "--out", str(tmp_path), "--workers", "1"]) == 0
    data = json.loads((tmp_path / "interface_case_i_radial.json").read_text())
    assert abs(data["scalars"]["C0"] - 0.75) < 1e-8
    assert "C0: 0.7" in capsys.readouterr().out


def test_listing_names_case_iii_requirement():
    text = list_experiments()
    assert "two_param_case_iii (requires c > 0)" in text
    for name in family_names():
        assert f"  {name} (" in text


def test_listing_is_stable(capsys):
    assert main(["--list"]) == 0
    first = capsys.readouterr().out
    assert main(["--list"]) == 0
    assert capsys.readouterr().out == first


def test_every_family_has_a_bundled_config():
    families = {load_config(bundled_config_path(c)).family for c in bundled_configs()}
    assert families == set(family_names())


@pytest.mark.parametrize("name", bundled_configs())
def test_bundled_config_runs(name, tmp_path):
    assert main(["--config", name, "--out", str(tmp_path)]) == 0
    stem = name[: -len(".cfg")]
    assert (tmp_path / f"{stem}.csv").exists()
    assert (tmp_path / f"{stem}.json").exists()


def test_csv_is_bit_identical_across_runs_and_workers(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["--config", "interface_eps_1d.cfg", "--out", str(a), "--workers", "1"]) == 0
    assert main(["--config", "interface_eps_1d.cfg", "--out", str(b), "--workers", "3"]) == 0
    assert (a / "interface_eps_1d.csv").read_bytes() == (b / "interface_eps_1d.csv").read_bytes()


def test_module_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "asymhier.cli", "--list"], capture_output=True, text=True)
    assert res.returncode == 0
    assert "smooth_1d" in res.stdout
