import numpy as np
import pytest

from gals import Grid, LevelSetState
from gals.benchmarks import RunConfig, resolve_dt, run_benchmark, slot_crossings
from gals.cli import build_parser, main
from gals.io import load_state, read_config, save_state
from gals.shapes import Sphere, init_level_set


def test_state_roundtrip(tmp_path):
    grid = Grid((0.0, -1.0), (2.0, 1.0), (5, 4))
    rng = np.random.default_rng(0)
    state = LevelSetState(grid, rng.normal(size=(5, 4)), rng.normal(size=(5, 4, 2)), 0.75)
    back = load_state(save_state(state, tmp_path / "s.npz"))
    assert back.grid == grid and back.t == 0.75
    assert np.array_equal(back.phi, state.phi) and np.array_equal(back.psi, state.psi)


def test_read_config(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# comment\ngrid = 32\n\nscheme=weno  # trailing\nfinal-time = 0.5\n")
    assert read_config(cfg) == {"grid": "32", "scheme": "weno", "final_time": "0.5"}
    cfg.write_text("grid 32\n")
    with pytest.raises(ValueError, match="key=value"):
        read_config(cfg)


def test_parser_rejects_unknown_scheme():
    with pytest.raises(SystemExit):
        build_parser().parse_args(["run", "vortex", "--scheme", "upwind"])


def test_resolve_dt_rules():
    assert resolve_dt("h", 0.1) == 0.1
    assert resolve_dt("h/2", 0.1) == 0.05
    assert resolve_dt("0.3", 0.1) == 0.3
    with pytest.raises(ValueError):
        resolve_dt("fast", 0.1)
    with pytest.raises(ValueError):
        RunConfig("vortex", scheme="bogus")


def test_stability_scan_command(tmp_path, capsys):
    assert main(["stability-scan", "--out", str(tmp_path)]) == 0
    assert "max |lambda|" in capsys.readouterr().out
    assert (tmp_path / "stability_scan.csv").exists()


def test_run_with_config_file_and_extract(tmp_path, capsys):
    cfg = tmp_path / "swirl.cfg"
    cfg.write_text(f"grid = 16\nfinal_time = 0.25\nout = {tmp_path / 'run'}\n")
    assert main(["run", "swirl", "--config", str(cfg), "--refine", "2"]) == 0
    out = capsys.readouterr().out
    assert "volume_change" in out
    assert (tmp_path / "run" / "swirl_gals-rk3_volume.csv").exists()
    state_file = tmp_path / "run" / "swirl_gals-rk3_final.npz"
    assert main(["extract", str(state_file), "--out", str(tmp_path / "mesh")]) == 0
    assert (tmp_path / "mesh" / "swirl_gals-rk3_final.csv").exists()


def test_bad_config_key(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("colour = red\n")
    with pytest.raises(SystemExit):
        main(["run", "swirl", "--config", str(cfg)])


def test_converge_interp(capsys, tmp_path):
    assert main(["converge", "interp", "--levels", "8,16,32", "--out", str(tmp_path)]) == 0
    assert "slope phi" in capsys.readouterr().out
    rows = (tmp_path / "interp_convergence.csv").read_text().splitlines()
    assert rows[0] == "h,dt,e_phi,e_psi" and len(rows) == 4


def test_extract_3d_obj(tmp_path):
    state = init_level_set(Sphere((0.5, 0.5, 0.5), 0.3), Grid.uniform(8, 3))
    path = save_state(state, tmp_path / "ball.npz")
    assert main(["extract", str(path), "--out", str(tmp_path)]) == 0
    assert (tmp_path / "ball.obj").read_text().startswith("v ")


def test_slot_crossings_of_initial_disk():
    from gals.shapes import SlottedDisk

    state = init_level_set(SlottedDisk(), Grid.uniform(64, 2, 0.0, 100.0))
    assert slot_crossings(state) == 2
    closed = state.replace(phi=-np.abs(state.phi))
    assert slot_crossings(closed) == 0
