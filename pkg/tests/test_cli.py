"""Config ingestion, presets, output files, and exit codes."""

import csv
import json

import pytest

from casivox import cli
from casivox.theorem import CheckReport

CHEAP = {
    "field": "scalar", "dimension": 1, "h": 0.0625,
    "bodies": [{"shape": {"kind": "box", "size": [0.125]},
                "model": {"kind": "constant", "chi0": 4.0}}],
    "separations": [0.5, 0.8],
    "quadrature": {"nodes": 24},
}


def cheap(**overrides):
    cfg = json.loads(json.dumps(CHEAP))
    cfg.update(overrides)
    return cfg


def read_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


# -- presets and config round-trip -------------------------------------------


def test_every_preset_builds_and_round_trips():
    for name in cli.presets():
        scn, resolved, ladder = cli.build_scenario(cli.preset(name))
        assert scn.separations
        assert all(s > 0 for s in ladder)
        if name != "1d-dirichlet-ladder":
            assert ladder == [1.0]
        # the resolved config is a fixed point of resolution
        _, resolved2, _ = cli.build_scenario(resolved)
        assert resolved2 == resolved


def test_unknown_preset_rejected():
    with pytest.raises(cli.ConfigError):
        cli.preset("does-not-exist")


def test_ladder_preset_scales_strengths():
    _, _, ladder = cli.build_scenario(cli.preset("1d-dirichlet-ladder"))
    assert ladder == [1.0, 10.0, 100.0, 1000.0, 10000.0]


@pytest.mark.parametrize("mutate", [
    lambda c: c.pop("h"),
    lambda c: c.pop("bodies"),
    lambda c: c.pop("separations"),
    lambda c: c.update(field="vector"),
    lambda c: c.update(field="em", dimension=1),
    lambda c: c.update(dimension=4),
    lambda c: c.update(h=-0.1),
    lambda c: c.update(separations=[0.5, -1.0]),
    lambda c: c.update(temperature=-1.0),
    lambda c: c.update(quadrature={"nodes": 2}),
    lambda c: c.update(quadrature={"rule": "simpson"}),
    lambda c: c.update(strength_ladder=[1.0, 0.0]),
    lambda c: c.update(bodies=CHEAP["bodies"] * 2),  # mirror pairing wants one body
    lambda c: c["bodies"][0].update(shape={"kind": "pyramid"}),
    lambda c: c["bodies"][0].update(shape={"kind": "blob", "cells": 8}),  # no seed
    lambda c: c["bodies"][0].update(model={"kind": "unknown"}),
    lambda c: c["bodies"][0].update(model={"kind": "constant", "chi0": -2.0}),
    lambda c: c["bodies"][0].update(shape={"kind": "box", "size": [0.1, 0.1]}),
], ids=["no-h", "no-bodies", "no-separations", "bad-field", "em-d1", "bad-dim",
        "neg-h", "neg-separation", "neg-T", "few-nodes", "bad-rule", "zero-ladder",
        "two-bodies-mirror", "bad-shape", "blob-no-seed", "bad-model", "neg-chi",
        "size-arity"])
def test_invalid_configs_rejected(mutate):
    cfg = cheap()
    mutate(cfg)
    with pytest.raises(cli.ConfigError):
        cli.build_scenario(cfg)


def test_two_body_and_mirror_plane_configs():
    cfg = cheap(mirror=False,
                bodies=[CHEAP["bodies"][0],
                        {"shape": {"kind": "box", "size": [0.25]},
                         "model": {"kind": "drude", "omega_p": 2.0, "gamma": 0.1}}])
    scn, resolved, _ = cli.build_scenario(cfg)
    assert scn.body_b is not None and not scn.mirror
    assert resolved["mirror"] is False

    plane, resolved_p, _ = cli.build_scenario(cheap(mirror_plane=True))
    assert plane.mirror_plane and not plane.mirror
    assert resolved_p["mirror"] is False and resolved_p["mirror_plane"] is True


def test_lorentz_model_config():
    cfg = cheap()
    cfg["bodies"][0]["model"] = {"kind": "lorentz", "omega_p": 2.0, "omega_0": 1.5,
                                 "gamma": 0.2, "strength_scale": 2.0}
    scn, _, _ = cli.build_scenario(cfg)
    assert scn.model.chi(1.0) == pytest.approx(2.0 * 4.0 / (1.5 ** 2 + 1.0 + 0.2), rel=1e-12)


# -- run outputs ---------------------------------------------------------------


def test_run_emits_all_outputs(tmp_path):
    rc = cli.run(cheap(), tmp_path, spectrum=True)
    assert rc == 0

    resolved = json.loads((tmp_path / "resolved_config.json").read_text())
    _, again, _ = cli.build_scenario(resolved)
    assert again == resolved

    header, rows = read_csv(tmp_path / "energies.csv")
    assert header == ["a", "E", "error_estimate", "force"]
    assert len(rows) == len(CHEAP["separations"])
    for a_s, e_s, err_s, f_s in rows:
        assert float(a_s) in CHEAP["separations"]  # %.17g round-trips exactly
        assert float(e_s) < 0 and float(f_s) < 0 and float(err_s) >= 0

    check_lines = (tmp_path / "checks.txt").read_text().strip().split("\n")
    assert len(check_lines) == 17
    assert all(" | PASS | " in line for line in check_lines)

    header, rows = read_csv(tmp_path / "spectrum.csv")
    assert header == ["a", "xi", "n", "lambda_n"]
    n_vox = 2  # 0.125 / 0.0625
    assert len(rows) == len(CHEAP["separations"]) * len(cli.SPECTRUM_XI_FACTORS) * n_vox
    for _, _, n_s, lam_s in rows:
        assert -1e-12 <= float(lam_s) < 1.0
        assert int(n_s) in (0, 1)


def test_check_only_skips_energy_sweep(tmp_path):
    rc = cli.run(cheap(), tmp_path, check_only=True)
    assert rc == 0
    assert (tmp_path / "checks.txt").exists()
    assert not (tmp_path / "energies.csv").exists()


def test_spectrum_requires_mirror_structure(tmp_path):
    cfg = cheap(mirror=False,
                bodies=[CHEAP["bodies"][0], CHEAP["bodies"][0]])
    with pytest.raises(cli.ConfigError):
        cli.run(cfg, tmp_path, spectrum=True)


def test_failed_check_exits_two(tmp_path, monkeypatch):
    monkeypatch.setattr(cli.theorem, "run_all_checks",
                        lambda *a, **k: [CheckReport("eigenvalue_bounds", False,
                                                     -1.0, "forced")])
    assert cli.run(cheap(), tmp_path) == 2


def test_unconverged_quadrature_exits_three(tmp_path):
    cfg = cheap(quadrature={"nodes": 8, "rtol": 1e-15})
    assert cli.run(cfg, tmp_path) == 3


# -- argument parsing ----------------------------------------------------------


def test_main_runs_config_file(tmp_path):
    cfg_path = tmp_path / "scenario.json"
    cfg_path.write_text(json.dumps(cheap()))
    out = tmp_path / "out"
    assert cli.main([str(cfg_path), "--out", str(out)]) == 0
    assert (out / "energies.csv").exists()


def test_main_runs_preset(tmp_path):
    out = tmp_path / "out"
    rc = cli.main(["--preset", "mirror-plane", "--out", str(out), "--check-only"])
    assert rc == 0
    assert (out / "checks.txt").exists()


@pytest.mark.parametrize("argv", [
    [],                                  # neither config nor preset
    ["--preset", "nope"],                # unknown preset
    ["/nonexistent/config.json"],        # unreadable file
], ids=["no-input", "bad-preset", "missing-file"])
def test_main_config_errors_exit_one(argv, capsys):
    assert cli.main(argv) == 1
    assert "error:" in capsys.readouterr().err


def test_main_rejects_config_plus_preset(tmp_path, capsys):
    cfg_path = tmp_path / "scenario.json"
    cfg_path.write_text(json.dumps(cheap()))
    assert cli.main([str(cfg_path), "--preset", "mirror-plane"]) == 1
    assert "error:" in capsys.readouterr().err


def test_main_rejects_invalid_json(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert cli.main([str(bad)]) == 1
    assert "error:" in capsys.readouterr().err


def test_deterministic_mode_is_bitwise_reproducible(tmp_path):
    cfg_path = tmp_path / "scenario.json"
    cfg_path.write_text(json.dumps(cheap(seed=3)))
    outs = []
    for sub in ("a", "b"):
        out = tmp_path / sub
        rc = cli.main([str(cfg_path), "--out", str(out), "--deterministic",
                       "--spectrum"])
        assert rc == 0
        outs.append(out)
    for name in ("energies.csv", "checks.txt", "spectrum.csv", "resolved_config.json"):
        assert (outs[0] / name).read_bytes() == (outs[1] / name).read_bytes()
