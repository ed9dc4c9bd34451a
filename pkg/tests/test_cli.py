"""Command line behavior: artifacts, exit codes, determinism, presets."""

import json

import numpy as np
import pytest

from topopinn.cli import main
from topopinn.config import parse_config_text
from topopinn.presets import preset_names
from topopinn.sampling import save_measurements_csv


def _train(out_dir, preset="annulus-lt", epochs="0", extra=()):
    argv = ["train", "--preset", preset, "--output", str(out_dir),
            "--set", f"run.epochs={epochs}",
            "--set", "run.log_interval=5"] + list(extra)
    return main(argv)


# ---------------------------------------------------------------------------
# print-config


def test_print_config_round_trip(capsys):
    assert main(["print-config", "--preset", "annulus-lt"]) == 0
    printed = capsys.readouterr().out
    cfg = parse_config_text(printed)
    assert cfg.run.name == "annulus-lt"
    assert cfg.data.source == "annulus"


def test_print_config_applies_overrides(capsys):
    assert main(["print-config", "--preset", "annulus-lt",
                 "--set", "run.epochs=5"]) == 0
    assert "epochs = 5" in capsys.readouterr().out


def test_conflicting_config_sources_rejected(tmp_path, capsys):
    cfg_file = tmp_path / "a.cfg"
    cfg_file.write_text("[run]\nepochs = 1\n")
    code = main(["print-config", "--preset", "annulus-lt",
                 "--config", str(cfg_file)])
    assert code == 2
    assert "error:" in capsys.readouterr().err


def test_threads_flag_validation(capsys):
    assert main(["--threads", "0", "print-config"]) == 2


# ---------------------------------------------------------------------------
# train


def test_train_zero_epochs_writes_all_artifacts(tmp_path, capsys):
    out = tmp_path / "run0"
    assert _train(out) == 0
    for name in ("loss.csv", "gamma.csv", "checkpoint.bin", "topology.json",
                 "metrics.json", "field.csv"):
        assert (out / name).exists(), name

    gamma = (out / "gamma.csv").read_text().strip().splitlines()
    assert gamma[0] == "epoch,x0,y0"
    row = gamma[1].split(",")
    assert row[0] == "0"
    assert float(row[1]) == pytest.approx(0.21)
    assert float(row[2]) == pytest.approx(-0.2)

    topo = json.loads((out / "topology.json").read_text())
    assert topo["mode"] == "lt"
    assert len(topo["circles"]) == 1

    metrics = json.loads((out / "metrics.json").read_text())
    assert any(e["metric"] == "final_total" for e in metrics)

    field = (out / "field.csv").read_text().splitlines()
    assert field[0] == "x,y,T"
    assert len(field) > 100


def test_train_malformed_config_exits_2(tmp_path, capsys):
    bad = tmp_path / "bad.cfg"
    bad.write_text("[run]\nepochs = sideways\n")
    assert main(["train", "--config", str(bad),
                 "--output", str(tmp_path / "out")]) == 2
    assert "error:" in capsys.readouterr().err


def test_train_requires_a_config(tmp_path, capsys):
    assert main(["train", "--output", str(tmp_path / "out")]) == 2


def test_train_same_seed_byte_identical(tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    assert _train(a, epochs="10") == 0
    assert _train(b, epochs="10") == 0
    for name in ("loss.csv", "gamma.csv"):
        assert (a / name).read_bytes() == (b / name).read_bytes(), name
    seeded = tmp_path / "c"
    assert _train(seeded, epochs="10", extra=["--set", "run.seed=7"]) == 0
    assert (a / "loss.csv").read_bytes() != (seeded / "loss.csv").read_bytes()


# ---------------------------------------------------------------------------
# checkpoint-driven subcommands


@pytest.fixture(scope="module")
def lt_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("lt_run")
    code = _train(out)
    assert code == 0
    return out


@pytest.fixture(scope="module")
def dt_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("dt_run")
    code = _train(out, preset="annulus-dt")
    assert code == 0
    return out


def test_export_topology_stdout(lt_run, capsys):
    ckpt = str(lt_run / "checkpoint.bin")
    assert main(["export-topology", "--checkpoint", ckpt]) == 0
    topo = json.loads(capsys.readouterr().out)
    assert topo["mode"] == "lt"
    center = topo["circles"][0]["center"]
    assert center[0] == pytest.approx(0.21)
    assert center[1] == pytest.approx(-0.2)


def test_export_topology_dt_density(dt_run, tmp_path, capsys):
    ckpt = str(dt_run / "checkpoint.bin")
    out = tmp_path / "topology.json"
    assert main(["export-topology", "--checkpoint", ckpt, "--grid", "48",
                 "--output", str(out)]) == 0
    topo = json.loads(out.read_text())
    assert topo["mode"] == "dt"
    assert topo["status"] in ("ok", "empty")


def test_export_topology_sweep(dt_run, capsys):
    ckpt = str(dt_run / "checkpoint.bin")
    assert main(["export-topology", "--checkpoint", ckpt, "--grid", "32",
                 "--sweep", "0.3,0.5,0.7"]) == 0
    topo = json.loads(capsys.readouterr().out)
    assert len(topo["sweep"]) == 3
    assert main(["export-topology", "--checkpoint", ckpt,
                 "--sweep", "0.3,oops"]) == 2


def test_export_topology_missing_checkpoint(tmp_path, capsys):
    assert main(["export-topology", "--checkpoint",
                 str(tmp_path / "nope.bin")]) == 4


def test_eval_unknown_metric_exits_2(lt_run, capsys):
    ckpt = str(lt_run / "checkpoint.bin")
    assert main(["eval", "--checkpoint", ckpt, "--metrics", "vibes"]) == 2
    assert "unknown metric" in capsys.readouterr().err


def test_eval_against_injected_predictions(lt_run, tmp_path, capsys):
    # reference values copied from the checkpoint's own predictions must
    # score a relative_l2 of exactly zero
    from topopinn.cli import _predict
    from topopinn.network import as_field
    from topopinn.sampling import Measurements
    from topopinn.training import checkpoint_load

    ckpt = str(lt_run / "checkpoint.bin")
    state, mlp, normalizer, _ = checkpoint_load(ckpt)
    source = as_field(state.params, normalizer, mlp)
    pts = np.array([[0.8, 0.1], [-0.6, 0.4], [0.2, 0.9], [-0.3, -0.7]])
    values = _predict(source, pts, 1)
    csv_path = tmp_path / "ref.csv"
    save_measurements_csv(csv_path, Measurements(pts, values))

    out_path = tmp_path / "metrics.json"
    assert main(["eval", "--checkpoint", ckpt,
                 "--metrics", "relative_l2,nmae",
                 "--reference", f"csv:{csv_path}",
                 "--output", str(out_path)]) == 0
    entries = json.loads(out_path.read_text())
    by_metric = {e["metric"]: e["value"] for e in entries}
    assert by_metric["relative_l2"] == 0.0
    assert by_metric["nmae"] == 0.0


def test_eval_boundary_flux_reports_error_term(lt_run, capsys):
    ckpt = str(lt_run / "checkpoint.bin")
    assert main(["eval", "--checkpoint", ckpt,
                 "--metrics", "boundary_flux"]) == 0
    entries = json.loads(capsys.readouterr().out)
    metrics = {e["metric"] for e in entries}
    assert "boundary_flux_mean" in metrics
    assert "boundary_flux_error" in metrics


def test_eval_annulus_reference_smoke(lt_run, capsys):
    ckpt = str(lt_run / "checkpoint.bin")
    assert main(["eval", "--checkpoint", ckpt, "--metrics", "relative_l2",
                 "--reference", "annulus", "--grid", "32"]) == 0
    entries = json.loads(capsys.readouterr().out)
    assert entries and entries[0]["metric"] == "relative_l2"
    assert np.isfinite(entries[0]["value"])


def test_eval_needs_reference_for_error_norms(lt_run, capsys):
    ckpt = str(lt_run / "checkpoint.bin")
    assert main(["eval", "--checkpoint", ckpt,
                 "--metrics", "relative_l2"]) == 2


# ---------------------------------------------------------------------------
# preset smoke


@pytest.mark.parametrize("name", preset_names())
def test_preset_ten_epoch_smoke(name, tmp_path, capsys):
    out = tmp_path / name
    assert _train(out, preset=name, epochs="10") == 0
    lines = (out / "loss.csv").read_text().strip().splitlines()
    assert lines[0].startswith("epoch,total")
    last = lines[-1].split(",")
    assert last[0] == "10"
    assert all(np.isfinite(float(v)) for v in last[1:])
