"""Config files: printing, parsing, overrides, validation, presets."""

import numpy as np
import pytest

from topopinn.config import (apply_override, build_samples, config_hash,
                             config_to_text, default_config, initial_centers,
                             load_config, parse_config_text, prepare_run,
                             validate_config)
from topopinn.errors import ConfigError
from topopinn.presets import make_preset, preset_names


def test_printed_config_parses_back_unchanged():
    cfg = default_config()
    text = config_to_text(cfg)
    again = parse_config_text(text)
    assert config_to_text(again) == text
    assert config_hash(again) == config_hash(cfg)


def test_preset_round_trips_through_text():
    cfg = make_preset("annulus-lt")
    again = parse_config_text(config_to_text(cfg))
    assert config_to_text(again) == config_to_text(cfg)


def test_config_hash_tracks_content():
    a = default_config()
    b = default_config()
    assert config_hash(a) == config_hash(b)
    b.run.seed = a.run.seed + 1
    assert config_hash(a) != config_hash(b)
    assert len(config_hash(a)) == 16


def test_load_config_from_file(tmp_path):
    cfg = default_config()
    cfg.run.epochs = 7
    path = tmp_path / "run.cfg"
    path.write_text(config_to_text(cfg))
    loaded = load_config(path)
    assert loaded.run.epochs == 7
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.cfg")


def test_parse_rejects_unknown_section():
    with pytest.raises(ConfigError, match=r"\[nonsense\]"):
        parse_config_text("[nonsense]\nx = 1\n")


def test_parse_rejects_unknown_key():
    with pytest.raises(ConfigError, match=r"\[run\] warp"):
        parse_config_text("[run]\nwarp = 9\n")


def test_parse_rejects_bad_value():
    with pytest.raises(ConfigError, match=r"\[run\] epochs"):
        parse_config_text("[run]\nepochs = soon\n")


def test_parse_rejects_malformed_text():
    with pytest.raises(ConfigError, match="parse error"):
        parse_config_text("not a config at all\n= broken")


def test_apply_override_sets_value():
    cfg = default_config()
    apply_override(cfg, "run.epochs=123")
    apply_override(cfg, "optimizer.learning_rate=5e-4")
    apply_override(cfg, "geometry.ring_radii=0.5,0.3")
    assert cfg.run.epochs == 123
    assert cfg.optimizer.learning_rate == 5e-4
    assert cfg.geometry.ring_radii == (0.5, 0.3)


def test_apply_override_error_paths():
    cfg = default_config()
    with pytest.raises(ConfigError):
        apply_override(cfg, "run.epochs")
    with pytest.raises(ConfigError):
        apply_override(cfg, "runepochs=3")
    with pytest.raises(ConfigError, match=r"\[run\] warp"):
        apply_override(cfg, "run.warp=3")
    with pytest.raises(ConfigError, match=r"\[blob\]"):
        apply_override(cfg, "blob.x=3")


def test_validation_names_section_and_key():
    cfg = default_config()
    cfg.run.mode = "xx"
    with pytest.raises(ConfigError, match=r"\[run\] mode"):
        validate_config(cfg)

    cfg = default_config()
    cfg.optimizer.learning_rate = -1.0
    with pytest.raises(ConfigError, match=r"\[optimizer\] learning_rate"):
        validate_config(cfg)

    cfg = default_config()
    cfg.geometry.ring_radii = (0.9,)
    with pytest.raises(ConfigError, match=r"\[geometry\] ring_radii"):
        validate_config(cfg)

    cfg = default_config()
    cfg.boundary.kind = "dirichlet"
    cfg.boundary.values = (0.0, 0.0)
    with pytest.raises(ConfigError, match=r"\[boundary\]"):
        validate_config(cfg)

    cfg = default_config()
    cfg.topology.pairs = ((0, 5, 1.0),)
    with pytest.raises(ConfigError, match=r"\[topology\]"):
        validate_config(cfg)


def test_every_preset_validates():
    for name in preset_names():
        make_preset(name)


def test_unknown_preset_lists_choices():
    with pytest.raises(ConfigError, match="annulus-lt"):
        make_preset("what-even")


def test_prepare_run_assembles_consistent_objects():
    cfg = make_preset("annulus-lt")
    cfg.run.epochs = 1
    state, samples, setup = prepare_run(cfg)
    assert state.gamma.shape == (cfg.geometry.n_patches, 2)
    assert len(samples.collocation) > 0
    assert samples.measurements.points.shape[0] == cfg.data.n_points
    assert setup.epochs == 1
    # measurement points live on the band around the true (origin) center
    r = np.hypot(samples.measurements.points[:, 0],
                 samples.measurements.points[:, 1])
    assert r.min() >= cfg.data.annulus_band_lo - 1e-12
    assert r.max() <= cfg.data.annulus_band_hi + 1e-12


def test_initial_centers_respect_explicit_list():
    cfg = default_config()
    cfg.geometry.n_patches = 2
    cfg.geometry.init_centers = ((0.25, 0.0), (-0.25, 0.1))
    centers = initial_centers(cfg)
    assert np.allclose(centers, [[0.25, 0.0], [-0.25, 0.1]])


def test_initial_centers_seeded_draw_is_deterministic():
    cfg = default_config()
    cfg.geometry.n_patches = 3
    cfg.geometry.init_centers = ()
    a = initial_centers(cfg)
    b = initial_centers(cfg)
    assert np.array_equal(a, b)
    cfg.run.seed += 1
    c = initial_centers(cfg)
    assert not np.array_equal(a, c)


def test_build_samples_boundary_rings_follow_centers():
    cfg = make_preset("annulus-lt")
    centers = np.array([[0.1, 0.2]])
    samples = build_samples(cfg, centers)
    offsets = {s.ring_radius for s in samples.boundary}
    assert offsets == set(cfg.geometry.ring_radii)
    n_expected = len(cfg.geometry.ring_radii) * cfg.geometry.ring_points
    assert len(samples.boundary) == n_expected
