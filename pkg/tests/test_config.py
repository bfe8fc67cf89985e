import pytest

from mlgdsc.config import build_config, load_config, parse_text
from mlgdsc.errors import ConfigError


def test_parse_comments_and_blank_lines():
    assert parse_text("# hi\n\nk = 3  # clusters\nd=2\n") == {"k": "3", "d": "2"}


@pytest.mark.parametrize("text", ["k 3\n", "= 3\n", "k = 3\nk = 4\n"])
def test_parse_errors(text):
    with pytest.raises(ConfigError):
        parse_text(text)


def test_preset_and_override():
    cfg = build_config({"preset": "mnist", "k": "10"})
    assert (cfg.d, cfg.delta) == (12, 6.0)
    cfg = build_config({"preset": "orl", "k": "40", "delta": "3"})
    assert (cfg.d, cfg.delta) == (9, 3.0)
    cfg = build_config({"preset": "orl", "k": "40"}, {"d": 5, "gamma": None})
    assert cfg.d == 5 and cfg.gamma == 0.5


def test_unknown_key_and_preset():
    with pytest.raises(ConfigError):
        build_config({"k": "2", "d": "1", "colour": "red"})
    with pytest.raises(ConfigError):
        build_config({"preset": "imagenet", "k": "2"})
    with pytest.raises(ConfigError):
        build_config({"k": "two", "d": "1"})


def test_missing_required():
    with pytest.raises(ConfigError, match="'d'"):
        build_config({"k": "2"})


def test_invalid_values_become_config_errors():
    with pytest.raises(ConfigError):
        build_config({"k": "2", "d": "1", "gamma": "-1"})


def test_solver_records():
    cfg = build_config({"k": "2", "d": "1", "solver.default.lambda": "0.5", "solver.1.lambda": "4", "solver.1.id": "external", "solver.1.name": "x"})
    assert cfg.solver_for(0).lam == 0.5
    assert cfg.solver_for(1).lam == 4.0 and cfg.solver_for(1).solver_id == "external"
    assert dict(cfg.solver_for(1).extra) == {"name": "x"}
    assert cfg.solver_for(7).lam == 0.5


def test_kmeans_keys(tmp_path):
    p = tmp_path / "c.cfg"
    p.write_text("k = 3\nd = 2\nkmeans.restarts = 5\nkmeans.tol = 1e-6\nseed = 9\neigen_order = largest\n")
    cfg = load_config(p)
    assert (cfg.kmeans_restarts, cfg.kmeans_tol, cfg.rng_seed, cfg.eigen_order) == (5, 1e-6, 9, "largest")


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "nope.cfg")
