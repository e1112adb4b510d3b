import pytest

from qae.config import ConfigError, RunConfig, dump_config, load_config, parse_config


def test_defaults_per_size():
    assert (RunConfig.for_dim(9).gamma, RunConfig.for_dim(9).total_repeats) == (3, 30)
    assert (RunConfig.for_dim(16).gamma, RunConfig.for_dim(16).total_repeats) == (4, 45)
    cfg = RunConfig()
    assert (cfg.K, cfg.reads_per_anneal, cfg.chain_strength_factor) == (10, 1000, 0.9)
    assert cfg.topology == "complete" and cfg.decomposer == "perturbation" and not cfg.local_search


def test_small_dims_clamp_gamma():
    assert RunConfig.for_dim(2).gamma == 2


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(K=0),
        dict(chain_strength_factor=0.4),
        dict(chain_strength_factor=2.5),
        dict(topology="pegasus"),
        dict(decomposer="random"),
        dict(seed=-1),
        dict(seed=2**64),
        dict(precision_target=0.0),
        dict(beta_start=5.0, beta_end=1.0),
    ],
)
def test_invalid_values_rejected(kwargs):
    with pytest.raises(ConfigError):
        RunConfig(**kwargs)


def test_gamma_above_dim():
    with pytest.raises(ConfigError):
        RunConfig(gamma=5).validate_for(4)


def test_parse_with_comments_and_types():
    cfg = parse_config("# run\nK = 6\nlocal_search = true  # refine\nchain_strength_factor=0.75\ntopology = grid-like\n")
    assert cfg.K == 6 and cfg.local_search is True
    assert cfg.chain_strength_factor == 0.75 and cfg.topology == "grid-like"


@pytest.mark.parametrize("text", ["bogus = 1\n", "K 3\n", "K = three\n", "local_search = maybe\n"])
def test_parse_errors(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_load_uses_size_defaults(tmp_path):
    p = tmp_path / "c.cfg"
    p.write_text("seed = 5\n")
    cfg = load_config(p, dim=16)
    assert (cfg.gamma, cfg.total_repeats, cfg.seed) == (4, 45, 5)


def test_dump_round_trip():
    cfg = RunConfig(K=4, gamma=2, topology="grid-like", local_search=True, seed=2**63)
    assert parse_config(dump_config(cfg)) == cfg
