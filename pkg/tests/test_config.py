import pytest

from pusgen.config import PipelineConfig
from pusgen.exceptions import ConfigError


def test_case_study_defaults():
    cfg = PipelineConfig()
    d = cfg.defaults
    assert (d["alpha"], d["phi"], d["s"], d["psi"], d["clusters"]) == (0.05, 5.0, 24, 1.5, 4)
    assert cfg.p_tilde == 0.03 and cfg.continuity == 2.5
    assert cfg.pairwise_includes_diagonal is True


def test_parse_full_document():
    cfg = PipelineConfig.from_toml("""
seed = 7
p_tilde = 0.01
bandwidth = 0.3
[grouping.groups]
seasonal = ["a", "b"]
wind = ["c"]
[defaults]
clusters = 3
rank = { fixed = 2 }
[group.wind]
rank = { fixed = 1 }
phi = 1.0
""")
    params = cfg.estimator_params()
    assert params["random_state"] == 7
    assert params["groups"] == {"seasonal": ["a", "b"], "wind": ["c"]}
    assert params["n_clusters"] == 3 and params["rank"] == {"fixed": 2}
    assert params["group_overrides"] == {"wind": {"rank": {"fixed": 1}, "phi": 1.0}}
    assert params["alpha"] == 0.05


@pytest.mark.parametrize("text", [
    "phii = 5",
    "[defaults]\nphii = 5",
    "[group.x]\nbudget = 1",
    "[grouping]\nthreshold = 0.4\ngroups = {a = ['x']}",
    "[grouping]\ncutoff = 0.4",
    "p_tilde = 1.5",
    "continuity = 0",
    "[defaults]\nalpha = 0.7",
    "[defaults]\nrank = { fixed = 2, explained_variance = 0.9 }",
    "bandwidth = 'scott'",
    "seed = 1.5",
    "not toml [",
])
def test_rejects_bad_config(text):
    with pytest.raises(ConfigError):
        PipelineConfig.from_toml(text)
