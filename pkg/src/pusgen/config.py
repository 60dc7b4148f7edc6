"""TOML pipeline configuration.

Example::

    seed = 0
    p_tilde = 0.03
    continuity = 2.5
    pairwise_includes_diagonal = true
    bandwidth = "silverman"        # or a positive number

    [grouping]
    threshold = 0.4                # or an explicit [grouping.groups] table
    # [grouping.groups]
    # seasonal = ["demand_elec", "demand_gas", "temp"]

    [defaults]
    clusters = 4
    restarts = 1
    rank = { explained_variance = 0.95 }   # or { fixed = 24 }
    alpha = 0.05
    phi = 5.0
    psi = 1.5
    s = 24

    [group.seasonal]               # per-group overrides of [defaults]
    rank = { fixed = 24 }

Unknown keys are errors.
"""

import sys
from dataclasses import dataclass, field

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .exceptions import ConfigError

TOP_KEYS = {"seed", "p_tilde", "continuity", "pairwise_includes_diagonal", "bandwidth", "grouping", "defaults", "group"}
GROUP_KEYS = {"clusters", "restarts", "rank", "alpha", "phi", "psi", "s"}


@dataclass
class PipelineConfig:
    seed: int = 0
    p_tilde: float = 0.03
    continuity: float = 2.5
    pairwise_includes_diagonal: bool = True
    bandwidth: object = "silverman"
    threshold: float = 0.4
    groups: dict = None
    defaults: dict = field(default_factory=lambda: {
        "clusters": 4, "restarts": 1, "rank": {"explained_variance": 0.95},
        "alpha": 0.05, "phi": 5.0, "psi": 1.5, "s": 24,
    })
    overrides: dict = field(default_factory=dict)

    def __post_init__(self):
        self.validate()

    def validate(self):
        if not 0.0 <= self.p_tilde < 1.0:
            raise ConfigError(f"p_tilde must lie in [0, 1), got {self.p_tilde}")
        if not self.continuity > 0:
            raise ConfigError(f"continuity must be positive, got {self.continuity}")
        if not 0.0 < self.threshold <= 1.0:
            raise ConfigError(f"grouping threshold must lie in (0, 1], got {self.threshold}")
        if not (self.bandwidth == "silverman" or (isinstance(self.bandwidth, (int, float)) and self.bandwidth > 0)):
            raise ConfigError(f"bandwidth must be 'silverman' or a positive number, got {self.bandwidth!r}")
        for scope, values in [("defaults", self.defaults)] + [(f"group.{k}", v) for k, v in self.overrides.items()]:
            _check_group_values(scope, values)

    @classmethod
    def from_toml(cls, text):
        try:
            doc = tomllib.loads(text)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"invalid TOML: {exc}") from None
        return cls.from_dict(doc)

    @classmethod
    def load(cls, path):
        with open(path, encoding="utf-8") as fh:
            return cls.from_toml(fh.read())

    @classmethod
    def from_dict(cls, doc):
        unknown = set(doc) - TOP_KEYS
        if unknown:
            raise ConfigError(f"unknown configuration keys: {sorted(unknown)}")
        cfg = cls.__new__(cls)
        cls.__init__(cfg)
        for key in ("seed", "p_tilde", "continuity", "pairwise_includes_diagonal", "bandwidth"):
            if key in doc:
                setattr(cfg, key, doc[key])
        grouping = doc.get("grouping", {})
        unknown = set(grouping) - {"threshold", "groups"}
        if unknown:
            raise ConfigError(f"unknown [grouping] keys: {sorted(unknown)}")
        if "threshold" in grouping and "groups" in grouping:
            raise ConfigError("[grouping] takes either threshold or groups, not both")
        cfg.threshold = grouping.get("threshold", cfg.threshold)
        cfg.groups = grouping.get("groups")
        if cfg.groups is not None and not isinstance(cfg.groups, dict):
            raise ConfigError("[grouping.groups] must map group names to attribute lists")
        defaults = dict(cfg.defaults)
        defaults.update(doc.get("defaults", {}))
        cfg.defaults = defaults
        cfg.overrides = dict(doc.get("group", {}))
        if not isinstance(cfg.seed, int) or isinstance(cfg.seed, bool):
            raise ConfigError(f"seed must be an integer, got {cfg.seed!r}")
        cfg.validate()
        return cfg

    def estimator_params(self):
        d = self.defaults
        return {
            "groups": self.groups,
            "threshold": self.threshold,
            "n_clusters": d["clusters"],
            "restarts": d["restarts"],
            "rank": d["rank"],
            "alpha": d["alpha"],
            "phi": d["phi"],
            "psi": d["psi"],
            "s": d["s"],
            "p_tilde": self.p_tilde,
            "bandwidth": self.bandwidth,
            "continuity": self.continuity,
            "pairwise_includes_diagonal": self.pairwise_includes_diagonal,
            "group_overrides": self.overrides or None,
            "random_state": self.seed,
        }


def _check_group_values(scope, values):
    unknown = set(values) - GROUP_KEYS
    if unknown:
        raise ConfigError(f"unknown keys in [{scope}]: {sorted(unknown)}")
    if "clusters" in values and not (isinstance(values["clusters"], int) and values["clusters"] >= 1):
        raise ConfigError(f"[{scope}] clusters must be a positive integer")
    if "restarts" in values and not (isinstance(values["restarts"], int) and values["restarts"] >= 1):
        raise ConfigError(f"[{scope}] restarts must be a positive integer")
    if "alpha" in values and not 0 < values["alpha"] < 0.5:
        raise ConfigError(f"[{scope}] alpha must lie in (0, 0.5)")
    for key in ("phi", "psi"):
        if key in values and not values[key] >= 0:
            raise ConfigError(f"[{scope}] {key} must be nonnegative")
    if "s" in values and not (isinstance(values["s"], int) and values["s"] >= 0):
        raise ConfigError(f"[{scope}] s must be a nonnegative integer")
    if "rank" in values:
        rank = values["rank"]
        if not (isinstance(rank, dict) and len(rank) == 1 and set(rank) <= {"fixed", "explained_variance"}):
            raise ConfigError(f"[{scope}] rank must be {{fixed = r}} or {{explained_variance = f}}")
