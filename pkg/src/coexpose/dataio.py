"""File formats and run configuration.

Text formats (all UTF-8, tab-separated, ``#``-prefixed comment lines and
blank lines ignored):

* leaning file: ``id<TAB>leaning``; defines the node (or item) universe;
  dense integer ids are assigned in file order and original tokens kept
  as labels.
* edge file: ``u<TAB>v`` meaning "v follows u"; every endpoint must
  appear in the node leaning file.
* attention-bound overrides: ``node_id<TAB>k_u``.
* config file: flat ``key=value`` lines; every key can be overridden by
  the CLI flag of the same name.  Relative paths inside a config file
  resolve against the config file's directory.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .errors import ConfigError, ParseError
from .model import (
    ConstraintSet,
    ItemCatalog,
    PropagationModel,
    SocialGraph,
)

OUTPUT_DIR_ENV = "COEXPOSE_OUTPUT_DIR"

ALGORITHMS = ("tdem", "exact-greedy", "mc-greedy", "close", "far", "weight")
PROB_MODES = {"lin": "linear", "exp": "exponential", "wc": "weighted-cascade"}


def _data_lines(path):
    with open(path, "r", encoding="utf-8") as f:
        for lineno, raw in enumerate(f, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            yield lineno, line


def load_leaning_file(path) -> tuple[list[str], np.ndarray]:
    """Read an id->leaning file; returns (labels in file order, leanings)."""
    labels: list[str] = []
    seen: dict[str, int] = {}
    values: list[float] = []
    for lineno, line in _data_lines(path):
        parts = line.split("\t")
        if len(parts) != 2:
            raise ParseError("expected 'id<TAB>leaning'", path=path, line=lineno)
        token, raw_val = parts
        if token in seen:
            raise ParseError(f"duplicate id {token!r}", path=path, line=lineno)
        try:
            val = float(raw_val)
        except ValueError:
            raise ParseError(f"bad leaning {raw_val!r}", path=path, line=lineno) from None
        if abs(val) > 1.0 + 1e-12:
            raise ParseError(f"leaning {val!r} outside [-1, 1]", path=path, line=lineno)
        seen[token] = len(labels)
        labels.append(token)
        values.append(val)
    if not labels:
        raise ParseError("file defines no entries", path=path)
    return labels, np.array(values)


def load_graph(edge_path, node_leaning_path) -> SocialGraph:
    """Build a graph from an edge file plus the node leaning file.

    The leaning file is authoritative for the node set (isolated nodes are
    legal); an edge endpoint without a leaning entry is an error.
    """
    labels, leanings = load_leaning_file(node_leaning_path)
    ids = {token: idx for idx, token in enumerate(labels)}
    edges: list[tuple[int, int]] = []
    seen: set[tuple[int, int]] = set()
    for lineno, line in _data_lines(edge_path):
        parts = line.split("\t")
        if len(parts) != 2:
            raise ParseError("expected 'u<TAB>v'", path=edge_path, line=lineno)
        try:
            u = ids[parts[0]]
            v = ids[parts[1]]
        except KeyError as missing:
            raise ParseError(
                f"node {missing.args[0]!r} has no leaning entry",
                path=edge_path, line=lineno,
            ) from None
        if u == v:
            raise ParseError("self-loop edge", path=edge_path, line=lineno)
        if (u, v) in seen:
            raise ParseError(f"duplicate edge {parts[0]!r}->{parts[1]!r}",
                             path=edge_path, line=lineno)
        seen.add((u, v))
        edges.append((u, v))
    return SocialGraph(len(labels), edges, leanings, labels=labels)


def make_items(count: int | None = None, path=None) -> ItemCatalog:
    """Item catalog from an even spread over [-1, 1] or from a leaning file.

    ``count`` items get leanings -1 + 2i/(count-1); a single item sits at
    the midpoint 0.
    """
    if (count is None) == (path is None):
        raise ConfigError("specify exactly one of item count or item leaning file")
    if path is not None:
        labels, leanings = load_leaning_file(path)
        return ItemCatalog(leanings, labels=labels)
    if count < 1:
        raise ConfigError("item count must be >= 1")
    if count == 1:
        return ItemCatalog([0.0])
    spread = -1.0 + 2.0 * np.arange(count) / (count - 1)
    return ItemCatalog(spread)


def load_ku_overrides(path, graph: SocialGraph) -> dict[int, int]:
    ids = {token: idx for idx, token in enumerate(graph.labels or map(str, range(graph.n)))}
    overrides: dict[int, int] = {}
    for lineno, line in _data_lines(path):
        parts = line.split("\t")
        if len(parts) != 2:
            raise ParseError("expected 'node_id<TAB>k_u'", path=path, line=lineno)
        if parts[0] not in ids:
            raise ParseError(f"unknown node {parts[0]!r}", path=path, line=lineno)
        try:
            cap = int(parts[1])
        except ValueError:
            raise ParseError(f"bad bound {parts[1]!r}", path=path, line=lineno) from None
        if cap < 1:
            raise ParseError("bound must be >= 1", path=path, line=lineno)
        overrides[ids[parts[0]]] = cap
    return overrides


@dataclass(frozen=True)
class ExperimentConfig:
    graph: str = ""
    node_leanings: str = ""
    item_leanings: str = ""           # path; empty means synthetic even spread
    items: int = 25
    prob_mode: str = "exp"
    beta: float = 0.25
    gamma: float = 2.0
    k: int = 5
    ku: int = 1
    ku_overrides: str = ""
    epsilon: float = 0.2
    ell_conf: float = 1.0
    master_seed: int = 1
    algorithm: str = "tdem"
    eval_trials: int = 2000
    eval_seed: int = -1               # -1: derive from master_seed
    oracle_trials: int = 1000
    workers: int = 1
    output_dir: str = "out"
    figures: bool = True
    memory_budget_mb: int = 8192
    exact_cap: int = 20

    def validate(self) -> None:
        if not self.graph or not self.node_leanings:
            raise ConfigError("graph and node_leanings paths are required")
        for label, path in (("graph", self.graph),
                            ("node_leanings", self.node_leanings)):
            if not os.path.exists(path):
                raise ConfigError(f"{label} file not found: {path}")
        if self.item_leanings and not os.path.exists(self.item_leanings):
            raise ConfigError(f"item_leanings file not found: {self.item_leanings}")
        if self.ku_overrides and not os.path.exists(self.ku_overrides):
            raise ConfigError(f"ku_overrides file not found: {self.ku_overrides}")
        if self.algorithm not in ALGORITHMS:
            raise ConfigError(f"unknown algorithm {self.algorithm!r}")
        if self.prob_mode not in PROB_MODES:
            raise ConfigError(f"unknown prob_mode {self.prob_mode!r}")
        if not 0.0 < self.epsilon < 1.0:
            raise ConfigError("epsilon must lie strictly between 0 and 1")
        if self.ell_conf < 1.0:
            raise ConfigError("ell_conf must be >= 1")
        if self.k < 1 or self.ku < 1:
            raise ConfigError("k and ku must be >= 1")
        if self.eval_trials < 1:
            raise ConfigError("eval_trials must be >= 1")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")


_BOOL_KEYS = {"figures"}
_INT_KEYS = {"items", "k", "ku", "master_seed", "eval_trials", "eval_seed",
             "oracle_trials", "workers", "memory_budget_mb", "exact_cap"}
_FLOAT_KEYS = {"beta", "gamma", "epsilon", "ell_conf"}
_PATH_KEYS = {"graph", "node_leanings", "item_leanings", "ku_overrides", "output_dir"}


def read_config_file(path) -> dict[str, str]:
    values: dict[str, str] = {}
    base = Path(path).parent
    for lineno, line in _data_lines(path):
        if "=" not in line:
            raise ParseError("expected 'key=value'", path=path, line=lineno)
        key, _, raw = line.partition("=")
        key = key.strip().replace("-", "_")
        raw = raw.strip()
        if key not in ExperimentConfig.__dataclass_fields__:
            raise ParseError(f"unknown config key {key!r}", path=path, line=lineno)
        if key in _PATH_KEYS and raw:
            raw = str((base / raw) if not os.path.isabs(raw) else Path(raw))
        values[key] = raw
    return values


def _coerce(key: str, raw):
    if isinstance(raw, (bool, int, float)):
        return raw
    try:
        if key in _BOOL_KEYS:
            if raw.lower() in ("1", "true", "yes", "on"):
                return True
            if raw.lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if key in _INT_KEYS:
            return int(raw)
        if key in _FLOAT_KEYS:
            return float(raw)
    except ValueError:
        raise ConfigError(f"bad value for {key}: {raw!r}") from None
    return raw


def build_config(file_values: dict | None = None,
                 overrides: dict | None = None) -> ExperimentConfig:
    """Defaults < config file < explicit overrides < output-dir env var."""
    cfg = ExperimentConfig()
    for source in (file_values or {}, overrides or {}):
        fields = {}
        for key, raw in source.items():
            if raw is None:
                continue
            key = key.replace("-", "_")
            if key not in ExperimentConfig.__dataclass_fields__:
                raise ConfigError(f"unknown config key {key!r}")
            fields[key] = _coerce(key, raw)
        cfg = replace(cfg, **fields)
    env_out = os.environ.get(OUTPUT_DIR_ENV)
    if env_out:
        cfg = replace(cfg, output_dir=env_out)
    return cfg


def load_instance(cfg: ExperimentConfig):
    """Materialize (graph, items, model, constraints) from a validated config."""
    cfg.validate()
    graph = load_graph(cfg.graph, cfg.node_leanings)
    if cfg.item_leanings:
        items = make_items(path=cfg.item_leanings)
    else:
        items = make_items(count=cfg.items)
    mode = PROB_MODES[cfg.prob_mode]
    if mode == "linear":
        model = PropagationModel.linear(cfg.beta)
    elif mode == "exponential":
        model = PropagationModel.exponential(cfg.beta, cfg.gamma)
    else:
        model = PropagationModel.weighted_cascade()
    overrides = load_ku_overrides(cfg.ku_overrides, graph) if cfg.ku_overrides else {}
    constraints = ConstraintSet(k=cfg.k, ku_default=cfg.ku, ku_overrides=overrides)
    return graph, items, model, constraints
