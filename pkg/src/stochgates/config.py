"""Experiment configuration: an INI-style file with JSON-typed values.

Grammar::

    [experiment]            ; required: name, methods, repetitions, seed
    name = "linreg_recovery"
    methods = ["stg", "lasso"]
    repetitions = 100
    seed = 7

    [data]                  ; generator keyword arguments
    d = 64

    [model]                 ; network shape and init
    hidden = []

    [train]                 ; TrainConfig fields shared by all methods
    lr = 0.1

    [train.hc]              ; per-method overrides (optional)
    lam = 0.2

    [grid]                  ; one swept parameter
    param = "n"
    values = [50, 100]

Each value is parsed as JSON; anything that fails to parse is kept as a bare
string. Section and key order in the echo file are canonical (sorted), so an
echoed config reparses to an equal object.
"""
from __future__ import annotations

import configparser
import copy
import io
import json
from dataclasses import dataclass, field

from .errors import ConfigError

EXPERIMENTS = ("xor", "two_moons", "friedman", "madelon_like", "linreg_recovery",
               "linreg_correlated", "stability", "cox_synthetic", "mi_oracle", "custom_csv")
METHODS = ("stg", "hc", "dnc", "lasso", "mi")
GRID_PARAMS = ("lam", "n", "c", "none")
SCHEMA_VERSION = 1


@dataclass
class ExperimentConfig:
    name: str
    methods: list
    repetitions: int = 1
    seed: int = 0
    data: dict = field(default_factory=dict)
    model: dict = field(default_factory=dict)
    train: dict = field(default_factory=dict)
    method_train: dict = field(default_factory=dict)
    grid_param: str = "none"
    grid_values: list = field(default_factory=lambda: [None])
    options: dict = field(default_factory=dict)
    output: str = "out"

    def validate(self):
        if self.name not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.name!r}; choose from {EXPERIMENTS}")
        if not self.methods:
            raise ConfigError("methods must be nonempty")
        bad = [m for m in self.methods if m not in METHODS]
        if bad:
            raise ConfigError(f"unknown methods {bad}")
        if not isinstance(self.repetitions, int) or self.repetitions < 1:
            raise ConfigError("repetitions must be a positive integer")
        if self.grid_param not in GRID_PARAMS:
            raise ConfigError(f"grid param must be one of {GRID_PARAMS}")
        if not self.grid_values:
            raise ConfigError("grid values must be nonempty")
        for m in self.method_train:
            if m not in METHODS:
                raise ConfigError(f"override section for unknown method {m!r}")
        return self

    def train_for(self, method: str) -> dict:
        out = dict(self.train)
        out.update(self.method_train.get(method, {}))
        return out

    def copy(self, **changes) -> "ExperimentConfig":
        new = copy.deepcopy(self)
        for k, v in changes.items():
            setattr(new, k, v)
        return new


def _value(raw: str):
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        return raw.strip()


def parse_config(text: str) -> ExperimentConfig:
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=(";",))
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"config syntax error: {exc}") from None
    if not cp.has_section("experiment"):
        raise ConfigError("missing [experiment] section")
    sections = {s: {k: _value(v) for k, v in cp.items(s)} for s in cp.sections()}
    exp = sections.pop("experiment")
    try:
        name = exp.pop("name")
        methods = exp.pop("methods")
    except KeyError as exc:
        raise ConfigError(f"[experiment] needs {exc.args[0]!r}") from None
    if isinstance(methods, str):
        methods = [m.strip() for m in methods.split(",") if m.strip()]
    cfg = ExperimentConfig(name=name, methods=list(methods),
                           repetitions=exp.pop("repetitions", 1), seed=exp.pop("seed", 0),
                           output=exp.pop("output", "out"))
    cfg.options = exp
    cfg.data = sections.pop("data", {})
    cfg.model = sections.pop("model", {})
    cfg.train = sections.pop("train", {})
    grid = sections.pop("grid", {})
    cfg.grid_param = grid.get("param", "none")
    cfg.grid_values = grid.get("values", [None])
    for name_, body in list(sections.items()):
        if name_.startswith("train."):
            cfg.method_train[name_[len("train."):]] = body
            sections.pop(name_)
    if sections:
        raise ConfigError(f"unknown sections {sorted(sections)}")
    return cfg.validate()


def load_config(path) -> ExperimentConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            return parse_config(fh.read())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None


def dump_config(cfg: ExperimentConfig) -> str:
    def section(title, body):
        lines = [f"[{title}]"]
        lines += [f"{k} = {json.dumps(body[k])}" for k in sorted(body)]
        return "\n".join(lines)

    exp = {"name": cfg.name, "methods": cfg.methods, "repetitions": cfg.repetitions,
           "seed": cfg.seed, "output": cfg.output, **cfg.options}
    parts = [f"; stochgates config echo, schema {SCHEMA_VERSION}", section("experiment", exp),
             section("data", cfg.data), section("model", cfg.model), section("train", cfg.train)]
    for m in sorted(cfg.method_train):
        parts.append(section(f"train.{m}", cfg.method_train[m]))
    parts.append(section("grid", {"param": cfg.grid_param, "values": cfg.grid_values}))
    buf = io.StringIO()
    buf.write("\n\n".join(parts))
    buf.write("\n")
    return buf.getvalue()
