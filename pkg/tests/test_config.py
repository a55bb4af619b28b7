import pytest

from stochgates.config import dump_config, load_config, parse_config
from stochgates.errors import ConfigError

TEXT = """
[experiment]
name = "linreg_recovery"
methods = ["stg", "lasso"]
repetitions = 3
seed = 7 ; trailing comment

[data]
d = 64
noise_var = 0.25

[model]
hidden = []

[train]
lr = 0.1
epochs = 200

[train.stg]
reg_rescale = false

[grid]
param = "n"
values = [50, 100]
"""


def test_parse():
    cfg = parse_config(TEXT)
    assert cfg.methods == ["stg", "lasso"] and cfg.repetitions == 3 and cfg.seed == 7
    assert cfg.grid_values == [50, 100]
    assert cfg.train_for("stg") == {"lr": 0.1, "epochs": 200, "reg_rescale": False}
    assert cfg.train_for("lasso") == {"lr": 0.1, "epochs": 200}


def test_echo_round_trip(tmp_path):
    cfg = parse_config(TEXT)
    echo = dump_config(cfg)
    assert parse_config(echo) == cfg
    assert dump_config(parse_config(echo)) == echo
    p = tmp_path / "c.ini"
    p.write_text(echo)
    assert load_config(p) == cfg


@pytest.mark.parametrize("bad", [
    TEXT.replace('"linreg_recovery"', '"unknown"'),
    TEXT.replace('["stg", "lasso"]', "[]"),
    TEXT.replace("repetitions = 3", "repetitions = 0"),
    TEXT.replace('values = [50, 100]', "values = []"),
    TEXT.replace('param = "n"', 'param = "depth"'),
    TEXT.replace("[train.stg]", "[train.foo]"),
    TEXT.replace("[model]", "[extra]"),
    "[data]\nd = 3\n",
    "not an ini file",
])
def test_invalid(bad):
    with pytest.raises(ConfigError):
        parse_config(bad)


def test_missing_file():
    with pytest.raises(ConfigError):
        load_config("/nonexistent/config.ini")
