import json

import numpy as np
import pytest

from latticewkb.config import COMMAND_KEYS, COMMANDS, RunConfig, config_digest, parse_config
from latticewkb.errors import ConfigError
from latticewkb.output import ResultTable, emit_csv, format_value, to_csv_text

SOLVE = {"command": "solve", "potential": {"family": "constant", "V": 1},
         "range": [1, 50], "seed": [0, 1]}


def cfg_text(**changes):
    d = dict(SOLVE)
    d.update(changes)
    return json.dumps(d)


def test_valid_solve_config():
    cfg = parse_config(json.dumps(SOLVE))
    assert isinstance(cfg, RunConfig)
    assert (cfg.command, cfg.n_lo, cfg.n_hi) == ("solve", 1, 50)
    assert cfg.option("seed") == (0.0, 1.0)
    assert cfg.tol == 1e-10
    assert cfg.potential.family == "constant"


def test_digest_from_bytes():
    text = json.dumps(SOLVE)
    assert parse_config(text).digest == config_digest(text.encode())
    assert parse_config(text + " ").digest != parse_config(text).digest


def path_of(text):
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    return info.value.path


def test_empty_range_names_range():
    assert path_of(cfg_text(range=[5, 4])) == "range"
    assert path_of(cfg_text(range=[5, 5])) == "range"
    assert path_of(cfg_text(range=[1])) == "range"


def test_unknown_family_names_path():
    assert path_of(cfg_text(potential={"family": "quartic"})) == "potential.family"


def test_nested_unknown_family():
    pot = {"family": "perturbed", "base": {"family": "constant", "V": 1},
           "delta": {"family": "nope"}}
    assert path_of(cfg_text(potential=pot)) == "potential.delta.family"


def test_unknown_key_rejected():
    assert path_of(cfg_text(colour="red")) == "colour"
    # a key valid for another command is still unknown here
    assert path_of(cfg_text(variant="lg_form")) == "variant"


def test_syntax_error_line_and_column():
    with pytest.raises(ConfigError) as info:
        parse_config('{\n  "command": "solve",\n  "range": [1, 2,\n}')
    msg = str(info.value)
    assert "line 4" in msg and "column 1" in msg


@pytest.mark.parametrize("changes,path", [
    ({"tol": 0}, "tol"),
    ({"tol": -1e-3}, "tol"),
    ({"tol": "small"}, "tol"),
    ({"seed": [1]}, "seed"),
    ({"tail_pad": 0}, "tail_pad"),
    ({"command": "plot"}, "command"),
    ({"output": 3}, "output"),
])
def test_semantic_errors(changes, path):
    assert path_of(cfg_text(**changes)) == path


def test_missing_keys():
    d = dict(SOLVE)
    del d["range"]
    assert path_of(json.dumps(d)) == "range"
    assert path_of("[1, 2]") == "<config>"


def test_classify_requirements():
    base = {"command": "classify", "potential": {"family": "constant", "V": 1},
            "range": [1, 10]}
    assert path_of(json.dumps(base)) == "comparison"
    base["comparison"] = {"family": "constant", "V": 1}
    assert parse_config(json.dumps(base)).option("comparison").family == "constant"
    base["mode"] = "forward"
    assert path_of(json.dumps(base)) == "seed"
    base["target"] = 1.5
    base["seed"] = [1, 1]
    assert path_of(json.dumps(base)) == "target"


def test_agmon_k_a_needs_c():
    d = {"command": "agmon", "potential": {"family": "constant", "V": 1},
         "range": [1, 10], "variant": "K_A_form"}
    assert path_of(json.dumps(d)) == "C"
    d["C"] = 0.9
    assert parse_config(json.dumps(d)).option("C") == 0.9


def test_overrides():
    cfg = parse_config(json.dumps(SOLVE))
    new = cfg.with_overrides(tol=1e-6, range_=(3, 9), output="x.csv")
    assert (new.tol, new.n_lo, new.n_hi, new.output) == (1e-6, 3, 9, "x.csv")
    with pytest.raises(ConfigError) as info:
        cfg.with_overrides(range_=(9, 3))
    assert info.value.path == "--range"
    with pytest.raises(ConfigError):
        cfg.with_overrides(tol=0.0)


def test_command_keys_cover_commands():
    assert set(COMMAND_KEYS) == set(COMMANDS)


# output --------------------------------------------------------------------

def test_format_values():
    assert format_value(0.1) == "0.1"
    assert format_value(1 / 3) == repr(1 / 3)
    assert format_value(np.float64(2.5)) == "2.5"
    assert format_value(float("nan")) == "nan"
    assert format_value(float("-inf")) == "-inf"
    assert format_value(True) == "true"
    assert format_value(np.int64(7)) == "7"
    assert format_value([1.0, 2]) == "[1.0, 2]"


def test_empty_table_gives_header_and_metadata():
    t = ResultTable(["n", "psi"], {"n": [], "psi": []}, {"command": "solve"}, ["w1"])
    assert to_csv_text(t) == "# command: solve\n# warning: w1\nn,psi\n"


def test_table_validation():
    with pytest.raises(ValueError):
        ResultTable(["n", "psi"], {"n": [1]})
    with pytest.raises(ValueError):
        ResultTable(["n", "psi"], {"n": [1], "psi": [1.0, 2.0]})


def test_decimal_point_independent_of_locale(monkeypatch):
    import locale
    for name in ("de_DE.UTF-8", "fr_FR.UTF-8"):
        try:
            locale.setlocale(locale.LC_NUMERIC, name)
            break
        except locale.Error:
            continue
    try:
        t = ResultTable(["n", "x"], {"n": [1], "x": [1.5]})
        assert to_csv_text(t).splitlines()[-1] == "1,1.5"
    finally:
        locale.setlocale(locale.LC_NUMERIC, "C")


def test_emit_to_stream_and_path(tmp_path, capsys):
    t = ResultTable(["n", "x"], {"n": [1, 2], "x": [0.25, -1e-300]}, {"k": 1})
    emit_csv(t)
    out = capsys.readouterr().out
    assert out == "# k: 1\nn,x\n1,0.25\n2,-1e-300\n"
    p = tmp_path / "t.csv"
    emit_csv(t, p)
    assert p.read_bytes() == out.encode()
