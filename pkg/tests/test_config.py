import pytest
from hypothesis import given, settings, strategies as st

from lohe.config import ConfigError, RunConfig, dump_config, parse_config_text

BASE = """\
model:
  family: slt
  dims: [2, 3]
  agents: 4
  kappa: {"01": 1.0, "11": 0.5}
integrate:
  dt: 0.01
  t_end: 1.0
"""


def test_defaults_are_filled():
    cfg = parse_config_text(BASE)
    assert cfg.free_flow.kind == "spectral"
    assert cfg.initial.kind == "random" and cfg.initial.seed == 0
    assert cfg.integrate.record_stride == 10
    assert cfg.outputs.diagnostics == ["R", "diameter", "norm_drift_max", "flux"]
    assert list(cfg.model.kappa) == ["01", "11"]


def test_round_trip_through_dict_and_yaml():
    cfg = parse_config_text(BASE)
    assert RunConfig.from_dict(cfg.to_dict()) == cfg
    assert parse_config_text(dump_config(cfg)) == cfg


@settings(max_examples=40, deadline=None)
@given(
    family=st.sampled_from(["lohe_sphere", "sl", "rotational_sl", "slm", "slt", "lohe_tensor"]),
    agents=st.integers(2, 8),
    kappa=st.floats(0, 5, allow_nan=False),
    seed=st.integers(0, 2**31),
    stride=st.integers(1, 50),
)
def test_round_trip_property(family, agents, kappa, seed, stride):
    dims = {"lohe_sphere": [3], "sl": [4], "rotational_sl": [4], "slm": [2, 2]}.get(family, [2, 2, 2])
    model = {"family": family, "dims": dims, "agents": agents}
    if family in ("sl", "rotational_sl"):
        model["kappa"] = kappa
    elif family in ("lohe_sphere", "slm"):
        model["kappa0"] = kappa
    else:
        model["kappa"] = {"010": kappa}
    cfg = RunConfig.from_dict({"model": model, "initial": {"seed": seed},
                               "integrate": {"dt": 0.1, "t_end": 1.0, "record_stride": stride}})
    assert RunConfig.from_dict(cfg.to_dict()) == cfg


@pytest.mark.parametrize("text,line,fragment", [
    (BASE.replace('"01"', '"012"'), 5, "bitmask"),
    (BASE.replace("{\"01\": 1.0", "{01: 1.0"), 5, "quote"),
    (BASE.replace("agents: 4", "agents: 0"), 4, "at least 1"),
    (BASE.replace("family: slt", "family: nope"), 2, "family"),
    (BASE + "initial:\n  kind: bipolar\n  n: 4\n", 11, "bipolar"),
    (BASE + "initial:\n  kind: phase_family\n", 10, "rank 1"),
    (BASE.replace("dt: 0.01", "dt: 0.3"), 8, "multiple"),
    (BASE + "free_flow:\n  kind: dense\n  generator: g.txt\n", 10, "spectral"),
    (BASE + "bogus: 1\n", 9, "unknown key"),
    ("model: [1, 2\n", 2, "invalid YAML"),
])
def test_errors_carry_line_numbers(text, line, fragment):
    with pytest.raises(ConfigError) as info:
        parse_config_text(text, "run.yaml")
    msg = str(info.value)
    assert msg.startswith(f"run.yaml:{line}:"), msg
    assert fragment in msg


def test_negative_kappa_rejected():
    with pytest.raises(ConfigError, match="nonnegative"):
        parse_config_text(BASE.replace("0.5}", "-0.5}"))


def test_replace_path():
    cfg = parse_config_text(BASE)
    assert cfg.replace_path("model.kappa.01", 2.5).model.kappa["01"] == 2.5
    assert cfg.replace_path("model.agents", 6.0).model.agents == 6
    assert cfg.replace_path("integrate.dt", 0.02).integrate.dt == 0.02
    for bad in ("model.family", "model.kappa", "model.nothing", "outputs.diagnostics"):
        with pytest.raises(Exception):
            cfg.replace_path(bad, 1.0)
    with pytest.raises(Exception):
        cfg.replace_path("model.agents", 2.5)
